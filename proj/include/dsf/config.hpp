#ifndef DSF_CONFIG_HPP
#define DSF_CONFIG_HPP

// INI experiment configuration. Sections: [data] [synth] [train] [augment]
// [model] [sweep]. Unknown sections or keys are errors.

#include <boost/algorithm/string.hpp>
#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <filesystem>
#include <map>
#include <set>
#include <string>

#include "dsf/harness.hpp"

namespace dsf {

struct FullConfig {
  ExperimentConfig experiment;
  SynthConfig synth;
  std::uint64_t synth_seed = 1;
  std::string dataset_path;  // empty: generate from [synth]
};

namespace detail {

inline std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> parts;
  boost::split(parts, s, boost::is_any_of(","));
  for (auto& p : parts) boost::trim(p);
  std::erase_if(parts, [](const std::string& p) { return p.empty(); });
  return parts;
}

template <typename T>
T parse_value(const std::string& key, const std::string& s) {
  try {
    std::size_t pos = 0;
    T v{};
    if constexpr (std::is_same_v<T, double>) {
      v = std::stod(s, &pos);
    } else if constexpr (std::is_same_v<T, int>) {
      v = std::stoi(s, &pos);
    } else {
      if (!s.empty() && s.front() == '-') throw std::invalid_argument("negative");
      v = T(std::stoull(s, &pos));
    }
    if (pos != s.size()) throw std::invalid_argument("trailing characters");
    return v;
  } catch (const std::exception&) {
    throw InputError("config: bad value '" + s + "' for " + key);
  }
}

inline bool parse_bool(const std::string& key, const std::string& s) {
  if (s == "true" || s == "1" || s == "yes") return true;
  if (s == "false" || s == "0" || s == "no") return false;
  throw InputError("config: bad boolean '" + s + "' for " + key);
}

template <typename T>
std::vector<T> parse_list(const std::string& key, const std::string& s) {
  std::vector<T> out;
  for (const auto& p : split_list(s)) out.push_back(parse_value<T>(key, p));
  return out;
}

}  // namespace detail

inline const std::map<std::string, std::set<std::string>>& config_schema() {
  static const std::map<std::string, std::set<std::string>> schema = {
      {"data", {"path", "fractions"}},
      {"synth",
       {"channels", "samples", "sfreq", "n_recordings", "windows_per_recording", "mixing_seed",
        "mixing", "seed", "amplitude_uv", "boost", "background_uv", "sensor_noise_uv"}},
      {"train",
       {"lr0", "beta1", "beta2", "eps", "weight_decay", "dropout", "max_epochs", "patience",
        "batch_size", "t_max"}},
      {"augment", {"p", "eta_lo", "eta_hi", "sigma_lo", "sigma_hi"}},
      {"model",
       {"n_temporal", "kernel", "n_spatial", "pool_window", "pool_stride", "tau", "hidden",
        "logreg_lr", "logreg_epochs", "logreg_weight_decay"}},
      {"sweep",
       {"models", "denoise", "eta", "counts", "c_prime", "n_seeds", "split_ids", "p", "sigma_lo",
        "sigma_hi"}},
  };
  return schema;
}

/// Applies an INI property tree over defaults.
inline FullConfig parse_config(const boost::property_tree::ptree& pt) {
  const auto& schema = config_schema();
  for (const auto& [section, body] : pt) {
    const auto it = schema.find(section);
    if (it == schema.end()) throw InputError("config: unknown section [" + section + "]");
    for (const auto& [key, value] : body)
      if (!it->second.count(key)) throw InputError("config: unknown key " + section + "." + key);
  }

  FullConfig c;
  auto& e = c.experiment;
  auto get = [&](const char* section, const char* key) -> std::optional<std::string> {
    if (auto v = pt.get_optional<std::string>(boost::property_tree::ptree::path_type(
            std::string(section) + "." + key, '.')))
      return boost::trim_copy(*v);
    return std::nullopt;
  };
  auto set = [&]<typename T>(const char* section, const char* key, T& target) {
    if (const auto v = get(section, key)) {
      const std::string name = std::string(section) + "." + key;
      if constexpr (std::is_same_v<T, bool>)
        target = detail::parse_bool(name, *v);
      else
        target = detail::parse_value<T>(name, *v);
    }
  };

  if (const auto v = get("data", "path")) c.dataset_path = *v;
  if (const auto v = get("data", "fractions")) {
    const auto f = detail::parse_list<double>("data.fractions", *v);
    if (f.size() != 3) throw InputError("config: data.fractions needs three values");
    e.sweep.fractions = {f[0], f[1], f[2]};
  }

  set("synth", "channels", c.synth.channels);
  set("synth", "samples", c.synth.samples);
  set("synth", "sfreq", c.synth.sfreq);
  set("synth", "n_recordings", c.synth.n_recordings);
  set("synth", "windows_per_recording", c.synth.windows_per_recording);
  set("synth", "mixing_seed", c.synth.mixing_seed);
  set("synth", "mixing", c.synth.mixing);
  set("synth", "seed", c.synth_seed);
  set("synth", "amplitude_uv", c.synth.amplitude_uv);
  set("synth", "boost", c.synth.boost);
  set("synth", "background_uv", c.synth.background_uv);
  set("synth", "sensor_noise_uv", c.synth.sensor_noise_uv);

  set("train", "lr0", e.train.lr0);
  set("train", "beta1", e.train.beta1);
  set("train", "beta2", e.train.beta2);
  set("train", "eps", e.train.eps);
  set("train", "weight_decay", e.train.weight_decay);
  set("train", "dropout", e.train.dropout_rate);
  set("train", "max_epochs", e.train.max_epochs);
  set("train", "patience", e.train.patience);
  set("train", "batch_size", e.train.batch_size);
  set("train", "t_max", e.train.t_max);

  set("augment", "p", e.augment.p);
  set("augment", "eta_lo", e.augment.eta.lo);
  set("augment", "eta_hi", e.augment.eta.hi);
  set("augment", "sigma_lo", e.augment.sigma_uv.lo);
  set("augment", "sigma_hi", e.augment.sigma_uv.hi);

  set("model", "n_temporal", e.model.net.n_temporal);
  set("model", "kernel", e.model.net.kernel);
  set("model", "n_spatial", e.model.net.n_spatial);
  set("model", "pool_window", e.model.net.pool_window);
  set("model", "pool_stride", e.model.net.pool_stride);
  set("model", "tau", e.model.tau);
  if (const auto v = get("model", "hidden")) e.model.hidden = detail::parse_value<std::size_t>("model.hidden", *v);
  set("model", "logreg_lr", e.model.logreg.lr);
  set("model", "logreg_epochs", e.model.logreg.epochs);
  set("model", "logreg_weight_decay", e.model.logreg.weight_decay);

  auto& s = e.sweep;
  if (const auto v = get("sweep", "models")) {
    s.models.clear();
    for (const auto& m : detail::split_list(*v)) s.models.push_back(parse_model_kind(m));
  }
  if (const auto v = get("sweep", "denoise")) {
    s.denoise.clear();
    for (const auto& d : detail::split_list(*v)) s.denoise.push_back(parse_denoise(d));
  }
  if (const auto v = get("sweep", "eta")) s.eta_grid = detail::parse_list<double>("sweep.eta", *v);
  if (const auto v = get("sweep", "counts")) s.count_grid = detail::parse_list<int>("sweep.counts", *v);
  if (const auto v = get("sweep", "c_prime"))
    s.c_prime_grid = detail::parse_list<std::size_t>("sweep.c_prime", *v);
  set("sweep", "n_seeds", s.n_seeds);
  if (const auto v = get("sweep", "split_ids"))
    s.split_ids = detail::parse_list<std::size_t>("sweep.split_ids", *v);
  set("sweep", "p", s.p);
  set("sweep", "sigma_lo", s.sigma_uv.lo);
  set("sweep", "sigma_hi", s.sigma_uv.hi);

  c.synth.validate();
  e.train.validate();
  e.augment.validate();
  return c;
}

inline FullConfig parse_config_string(const std::string& text) {
  std::istringstream is(text);
  boost::property_tree::ptree pt;
  try {
    boost::property_tree::read_ini(is, pt);
  } catch (const boost::property_tree::ini_parser_error& err) {
    throw InputError(std::string("config: ") + err.what());
  }
  return parse_config(pt);
}

inline FullConfig load_config(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot open config " + path.string());
  std::stringstream ss;
  ss << is.rdbuf();
  return parse_config_string(ss.str());
}

/// The dataset named in the config, or a freshly generated synthetic one.
inline Dataset config_dataset(const FullConfig& c) {
  if (!c.dataset_path.empty()) return load_dataset(c.dataset_path);
  return generate_dataset(c.synth, c.synth_seed);
}

}  // namespace dsf

#endif  // DSF_CONFIG_HPP
