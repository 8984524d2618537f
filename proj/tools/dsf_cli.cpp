// dsf_cli: synthetic data generation, training, corruption sweeps, filter
// inspection and the truncated-series matrix log study.

#include <CLI11.hpp>
#include <iostream>

#include "dsf/config.hpp"
#include "dsf/harness.hpp"
#include "dsf/params_io.hpp"

using namespace dsf;

namespace {

struct Common {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
};

void add_common(CLI::App* cmd, Common& c, bool out_required = true) {
  cmd->add_option("--config", c.config, "INI experiment config")->check(CLI::ExistingFile);
  cmd->add_option("--seed", c.seed, "master seed");
  auto* out = cmd->add_option("--out", c.out, "output path");
  if (out_required) out->required();
}

FullConfig load(const Common& c) {
  FullConfig cfg = c.config.empty() ? FullConfig{} : load_config(c.config);
  if (c.seed) cfg.experiment.seed = *c.seed;
  return cfg;
}

std::vector<Matrix> all_windows(const Dataset& ds) {
  std::vector<Matrix> out;
  for (const auto& r : ds.recordings)
    for (const auto& w : r.windows) out.push_back(w);
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Dynamic spatial filtering experiments"};
  app.require_subcommand(1);

  Common gen_opts;
  auto* gen = app.add_subcommand("gen", "generate a synthetic dataset from [synth]");
  add_common(gen, gen_opts);

  Common train_opts;
  std::string train_model_name = "dsfm_st", train_denoise = "none";
  std::size_t train_c_prime = 0, train_split = 0;
  auto* train = app.add_subcommand("train", "train one network and save its parameters");
  add_common(train, train_opts);
  train->add_option("--model", train_model_name, "model kind");
  train->add_option("--denoise", train_denoise, "none | augmentation");
  train->add_option("--c-prime", train_c_prime, "virtual channels (0 = C)");
  train->add_option("--split", train_split, "split id");

  Common sweep_opts;
  std::size_t jobs = 1;
  auto* sweep = app.add_subcommand("sweep", "train and evaluate over the corruption grid");
  add_common(sweep, sweep_opts);
  sweep->add_option("--jobs", jobs, "worker threads")->check(CLI::PositiveNumber);

  Common inspect_opts;
  std::string inspect_model_name = "dsfm_st", params_path;
  std::size_t inspect_c_prime = 0, inspect_split = 0;
  std::optional<std::size_t> corrupt_channel;
  auto* inspect = app.add_subcommand("inspect", "dump DSF filters and channel contributions");
  add_common(inspect, inspect_opts);
  inspect->add_option("--model", inspect_model_name, "DSF model kind");
  inspect->add_option("--params", params_path, "parameter file from `train`")->required()->check(CLI::ExistingFile);
  inspect->add_option("--c-prime", inspect_c_prime, "virtual channels (0 = C)");
  inspect->add_option("--split", inspect_split, "split id");
  inspect->add_option("--corrupt", corrupt_channel, "fully noise this channel (omit for clean)");

  Common taylor_opts;
  std::size_t n_windows = 1000;
  std::vector<std::size_t> terms = {1, 2, 5, 10, 20, 30, 50, 100};
  auto* taylor = app.add_subcommand("taylor-bench", "truncated-series matrix log error vs n");
  add_common(taylor, taylor_opts);
  taylor->add_option("--windows", n_windows, "number of clean windows")->check(CLI::PositiveNumber);
  taylor->add_option("--terms", terms, "series lengths")->delimiter(',');

  CLI11_PARSE(app, argc, argv);

  try {
    if (*gen) {
      FullConfig cfg = load(gen_opts);
      const std::uint64_t seed = gen_opts.seed.value_or(cfg.synth_seed);
      save_dataset(gen_opts.out, generate_dataset(cfg.synth, seed));
    } else if (*train) {
      const FullConfig cfg = load(train_opts);
      const auto& e = cfg.experiment;
      const ModelKind kind = parse_model_kind(train_model_name);
      if (is_feature_baseline(kind)) throw InputError("train: feature baselines are fit inside `sweep`");
      const Dataset ds = split_for(config_dataset(cfg), e.sweep.fractions, train_split);
      const auto res = train_network(kind, train_c_prime, ds, e.train, e.model,
                                     parse_denoise(train_denoise), e.augment,
                                     derive_seed(e.seed, train_split));
      save_params(train_opts.out, res.params);
      std::cout << "epoch,lr,train_loss,valid_loss\n";
      for (const auto& l : res.log)
        std::cout << l.epoch << "," << format_double(l.lr) << "," << format_double(l.train_loss) << ","
                  << format_double(l.valid_loss) << "\n";
      std::cout << "# best epoch " << res.best_epoch << "\n";
    } else if (*sweep) {
      const FullConfig cfg = load(sweep_opts);
      const auto rows = run_sweep(cfg.experiment, config_dataset(cfg), jobs);
      write_atomic(sweep_opts.out, results_csv(rows));
    } else if (*inspect) {
      const FullConfig cfg = load(inspect_opts);
      const Dataset ds = split_for(config_dataset(cfg), cfg.experiment.sweep.fractions, inspect_split);
      InspectCondition cond;
      cond.corrupted_channel = corrupt_channel;
      cond.sigma_uv = cfg.experiment.sweep.sigma_uv;
      cond.seed = derive_seed(cfg.experiment.seed, inspect_split);
      const auto res = inspect_filters(parse_model_kind(inspect_model_name), inspect_c_prime,
                                       load_params(params_path), ds.subset(Split::test),
                                       ds.channels, cfg.experiment.model, cond);
      write_atomic(inspect_opts.out, filters_csv(res));
      write_atomic(inspect_opts.out + ".summary.csv", phi_summary_csv(res.summary));
    } else if (*taylor) {
      FullConfig cfg = load(taylor_opts);
      cfg.synth.n_recordings = (n_windows + cfg.synth.windows_per_recording - 1) / cfg.synth.windows_per_recording;
      auto windows = all_windows(generate_dataset(cfg.synth, taylor_opts.seed.value_or(cfg.synth_seed)));
      windows.resize(n_windows);
      write_atomic(taylor_opts.out, taylor_csv(taylor_error_study(windows, terms)));
    }
  } catch (const std::exception& err) {
    std::cerr << "error: " << err.what() << "\n";
    return 1;
  }
  return 0;
}
