#ifndef DSF_HARNESS_HPP
#define DSF_HARNESS_HPP

// Training, recording-level evaluation, corruption sweeps and filter
// inspection for every model family (deep models with an optional spatial
// front end, and the feature baselines).

#include <atomic>
#include <charconv>
#include <exception>
#include <filesystem>
#include <fstream>
#include <functional>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <variant>
#include <vector>

#include "dsf/baselines.hpp"
#include "dsf/corruption.hpp"
#include "dsf/dataset.hpp"
#include "dsf/dsf.hpp"
#include "dsf/interp.hpp"
#include "dsf/shallownet.hpp"
#include "dsf/synth.hpp"

namespace dsf {

enum class ModelKind {
  vanilla,
  dsfd,
  dsfm,
  dsfm_st,
  interp_only,
  scalar,
  vector,
  dynamic,
  riemann,
  handcrafted
};

enum class Denoise { none, augmentation };

inline constexpr std::array<std::pair<ModelKind, const char*>, 10> kModelNames = {{
    {ModelKind::vanilla, "vanilla"},
    {ModelKind::dsfd, "dsfd"},
    {ModelKind::dsfm, "dsfm"},
    {ModelKind::dsfm_st, "dsfm_st"},
    {ModelKind::interp_only, "interp_only"},
    {ModelKind::scalar, "scalar"},
    {ModelKind::vector, "vector"},
    {ModelKind::dynamic, "dynamic"},
    {ModelKind::riemann, "riemann"},
    {ModelKind::handcrafted, "handcrafted"},
}};

inline std::string to_string(ModelKind k) {
  for (const auto& [kind, name] : kModelNames)
    if (kind == k) return name;
  return "?";
}

inline ModelKind parse_model_kind(const std::string& s) {
  for (const auto& [kind, name] : kModelNames)
    if (s == name) return kind;
  throw InputError("unknown model '" + s + "'");
}

inline std::string to_string(Denoise d) { return d == Denoise::none ? "none" : "augmentation"; }

inline Denoise parse_denoise(const std::string& s) {
  if (s == "none") return Denoise::none;
  if (s == "augmentation") return Denoise::augmentation;
  throw InputError("unknown denoise mode '" + s + "'");
}

inline bool is_dsf(ModelKind k) {
  return k == ModelKind::dsfd || k == ModelKind::dsfm || k == ModelKind::dsfm_st;
}
inline bool is_interp(ModelKind k) {
  return k == ModelKind::interp_only || k == ModelKind::scalar || k == ModelKind::vector ||
         k == ModelKind::dynamic;
}
inline bool is_feature_baseline(ModelKind k) {
  return k == ModelKind::riemann || k == ModelKind::handcrafted;
}

struct ModelConfig {
  ShallowNetConfig net;
  double tau = 0.1;
  std::optional<std::size_t> hidden;
  LogRegConfig logreg;
};

// ---------------------------------------------------------------------------
// Networks

/// Optional spatial front end (DSF: C -> C', interpolation: C -> C) followed by
/// the ShallowNet classifier. c_prime = 0 selects C.
inline std::unique_ptr<Sequential> build_network(ModelKind kind, std::size_t channels,
                                                 std::size_t samples, std::size_t c_prime,
                                                 const ModelConfig& mc, double dropout) {
  if (is_feature_baseline(kind)) throw InputError("build_network: " + to_string(kind) + " is not a network");
  auto net = std::make_unique<Sequential>();
  std::size_t in = channels;
  if (is_dsf(kind)) {
    DsfConfig dc;
    dc.variant = kind == ModelKind::dsfd  ? DsfVariant::dsfd
                 : kind == ModelKind::dsfm ? DsfVariant::dsfm
                                           : DsfVariant::dsfm_st;
    dc.channels = channels;
    dc.channels_out = c_prime ? c_prime : channels;
    dc.hidden = mc.hidden;
    dc.tau = mc.tau;
    net->emplace<DsfModule>(dc);
    in = dc.channels_out;
  } else if (is_interp(kind)) {
    const InterpKind ik = kind == ModelKind::interp_only ? InterpKind::interp_only
                          : kind == ModelKind::scalar    ? InterpKind::scalar
                          : kind == ModelKind::vector    ? InterpKind::vector
                                                         : InterpKind::dynamic;
    net->emplace<InterpModule>(ik, channels);
  }
  ShallowNetConfig sc = mc.net;
  sc.dropout = dropout;
  net->add(make_shallownet(sc, in, samples));
  return net;
}

/// Effective virtual-channel count reported for a model.
inline std::size_t effective_c_prime(ModelKind kind, std::size_t channels, std::size_t c_prime) {
  return is_dsf(kind) && c_prime ? c_prime : channels;
}

namespace detail {

inline Tensor stack_ptrs(std::span<const Matrix* const> windows) {
  const std::size_t c = windows.front()->rows(), t = windows.front()->cols();
  Tensor x({windows.size(), c, t});
  for (std::size_t b = 0; b < windows.size(); ++b) {
    if (windows[b]->rows() != c || windows[b]->cols() != t)
      throw InputError("window shapes differ within a batch");
    std::copy(windows[b]->data().begin(), windows[b]->data().end(), x.item(b).begin());
  }
  return x;
}

inline void shuffle(std::vector<std::size_t>& v, Rng& rng) {
  for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[rng.below(i)]);
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Metrics and prediction

/// Inverse-frequency weights N / (L * count), 0 for absent classes.
inline std::vector<double> balanced_class_weights(std::span<const int> labels, std::size_t n_classes) {
  std::vector<double> count(n_classes, 0.0);
  for (int y : labels) {
    if (y < 0 || std::size_t(y) >= n_classes) throw InputError("class weights: label out of range");
    count[std::size_t(y)] += 1.0;
  }
  std::vector<double> w(n_classes, 0.0);
  for (std::size_t k = 0; k < n_classes; ++k)
    if (count[k] > 0.0) w[k] = double(labels.size()) / (double(n_classes) * count[k]);
  return w;
}

struct BalancedAccuracy {
  double value = 0.0;
  std::vector<int> excluded;  // classes without examples
};

/// Mean per-class recall over the classes present in labels.
inline BalancedAccuracy balanced_accuracy(std::span<const int> preds, std::span<const int> labels,
                                          std::size_t n_classes) {
  if (preds.size() != labels.size()) throw InputError("balanced_accuracy: length mismatch");
  if (labels.empty()) throw InputError("balanced_accuracy: no examples");
  std::vector<std::size_t> hit(n_classes, 0), total(n_classes, 0);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] < 0 || std::size_t(labels[i]) >= n_classes)
      throw InputError("balanced_accuracy: label out of range");
    ++total[std::size_t(labels[i])];
    hit[std::size_t(labels[i])] += preds[i] == labels[i];
  }
  BalancedAccuracy out;
  std::size_t present = 0;
  for (std::size_t k = 0; k < n_classes; ++k) {
    if (total[k] == 0) {
      out.excluded.push_back(int(k));
      continue;
    }
    out.value += double(hit[k]) / double(total[k]);
    ++present;
  }
  out.value /= double(present);
  return out;
}

inline double accuracy(std::span<const int> preds, std::span<const int> labels) {
  if (preds.size() != labels.size() || labels.empty()) throw InputError("accuracy: bad input");
  std::size_t ok = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) ok += preds[i] == labels[i];
  return double(ok) / double(labels.size());
}

/// First index of the maximum.
inline int argmax(std::span<const double> p) {
  return int(std::max_element(p.begin(), p.end()) - p.begin());
}

/// Argmax of the mean window probabilities; ties go to the lowest class.
inline int recording_predict(std::span<const std::vector<double>> window_probs) {
  if (window_probs.empty()) throw InputError("recording_predict: empty recording");
  return argmax(prob_mean(window_probs));
}

/// Per-window class probabilities in eval mode.
inline std::vector<std::vector<double>> predict_windows(Sequential& net, const ParamStore& ps,
                                                        std::span<const Matrix> windows,
                                                        std::size_t batch = 64) {
  std::vector<std::vector<double>> out;
  out.reserve(windows.size());
  Rng unused(0);
  for (std::size_t s = 0; s < windows.size(); s += batch) {
    const auto chunk = windows.subspan(s, std::min(batch, windows.size() - s));
    const Tensor p = softmax(net.forward(stack_windows(chunk), ps, Mode::eval, unused));
    for (std::size_t b = 0; b < chunk.size(); ++b) out.emplace_back(p.item(b).begin(), p.item(b).end());
  }
  return out;
}

// ---------------------------------------------------------------------------
// Training

struct EpochLog {
  std::size_t epoch = 0;
  double lr = 0.0;
  double train_loss = 0.0;
  double valid_loss = 0.0;
};

struct TrainResult {
  ParamStore params;  // best-validation-loss parameters
  std::vector<EpochLog> log;
  std::size_t best_epoch = 0;
};

/// Mean window-level loss of the network on the given recordings (eval mode,
/// class weights balanced on those recordings).
inline double evaluation_loss(Sequential& net, const ParamStore& ps,
                              std::span<const Recording* const> recs, std::size_t n_classes,
                              std::size_t batch = 64) {
  std::vector<const Matrix*> windows;
  std::vector<int> labels;
  for (const auto* r : recs)
    for (const auto& w : r->windows) {
      windows.push_back(&w);
      labels.push_back(r->label);
    }
  if (windows.empty()) throw InputError("evaluation_loss: no windows");
  const auto weights = balanced_class_weights(labels, n_classes);
  Rng unused(0);
  double total = 0.0;
  for (std::size_t s = 0; s < windows.size(); s += batch) {
    const std::size_t n = std::min(batch, windows.size() - s);
    const Tensor logits = net.forward(detail::stack_ptrs(std::span(windows).subspan(s, n)), ps,
                                      Mode::eval, unused);
    total += double(n) * softmax_xent(logits, std::span(labels).subspan(s, n), weights).loss;
  }
  return total / double(windows.size());
}

/// Mini-batch AdamW with a per-epoch cosine learning rate and early stopping
/// on validation loss. Deterministic given seed.
inline TrainResult train_network(ModelKind kind, std::size_t c_prime, const Dataset& ds,
                                 const TrainConfig& tc, const ModelConfig& mc, Denoise denoise,
                                 const CorruptionSpec& augment, std::uint64_t seed) {
  tc.validate();
  const auto train = ds.subset(Split::train);
  const auto valid = ds.subset(Split::valid);
  if (train.empty() || valid.empty()) throw InputError("train_model: empty train or valid split");

  std::vector<const Matrix*> windows;
  std::vector<int> labels;
  for (const auto* r : train)
    for (const auto& w : r->windows) {
      windows.push_back(&w);
      labels.push_back(r->label);
    }
  if (windows.empty()) throw InputError("train_model: no training windows");
  const auto weights = balanced_class_weights(labels, ds.n_classes);

  auto net = build_network(kind, ds.channels, ds.samples, c_prime, mc, tc.dropout_rate);
  Rng rng(seed);
  TrainResult res;
  ParamStore ps;
  net->init_params(ps, rng);
  res.params = ps;

  std::vector<std::size_t> order(windows.size());
  std::iota(order.begin(), order.end(), 0);
  double best = std::numeric_limits<double>::infinity();
  std::size_t since_best = 0, step = 0;
  for (std::size_t epoch = 0; epoch < tc.max_epochs; ++epoch) {
    const double lr = cosine_lr(double(epoch), double(tc.t_max), tc.lr0);
    detail::shuffle(order, rng);
    double train_loss = 0.0;
    for (std::size_t s = 0; s < order.size(); s += tc.batch_size) {
      const std::size_t n = std::min(tc.batch_size, order.size() - s);
      std::vector<const Matrix*> batch(n);
      std::vector<int> y(n);
      for (std::size_t i = 0; i < n; ++i) {
        batch[i] = windows[order[s + i]];
        y[i] = labels[order[s + i]];
      }
      Tensor x;
      if (denoise == Denoise::augmentation) {
        std::vector<Matrix> copies;
        copies.reserve(n);
        for (const auto* w : batch) copies.push_back(*w);
        x = stack_windows(augment_batch(copies, augment, rng));
      } else {
        x = detail::stack_ptrs(batch);
      }
      ps.zero_grad();
      const auto r = softmax_xent(net->forward(x, ps, Mode::train, rng), y, weights);
      net->backward(r.grad, ps, false);
      adamw_step(ps, lr, tc, ++step);
      net->post_step(ps);
      train_loss += double(n) * r.loss;
    }
    const double vloss = evaluation_loss(*net, ps, valid, ds.n_classes);
    res.log.push_back({epoch + 1, lr, train_loss / double(order.size()), vloss});
    if (vloss < best) {
      best = vloss;
      res.params = ps;
      res.best_epoch = epoch + 1;
      since_best = 0;
    } else {
      ++since_best;
    }
    if (since_best >= tc.patience) break;
  }
  return res;
}

// ---------------------------------------------------------------------------
// Feature baselines

struct FeatureModel {
  ModelKind kind = ModelKind::riemann;
  Standardizer scaler;
  LogisticRegression clf;
};

/// Window features pooled into one recording-level vector: mean of the
/// log-covariance coordinates (the log-Euclidean mean) or elementwise median.
inline std::vector<double> recording_features(ModelKind kind, std::span<const Matrix> windows,
                                              double sfreq) {
  if (windows.empty()) throw InputError("recording_features: empty recording");
  std::vector<std::vector<double>> f;
  f.reserve(windows.size());
  for (const auto& w : windows)
    f.push_back(kind == ModelKind::riemann ? riemann_features(w, sfreq) : handcrafted_features(w, sfreq));
  return kind == ModelKind::riemann ? elementwise_mean(f) : elementwise_median(f);
}

/// Fits the scaler and classifier on training recordings; with augmentation,
/// each training window is corrupted once before feature extraction.
inline FeatureModel train_feature_model(ModelKind kind, const Dataset& ds, const ModelConfig& mc,
                                        Denoise denoise, const CorruptionSpec& augment,
                                        std::uint64_t seed) {
  if (!is_feature_baseline(kind)) throw InputError("train_feature_model: not a feature baseline");
  const auto train = ds.subset(Split::train);
  if (train.empty()) throw InputError("train_model: empty train split");
  Rng rng(seed);
  std::vector<std::vector<double>> rows;
  std::vector<int> y;
  for (const auto* r : train) {
    if (denoise == Denoise::augmentation)
      rows.push_back(recording_features(kind, augment_batch(r->windows, augment, rng), ds.sfreq));
    else
      rows.push_back(recording_features(kind, r->windows, ds.sfreq));
    y.push_back(r->label);
  }
  FeatureModel m{kind, zscore_fit(rows), LogisticRegression(rows.front().size(), ds.n_classes)};
  LogRegConfig lc = mc.logreg;
  lc.seed = rng.next_u64();
  m.clf.fit(zscore_apply(rows, m.scaler), y, balanced_class_weights(y, ds.n_classes), lc);
  return m;
}

// ---------------------------------------------------------------------------
// Trained models

struct TrainedModel {
  ModelKind kind = ModelKind::vanilla;
  std::size_t c_prime = 0;
  std::variant<TrainResult, FeatureModel> state;
};

inline TrainedModel train_model(ModelKind kind, std::size_t c_prime, const Dataset& ds,
                                const TrainConfig& tc, const ModelConfig& mc, Denoise denoise,
                                const CorruptionSpec& augment, std::uint64_t seed) {
  if (is_feature_baseline(kind))
    return {kind, c_prime, train_feature_model(kind, ds, mc, denoise, augment, seed)};
  return {kind, c_prime, train_network(kind, c_prime, ds, tc, mc, denoise, augment, seed)};
}

/// Recording-level class predictions.
inline std::vector<int> predict_recordings(const TrainedModel& m, std::span<const Recording> recs,
                                           const Dataset& shape, const ModelConfig& mc) {
  std::vector<int> out;
  out.reserve(recs.size());
  if (const auto* fm = std::get_if<FeatureModel>(&m.state)) {
    std::vector<std::vector<double>> rows;
    for (const auto& r : recs)
      rows.push_back(fm->scaler.apply(recording_features(m.kind, r.windows, shape.sfreq)));
    for (const auto& p : fm->clf.predict_proba(rows)) out.push_back(argmax(p));
    return out;
  }
  const auto& tr = std::get<TrainResult>(m.state);
  auto net = build_network(m.kind, shape.channels, shape.samples, m.c_prime, mc, 0.0);
  for (const auto& r : recs) out.push_back(recording_predict(predict_windows(*net, tr.params, r.windows)));
  return out;
}

// ---------------------------------------------------------------------------
// Sweeps

struct SweepConfig {
  std::vector<ModelKind> models = {ModelKind::vanilla, ModelKind::dsfm_st};
  std::vector<Denoise> denoise = {Denoise::none, Denoise::augmentation};
  std::vector<double> eta_grid = {0.0, 0.25, 0.5, 0.75, 1.0};
  std::vector<int> count_grid = {-1};  // -1: each channel corrupted with probability p
  std::vector<std::size_t> c_prime_grid = {0};
  std::size_t n_seeds = 1;
  std::vector<std::size_t> split_ids = {0};
  std::array<double, 3> fractions = {0.6, 0.2, 0.2};
  double p = 0.5;
  Range sigma_uv{20.0, 50.0};

  void validate(std::size_t channels) const {
    if (models.empty() || denoise.empty() || eta_grid.empty() || count_grid.empty() ||
        c_prime_grid.empty() || split_ids.empty() || n_seeds == 0)
      throw InputError("SweepConfig: grids must be non-empty");
    for (double e : eta_grid)
      if (e < 0.0 || e > 1.0) throw InputError("SweepConfig: eta grid must lie in [0, 1]");
    for (int c : count_grid)
      if (c < -1 || c > int(channels)) throw InputError("SweepConfig: corrupted count must lie in [0, C]");
  }
};

struct ExperimentConfig {
  TrainConfig train;
  ModelConfig model;
  CorruptionSpec augment;
  SweepConfig sweep;
  std::uint64_t seed = 0;
};

struct ResultRow {
  std::uint64_t seed = 0;
  std::size_t split_id = 0;
  ModelKind model = ModelKind::vanilla;
  Denoise denoise = Denoise::none;
  double eta = 0.0;
  int n_corrupted = -1;
  std::size_t c_prime = 0;
  std::string metric;
  double value = 0.0;
};

inline Dataset split_for(const Dataset& ds, const std::array<double, 3>& fractions,
                         std::size_t split_id) {
  return split_dataset(ds, fractions, derive_seed(0x5EEDDA7A5E7ULL, split_id));
}

/// Evaluation corruption of one sweep cell: one mask per recording.
inline CorruptionSpec cell_corruption(const SweepConfig& sc, double eta, int count) {
  CorruptionSpec spec;
  spec.scope = CorruptionScope::per_recording;
  spec.p = sc.p;
  spec.eta = {eta, eta};
  spec.sigma_uv = sc.sigma_uv;
  if (count >= 0) spec.forced_count = std::size_t(count);
  return spec;
}

/// Test recordings corrupted for a cell; the seed depends on the cell only, so
/// every model sees identical data.
inline std::vector<Recording> corrupt_test_set(std::span<const Recording* const> test,
                                               const CorruptionSpec& spec, std::uint64_t cell_seed) {
  Rng rng(cell_seed);
  std::vector<Recording> out;
  out.reserve(test.size());
  for (const auto* r : test) out.push_back(corrupt_recording(*r, spec, rng));
  return out;
}

/// Runs fn(i) for i in [0, n) on up to `jobs` threads; rethrows the first error.
inline void parallel_for(std::size_t n, std::size_t jobs, const std::function<void(std::size_t)>& fn) {
  jobs = std::max<std::size_t>(1, std::min(jobs, n));
  if (jobs == 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::jthread> pool;
  for (std::size_t j = 0; j < jobs; ++j)
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard lock(error_mutex);
          if (!error) error = std::current_exception();
        }
      }
    });
  pool.clear();
  if (error) std::rethrow_exception(error);
}

/// One row per (seed, split, model, denoise, C', eta, count, metric). C' only
/// varies for DSF models; other models are trained once per seed and split.
/// Rows come back in a fixed order regardless of `jobs`.
inline std::vector<ResultRow> run_sweep(const ExperimentConfig& cfg, const Dataset& data,
                                        std::size_t jobs = 1) {
  const SweepConfig& sc = cfg.sweep;
  sc.validate(data.channels);

  struct Cell {
    double eta;
    int count;
  };
  std::vector<Cell> cells;
  for (double e : sc.eta_grid)
    for (int c : sc.count_grid) cells.push_back({e, c});

  std::vector<Dataset> splits;
  std::vector<std::vector<std::vector<Recording>>> test_sets;  // [split][cell]
  for (std::size_t s = 0; s < sc.split_ids.size(); ++s) {
    splits.push_back(split_for(data, sc.fractions, sc.split_ids[s]));
    const auto test = splits.back().subset(Split::test);
    if (test.empty()) throw InputError("run_sweep: empty test split");
    auto& sets = test_sets.emplace_back();
    const std::uint64_t split_seed = derive_seed(cfg.seed, sc.split_ids[s]);
    for (std::size_t k = 0; k < cells.size(); ++k)
      sets.push_back(corrupt_test_set(test, cell_corruption(sc, cells[k].eta, cells[k].count),
                                      derive_seed(split_seed, k)));
  }

  struct Task {
    std::size_t seed_index, split_index;
    ModelKind model;
    Denoise denoise;
    std::size_t c_prime;
  };
  std::vector<Task> tasks;
  for (std::size_t r = 0; r < sc.n_seeds; ++r)
    for (std::size_t s = 0; s < splits.size(); ++s)
      for (ModelKind m : sc.models)
        for (Denoise d : sc.denoise) {
          if (is_dsf(m)) {
            for (std::size_t cp : sc.c_prime_grid) tasks.push_back({r, s, m, d, cp});
          } else {
            tasks.push_back({r, s, m, d, 0});
          }
        }

  std::vector<std::vector<ResultRow>> results(tasks.size());
  parallel_for(tasks.size(), jobs, [&](std::size_t i) {
    const Task& t = tasks[i];
    const Dataset& ds = splits[t.split_index];
    const std::uint64_t run_seed = cfg.seed + t.seed_index;
    const std::uint64_t train_seed = derive_seed(run_seed, sc.split_ids[t.split_index]);
    const auto model = train_model(t.model, t.c_prime, ds, cfg.train, cfg.model, t.denoise,
                                   cfg.augment, train_seed);
    for (std::size_t k = 0; k < cells.size(); ++k) {
      const auto& recs = test_sets[t.split_index][k];
      const auto preds = predict_recordings(model, recs, ds, cfg.model);
      std::vector<int> labels;
      for (const auto& r : recs) labels.push_back(r.label);
      ResultRow row{run_seed, sc.split_ids[t.split_index], t.model, t.denoise, cells[k].eta,
                    cells[k].count, effective_c_prime(t.model, ds.channels, t.c_prime), "", 0.0};
      row.metric = "accuracy";
      row.value = accuracy(preds, labels);
      results[i].push_back(row);
      row.metric = "balanced_accuracy";
      row.value = balanced_accuracy(preds, labels, ds.n_classes).value;
      results[i].push_back(row);
    }
  });

  std::vector<ResultRow> rows;
  for (auto& r : results) rows.insert(rows.end(), r.begin(), r.end());
  return rows;
}

// ---------------------------------------------------------------------------
// CSV output

inline std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

/// Writes to a temporary sibling, then renames over the target.
inline void write_atomic(const std::filesystem::path& path, const std::string& content) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
    if (!os) throw IoError("cannot open " + tmp.string());
    os << content;
    if (!os.flush()) throw IoError("write failed: " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw IoError("cannot rename " + tmp.string() + ": " + ec.message());
}

inline constexpr const char* kResultsHeader = "seed,split_id,model,denoise,eta,n_corrupted,c_prime,metric,value";

inline std::string results_csv(std::span<const ResultRow> rows) {
  std::string out = std::string(kResultsHeader) + "\n";
  for (const auto& r : rows) {
    if (!std::isfinite(r.value)) throw InputError("results: non-finite value");
    out += std::to_string(r.seed) + "," + std::to_string(r.split_id) + "," + to_string(r.model) +
           "," + to_string(r.denoise) + "," + format_double(r.eta) + "," +
           std::to_string(r.n_corrupted) + "," + std::to_string(r.c_prime) + "," + r.metric + "," +
           format_double(r.value) + "\n";
  }
  return out;
}

// ---------------------------------------------------------------------------
// Truncated-series matrix log study

struct TaylorRow {
  std::size_t n_terms = 0;
  double median = 0.0, q25 = 0.0, q75 = 0.0;
};

/// Relative spectral-norm error of matrix_log_taylor against matrix_log_eig on
/// the OAS-shrunk covariances of the given windows.
inline std::vector<TaylorRow> taylor_error_study(std::span<const Matrix> windows,
                                                 std::span<const std::size_t> n_terms) {
  if (windows.empty()) throw InputError("taylor_error_study: no windows");
  std::vector<Matrix> covs, logs;
  std::vector<double> norms;
  for (const auto& w : windows) {
    covs.push_back(oas_shrink(sample_covariance(w), w.cols()).shrunk);
    logs.push_back(matrix_log_eig(covs.back()));
    norms.push_back(spectral_norm_sym(logs.back()));
  }
  std::vector<TaylorRow> out;
  for (std::size_t n : n_terms) {
    std::vector<double> err;
    err.reserve(covs.size());
    for (std::size_t i = 0; i < covs.size(); ++i) {
      const Matrix d = detail::symmetrized(matrix_log_taylor(covs[i], n) - logs[i]);
      err.push_back(spectral_norm_sym(d) / norms[i]);
    }
    std::sort(err.begin(), err.end());
    out.push_back({n, detail::quantile_sorted(err, 0.5), detail::quantile_sorted(err, 0.25),
                   detail::quantile_sorted(err, 0.75)});
  }
  return out;
}

inline std::string taylor_csv(std::span<const TaylorRow> rows) {
  std::string out = "n,median_rel_error,q25,q75\n";
  for (const auto& r : rows)
    out += std::to_string(r.n_terms) + "," + format_double(r.median) + "," + format_double(r.q25) +
           "," + format_double(r.q75) + "\n";
  return out;
}

// ---------------------------------------------------------------------------
// Filter inspection

struct FilterRecord {
  std::size_t window_index = 0;
  SpatialFilterSet filters;
  std::vector<double> phi;
};

struct PhiSummary {
  std::vector<double> median, q1, q3;  // per input channel
};

struct InspectResult {
  std::vector<FilterRecord> records;
  PhiSummary summary;
};

/// Condition for inspect_filters: clean, or channel k fully replaced by noise.
struct InspectCondition {
  std::optional<std::size_t> corrupted_channel;
  Range sigma_uv{20.0, 50.0};
  std::uint64_t seed = 0;
};

/// Runs the DSF front end over every window of the given recordings.
inline InspectResult inspect_filters(ModelKind kind, std::size_t c_prime, const ParamStore& ps,
                                     std::span<const Recording* const> recs, std::size_t channels,
                                     const ModelConfig& mc, const InspectCondition& cond) {
  if (!is_dsf(kind)) throw InputError("inspect_filters: " + to_string(kind) + " has no DSF module");
  DsfConfig dc;
  dc.variant = kind == ModelKind::dsfd ? DsfVariant::dsfd : kind == ModelKind::dsfm ? DsfVariant::dsfm : DsfVariant::dsfm_st;
  dc.channels = channels;
  dc.channels_out = c_prime ? c_prime : channels;
  dc.hidden = mc.hidden;
  dc.tau = mc.tau;
  DsfModule module(dc);

  CorruptionSpec spec;
  spec.scope = CorruptionScope::per_recording;
  spec.eta = {1.0, 1.0};
  spec.sigma_uv = cond.sigma_uv;
  if (cond.corrupted_channel) {
    if (*cond.corrupted_channel >= channels) throw InputError("inspect_filters: channel out of range");
    ChannelMask mask(channels, 0);
    mask[*cond.corrupted_channel] = 1;
    spec.forced_mask = mask;
  }
  Rng rng(cond.seed);
  InspectResult res;
  std::vector<std::vector<double>> phis(channels);
  for (const auto* rec : recs) {
    const Recording r = cond.corrupted_channel ? corrupt_recording(*rec, spec, rng) : *rec;
    if (r.windows.empty()) continue;
    module.forward(stack_windows(r.windows), ps, Mode::eval, rng);
    for (const auto& f : module.last_filters()) {
      FilterRecord fr{res.records.size(), f, channel_contribution(f.weights)};
      for (std::size_t j = 0; j < channels; ++j) phis[j].push_back(fr.phi[j]);
      res.records.push_back(std::move(fr));
    }
  }
  if (res.records.empty()) throw InputError("inspect_filters: no windows");
  for (auto& col : phis) {
    std::sort(col.begin(), col.end());
    res.summary.median.push_back(detail::quantile_sorted(col, 0.5));
    res.summary.q1.push_back(detail::quantile_sorted(col, 0.25));
    res.summary.q3.push_back(detail::quantile_sorted(col, 0.75));
  }
  return res;
}

/// window_index, then W row-major, b and phi.
inline std::string filters_csv(const InspectResult& res) {
  const auto& f0 = res.records.front().filters;
  const std::size_t co = f0.weights.rows(), c = f0.weights.cols();
  std::string out = "window_index";
  for (std::size_t i = 0; i < co; ++i)
    for (std::size_t j = 0; j < c; ++j) out += ",w_" + std::to_string(i) + "_" + std::to_string(j);
  for (std::size_t i = 0; i < co; ++i) out += ",b_" + std::to_string(i);
  for (std::size_t j = 0; j < c; ++j) out += ",phi_" + std::to_string(j);
  out += "\n";
  for (const auto& r : res.records) {
    out += std::to_string(r.window_index);
    for (double v : r.filters.weights.data()) out += "," + format_double(v);
    for (double v : r.filters.bias) out += "," + format_double(v);
    for (double v : r.phi) out += "," + format_double(v);
    out += "\n";
  }
  return out;
}

inline std::string phi_summary_csv(const PhiSummary& s) {
  std::string out = "channel,median,q1,q3\n";
  for (std::size_t j = 0; j < s.median.size(); ++j)
    out += std::to_string(j) + "," + format_double(s.median[j]) + "," + format_double(s.q1[j]) +
           "," + format_double(s.q3[j]) + "\n";
  return out;
}

}  // namespace dsf

#endif  // DSF_HARNESS_HPP
