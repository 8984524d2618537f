#ifndef DSF_BASELINES_HPP
#define DSF_BASELINES_HPP

// Feature-based comparison pipelines: filter-bank log-Euclidean covariance
// features and per-channel handcrafted features, each standardized and fed
// to a logistic regression. Window features are pooled per recording before
// classification.

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "dsf/linalg.hpp"
#include "dsf/nn.hpp"
#include "dsf/spectral.hpp"

namespace dsf {

inline constexpr std::array<double, 8> kFilterBankEdges = {0.1, 1.5, 4, 8, 15, 26, 35, 49};
inline constexpr std::array<double, 9> kPowerBandEdges = {0, 2, 4, 8, 13, 18, 24, 30, 49};

// ---------------------------------------------------------------------------
// Filter bank

/// Bins with edges[b] <= f < edges[b + 1] (the last band also keeps its upper
/// edge), so adjacent bands partition the spectrum between the outer edges.
inline std::vector<Matrix> bandpass_filterbank(const Matrix& x, double sfreq,
                                               std::span<const double> edges) {
  if (edges.size() < 2) throw InputError("bandpass_filterbank: need at least two edges");
  for (std::size_t b = 0; b + 1 < edges.size(); ++b)
    if (!(edges[b] < edges[b + 1])) throw InputError("bandpass_filterbank: edges must increase");
  if (edges.back() > sfreq / 2.0) throw InputError("bandpass_filterbank: band beyond Nyquist");

  const std::size_t c = x.rows(), n = x.cols(), nb = edges.size() - 1;
  std::vector<Matrix> out(nb, Matrix(c, n));
  for (std::size_t i = 0; i < c; ++i) {
    const auto spec = rdft(x.row(i));
    for (std::size_t b = 0; b < nb; ++b) {
      const bool last = b + 1 == nb;
      std::vector<cplx> masked(n);
      for (std::size_t k = 0; k < n; ++k) {
        const double f = bin_frequency(k <= n / 2 ? k : n - k, n, sfreq);
        if (f >= edges[b] && (f < edges[b + 1] || (last && f == edges[b + 1]))) masked[k] = spec[k];
      }
      const auto back = dft(std::move(masked), true);
      auto row = out[b].row(i);
      for (std::size_t k = 0; k < n; ++k) row[k] = back[k].real();
    }
  }
  return out;
}

inline std::vector<Matrix> bandpass_filterbank(const Matrix& x, double sfreq) {
  return bandpass_filterbank(x, sfreq, kFilterBankEdges);
}

// ---------------------------------------------------------------------------
// Features

/// Per band: vec_upper(logm(OAS(cov))). Length (bands) * C(C+1)/2.
inline std::vector<double> riemann_features(const Matrix& x, double sfreq) {
  std::vector<double> out;
  out.reserve((kFilterBankEdges.size() - 1) * vec_upper_size(x.rows()));
  for (const auto& band : bandpass_filterbank(x, sfreq)) {
    const auto shrunk = oas_shrink(sample_covariance(band), band.cols());
    const auto v = vec_upper(matrix_log_eig(shrunk.shrunk));
    out.insert(out.end(), v.begin(), v.end());
  }
  return out;
}

inline const std::vector<std::string>& handcrafted_feature_names() {
  static const std::vector<std::string> names = {
      "mean",          "std",           "rms",           "kurtosis",      "skewness",
      "q10",           "q25",           "q75",           "q90",           "ptp_amp",
      "logpow_0_2",    "logpow_2_4",    "logpow_4_8",    "logpow_8_13",   "logpow_13_18",
      "logpow_18_24",  "logpow_24_30",  "logpow_30_49",  "hjorth_mobility",
      "hjorth_complexity", "line_length", "zero_crossings"};
  return names;
}

inline std::size_t handcrafted_per_channel() { return handcrafted_feature_names().size(); }

namespace detail {

/// Linearly interpolated quantile of sorted data (numpy's default rule).
inline double quantile_sorted(std::span<const double> s, double q) {
  const double pos = q * double(s.size() - 1);
  const auto lo = std::size_t(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, s.size() - 1);
  return s[lo] + (pos - double(lo)) * (s[hi] - s[lo]);
}

inline double population_variance(std::span<const double> x) {
  const double mean = std::accumulate(x.begin(), x.end(), 0.0) / double(x.size());
  double ss = 0.0;
  for (double v : x) ss += (v - mean) * (v - mean);
  return ss / double(x.size());
}

inline std::vector<double> diff(std::span<const double> x) {
  std::vector<double> d(x.size() - 1);
  for (std::size_t i = 0; i + 1 < x.size(); ++i) d[i] = x[i + 1] - x[i];
  return d;
}

}  // namespace detail

/// Features of one channel, ordered as handcrafted_feature_names(). Degenerate
/// statistics (e.g. kurtosis of a constant) come out non-finite and are
/// imputed downstream.
inline std::vector<double> channel_features(std::span<const double> x, double sfreq) {
  const std::size_t n = x.size();
  if (n < 3) throw InputError("handcrafted_features: need at least 3 samples");
  std::vector<double> f;
  f.reserve(handcrafted_per_channel());

  const double mean = std::accumulate(x.begin(), x.end(), 0.0) / double(n);
  double m2 = 0.0, m3 = 0.0, m4 = 0.0, sq = 0.0;
  for (double v : x) {
    const double d = v - mean;
    m2 += d * d;
    m3 += d * d * d;
    m4 += d * d * d * d;
    sq += v * v;
  }
  m2 /= double(n);
  m3 /= double(n);
  m4 /= double(n);
  f.push_back(mean);
  f.push_back(std::sqrt(m2));
  f.push_back(std::sqrt(sq / double(n)));
  f.push_back(m4 / (m2 * m2) - 3.0);
  f.push_back(m3 / std::pow(m2, 1.5));

  std::vector<double> sorted(x.begin(), x.end());
  std::sort(sorted.begin(), sorted.end());
  for (double q : {0.10, 0.25, 0.75, 0.90}) f.push_back(detail::quantile_sorted(sorted, q));
  f.push_back(sorted.back() - sorted.front());

  const auto p = periodogram(x, sfreq);
  for (std::size_t b = 0; b + 1 < kPowerBandEdges.size(); ++b) {
    double s = 0.0;
    for (std::size_t k = 0; k < p.size(); ++k) {
      const double fk = bin_frequency(k, n, sfreq);
      if (fk >= kPowerBandEdges[b] && fk < kPowerBandEdges[b + 1]) s += p[k];
    }
    f.push_back(std::log(s));
  }

  const auto dx = detail::diff(x);
  const auto ddx = detail::diff(dx);
  const double v0 = detail::population_variance(x);
  const double v1 = detail::population_variance(dx);
  const double v2 = detail::population_variance(ddx);
  const double mobility = std::sqrt(v1 / v0);
  f.push_back(mobility);
  f.push_back(std::sqrt(v2 / v1) / mobility);

  double ll = 0.0;
  for (double d : dx) ll += std::abs(d);
  f.push_back(ll);

  std::size_t zc = 0;
  for (std::size_t i = 0; i + 1 < n; ++i) zc += (x[i] < 0.0 && x[i + 1] > 0.0) || (x[i] > 0.0 && x[i + 1] < 0.0);
  f.push_back(double(zc));
  return f;
}

/// Channel-major concatenation of channel_features.
inline std::vector<double> handcrafted_features(const Matrix& x, double sfreq) {
  std::vector<double> out;
  out.reserve(x.rows() * handcrafted_per_channel());
  for (std::size_t i = 0; i < x.rows(); ++i) {
    const auto f = channel_features(x.row(i), sfreq);
    out.insert(out.end(), f.begin(), f.end());
  }
  return out;
}

// ---------------------------------------------------------------------------
// Recording-wise aggregation

/// Log-Euclidean geometric mean: expm(mean_i logm(S_i)).
inline Matrix logm_mean(std::span<const Matrix> mats) {
  if (mats.empty()) throw InputError("logm_mean: empty list");
  Matrix acc(mats.front().rows(), mats.front().cols());
  for (const auto& m : mats) acc = acc + matrix_log_eig(m);
  return matrix_exp_eig((1.0 / double(mats.size())) * acc);
}

inline std::vector<double> elementwise_mean(std::span<const std::vector<double>> rows) {
  if (rows.empty()) throw InputError("elementwise_mean: empty list");
  std::vector<double> out(rows.front().size(), 0.0);
  for (const auto& r : rows) {
    if (r.size() != out.size()) throw InputError("elementwise_mean: ragged rows");
    for (std::size_t j = 0; j < r.size(); ++j) out[j] += r[j];
  }
  for (double& v : out) v /= double(rows.size());
  return out;
}

/// Elementwise median; non-finite entries are ignored (NaN when none remain).
inline std::vector<double> elementwise_median(std::span<const std::vector<double>> rows) {
  if (rows.empty()) throw InputError("elementwise_median: empty list");
  std::vector<double> out(rows.front().size());
  std::vector<double> col;
  for (std::size_t j = 0; j < out.size(); ++j) {
    col.clear();
    for (const auto& r : rows) {
      if (r.size() != out.size()) throw InputError("elementwise_median: ragged rows");
      if (std::isfinite(r[j])) col.push_back(r[j]);
    }
    if (col.empty()) {
      out[j] = std::nan("");
      continue;
    }
    std::sort(col.begin(), col.end());
    const std::size_t m = col.size();
    out[j] = m % 2 ? col[m / 2] : 0.5 * (col[m / 2 - 1] + col[m / 2]);
  }
  return out;
}

/// Mean of per-window class probabilities.
inline std::vector<double> prob_mean(std::span<const std::vector<double>> probs) {
  return elementwise_mean(probs);
}

// ---------------------------------------------------------------------------
// Standardization

struct Standardizer {
  std::vector<double> impute;  // train means of the finite entries
  std::vector<double> mean;
  std::vector<double> std;

  std::vector<double> apply(std::vector<double> row) const {
    if (row.size() != mean.size()) throw InputError("Standardizer: feature length mismatch");
    for (std::size_t j = 0; j < row.size(); ++j) {
      if (!std::isfinite(row[j])) row[j] = impute[j];
      row[j] = (row[j] - mean[j]) / std[j];
    }
    return row;
  }
};

/// Column means/stds (population) of the imputed training rows; constant
/// columns get std 1.
inline Standardizer zscore_fit(std::span<const std::vector<double>> rows) {
  if (rows.empty()) throw InputError("zscore_fit: no rows");
  const std::size_t d = rows.front().size();
  Standardizer s{std::vector<double>(d, 0.0), std::vector<double>(d, 0.0),
                 std::vector<double>(d, 1.0)};
  for (std::size_t j = 0; j < d; ++j) {
    double sum = 0.0;
    std::size_t n = 0;
    for (const auto& r : rows)
      if (std::isfinite(r[j])) sum += r[j], ++n;
    s.impute[j] = n ? sum / double(n) : 0.0;

    double mean = 0.0;
    for (const auto& r : rows) mean += std::isfinite(r[j]) ? r[j] : s.impute[j];
    mean /= double(rows.size());
    double ss = 0.0;
    for (const auto& r : rows) {
      const double v = (std::isfinite(r[j]) ? r[j] : s.impute[j]) - mean;
      ss += v * v;
    }
    const double sd = std::sqrt(ss / double(rows.size()));
    s.mean[j] = mean;
    s.std[j] = sd > 0.0 ? sd : 1.0;
  }
  return s;
}

inline std::vector<std::vector<double>> zscore_apply(std::span<const std::vector<double>> rows,
                                                     const Standardizer& s) {
  std::vector<std::vector<double>> out;
  out.reserve(rows.size());
  for (const auto& r : rows) out.push_back(s.apply(r));
  return out;
}

// ---------------------------------------------------------------------------
// Logistic regression

struct LogRegConfig {
  double lr = 0.05;
  std::size_t epochs = 300;
  double weight_decay = 0.0;
  std::uint64_t seed = 0;
};

/// Multinomial logistic regression: one Dense layer trained full-batch with
/// AdamW on the weighted cross-entropy.
class LogisticRegression {
 public:
  LogisticRegression() = default;
  LogisticRegression(std::size_t n_features, std::size_t n_classes) : d_(n_features), l_(n_classes) {}

  void fit(std::span<const std::vector<double>> x, std::span<const int> y,
           std::span<const double> class_weights, const LogRegConfig& cfg) {
    if (x.empty() || x.size() != y.size()) throw InputError("logreg: empty or mismatched data");
    Dense layer("logreg", d_, l_);
    params_ = ParamStore();
    Rng rng(cfg.seed);
    layer.init_params(params_, rng);
    const Tensor input = to_tensor(x);
    TrainConfig tc;
    tc.weight_decay = cfg.weight_decay;
    for (std::size_t t = 1; t <= cfg.epochs; ++t) {
      params_.zero_grad();
      const auto r = softmax_xent(layer.forward(input, params_, Mode::train, rng), y, class_weights);
      layer.backward(r.grad, params_, false);
      adamw_step(params_, cfg.lr, tc, t);
    }
  }

  /// Row-wise class probabilities.
  std::vector<std::vector<double>> predict_proba(std::span<const std::vector<double>> x) const {
    if (!params_.contains("logreg.weight")) throw InputError("logreg: not fitted");
    Rng unused(0);
    Dense layer("logreg", d_, l_);
    const Tensor p = softmax(layer.forward(to_tensor(x), params_, Mode::eval, unused));
    std::vector<std::vector<double>> out(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) out[i].assign(p.item(i).begin(), p.item(i).end());
    return out;
  }

  const ParamStore& params() const noexcept { return params_; }

 private:
  Tensor to_tensor(std::span<const std::vector<double>> x) const {
    Tensor t({x.size(), d_});
    for (std::size_t i = 0; i < x.size(); ++i) {
      if (x[i].size() != d_) throw InputError("logreg: feature length mismatch");
      std::copy(x[i].begin(), x[i].end(), t.item(i).begin());
    }
    return t;
  }

  std::size_t d_ = 0;
  std::size_t l_ = 0;
  ParamStore params_;
};

}  // namespace dsf

#endif  // DSF_BASELINES_HPP
