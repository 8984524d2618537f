#ifndef DSF_SPATIAL_HPP
#define DSF_SPATIAL_HPP

// Fixed spatial summaries of a window, fed to attention generators.

#include <cmath>
#include <numeric>
#include <vector>

#include "dsf/linalg.hpp"

namespace dsf {

enum class SummaryKind { log_variance, logm_covariance };

struct SpatialSummary {
  SummaryKind kind = SummaryKind::log_variance;
  std::vector<double> values;
};

inline constexpr double kVarFloor = 1e-12;  // uV^2

inline std::size_t summary_size(SummaryKind kind, std::size_t channels) {
  return kind == SummaryKind::log_variance ? channels : vec_upper_size(channels);
}

/// Per-channel log of the unbiased variance; flat channels map to 0.
inline SpatialSummary phi_logvar(const Matrix& x) {
  const std::size_t t = x.cols();
  if (t < 2) throw DegenerateInput("phi_logvar: need at least 2 samples");
  SpatialSummary out{SummaryKind::log_variance, std::vector<double>(x.rows())};
  for (std::size_t i = 0; i < x.rows(); ++i) {
    auto r = x.row(i);
    const double mean = std::accumulate(r.begin(), r.end(), 0.0) / double(t);
    double ss = 0.0;
    for (double v : r) ss += (v - mean) * (v - mean);
    const double var = ss / double(t - 1);
    out.values[i] = var <= kVarFloor ? 0.0 : std::log(var);
  }
  return out;
}

/// Flattened upper triangle of logm(OAS(cov(X))).
inline SpatialSummary phi_logm_cov(const Matrix& x) {
  const auto shrunk = oas_shrink(sample_covariance(x), x.cols());
  return {SummaryKind::logm_covariance, vec_upper(matrix_log_eig(shrunk.shrunk))};
}

inline SpatialSummary spatial_summary(SummaryKind kind, const Matrix& x) {
  return kind == SummaryKind::log_variance ? phi_logvar(x) : phi_logm_cov(x);
}

}  // namespace dsf

#endif  // DSF_SPATIAL_HPP
