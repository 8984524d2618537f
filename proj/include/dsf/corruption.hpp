#ifndef DSF_CORRUPTION_HPP
#define DSF_CORRUPTION_HPP

// Channel corruption by masked convex combination with white noise:
//
//   X~ = (1 - eta) diag(nu) X + eta diag(nu) Z + diag(1 - nu) X,  Z ~ N(0, sigma^2)
//
// used both for on-the-fly augmentation (fresh mask per window) and for
// evaluation (one mask per recording), plus a spectral-slope/variance
// detector that estimates how much of a recording is corrupted.

#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <vector>

#include "dsf/dataset.hpp"
#include "dsf/linalg.hpp"
#include "dsf/rng.hpp"
#include "dsf/spectral.hpp"

namespace dsf {

using ChannelMask = std::vector<std::uint8_t>;  // 1 = corrupted

struct Range {
  double lo = 0.0;
  double hi = 0.0;
  double draw(Rng& rng) const { return lo == hi ? lo : rng.uniform(lo, hi); }
};

enum class CorruptionScope { per_window, per_recording };

struct CorruptionSpec {
  double p = 0.5;
  Range eta{0.5, 1.0};
  Range sigma_uv{20.0, 50.0};
  CorruptionScope scope = CorruptionScope::per_window;
  std::optional<ChannelMask> forced_mask;
  std::optional<std::size_t> forced_count;

  void validate() const {
    if (p < 0.0 || p > 1.0) throw InputError("CorruptionSpec: p must be in [0, 1]");
    if (eta.lo < 0.0 || eta.hi > 1.0 || eta.lo > eta.hi)
      throw InputError("CorruptionSpec: eta range must lie in [0, 1]");
    if (!(sigma_uv.lo > 0.0) || sigma_uv.lo > sigma_uv.hi)
      throw InputError("CorruptionSpec: sigma range must be positive");
  }
};

inline ChannelMask sample_mask(std::size_t channels, double p, Rng& rng) {
  ChannelMask nu(channels);
  for (auto& v : nu) v = rng.bernoulli(p) ? 1 : 0;
  return nu;
}

/// Exactly `count` channels chosen uniformly without replacement.
inline ChannelMask sample_mask_count(std::size_t channels, std::size_t count, Rng& rng) {
  if (count > channels) throw InputError("forced corrupted-channel count exceeds channel count");
  std::vector<std::size_t> idx(channels);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  rng.shuffle(std::span<std::size_t>(idx));
  ChannelMask nu(channels, 0);
  for (std::size_t i = 0; i < count; ++i) nu[idx[i]] = 1;
  return nu;
}

inline Matrix corrupt_window(const Matrix& x, const ChannelMask& nu, double eta, double sigma_uv,
                             Rng& rng) {
  if (nu.size() != x.rows()) throw InputError("corrupt_window: mask length differs from C");
  Matrix out = x;
  for (std::size_t i = 0; i < x.rows(); ++i) {
    if (!nu[i]) continue;
    for (double& v : out.row(i)) v = (1.0 - eta) * v + eta * rng.normal(0.0, sigma_uv);
  }
  return out;
}

namespace detail {

inline ChannelMask draw_mask(const CorruptionSpec& spec, std::size_t channels, Rng& rng) {
  if (spec.forced_count) return sample_mask_count(channels, *spec.forced_count, rng);
  if (spec.forced_mask) {
    if (spec.forced_mask->size() != channels) throw InputError("forced mask length differs from C");
    return *spec.forced_mask;
  }
  return sample_mask(channels, spec.p, rng);
}

}  // namespace detail

/// Independent mask, eta and sigma for every window. Window i draws from a
/// stream derived from (batch seed, i).
inline std::vector<Matrix> augment_batch(std::span<const Matrix> batch, const CorruptionSpec& spec,
                                         Rng& rng) {
  spec.validate();
  const std::uint64_t batch_seed = rng.next_u64();
  std::vector<Matrix> out;
  out.reserve(batch.size());
  for (std::size_t i = 0; i < batch.size(); ++i) {
    Rng wr(derive_seed(batch_seed, i));
    const auto nu = detail::draw_mask(spec, batch[i].rows(), wr);
    const double eta = spec.eta.draw(wr);
    const double sigma = spec.sigma_uv.draw(wr);
    out.push_back(corrupt_window(batch[i], nu, eta, sigma, wr));
  }
  return out;
}

/// One mask for the whole recording; eta, sigma and noise redrawn per window.
inline Recording corrupt_recording(const Recording& rec, const CorruptionSpec& spec, Rng& rng,
                                   ChannelMask* mask_out = nullptr) {
  spec.validate();
  Recording out{rec.id, rec.label, {}};
  if (rec.windows.empty()) return out;
  const std::size_t c = rec.windows.front().rows();
  const auto nu = detail::draw_mask(spec, c, rng);
  if (mask_out) *mask_out = nu;
  const std::uint64_t rec_seed = rng.next_u64();
  out.windows.reserve(rec.windows.size());
  for (std::size_t i = 0; i < rec.windows.size(); ++i) {
    Rng wr(derive_seed(rec_seed, i));
    const double eta = spec.eta.draw(wr);
    const double sigma = spec.sigma_uv.draw(wr);
    out.windows.push_back(corrupt_window(rec.windows[i], nu, eta, sigma, wr));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Corruption detector

/// Least-squares slope of log10(power) against log10(frequency) over the
/// periodogram bins in [f_lo, f_hi], DC excluded.
inline double psd_slope(std::span<const double> x, double f_lo, double f_hi, double sfreq) {
  if (x.size() < 256) throw InputError("psd_slope: need at least 256 samples");
  const auto p = periodogram(x, sfreq);
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  std::size_t n = 0;
  for (std::size_t k = 1; k < p.size(); ++k) {
    const double f = bin_frequency(k, x.size(), sfreq);
    if (f < f_lo || f > f_hi) continue;
    const double lx = std::log10(f);
    const double ly = std::log10(std::max(p[k], 1e-300));
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
    ++n;
  }
  if (n < 2) throw InputError("psd_slope: fewer than two bins in frequency range");
  const double dn = double(n);
  return (dn * sxy - sx * sy) / (dn * sxx - sx * sx);
}

struct DetectorConfig {
  double slope_threshold = -0.5;
  double variance_threshold_uv2 = 1000.0;
  double f_lo = 0.1;
  double f_hi = 30.0;
};

/// Whether channel `row` of a window looks corrupted: flat spectrum and high variance.
inline bool channel_flagged(std::span<const double> row, double sfreq, const DetectorConfig& cfg) {
  const double n = double(row.size());
  const double mean = std::accumulate(row.begin(), row.end(), 0.0) / n;
  double ss = 0.0;
  for (double v : row) ss += (v - mean) * (v - mean);
  const double var = ss / (n - 1.0);
  if (!(var > cfg.variance_threshold_uv2)) return false;
  return psd_slope(row, cfg.f_lo, cfg.f_hi, sfreq) > cfg.slope_threshold;
}

/// Fraction of (window, channel) pairs flagged as corrupted.
inline double corruption_fraction(const Recording& rec, double sfreq,
                                  const DetectorConfig& cfg = {}) {
  if (rec.windows.empty()) throw InputError("corruption_fraction: empty recording");
  std::size_t flagged = 0, total = 0;
  for (const auto& w : rec.windows)
    for (std::size_t i = 0; i < w.rows(); ++i) {
      flagged += channel_flagged(w.row(i), sfreq, cfg) ? 1 : 0;
      ++total;
    }
  return double(flagged) / double(total);
}

}  // namespace dsf

#endif  // DSF_CORRUPTION_HPP
