#ifndef DSF_SPECTRAL_HPP
#define DSF_SPECTRAL_HPP

// Discrete Fourier transforms (FFTW), periodograms and brick-wall band
// filtering.

#include <fftw3.h>

#include <cmath>
#include <complex>
#include <mutex>
#include <span>
#include <vector>

#include "dsf/linalg.hpp"

namespace dsf {

using cplx = std::complex<double>;

namespace detail {

// FFTW planning is not thread-safe; execution of a private plan is.
inline std::mutex& fftw_planner_mutex() {
  static std::mutex m;
  return m;
}

}  // namespace detail

/// Unnormalized DFT: X_k = sum_n x_n exp(-+2 pi i k n / N). The inverse
/// direction also divides by N.
inline std::vector<cplx> dft(std::vector<cplx> a, bool inverse = false) {
  const std::size_t n = a.size();
  if (n <= 1) return a;
  auto* buf = reinterpret_cast<fftw_complex*>(a.data());
  fftw_plan plan;
  {
    // Unaligned plans do not depend on where the buffer happens to live,
    // which keeps results bit-identical across allocations and threads.
    std::lock_guard lock(detail::fftw_planner_mutex());
    plan = fftw_plan_dft_1d(int(n), buf, buf, inverse ? FFTW_BACKWARD : FFTW_FORWARD,
                            FFTW_ESTIMATE | FFTW_UNALIGNED);
  }
  if (!plan) throw InputError("dft: FFTW could not plan a transform of this length");
  fftw_execute(plan);
  {
    std::lock_guard lock(detail::fftw_planner_mutex());
    fftw_destroy_plan(plan);
  }
  if (inverse)
    for (auto& v : a) v /= double(n);
  return a;
}

inline std::vector<cplx> rdft(std::span<const double> x) {
  return dft(std::vector<cplx>(x.begin(), x.end()), false);
}

/// Frequency of DFT bin k (k <= N/2) for sampling rate sfreq.
inline double bin_frequency(std::size_t k, std::size_t n, double sfreq) {
  return double(k) * sfreq / double(n);
}

/// One-sided periodogram |X_k|^2 / (sfreq N), bins 0..N/2, rectangular window.
inline std::vector<double> periodogram(std::span<const double> x, double sfreq) {
  const auto spec = rdft(x);
  const std::size_t n = x.size();
  std::vector<double> p(n / 2 + 1);
  for (std::size_t k = 0; k < p.size(); ++k) p[k] = std::norm(spec[k]) / (sfreq * double(n));
  return p;
}

/// Zero-phase brick-wall band-pass keeping bins with f_lo <= f <= f_hi.
inline std::vector<double> bandpass_brickwall(std::span<const double> x, double f_lo, double f_hi,
                                              double sfreq) {
  const std::size_t n = x.size();
  auto spec = rdft(x);
  for (std::size_t k = 0; k < n; ++k) {
    const std::size_t kk = k <= n / 2 ? k : n - k;  // mirrored bin
    const double f = bin_frequency(kk, n, sfreq);
    if (f < f_lo || f > f_hi) spec[k] = 0.0;
  }
  const auto back = dft(std::move(spec), true);
  std::vector<double> out(n);
  for (std::size_t k = 0; k < n; ++k) out[k] = back[k].real();
  return out;
}

}  // namespace dsf

#endif  // DSF_SPECTRAL_HPP
