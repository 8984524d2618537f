#ifndef DSF_SYNTH_HPP
#define DSF_SYNTH_HPP

// Synthetic multichannel recordings for a two-class task that depends on
// spatial structure. Three sources (10 Hz, 20 Hz and a 1/f distractor) are
// mixed into C sensors by a fixed full-rank matrix; the label selects which
// oscillation is boosted. Everything is a pure function of (config, seed).

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <numeric>
#include <vector>

#include "dsf/dataset.hpp"
#include "dsf/linalg.hpp"
#include "dsf/rng.hpp"
#include "dsf/spectral.hpp"

namespace dsf {

struct SynthConfig {
  std::size_t channels = 6;
  std::size_t samples = 600;
  double sfreq = 100.0;
  std::size_t n_recordings = 60;
  std::size_t windows_per_recording = 20;
  std::size_t n_classes = 2;
  std::vector<double> class_priors;  // empty = balanced
  std::uint64_t mixing_seed = 7;
  bool mixing = true;  // false: every sensor sees each source at unit gain

  double f_class0 = 10.0;
  double f_class1 = 20.0;
  double amplitude_uv = 10.0;  // unboosted oscillation amplitude
  double boost = 2.0;          // amplitude factor of the boosted source (power x4)
  double background_uv = 8.0;  // std of the 1/f distractor
  double sensor_noise_uv = 2.0;

  void validate() const {
    if (channels < 2) throw InputError("SynthConfig: need C >= 2");
    if (samples < 128) throw InputError("SynthConfig: need T >= 128");
    if (n_classes != 2) throw InputError("SynthConfig: generator supports two classes");
    if (!class_priors.empty() && class_priors.size() != n_classes)
      throw InputError("SynthConfig: class_priors length must equal n_classes");
    if (!(sfreq > 2.0 * f_class1)) throw InputError("SynthConfig: sfreq below Nyquist of sources");
  }
};

inline constexpr std::size_t kSynthSources = 3;

/// C x 3 mixing matrix with entries U(-1, 1), redrawn until well conditioned.
inline Matrix synth_mixing_matrix(const SynthConfig& cfg) {
  const std::size_t c = cfg.channels;
  if (!cfg.mixing) return Matrix(c, kSynthSources, 1.0);
  Rng rng(cfg.mixing_seed);
  for (;;) {
    Matrix m(c, kSynthSources);
    for (double& v : m.data()) v = rng.uniform(-1.0, 1.0);
    const auto dec = sym_eig(matmul(transpose(m), m));
    const double lo = dec.eigenvalues.back(), hi = dec.eigenvalues.front();
    if (c < kSynthSources || lo > 0.05 * hi) return m;
  }
}

namespace detail {

/// Unit-variance 1/f noise shaped in the frequency domain.
inline std::vector<double> pink_noise(std::size_t n, Rng& rng) {
  std::vector<cplx> spec(n);
  for (std::size_t k = 1; k <= n / 2; ++k) {
    const double a = 1.0 / std::sqrt(double(k));
    spec[k] = cplx(rng.normal() * a, rng.normal() * a);
    if (k != n - k) spec[n - k] = std::conj(spec[k]);
    else spec[k] = spec[k].real();
  }
  const auto t = dft(std::move(spec), true);
  std::vector<double> out(n);
  double ss = 0.0;
  for (std::size_t i = 0; i < n; ++i) ss += (out[i] = t[i].real()) * out[i];
  const double sd = std::sqrt(ss / double(n));
  for (double& v : out) v /= sd;
  return out;
}

inline std::vector<int> draw_labels(const SynthConfig& cfg, Rng& rng) {
  std::vector<double> priors = cfg.class_priors;
  if (priors.empty()) priors.assign(cfg.n_classes, 1.0 / double(cfg.n_classes));
  const double total = std::accumulate(priors.begin(), priors.end(), 0.0);
  std::vector<int> labels;
  for (std::size_t k = 0; k < cfg.n_classes; ++k) {
    const auto count = std::size_t(std::llround(priors[k] / total * double(cfg.n_recordings)));
    labels.insert(labels.end(), std::min(count, cfg.n_recordings - labels.size()), int(k));
  }
  while (labels.size() < cfg.n_recordings) labels.push_back(int(cfg.n_classes - 1));
  rng.shuffle(std::span<int>(labels));
  return labels;
}

}  // namespace detail

inline Dataset generate_dataset(const SynthConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  const std::size_t c = cfg.channels, t = cfg.samples;
  const Matrix mix = synth_mixing_matrix(cfg);
  Rng label_rng(derive_seed(seed, 0xABCDEFULL));
  const auto labels = detail::draw_labels(cfg, label_rng);

  Dataset ds;
  ds.channels = c;
  ds.samples = t;
  ds.sfreq = cfg.sfreq;
  ds.n_classes = cfg.n_classes;
  ds.recordings.resize(cfg.n_recordings);
  for (std::size_t r = 0; r < cfg.n_recordings; ++r) {
    Rng rng(derive_seed(seed, r));
    Recording& rec = ds.recordings[r];
    rec.id = r;
    rec.label = labels[r];
    const double gain = rng.uniform(0.8, 1.25);
    const std::array<double, 2> amp = {
        cfg.amplitude_uv * (rec.label == 0 ? cfg.boost : 1.0),
        cfg.amplitude_uv * (rec.label == 1 ? cfg.boost : 1.0)};
    const std::array<double, 2> freq = {cfg.f_class0, cfg.f_class1};

    rec.windows.reserve(cfg.windows_per_recording);
    for (std::size_t w = 0; w < cfg.windows_per_recording; ++w) {
      Matrix src(kSynthSources, t);
      for (std::size_t k = 0; k < 2; ++k) {
        const double f = freq[k] + rng.uniform(-0.5, 0.5);
        const double a = gain * amp[k] * rng.uniform(0.8, 1.2);
        const double phase = rng.uniform(0.0, 2.0 * std::numbers::pi);
        for (std::size_t i = 0; i < t; ++i)
          src(k, i) = a * std::sin(2.0 * std::numbers::pi * f * double(i) / cfg.sfreq + phase);
      }
      const auto bg = detail::pink_noise(t, rng);
      for (std::size_t i = 0; i < t; ++i) src(2, i) = gain * cfg.background_uv * bg[i];

      Matrix x = matmul(mix, src);
      for (double& v : x.data()) v += rng.normal(0.0, cfg.sensor_noise_uv);
      rec.windows.push_back(std::move(x));
    }
  }
  return ds;
}

/// Label-stratified, recording-wise split into train/valid/test.
inline Dataset split_dataset(Dataset ds, std::array<double, 3> fractions, std::uint64_t seed) {
  const double sum = fractions[0] + fractions[1] + fractions[2];
  if (std::abs(sum - 1.0) > 1e-9 || fractions[0] < 0 || fractions[1] < 0 || fractions[2] < 0)
    throw InputError("split_dataset: fractions must be non-negative and sum to 1");
  const std::size_t wanted =
      std::size_t(fractions[0] > 0) + std::size_t(fractions[1] > 0) + std::size_t(fractions[2] > 0);

  ds.splits.assign(ds.recordings.size(), Split::train);
  Rng rng(seed);
  for (std::size_t cls = 0; cls < ds.n_classes; ++cls) {
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < ds.recordings.size(); ++i)
      if (ds.recordings[i].label == int(cls)) idx.push_back(i);
    if (idx.empty()) continue;
    if (idx.size() < wanted) throw InputError("split_dataset: too few recordings per class");
    rng.shuffle(std::span<std::size_t>(idx));
    const std::size_t n = idx.size();
    std::size_t n_train = std::size_t(std::llround(fractions[0] * double(n)));
    std::size_t n_valid = std::size_t(std::llround(fractions[1] * double(n)));
    n_train = std::min(n_train, n);
    n_valid = std::min(n_valid, n - n_train);
    for (std::size_t k = 0; k < n; ++k)
      ds.splits[idx[k]] = k < n_train ? Split::train
                          : k < n_train + n_valid ? Split::valid
                                                  : Split::test;
  }
  return ds;
}

}  // namespace dsf

#endif  // DSF_SYNTH_HPP
