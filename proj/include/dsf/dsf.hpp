#ifndef DSF_DSF_HPP
#define DSF_DSF_HPP

// Dynamic spatial filtering: a two-layer MLP maps the spatial summary of a
// window to C' spatial filters W (C' x C) and biases b, and the window is
// remapped as Y = W X + b 1^T. Gradients reach the MLP through Y only; the
// summary is treated as a constant of the input.

#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "dsf/nn.hpp"
#include "dsf/spatial.hpp"

namespace dsf {

enum class DsfVariant { dsfd, dsfm, dsfm_st };

struct DsfConfig {
  DsfVariant variant = DsfVariant::dsfm_st;
  std::size_t channels = 6;
  std::size_t channels_out = 6;
  std::optional<std::size_t> hidden;  // unset selects C^2
  double tau = 0.1;

  SummaryKind summary_kind() const {
    return variant == DsfVariant::dsfd ? SummaryKind::log_variance : SummaryKind::logm_covariance;
  }
  std::size_t hidden_units() const { return hidden.value_or(channels * channels); }
  std::size_t summary_dim() const { return summary_size(summary_kind(), channels); }
  bool thresholded() const { return variant == DsfVariant::dsfm_st; }

  void validate() const {
    if (channels == 0) throw InputError("DsfConfig: channels must be >= 1");
    if (channels_out == 0) throw InputError("DsfConfig: channels_out must be >= 1");
    if (tau < 0.0) throw InputError("DsfConfig: tau must be >= 0");
    if (hidden_units() == 0) throw InputError("DsfConfig: hidden must be >= 1");
  }
};

struct SpatialFilterSet {
  Matrix weights;             // C' x C, as applied
  std::vector<double> bias;   // C'
};

inline double soft_threshold(double w, double tau) {
  const double mag = std::abs(w) - tau;
  if (mag <= 0.0) return 0.0;
  return w > 0.0 ? mag : (w < 0.0 ? -mag : 0.0);
}

inline Matrix soft_threshold(const Matrix& w, double tau) {
  Matrix out = w;
  for (double& v : out.data()) v = soft_threshold(v, tau);
  return out;
}

/// phi_j = sqrt(sum_i W_ij^2), column norms of the applied filters.
inline std::vector<double> channel_contribution(const Matrix& w) {
  std::vector<double> phi(w.cols(), 0.0);
  for (std::size_t i = 0; i < w.rows(); ++i)
    for (std::size_t j = 0; j < w.cols(); ++j) phi[j] += w(i, j) * w(i, j);
  for (double& v : phi) v = std::sqrt(v);
  return phi;
}

/// (d_phi + 1) * hidden + (hidden + 1) * C' * (C + 1)
inline std::size_t dsf_param_count(const DsfConfig& cfg) {
  cfg.validate();
  const std::size_t h = cfg.hidden_units();
  return (cfg.summary_dim() + 1) * h + (h + 1) * cfg.channels_out * (cfg.channels + 1);
}

/// Summaries for each window of a (batch, C, T) tensor as a (batch, d) tensor.
inline Tensor batch_summaries(const Tensor& x, SummaryKind kind) {
  const std::size_t n = x.dim(0), c = x.dim(1);
  const std::size_t d = summary_size(kind, c);
  Tensor out({n, d});
  for (std::size_t b = 0; b < n; ++b) {
    const auto s = spatial_summary(kind, window_of(x, b));
    std::copy(s.values.begin(), s.values.end(), out.item(b).begin());
  }
  return out;
}

class DsfModule final : public Layer {
 public:
  explicit DsfModule(DsfConfig cfg, std::string prefix = "dsf")
      : cfg_(cfg), prefix_(std::move(prefix)) {
    cfg_.validate();
    mlp_.emplace<Dense>(prefix_ + ".fc1", cfg_.summary_dim(), cfg_.hidden_units());
    mlp_.emplace<Sigmoid>();
    mlp_.emplace<Dense>(prefix_ + ".fc2", cfg_.hidden_units(),
                        cfg_.channels_out * (cfg_.channels + 1));
  }

  const DsfConfig& config() const noexcept { return cfg_; }
  const std::string& prefix() const noexcept { return prefix_; }

  void init_params(ParamStore& ps, Rng& rng) const override { mlp_.init_params(ps, rng); }

  Tensor forward(const Tensor& x, const ParamStore& ps, Mode mode, Rng& rng) override {
    if (x.rank() != 3 || x.dim(1) != cfg_.channels)
      throw InputError("DsfModule: expected (batch, C, T) input with C = config channels");
    const std::size_t n = x.dim(0), c = cfg_.channels, co = cfg_.channels_out, t = x.dim(2);
    if (t < 2) throw DegenerateInput("DsfModule: need at least 2 samples");
    input_ = x;
    raw_ = mlp_.forward(batch_summaries(x, cfg_.summary_kind()), ps, mode, rng);

    filters_.assign(n, {});
    Tensor y({n, co, t});
    for (std::size_t b = 0; b < n; ++b) {
      auto h = raw_.item(b);
      SpatialFilterSet& f = filters_[b];
      f.weights = Matrix(co, c, std::vector<double>(h.begin(), h.begin() + co * c));
      f.bias.assign(h.begin() + co * c, h.end());
      if (cfg_.thresholded()) f.weights = soft_threshold(f.weights, cfg_.tau);

      const double* xb = &x[b * c * t];
      double* yb = &y[b * co * t];
      for (std::size_t i = 0; i < co; ++i) {
        double* yr = yb + i * t;
        std::fill(yr, yr + t, f.bias[i]);
        for (std::size_t j = 0; j < c; ++j) {
          const double wij = f.weights(i, j);
          if (wij == 0.0) continue;
          const double* xr = xb + j * t;
          for (std::size_t k = 0; k < t; ++k) yr[k] += wij * xr[k];
        }
      }
    }
    return y;
  }

  Tensor backward(const Tensor& g, ParamStore& ps, bool need_input_grad) override {
    const std::size_t n = input_.dim(0), c = cfg_.channels, co = cfg_.channels_out;
    const std::size_t t = input_.dim(2);
    Tensor graw(raw_.shape());
    Tensor gx = need_input_grad ? Tensor(input_.shape()) : Tensor();
    for (std::size_t b = 0; b < n; ++b) {
      const double* xb = &input_[b * c * t];
      const double* gb = &g[b * co * t];
      auto h = raw_.item(b);
      auto gh = graw.item(b);
      for (std::size_t i = 0; i < co; ++i) {
        const double* gr = gb + i * t;
        gh[co * c + i] = std::accumulate(gr, gr + t, 0.0);
        for (std::size_t j = 0; j < c; ++j) {
          const bool pass = !cfg_.thresholded() || std::abs(h[i * c + j]) > cfg_.tau;
          if (pass) {
            const double* xr = xb + j * t;
            double acc = 0.0;
            for (std::size_t k = 0; k < t; ++k) acc += gr[k] * xr[k];
            gh[i * c + j] = acc;
          }
          if (need_input_grad) {
            const double wij = filters_[b].weights(i, j);
            double* gxr = &gx[b * c * t + j * t];
            for (std::size_t k = 0; k < t; ++k) gxr[k] += wij * gr[k];
          }
        }
      }
    }
    mlp_.backward(graw, ps, false);
    return gx;
  }

  /// Filters applied to window b by the latest forward pass.
  const std::vector<SpatialFilterSet>& last_filters() const noexcept { return filters_; }

 private:
  DsfConfig cfg_;
  std::string prefix_;
  Sequential mlp_;
  Tensor input_;
  Tensor raw_;
  std::vector<SpatialFilterSet> filters_;
};

struct DsfOutput {
  Matrix y;
  SpatialFilterSet filters;
};

/// Single-window forward pass of the DSF module.
inline DsfOutput dsf_forward(const Matrix& x, const ParamStore& ps, const DsfConfig& cfg,
                             const std::string& prefix = "dsf") {
  DsfModule module(cfg, prefix);
  Rng unused(0);
  const Tensor y = module.forward(stack_windows(std::span<const Matrix>(&x, 1)), ps, Mode::eval,
                                  unused);
  return {window_of(y, 0), module.last_filters().front()};
}

}  // namespace dsf

#endif  // DSF_DSF_HPP
