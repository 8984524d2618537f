#ifndef DSF_INTERP_HPP
#define DSF_INTERP_HPP

// Interpolation-based channel repair, from a fixed learned interpolation
// matrix to fully dynamic per-window interpolation:
//
//   interp_only  Y = W X
//   scalar       Y = a X + (1 - a) W X              a = sigmoid(mlp(phi))
//   vector       Y = diag(a) X + (I - diag(a)) W X  a in [0, 1]^C
//   dynamic      Y = diag(a) X + (I - diag(a)) W_X X, with (a, W_X) from one
//                MLP emitting C x C values (diagonal -> a, off-diagonal -> W_X)
//
// Every variant is evaluated as Y = Omega X with
// Omega = diag(a) + diag(1 - a) W, which relies on W having a zero diagonal.

#include <cmath>
#include <string>
#include <vector>

#include "dsf/dsf.hpp"
#include "dsf/nn.hpp"
#include "dsf/spatial.hpp"

namespace dsf {

enum class InterpKind { interp_only, scalar, vector, dynamic };

/// Omega with diagonal alpha_i and off-diagonal (1 - alpha_i) W_ij.
inline Matrix dynamic_omega(std::span<const double> alpha, const Matrix& w) {
  const std::size_t c = alpha.size();
  if (w.rows() != c || w.cols() != c) throw InputError("dynamic_omega: shape mismatch");
  Matrix omega(c, c);
  for (std::size_t i = 0; i < c; ++i) {
    if (w(i, i) != 0.0) throw InputError("dynamic_omega: interpolation matrix diagonal must be 0");
    if (alpha[i] < 0.0 || alpha[i] > 1.0) throw InputError("dynamic_omega: alpha outside [0, 1]");
    for (std::size_t j = 0; j < c; ++j)
      omega(i, j) = i == j ? alpha[i] : (1.0 - alpha[i]) * w(i, j);
  }
  return omega;
}

/// diag(a) X + (I - diag(a)) W X evaluated term by term.
inline Matrix interp_two_term(std::span<const double> alpha, const Matrix& w, const Matrix& x) {
  const Matrix wx = matmul(w, x);
  Matrix y(x.rows(), x.cols());
  for (std::size_t i = 0; i < x.rows(); ++i)
    for (std::size_t k = 0; k < x.cols(); ++k)
      y(i, k) = alpha[i] * x(i, k) + (1.0 - alpha[i]) * wx(i, k);
  return y;
}

/// Zero-diagonal static interpolation matrix averaging the other C - 1 channels.
inline Tensor uniform_interpolation_init(std::size_t c) {
  Tensor w({c, c});
  if (c < 2) return w;
  for (std::size_t i = 0; i < c; ++i)
    for (std::size_t j = 0; j < c; ++j)
      if (i != j) w[i * c + j] = 1.0 / double(c - 1);
  return w;
}

class InterpModule final : public Layer {
 public:
  InterpModule(InterpKind kind, std::size_t channels, std::string prefix = "interp")
      : kind_(kind), c_(channels), prefix_(std::move(prefix)) {
    if (channels < 2) throw InputError("InterpModule: need at least 2 channels");
    if (kind_ != InterpKind::interp_only) {
      const std::size_t d = summary_size(SummaryKind::logm_covariance, c_);
      mlp_.emplace<Dense>(prefix_ + ".fc1", d, c_ * c_);
      mlp_.emplace<Sigmoid>();
      mlp_.emplace<Dense>(prefix_ + ".fc2", c_ * c_, mlp_outputs());
    }
  }

  InterpKind kind() const noexcept { return kind_; }
  std::string weight_name() const { return prefix_ + ".W"; }
  bool has_static_weight() const { return kind_ != InterpKind::dynamic; }

  std::size_t mlp_outputs() const {
    switch (kind_) {
      case InterpKind::scalar: return 1;
      case InterpKind::vector: return c_;
      case InterpKind::dynamic: return c_ * c_;
      default: return 0;
    }
  }

  void init_params(ParamStore& ps, Rng& rng) const override {
    if (has_static_weight()) ps.add(weight_name(), uniform_interpolation_init(c_));
    if (kind_ != InterpKind::interp_only) mlp_.init_params(ps, rng);
  }

  Tensor forward(const Tensor& x, const ParamStore& ps, Mode mode, Rng& rng) override {
    if (x.rank() != 3 || x.dim(1) != c_) throw InputError("InterpModule: channel count mismatch");
    const std::size_t n = x.dim(0), t = x.dim(2);
    input_ = x;
    if (kind_ != InterpKind::interp_only)
      raw_ = mlp_.forward(batch_summaries(x, SummaryKind::logm_covariance), ps, mode, rng);

    alpha_.assign(n, std::vector<double>(c_, 0.0));
    weights_.assign(n, Matrix());
    Tensor y({n, c_, t});
    for (std::size_t b = 0; b < n; ++b) {
      resolve(b, ps);
      const Matrix omega = kind_ == InterpKind::interp_only
                               ? weights_[b]
                               : dynamic_omega(alpha_[b], weights_[b]);
      const double* xb = &x[b * c_ * t];
      double* yb = &y[b * c_ * t];
      for (std::size_t i = 0; i < c_; ++i)
        for (std::size_t j = 0; j < c_; ++j) {
          const double o = omega(i, j);
          if (o == 0.0) continue;
          for (std::size_t k = 0; k < t; ++k) yb[i * t + k] += o * xb[j * t + k];
        }
    }
    return y;
  }

  Tensor backward(const Tensor& g, ParamStore& ps, bool need_input_grad) override {
    const std::size_t n = input_.dim(0), t = input_.dim(2);
    Tensor graw = kind_ == InterpKind::interp_only ? Tensor() : Tensor(raw_.shape());
    Tensor gx = need_input_grad ? Tensor(input_.shape()) : Tensor();
    Tensor* gw = has_static_weight() ? &ps.grad(weight_name()) : nullptr;

    for (std::size_t b = 0; b < n; ++b) {
      const double* xb = &input_[b * c_ * t];
      const double* gb = &g[b * c_ * t];
      // d loss / d Omega = G X^T
      Matrix gomega(c_, c_);
      for (std::size_t i = 0; i < c_; ++i)
        for (std::size_t j = 0; j < c_; ++j) {
          double acc = 0.0;
          for (std::size_t k = 0; k < t; ++k) acc += gb[i * t + k] * xb[j * t + k];
          gomega(i, j) = acc;
        }
      if (need_input_grad) {
        const Matrix omega = kind_ == InterpKind::interp_only
                                 ? weights_[b]
                                 : dynamic_omega(alpha_[b], weights_[b]);
        double* gxb = &gx[b * c_ * t];
        for (std::size_t i = 0; i < c_; ++i)
          for (std::size_t j = 0; j < c_; ++j) {
            const double o = omega(i, j);
            for (std::size_t k = 0; k < t; ++k) gxb[j * t + k] += o * gb[i * t + k];
          }
      }

      const auto& a = alpha_[b];
      const Matrix& w = weights_[b];
      std::vector<double> galpha(c_, 0.0);
      Matrix gweights(c_, c_);
      for (std::size_t i = 0; i < c_; ++i) {
        const double scale = kind_ == InterpKind::interp_only ? 1.0 : 1.0 - a[i];
        galpha[i] = gomega(i, i);
        for (std::size_t j = 0; j < c_; ++j) {
          if (i == j) continue;
          gweights(i, j) = scale * gomega(i, j);
          galpha[i] -= gomega(i, j) * w(i, j);
        }
      }

      if (gw)
        for (std::size_t i = 0; i < c_ * c_; ++i) (*gw)[i] += gweights.data()[i];

      switch (kind_) {
        case InterpKind::interp_only:
          break;
        case InterpKind::scalar: {
          double s = 0.0;
          for (double v : galpha) s += v;
          graw.item(b)[0] = s * a[0] * (1.0 - a[0]);
          break;
        }
        case InterpKind::vector:
          for (std::size_t i = 0; i < c_; ++i) graw.item(b)[i] = galpha[i] * a[i] * (1.0 - a[i]);
          break;
        case InterpKind::dynamic: {
          auto gh = graw.item(b);
          for (std::size_t i = 0; i < c_; ++i)
            for (std::size_t j = 0; j < c_; ++j)
              gh[i * c_ + j] = i == j ? galpha[i] * a[i] * (1.0 - a[i]) : gweights(i, j);
          break;
        }
      }
    }
    if (kind_ != InterpKind::interp_only) mlp_.backward(graw, ps, false);
    return gx;
  }

  /// Zero the diagonal of the static interpolation matrix.
  void post_step(ParamStore& ps) const override {
    if (!has_static_weight()) return;
    auto& w = ps.value(weight_name());
    for (std::size_t i = 0; i < c_; ++i) w[i * c_ + i] = 0.0;
  }

  const std::vector<std::vector<double>>& last_alpha() const noexcept { return alpha_; }
  const std::vector<Matrix>& last_weights() const noexcept { return weights_; }

 private:
  static double sigmoid(double v) { return 1.0 / (1.0 + std::exp(-v)); }

  void resolve(std::size_t b, const ParamStore& ps) {
    auto& a = alpha_[b];
    Matrix& w = weights_[b];
    if (has_static_weight()) {
      const auto& sw = ps.value(weight_name());
      w = Matrix(c_, c_, std::vector<double>(sw.data().begin(), sw.data().end()));
      for (std::size_t i = 0; i < c_; ++i) w(i, i) = 0.0;
    }
    switch (kind_) {
      case InterpKind::interp_only:
        break;
      case InterpKind::scalar:
        std::fill(a.begin(), a.end(), sigmoid(raw_.item(b)[0]));
        break;
      case InterpKind::vector:
        for (std::size_t i = 0; i < c_; ++i) a[i] = sigmoid(raw_.item(b)[i]);
        break;
      case InterpKind::dynamic: {
        auto h = raw_.item(b);
        w = Matrix(c_, c_);
        for (std::size_t i = 0; i < c_; ++i)
          for (std::size_t j = 0; j < c_; ++j) {
            if (i == j) a[i] = sigmoid(h[i * c_ + i]);
            else w(i, j) = h[i * c_ + j];
          }
        break;
      }
    }
  }

  InterpKind kind_;
  std::size_t c_;
  std::string prefix_;
  Sequential mlp_;
  Tensor input_;
  Tensor raw_;
  std::vector<std::vector<double>> alpha_;
  std::vector<Matrix> weights_;
};

/// Single-window forward pass of an interpolation variant.
inline Matrix interp_forward(const Matrix& x, InterpKind kind, const ParamStore& ps,
                             const std::string& prefix = "interp") {
  InterpModule module(kind, x.rows(), prefix);
  Rng unused(0);
  return window_of(
      module.forward(stack_windows(std::span<const Matrix>(&x, 1)), ps, Mode::eval, unused), 0);
}

}  // namespace dsf

#endif  // DSF_INTERP_HPP
