#ifndef DSF_NN_HPP
#define DSF_NN_HPP

// Minimal differentiable stack: tensors, a named parameter store with AdamW
// state, layers with hand-written backward passes, weighted cross-entropy,
// the cosine schedule and a central finite-difference checker.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <numbers>
#include <numeric>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "dsf/linalg.hpp"
#include "dsf/rng.hpp"

namespace dsf {

class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(std::vector<std::size_t> shape, double fill = 0.0)
      : shape_(std::move(shape)), data_(count(shape_), fill) {}
  Tensor(std::vector<std::size_t> shape, std::vector<double> data)
      : shape_(std::move(shape)), data_(std::move(data)) {
    if (data_.size() != count(shape_)) throw InputError("Tensor: data length does not match shape");
  }

  const std::vector<std::size_t>& shape() const noexcept { return shape_; }
  std::size_t rank() const noexcept { return shape_.size(); }
  std::size_t dim(std::size_t i) const { return shape_.at(i); }
  std::size_t size() const noexcept { return data_.size(); }

  std::span<double> data() noexcept { return data_; }
  std::span<const double> data() const noexcept { return data_; }
  double& operator[](std::size_t i) noexcept { return data_[i]; }
  const double& operator[](std::size_t i) const noexcept { return data_[i]; }

  /// Contiguous block for batch item b.
  std::span<double> item(std::size_t b) noexcept {
    const std::size_t n = data_.size() / shape_[0];
    return {data_.data() + b * n, n};
  }
  std::span<const double> item(std::size_t b) const noexcept {
    const std::size_t n = data_.size() / shape_[0];
    return {data_.data() + b * n, n};
  }

  Tensor reshaped(std::vector<std::size_t> shape) const {
    if (count(shape) != data_.size()) throw InputError("Tensor::reshaped: size mismatch");
    return Tensor(std::move(shape), data_);
  }

  void fill(double v) { std::fill(data_.begin(), data_.end(), v); }

  bool operator==(const Tensor&) const = default;

  static std::size_t count(const std::vector<std::size_t>& shape) {
    return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
  }

 private:
  std::vector<std::size_t> shape_;
  std::vector<double> data_;
};

/// Stack C x T windows into a (batch, C, T) tensor.
inline Tensor stack_windows(std::span<const Matrix> windows) {
  if (windows.empty()) throw InputError("stack_windows: empty batch");
  const std::size_t c = windows[0].rows(), t = windows[0].cols();
  Tensor out({windows.size(), c, t});
  for (std::size_t b = 0; b < windows.size(); ++b) {
    if (windows[b].rows() != c || windows[b].cols() != t)
      throw InputError("stack_windows: window shapes differ");
    std::copy(windows[b].data().begin(), windows[b].data().end(), out.item(b).begin());
  }
  return out;
}

inline Matrix window_of(const Tensor& x, std::size_t b) {
  auto it = x.item(b);
  return Matrix(x.dim(1), x.dim(2), std::vector<double>(it.begin(), it.end()));
}

// ---------------------------------------------------------------------------
// Parameters

struct ParamEntry {
  Tensor value;
  Tensor grad;
  Tensor adam_m;
  Tensor adam_v;
};

class ParamStore {
 public:
  ParamEntry& add(const std::string& name, Tensor value) {
    if (index_.count(name)) throw InputError("ParamStore: duplicate name " + name);
    index_[name] = entries_.size();
    names_.push_back(name);
    const auto shape = value.shape();
    entries_.push_back({std::move(value), Tensor(shape), Tensor(shape), Tensor(shape)});
    return entries_.back();
  }

  bool contains(const std::string& name) const { return index_.count(name) != 0; }

  ParamEntry& at(const std::string& name) {
    auto it = index_.find(name);
    if (it == index_.end()) throw InputError("ParamStore: no parameter " + name);
    return entries_[it->second];
  }
  const ParamEntry& at(const std::string& name) const {
    auto it = index_.find(name);
    if (it == index_.end()) throw InputError("ParamStore: no parameter " + name);
    return entries_[it->second];
  }

  const Tensor& value(const std::string& name) const { return at(name).value; }
  Tensor& value(const std::string& name) { return at(name).value; }
  Tensor& grad(const std::string& name) { return at(name).grad; }

  const std::vector<std::string>& names() const noexcept { return names_; }
  std::vector<ParamEntry>& entries() noexcept { return entries_; }
  const std::vector<ParamEntry>& entries() const noexcept { return entries_; }

  std::size_t parameter_count() const {
    std::size_t n = 0;
    for (const auto& e : entries_) n += e.value.size();
    return n;
  }

  void zero_grad() {
    for (auto& e : entries_) e.grad.fill(0.0);
  }

 private:
  std::vector<std::string> names_;
  std::map<std::string, std::size_t> index_;
  std::vector<ParamEntry> entries_;
};

/// Entries i.i.d. Uniform(-sqrt(6 / fan_in), +sqrt(6 / fan_in)).
inline Tensor he_uniform_init(std::vector<std::size_t> shape, std::size_t fan_in, Rng& rng) {
  if (fan_in == 0) throw InputError("he_uniform_init: fan_in must be >= 1");
  Tensor t(std::move(shape));
  const double bound = std::sqrt(6.0 / double(fan_in));
  for (double& v : t.data()) v = rng.uniform(-bound, bound);
  return t;
}

// ---------------------------------------------------------------------------
// Optimization

struct TrainConfig {
  double lr0 = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 1e-3;
  double dropout_rate = 0.5;
  std::size_t max_epochs = 40;
  std::size_t patience = 8;
  std::size_t batch_size = 32;
  std::size_t t_max = 40;  // cosine horizon, in epochs
  std::uint64_t seed = 0;

  void validate() const {
    if (!(lr0 > 0.0)) throw InputError("TrainConfig: lr0 must be > 0");
    if (dropout_rate < 0.0 || dropout_rate >= 1.0)
      throw InputError("TrainConfig: dropout_rate must be in [0, 1)");
    if (patience > max_epochs) throw InputError("TrainConfig: patience > max_epochs");
    if (batch_size == 0) throw InputError("TrainConfig: batch_size must be >= 1");
  }
};

/// Decoupled weight decay Adam with bias correction; t is the 1-based step.
inline void adamw_step(ParamStore& params, double lr, const TrainConfig& cfg, std::size_t t) {
  const double c1 = 1.0 - std::pow(cfg.beta1, double(t));
  const double c2 = 1.0 - std::pow(cfg.beta2, double(t));
  for (auto& e : params.entries()) {
    auto w = e.value.data();
    auto g = e.grad.data();
    auto m = e.adam_m.data();
    auto v = e.adam_v.data();
    for (std::size_t i = 0; i < w.size(); ++i) {
      m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * g[i];
      v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * g[i] * g[i];
      const double mhat = m[i] / c1;
      const double vhat = v[i] / c2;
      w[i] -= lr * (mhat / (std::sqrt(vhat) + cfg.eps) + cfg.weight_decay * w[i]);
    }
  }
}

inline double cosine_lr(double t, double t_max, double lr0) {
  if (t_max <= 0.0) throw InputError("cosine_lr: t_max must be > 0");
  return lr0 * 0.5 * (1.0 + std::cos(std::numbers::pi * t / t_max));
}

// ---------------------------------------------------------------------------
// Loss

struct LossResult {
  double loss = 0.0;
  Tensor grad;
};

/// Row-wise softmax of a (batch, L) tensor.
inline Tensor softmax(const Tensor& logits) {
  Tensor p = logits;
  const std::size_t l = logits.dim(1);
  for (std::size_t b = 0; b < logits.dim(0); ++b) {
    auto row = p.item(b);
    const double mx = *std::max_element(row.begin(), row.end());
    double z = 0.0;
    for (double& v : row) z += (v = std::exp(v - mx));
    for (std::size_t k = 0; k < l; ++k) row[k] /= z;
  }
  return p;
}

/// Mean over the batch of -w_y log softmax(logits)_y.
inline LossResult softmax_xent(const Tensor& logits, std::span<const int> labels,
                               std::span<const double> class_weights) {
  if (logits.rank() != 2) throw InputError("softmax_xent: logits must be (batch, L)");
  const std::size_t n = logits.dim(0), l = logits.dim(1);
  if (labels.size() != n) throw InputError("softmax_xent: label count mismatch");
  if (class_weights.size() != l) throw InputError("softmax_xent: class weight count mismatch");
  for (double v : logits.data())
    if (!std::isfinite(v)) throw InputError("softmax_xent: non-finite logits");

  LossResult out{0.0, softmax(logits)};
  for (std::size_t b = 0; b < n; ++b) {
    const int y = labels[b];
    if (y < 0 || std::size_t(y) >= l) throw InputError("softmax_xent: label out of range");
    const double w = class_weights[std::size_t(y)];
    auto g = out.grad.item(b);
    auto z = logits.item(b);
    const double mx = *std::max_element(z.begin(), z.end());
    double lse = 0.0;
    for (double v : z) lse += std::exp(v - mx);
    out.loss += w * (std::log(lse) + mx - z[std::size_t(y)]);
    for (std::size_t k = 0; k < l; ++k) g[k] = w * (g[k] - (int(k) == y ? 1.0 : 0.0)) / double(n);
  }
  out.loss /= double(n);
  return out;
}

// ---------------------------------------------------------------------------
// Layers

enum class Mode { train, eval };

class Layer {
 public:
  virtual ~Layer() = default;
  virtual void init_params(ParamStore&, Rng&) const {}
  virtual Tensor forward(const Tensor& x, const ParamStore& ps, Mode mode, Rng& rng) = 0;
  /// Accumulates parameter gradients into ps; returns d loss / d input when
  /// need_input_grad is set, otherwise an empty tensor.
  virtual Tensor backward(const Tensor& grad_out, ParamStore& ps, bool need_input_grad = true) = 0;
  /// Projection applied after each optimizer step (constraints).
  virtual void post_step(ParamStore&) const {}
};

/// Affine map on the flattened per-item features: (batch, ...) -> (batch, out).
class Dense final : public Layer {
 public:
  Dense(std::string name, std::size_t in, std::size_t out)
      : w_(name + ".weight"), b_(name + ".bias"), in_(in), out_(out) {}

  void init_params(ParamStore& ps, Rng& rng) const override {
    ps.add(w_, he_uniform_init({out_, in_}, in_, rng));
    ps.add(b_, Tensor({out_}));
  }

  Tensor forward(const Tensor& x, const ParamStore& ps, Mode, Rng&) override {
    const std::size_t n = x.dim(0);
    if (x.size() != n * in_) throw InputError("Dense: input feature size mismatch");
    input_ = x;
    const auto& w = ps.value(w_);
    const auto& b = ps.value(b_);
    if (w.size() != out_ * in_ || b.size() != out_)
      throw InputError("Dense: parameter shape mismatch for " + w_);
    Tensor y({n, out_});
    for (std::size_t s = 0; s < n; ++s) {
      auto xi = x.item(s);
      auto yi = y.item(s);
      for (std::size_t o = 0; o < out_; ++o) {
        double acc = b[o];
        const double* wr = &w[o * in_];
        for (std::size_t i = 0; i < in_; ++i) acc += wr[i] * xi[i];
        yi[o] = acc;
      }
    }
    return y;
  }

  Tensor backward(const Tensor& g, ParamStore& ps, bool need_input_grad) override {
    const std::size_t n = input_.dim(0);
    auto& gw = ps.grad(w_);
    auto& gb = ps.grad(b_);
    const auto& w = ps.value(w_);
    Tensor gx = need_input_grad ? Tensor(input_.shape()) : Tensor();
    for (std::size_t s = 0; s < n; ++s) {
      auto xi = input_.item(s);
      auto gi = g.item(s);
      for (std::size_t o = 0; o < out_; ++o) {
        const double go = gi[o];
        gb[o] += go;
        double* gwr = &gw[o * in_];
        for (std::size_t i = 0; i < in_; ++i) gwr[i] += go * xi[i];
        if (need_input_grad) {
          auto gxi = gx.item(s);
          const double* wr = &w[o * in_];
          for (std::size_t i = 0; i < in_; ++i) gxi[i] += go * wr[i];
        }
      }
    }
    return gx;
  }

 private:
  std::string w_, b_;
  std::size_t in_, out_;
  Tensor input_;
};

/// Valid-padding temporal convolution with filters shared across channels:
/// (batch, C, T) -> (batch, F * C, T - K + 1), output channel index f * C + c.
class TemporalConv final : public Layer {
 public:
  TemporalConv(std::string name, std::size_t n_filters, std::size_t kernel)
      : w_(name + ".weight"), b_(name + ".bias"), f_(n_filters), k_(kernel) {}

  void init_params(ParamStore& ps, Rng& rng) const override {
    ps.add(w_, he_uniform_init({f_, k_}, k_, rng));
    ps.add(b_, Tensor({f_}));
  }

  Tensor forward(const Tensor& x, const ParamStore& ps, Mode, Rng&) override {
    if (x.rank() != 3) throw InputError("TemporalConv: expected (batch, C, T)");
    const std::size_t n = x.dim(0), c = x.dim(1), t = x.dim(2);
    if (t < k_) throw InputError("TemporalConv: window shorter than kernel");
    const std::size_t to = t - k_ + 1;
    input_ = x;
    const auto& w = ps.value(w_);
    const auto& b = ps.value(b_);
    Tensor y({n, f_ * c, to});
    for (std::size_t s = 0; s < n; ++s)
      for (std::size_t f = 0; f < f_; ++f)
        for (std::size_t ch = 0; ch < c; ++ch) {
          const double* xr = &x[(s * c + ch) * t];
          double* yr = &y[(s * f_ * c + f * c + ch) * to];
          std::fill(yr, yr + to, b[f]);
          for (std::size_t k = 0; k < k_; ++k) {
            const double wk = w[f * k_ + k];
            const double* xs = xr + k;
            for (std::size_t i = 0; i < to; ++i) yr[i] += wk * xs[i];
          }
        }
    return y;
  }

  Tensor backward(const Tensor& g, ParamStore& ps, bool need_input_grad) override {
    const std::size_t n = input_.dim(0), c = input_.dim(1), t = input_.dim(2);
    const std::size_t to = t - k_ + 1;
    auto& gw = ps.grad(w_);
    auto& gb = ps.grad(b_);
    const auto& w = ps.value(w_);
    Tensor gx = need_input_grad ? Tensor(input_.shape()) : Tensor();
    for (std::size_t s = 0; s < n; ++s)
      for (std::size_t f = 0; f < f_; ++f)
        for (std::size_t ch = 0; ch < c; ++ch) {
          const double* xr = &input_[(s * c + ch) * t];
          const double* gr = &g[(s * f_ * c + f * c + ch) * to];
          gb[f] += std::accumulate(gr, gr + to, 0.0);
          for (std::size_t k = 0; k < k_; ++k) {
            const double* xs = xr + k;
            double acc = 0.0;
            for (std::size_t i = 0; i < to; ++i) acc += gr[i] * xs[i];
            gw[f * k_ + k] += acc;
          }
          if (need_input_grad) {
            double* gxr = &gx[(s * c + ch) * t];
            for (std::size_t k = 0; k < k_; ++k) {
              const double wk = w[f * k_ + k];
              double* gxs = gxr + k;
              for (std::size_t i = 0; i < to; ++i) gxs[i] += wk * gr[i];
            }
          }
        }
    return gx;
  }

 private:
  std::string w_, b_;
  std::size_t f_, k_;
  Tensor input_;
};

/// Affine map across the channel axis at every time step:
/// (batch, Cin, T) -> (batch, Cout, T).
class SpatialConv final : public Layer {
 public:
  SpatialConv(std::string name, std::size_t in_channels, std::size_t out_channels)
      : w_(name + ".weight"), b_(name + ".bias"), in_(in_channels), out_(out_channels) {}

  void init_params(ParamStore& ps, Rng& rng) const override {
    ps.add(w_, he_uniform_init({out_, in_}, in_, rng));
    ps.add(b_, Tensor({out_}));
  }

  Tensor forward(const Tensor& x, const ParamStore& ps, Mode, Rng&) override {
    if (x.rank() != 3 || x.dim(1) != in_) throw InputError("SpatialConv: channel count mismatch");
    const std::size_t n = x.dim(0), t = x.dim(2);
    input_ = x;
    const auto& w = ps.value(w_);
    const auto& b = ps.value(b_);
    Tensor y({n, out_, t});
    for (std::size_t s = 0; s < n; ++s)
      for (std::size_t o = 0; o < out_; ++o) {
        double* yr = &y[(s * out_ + o) * t];
        std::fill(yr, yr + t, b[o]);
        for (std::size_t i = 0; i < in_; ++i) {
          const double wi = w[o * in_ + i];
          const double* xr = &x[(s * in_ + i) * t];
          for (std::size_t k = 0; k < t; ++k) yr[k] += wi * xr[k];
        }
      }
    return y;
  }

  Tensor backward(const Tensor& g, ParamStore& ps, bool need_input_grad) override {
    const std::size_t n = input_.dim(0), t = input_.dim(2);
    auto& gw = ps.grad(w_);
    auto& gb = ps.grad(b_);
    const auto& w = ps.value(w_);
    Tensor gx = need_input_grad ? Tensor(input_.shape()) : Tensor();
    for (std::size_t s = 0; s < n; ++s)
      for (std::size_t o = 0; o < out_; ++o) {
        const double* gr = &g[(s * out_ + o) * t];
        gb[o] += std::accumulate(gr, gr + t, 0.0);
        for (std::size_t i = 0; i < in_; ++i) {
          const double* xr = &input_[(s * in_ + i) * t];
          double acc = 0.0;
          for (std::size_t k = 0; k < t; ++k) acc += gr[k] * xr[k];
          gw[o * in_ + i] += acc;
          if (need_input_grad) {
            const double wi = w[o * in_ + i];
            double* gxr = &gx[(s * in_ + i) * t];
            for (std::size_t k = 0; k < t; ++k) gxr[k] += wi * gr[k];
          }
        }
      }
    return gx;
  }

 private:
  std::string w_, b_;
  std::size_t in_, out_;
  Tensor input_;
};

class Square final : public Layer {
 public:
  Tensor forward(const Tensor& x, const ParamStore&, Mode, Rng&) override {
    input_ = x;
    Tensor y = x;
    for (double& v : y.data()) v *= v;
    return y;
  }
  Tensor backward(const Tensor& g, ParamStore&, bool) override {
    Tensor gx = g;
    for (std::size_t i = 0; i < gx.size(); ++i) gx[i] *= 2.0 * input_[i];
    return gx;
  }

 private:
  Tensor input_;
};

/// Natural log with floor: log(max(x, floor)).
class SafeLog final : public Layer {
 public:
  explicit SafeLog(double floor = 1e-6) : floor_(floor) {}
  Tensor forward(const Tensor& x, const ParamStore&, Mode, Rng&) override {
    input_ = x;
    Tensor y = x;
    for (double& v : y.data()) v = std::log(std::max(v, floor_));
    return y;
  }
  Tensor backward(const Tensor& g, ParamStore&, bool) override {
    Tensor gx = g;
    for (std::size_t i = 0; i < gx.size(); ++i)
      gx[i] = input_[i] > floor_ ? gx[i] / input_[i] : 0.0;
    return gx;
  }

 private:
  double floor_;
  Tensor input_;
};

class Sigmoid final : public Layer {
 public:
  Tensor forward(const Tensor& x, const ParamStore&, Mode, Rng&) override {
    out_ = x;
    for (double& v : out_.data()) v = 1.0 / (1.0 + std::exp(-v));
    return out_;
  }
  Tensor backward(const Tensor& g, ParamStore&, bool) override {
    Tensor gx = g;
    for (std::size_t i = 0; i < gx.size(); ++i) gx[i] *= out_[i] * (1.0 - out_[i]);
    return gx;
  }

 private:
  Tensor out_;
};

/// Average pooling over the last axis of (batch, C, T).
class AvgPool final : public Layer {
 public:
  AvgPool(std::size_t window, std::size_t stride) : w_(window), s_(stride) {
    if (window == 0 || stride == 0) throw InputError("AvgPool: window and stride must be >= 1");
  }

  static std::size_t output_length(std::size_t t, std::size_t window, std::size_t stride) {
    return t < window ? 0 : (t - window) / stride + 1;
  }

  Tensor forward(const Tensor& x, const ParamStore&, Mode, Rng&) override {
    if (x.rank() != 3) throw InputError("AvgPool: expected (batch, C, T)");
    in_shape_ = x.shape();
    const std::size_t rows = x.dim(0) * x.dim(1), t = x.dim(2);
    const std::size_t to = output_length(t, w_, s_);
    if (to == 0) throw InputError("AvgPool: input shorter than pooling window");
    Tensor y({x.dim(0), x.dim(1), to});
    for (std::size_t r = 0; r < rows; ++r)
      for (std::size_t j = 0; j < to; ++j) {
        const double* xs = &x[r * t + j * s_];
        y[r * to + j] = std::accumulate(xs, xs + w_, 0.0) / double(w_);
      }
    return y;
  }

  Tensor backward(const Tensor& g, ParamStore&, bool) override {
    Tensor gx(in_shape_);
    const std::size_t rows = in_shape_[0] * in_shape_[1], t = in_shape_[2];
    const std::size_t to = g.dim(2);
    for (std::size_t r = 0; r < rows; ++r)
      for (std::size_t j = 0; j < to; ++j) {
        const double v = g[r * to + j] / double(w_);
        double* gs = &gx[r * t + j * s_];
        for (std::size_t k = 0; k < w_; ++k) gs[k] += v;
      }
    return gx;
  }

 private:
  std::size_t w_, s_;
  std::vector<std::size_t> in_shape_;
};

/// Inverted dropout; identity in eval mode.
class Dropout final : public Layer {
 public:
  explicit Dropout(double rate) : rate_(rate) {
    if (rate < 0.0 || rate >= 1.0) throw InputError("Dropout: rate must be in [0, 1)");
  }
  Tensor forward(const Tensor& x, const ParamStore&, Mode mode, Rng& rng) override {
    if (mode == Mode::eval || rate_ == 0.0) {
      mask_ = Tensor();
      return x;
    }
    mask_ = Tensor(x.shape());
    const double keep = 1.0 / (1.0 - rate_);
    Tensor y = x;
    for (std::size_t i = 0; i < y.size(); ++i) {
      mask_[i] = rng.uniform() < rate_ ? 0.0 : keep;
      y[i] *= mask_[i];
    }
    return y;
  }
  Tensor backward(const Tensor& g, ParamStore&, bool) override {
    if (mask_.size() == 0) return g;
    Tensor gx = g;
    for (std::size_t i = 0; i < gx.size(); ++i) gx[i] *= mask_[i];
    return gx;
  }

 private:
  double rate_;
  Tensor mask_;
};

class Sequential final : public Layer {
 public:
  Sequential& add(std::unique_ptr<Layer> layer) {
    layers_.push_back(std::move(layer));
    return *this;
  }
  template <typename L, typename... Args>
  Sequential& emplace(Args&&... args) {
    return add(std::make_unique<L>(std::forward<Args>(args)...));
  }

  void init_params(ParamStore& ps, Rng& rng) const override {
    for (const auto& l : layers_) l->init_params(ps, rng);
  }
  Tensor forward(const Tensor& x, const ParamStore& ps, Mode mode, Rng& rng) override {
    Tensor h = x;
    for (auto& l : layers_) h = l->forward(h, ps, mode, rng);
    return h;
  }
  Tensor backward(const Tensor& g, ParamStore& ps, bool need_input_grad) override {
    Tensor h = g;
    for (std::size_t i = layers_.size(); i-- > 0;)
      h = layers_[i]->backward(h, ps, i > 0 || need_input_grad);
    return h;
  }
  void post_step(ParamStore& ps) const override {
    for (const auto& l : layers_) l->post_step(ps);
  }

  std::size_t size() const noexcept { return layers_.size(); }
  Layer& operator[](std::size_t i) { return *layers_[i]; }

 private:
  std::vector<std::unique_ptr<Layer>> layers_;
};

// ---------------------------------------------------------------------------
// Gradient checking

struct GradCheckResult {
  double max_rel_error = 0.0;
  std::size_t checked = 0;
};

/// |a - n| / max(|a|, |n|, floor)
inline double relative_error(double analytic, double numeric, double floor = 1e-6) {
  return std::abs(analytic - numeric) /
         std::max({std::abs(analytic), std::abs(numeric), floor});
}

/// Compares `analytic` against central differences of `loss` obtained by
/// perturbing `values` in place.
inline GradCheckResult finite_difference_check(std::span<double> values,
                                               std::span<const double> analytic,
                                               const std::function<double()>& loss,
                                               double h = 1e-5, double floor = 1e-6) {
  if (values.size() != analytic.size()) throw InputError("finite_difference_check: size mismatch");
  GradCheckResult r;
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double orig = values[i];
    values[i] = orig + h;
    const double lp = loss();
    values[i] = orig - h;
    const double lm = loss();
    values[i] = orig;
    const double numeric = (lp - lm) / (2.0 * h);
    r.max_rel_error = std::max(r.max_rel_error, relative_error(analytic[i], numeric, floor));
    ++r.checked;
  }
  return r;
}

}  // namespace dsf

#endif  // DSF_NN_HPP
