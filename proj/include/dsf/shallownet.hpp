#ifndef DSF_SHALLOWNET_HPP
#define DSF_SHALLOWNET_HPP

#include <memory>
#include <string>

#include "dsf/nn.hpp"

namespace dsf {

// Filter counts default well below the original 40/40 to keep desk-scale
// training fast; every size is configurable.
struct ShallowNetConfig {
  std::size_t n_temporal = 8;
  std::size_t kernel = 25;
  std::size_t n_spatial = 8;
  std::size_t pool_window = 75;
  std::size_t pool_stride = 15;
  double dropout = 0.5;
  std::size_t n_classes = 2;
};

/// Number of pooled time steps for a T-sample input, 0 on underflow.
inline std::size_t shallownet_pooled_length(const ShallowNetConfig& cfg, std::size_t t) {
  if (t < cfg.kernel) return 0;
  return AvgPool::output_length(t - cfg.kernel + 1, cfg.pool_window, cfg.pool_stride);
}

/// temporal conv -> spatial conv -> square -> mean pool -> log -> dropout -> dense
inline std::unique_ptr<Sequential> make_shallownet(const ShallowNetConfig& cfg,
                                                   std::size_t in_channels, std::size_t t,
                                                   const std::string& prefix = "net") {
  const std::size_t pooled = shallownet_pooled_length(cfg, t);
  if (pooled == 0) throw InputError("ShallowNet: window too short for conv + pooling");
  auto net = std::make_unique<Sequential>();
  net->emplace<TemporalConv>(prefix + ".temporal", cfg.n_temporal, cfg.kernel);
  net->emplace<SpatialConv>(prefix + ".spatial", cfg.n_temporal * in_channels, cfg.n_spatial);
  net->emplace<Square>();
  net->emplace<AvgPool>(cfg.pool_window, cfg.pool_stride);
  net->emplace<SafeLog>(1e-6);
  net->emplace<Dropout>(cfg.dropout);
  net->emplace<Dense>(prefix + ".classifier", cfg.n_spatial * pooled, cfg.n_classes);
  return net;
}

/// Convenience forward for a stand-alone network.
inline Tensor shallownet_forward(Sequential& net, const Tensor& x, const ParamStore& ps, Mode mode,
                                 Rng& rng) {
  return net.forward(x, ps, mode, rng);
}

}  // namespace dsf

#endif  // DSF_SHALLOWNET_HPP
