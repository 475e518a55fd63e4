#pragma once

#include <cstdint>
#include <vector>

#include "rrn/params.hpp"
#include "rrn/rrm.hpp"

namespace rrn::net {

/// Toy region refinement network: 4-stage CNN backbone, FPN-style fusion
/// with pyramid pooling at 1/4 resolution, RRM head.
struct NetConfig {
  std::vector<int> stage_channels{16, 32, 64, 64};
  int fuse_channels = 16;
  std::vector<int> ppm_bins{1, 2, 3, 6};
  rrm::RRMConfig rrm{};
  int input_h = 64;
  int input_w = 64;

  void validate() const;
};

template <std::floating_point T>
using ModelParams = ParamStore<T>;

std::vector<ConvSpec> layout(const NetConfig& cfg);

/// Kaiming-uniform fan-in weights, U(-sqrt(2/fan_in), sqrt(2/fan_in)), and
/// zero biases. Each tensor draws from its own stream keyed by (seed, name).
template <std::floating_point T>
ParamStore<T> init_params(const NetConfig& cfg, std::uint64_t seed);

/// Feature maps at strides 2, 4, 8, 16.
template <std::floating_point T>
std::vector<tg::Var<T>> backbone_forward(const tg::Var<T>& image, const BoundParams<T>& params,
                                         const NetConfig& cfg);

/// Fused feature of shape (B, rrm.channels, H/4, W/4).
template <std::floating_point T>
tg::Var<T> fpn_fuse(const std::vector<tg::Var<T>>& features, const BoundParams<T>& params,
                    const NetConfig& cfg);

/// Full forward pass; every output is resized to the input resolution.
template <std::floating_point T>
rrm::RRMOutputs<T> rrn_forward(const tg::Var<T>& image, const BoundParams<T>& params,
                               const NetConfig& cfg);

/// Tape-free inference of the final saliency map, shape (B, 1, H, W).
template <std::floating_point T>
tg::Tensor<T> predict(const tg::Tensor<T>& images, const ParamStore<T>& params, const NetConfig& cfg);

}  // namespace rrn::net
