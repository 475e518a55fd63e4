#include "rrn/network.hpp"

#include <cmath>
#include <string>

#include "rrn/ops.hpp"
#include "rrn/rng.hpp"

namespace rrn::net {
namespace {

std::uint64_t name_hash(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;  // FNV-1a
  for (unsigned char ch : s) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string stage_block(int s, int k) {
  return "backbone.s" + std::to_string(s) + ".conv" + std::to_string(k);
}

template <class T>
tg::Var<T> conv_relu(const tg::Var<T>& x, const BoundParams<T>& p, const std::string& name,
                     int stride = 1) {
  return tg::relu(tg::conv2d(x, p.weight(name), p.bias(name), stride));
}

}  // namespace

void NetConfig::validate() const {
  if (stage_channels.size() != 4) throw ConfigError("net.stage_channels must list 4 stages");
  for (int c : stage_channels) {
    if (c < 1) throw ConfigError("net.stage_channels entries must be >= 1");
  }
  if (fuse_channels < 1) throw ConfigError("net.fuse_channels must be >= 1");
  if (ppm_bins.empty()) throw ConfigError("net.ppm_bins must not be empty");
  for (int b : ppm_bins) {
    if (b < 1) throw ConfigError("net.ppm_bins entries must be >= 1");
  }
  if (input_h < 16 || input_w < 16 || input_h % 16 != 0 || input_w % 16 != 0) {
    throw ConfigError("net.input_size must be positive multiples of 16");
  }
  rrm.validate();
}

std::vector<ConvSpec> layout(const NetConfig& cfg) {
  cfg.validate();
  std::vector<ConvSpec> specs;
  int in = 3;
  for (int s = 0; s < 4; ++s) {
    const int c = cfg.stage_channels[s];
    specs.push_back({stage_block(s + 1, 1), in, c, 3});
    specs.push_back({stage_block(s + 1, 2), c, c, 3});
    in = c;
  }
  const int fc = cfg.fuse_channels;
  for (int l = 0; l < 4; ++l) {
    specs.push_back({"fpn.reduce." + std::to_string(l + 1), cfg.stage_channels[l], fc, 1});
  }
  for (int b : cfg.ppm_bins) specs.push_back({"ppm.bin" + std::to_string(b), 4 * fc, fc, 1});
  const int merged = 4 * fc + static_cast<int>(cfg.ppm_bins.size()) * fc;
  specs.push_back({"fpn.merge", merged, cfg.rrm.channels, 1});
  for (auto& s : rrm::layout(cfg.rrm)) specs.push_back(std::move(s));
  return specs;
}

template <std::floating_point T>
ParamStore<T> init_params(const NetConfig& cfg, std::uint64_t seed) {
  ParamStore<T> store;
  for (const ConvSpec& spec : layout(cfg)) {
    Rng rng(mix_seed(seed, name_hash(spec.name)));
    const double bound = std::sqrt(2.0 / static_cast<double>(spec.fan_in()));
    tg::Tensor<T> w(tg::Shape{spec.out, spec.in, spec.k, spec.k});
    for (auto& v : w.data()) v = static_cast<T>(rng.uniform(-bound, bound));
    store.set(spec.name + ".weight", std::move(w));
    store.set(spec.name + ".bias", tg::Tensor<T>(tg::Shape{spec.out, 1, 1, 1}));
  }
  return store;
}

template <std::floating_point T>
std::vector<tg::Var<T>> backbone_forward(const tg::Var<T>& image, const BoundParams<T>& params,
                                         const NetConfig& cfg) {
  const tg::Shape& s = image.shape();
  if (s.c != 3) throw ShapeError("backbone_forward: expected 3-channel image, got " + s.str());
  if (s.h % 16 != 0 || s.w % 16 != 0 || s.h == 0 || s.w == 0) {
    throw ShapeError("backbone_forward: spatial dims of " + s.str() + " must be divisible by 16");
  }
  std::vector<tg::Var<T>> features;
  tg::Var<T> x = image;
  for (int st = 1; st <= 4; ++st) {
    x = conv_relu(x, params, stage_block(st, 1), 2);
    x = conv_relu(x, params, stage_block(st, 2));
    features.push_back(x);
  }
  (void)cfg;
  return features;
}

template <std::floating_point T>
tg::Var<T> fpn_fuse(const std::vector<tg::Var<T>>& features, const BoundParams<T>& params,
                    const NetConfig& cfg) {
  if (features.size() != 4) {
    throw ShapeError("fpn_fuse: expected 4 feature levels, got " + std::to_string(features.size()));
  }
  // Level 2 (stride 4) fixes the merged resolution.
  const int h = features[1].shape().h;
  const int w = features[1].shape().w;
  std::vector<tg::Var<T>> levels;
  for (int l = 0; l < 4; ++l) {
    tg::Var<T> r = conv_relu(features[l], params, "fpn.reduce." + std::to_string(l + 1));
    if (r.shape().h != h || r.shape().w != w) r = tg::resize_bilinear(r, h, w);
    levels.push_back(r);
  }
  const tg::Var<T> fused = tg::concat_channels(levels);

  std::vector<tg::Var<T>> pyramid{fused};
  for (int b : cfg.ppm_bins) {
    const tg::Var<T> pooled = tg::adaptive_avg_pool(fused, b, b);
    const tg::Var<T> reduced = conv_relu(pooled, params, "ppm.bin" + std::to_string(b));
    pyramid.push_back(tg::resize_bilinear(reduced, h, w));
  }
  return conv_relu(tg::concat_channels(pyramid), params, "fpn.merge");
}

template <std::floating_point T>
rrm::RRMOutputs<T> rrn_forward(const tg::Var<T>& image, const BoundParams<T>& params,
                               const NetConfig& cfg) {
  const int h = image.shape().h;
  const int w = image.shape().w;
  const tg::Var<T> merged = fpn_fuse(backbone_forward(image, params, cfg), params, cfg);
  rrm::RRMOutputs<T> out = rrm::rrm_forward(merged, params, cfg.rrm);
  for (auto& y : out.side) y = tg::resize_bilinear(y, h, w);
  out.final = tg::resize_bilinear(out.final, h, w);
  return out;
}

template <std::floating_point T>
tg::Tensor<T> predict(const tg::Tensor<T>& images, const ParamStore<T>& params, const NetConfig& cfg) {
  tg::Tape<T> tape;
  const BoundParams<T> bound(tape, params, false);
  const tg::Var<T> x = tape.constant(images);
  return rrn_forward(x, bound, cfg).final.value();
}

#define RRN_INSTANTIATE_NET(T)                                                                    \
  template ParamStore<T> init_params<T>(const NetConfig&, std::uint64_t);                         \
  template std::vector<tg::Var<T>> backbone_forward(const tg::Var<T>&, const BoundParams<T>&,     \
                                                    const NetConfig&);                            \
  template tg::Var<T> fpn_fuse(const std::vector<tg::Var<T>>&, const BoundParams<T>&,             \
                               const NetConfig&);                                                 \
  template rrm::RRMOutputs<T> rrn_forward(const tg::Var<T>&, const BoundParams<T>&,               \
                                          const NetConfig&);                                      \
  template tg::Tensor<T> predict(const tg::Tensor<T>&, const ParamStore<T>&, const NetConfig&);

RRN_INSTANTIATE_NET(float)
RRN_INSTANTIATE_NET(double)

#undef RRN_INSTANTIATE_NET

}  // namespace rrn::net
