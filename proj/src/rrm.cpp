#include "rrn/rrm.hpp"

#include <string>

#include "rrn/ops.hpp"

namespace rrn::rrm {
namespace {

std::string block(const std::string& prefix, const std::string& kind, int i, int j) {
  return prefix + "." + kind + "." + std::to_string(i) + "." + std::to_string(j);
}

// F: 1x1 conv + ReLU.  G: 3x3 conv + ReLU.  F_rho: 1x1 conv to one channel + sigmoid.
template <class T>
tg::Var<T> conv_relu(const tg::Var<T>& x, const BoundParams<T>& p, const std::string& name) {
  return tg::relu(tg::conv2d(x, p.weight(name), p.bias(name)));
}

template <class T>
tg::Var<T> predict(const tg::Var<T>& x, const BoundParams<T>& p, const std::string& name) {
  return tg::sigmoid(tg::conv2d(x, p.weight(name), p.bias(name)));
}

}  // namespace

void RRMConfig::validate() const {
  if (n_layers < 1) throw ConfigError("rrm.n_layers must be >= 1");
  if (convs_per_layer < 1) throw ConfigError("rrm.convs_per_layer must be >= 1");
  if (channels < 1) throw ConfigError("rrm.channels must be >= 1");
}

std::vector<ConvSpec> layout(const RRMConfig& cfg, const std::string& prefix) {
  cfg.validate();
  const int c = cfg.channels;
  std::vector<ConvSpec> specs;
  for (int i = 1; i <= cfg.n_layers; ++i) {
    for (int j = 1; j <= cfg.convs_per_layer; ++j) {
      specs.push_back({block(prefix, "g", i, j), c, c, 3});
      if (i >= 2) specs.push_back({block(prefix, "f", i, j), c, c, 1});
    }
    specs.push_back({prefix + ".rho." + std::to_string(i), c, 1, 1});
  }
  specs.push_back({prefix + ".head.f", c, c, 1});
  specs.push_back({prefix + ".head.g", c, c, 3});
  specs.push_back({prefix + ".head.rho", c, 1, 1});
  return specs;
}

std::size_t param_count(const RRMConfig& cfg) {
  std::size_t n = 0;
  for (const auto& s : layout(cfg)) n += s.scalars();
  return n;
}

template <std::floating_point T>
std::vector<tg::Var<T>> refinement_layer(const tg::Var<T>& x, const std::vector<tg::Var<T>>& prev_row,
                                         const std::optional<tg::Var<T>>& gate,
                                         const BoundParams<T>& params, int layer,
                                         const RRMConfig& cfg, const std::string& prefix) {
  const int m = cfg.convs_per_layer;
  if (layer > 1 && prev_row.size() != static_cast<std::size_t>(m)) {
    throw ShapeError("refinement_layer: previous row has " + std::to_string(prev_row.size()) +
                     " entries, expected " + std::to_string(m));
  }
  std::vector<tg::Var<T>> row;
  row.reserve(m);
  for (int j = 1; j <= m; ++j) {
    const tg::Var<T>& carry = j == 1 ? x : row.back();
    tg::Var<T> in = carry;
    if (layer > 1) {
      tg::Var<T> from_prev = prev_row[j - 1];
      if (cfg.use_mask) {
        if (!gate) throw Error("refinement_layer: gated layer without a gate");
        from_prev = tg::mul(from_prev, *gate);
      }
      in = tg::add(conv_relu(from_prev, params, block(prefix, "f", layer, j)), carry);
    }
    row.push_back(conv_relu(in, params, block(prefix, "g", layer, j)));
  }
  return row;
}

template <std::floating_point T>
RRMOutputs<T> rrm_forward(const tg::Var<T>& x, const BoundParams<T>& params, const RRMConfig& cfg,
                          const std::string& prefix) {
  cfg.validate();
  if (x.shape().c != cfg.channels) {
    throw ShapeError("rrm_forward: input " + x.shape().str() + " has " +
                     std::to_string(x.shape().c) + " channels, config expects " +
                     std::to_string(cfg.channels));
  }
  RRMOutputs<T> out;
  std::vector<tg::Var<T>> row;
  std::optional<tg::Var<T>> gate;
  for (int i = 1; i <= cfg.n_layers; ++i) {
    row = refinement_layer(x, row, gate, params, i, cfg, prefix);
    gate = predict(row.back(), params, prefix + ".rho." + std::to_string(i));
    out.side.push_back(*gate);
  }
  const tg::Var<T> refined = conv_relu(tg::upsample_x2(row.back()), params, prefix + ".head.f");
  const tg::Var<T> skip = conv_relu(tg::upsample_x2(x), params, prefix + ".head.g");
  out.final = predict(tg::add(refined, skip), params, prefix + ".head.rho");
  return out;
}

#define RRN_INSTANTIATE_RRM(T)                                                                    \
  template std::vector<tg::Var<T>> refinement_layer(                                              \
      const tg::Var<T>&, const std::vector<tg::Var<T>>&, const std::optional<tg::Var<T>>&,        \
      const BoundParams<T>&, int, const RRMConfig&, const std::string&);                          \
  template RRMOutputs<T> rrm_forward(const tg::Var<T>&, const BoundParams<T>&, const RRMConfig&,  \
                                     const std::string&);

RRN_INSTANTIATE_RRM(float)
RRN_INSTANTIATE_RRM(double)

#undef RRN_INSTANTIATE_RRM

}  // namespace rrn::rrm
