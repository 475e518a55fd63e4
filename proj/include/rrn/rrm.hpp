#pragma once

#include <optional>
#include <string>
#include <vector>

#include "rrn/params.hpp"
#include "rrn/tape.hpp"

namespace rrn::rrm {

struct RRMConfig {
  int n_layers = 4;         // N
  int convs_per_layer = 3;  // M
  int channels = 16;        // C
  bool use_mask = true;

  void validate() const;
};

/// Side maps Y_1..Y_N at the input resolution and the final map Y_f at
/// twice the input resolution. All values are sigmoid outputs.
template <std::floating_point T>
struct RRMOutputs {
  std::vector<tg::Var<T>> side;
  tg::Var<T> final;
};

/// Every convolution block, in construction order. Layer i has M 3x3
/// blocks `g.i.j`, M 1x1 blocks `f.i.j` when i >= 2 (the gated paths), and a
/// 1x1 C->1 predictor `rho.i`; the head adds `head.f`, `head.g`, `head.rho`.
std::vector<ConvSpec> layout(const RRMConfig& cfg, const std::string& prefix = "rrm");

/// Scalar count of the parameters listed by layout().
std::size_t param_count(const RRMConfig& cfg);

/// One refinement layer (1-based index `layer`). `prev_row` holds
/// RRL_{i-1,1..M} and `gate` the previous side output Y_{i-1}; both are
/// empty for the first layer. A gate is only applied when cfg.use_mask is
/// set. Returns RRL_{i,1..M}.
template <std::floating_point T>
std::vector<tg::Var<T>> refinement_layer(const tg::Var<T>& x, const std::vector<tg::Var<T>>& prev_row,
                                         const std::optional<tg::Var<T>>& gate,
                                         const BoundParams<T>& params, int layer,
                                         const RRMConfig& cfg, const std::string& prefix = "rrm");

template <std::floating_point T>
RRMOutputs<T> rrm_forward(const tg::Var<T>& x, const BoundParams<T>& params, const RRMConfig& cfg,
                          const std::string& prefix = "rrm");

}  // namespace rrn::rrm
