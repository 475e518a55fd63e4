#pragma once

#include <span>
#include <vector>

#include "rrn/boundary.hpp"
#include "rrn/tape.hpp"

namespace rrn::losses {

/// Loss balancing. Side outputs are weighted by sigma = lambda / N.
struct LossConfig {
  double lambda = 2.0;
  int n_layers = 4;
  double eta = 1.0;
  double epsilon = 1e-7;

  [[nodiscard]] double sigma() const { return lambda / n_layers; }
  void validate() const;
};

struct LossBreakdown {
  double l_f = 0.0;
  std::vector<double> l_i;
  double l_bf = 0.0;
  std::vector<double> l_bi;
  double sigma = 0.0;
  double eta = 0.0;
  bool use_brl = false;
  double total = 0.0;

  [[nodiscard]] double side_sum() const;
  [[nodiscard]] double boundary_side_sum() const;
};

/// L_f + sigma * sum(L_i) [+ eta * (L_bf + sigma * sum(L_bi)) when use_brl].
double combine(double l_f, std::span<const double> l_i, double l_bf, std::span<const double> l_bi,
               double sigma, double eta, bool use_brl);

/// Mean binary cross-entropy over all pixels; pred clamped to [eps, 1 - eps].
template <std::floating_point T>
tg::Var<T> bce(const tg::Var<T>& pred, const tg::Tensor<T>& target, T eps = T(1e-7));

/// 1 - sum(p g) / sum(p + g - p g), per batch entry, averaged over the batch.
/// With a mask both maps are multiplied by it first. An entry whose union is
/// zero contributes 0.
template <std::floating_point T>
tg::Var<T> soft_iou_loss(const tg::Var<T>& pred, const tg::Tensor<T>& target,
                         const tg::Tensor<T>* mask = nullptr);

/// Boundary refinement loss. Expand strategy: soft IoU of (P*B, G*B).
/// Grad strategy: soft IoU of the Sobel magnitudes of P and G (band unused).
template <std::floating_point T>
tg::Var<T> brl(const tg::Var<T>& pred, const tg::Tensor<T>& gt, const tg::Tensor<T>* band,
               boundary::Strategy strategy = boundary::Strategy::expand);

template <std::floating_point T>
struct TotalLoss {
  tg::Var<T> total;
  LossBreakdown breakdown;
};

/// Composite objective over the final map and N side maps, all at the
/// resolution of `gt`. `band` is required for the expand strategy when
/// use_brl is set.
template <std::floating_point T>
TotalLoss<T> total_loss(const tg::Var<T>& final_output, std::span<const tg::Var<T>> side_outputs,
                        const tg::Tensor<T>& gt, const tg::Tensor<T>* band, const LossConfig& cfg,
                        bool use_brl, boundary::Strategy strategy = boundary::Strategy::expand);

}  // namespace rrn::losses
