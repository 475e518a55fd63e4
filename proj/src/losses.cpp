#include "rrn/losses.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "rrn/ops.hpp"

namespace rrn::losses {
namespace {

template <class T>
void require_same(const tg::Shape& a, const tg::Shape& b, const char* what) {
  if (!(a == b)) {
    throw ShapeError(std::string(what) + ": prediction " + a.str() + " vs target " + b.str());
  }
}

}  // namespace

void LossConfig::validate() const {
  if (!(lambda >= 0.0)) throw ConfigError("loss.lambda must be >= 0");
  if (!(eta >= 0.0)) throw ConfigError("loss.eta must be >= 0");
  if (n_layers < 1) throw ConfigError("loss n_layers must be >= 1");
  if (!(epsilon > 0.0 && epsilon < 0.5)) throw ConfigError("loss.epsilon must be in (0, 0.5)");
}

double LossBreakdown::side_sum() const { return std::accumulate(l_i.begin(), l_i.end(), 0.0); }

double LossBreakdown::boundary_side_sum() const {
  return std::accumulate(l_bi.begin(), l_bi.end(), 0.0);
}

double combine(double l_f, std::span<const double> l_i, double l_bf, std::span<const double> l_bi,
               double sigma, double eta, bool use_brl) {
  const double side = std::accumulate(l_i.begin(), l_i.end(), 0.0);
  double total = l_f + sigma * side;
  if (use_brl) {
    const double bside = std::accumulate(l_bi.begin(), l_bi.end(), 0.0);
    total += eta * (l_bf + sigma * bside);
  }
  return total;
}

template <std::floating_point T>
tg::Var<T> bce(const tg::Var<T>& pred, const tg::Tensor<T>& target, T eps) {
  require_same<T>(pred.shape(), target.shape(), "bce");
  const tg::Tensor<T>& p = pred.value();
  const std::size_t n = p.size();
  // Accumulate in double; the per-element terms are exact enough in T.
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const T q = std::clamp(p[i], eps, T(1) - eps);
    const T t = target[i];
    acc -= static_cast<double>(t * std::log(q) + (T(1) - t) * std::log(T(1) - q));
  }
  tg::Tensor<T> out(tg::Shape{1, 1, 1, 1}, static_cast<T>(acc / static_cast<double>(n)));
  tg::Tensor<T> tgt = target;
  return pred.tape().record(
      "bce", std::move(out), {pred.id()}, [tgt = std::move(tgt), eps](const tg::BackwardArgs<T>& a) {
        const tg::Tensor<T>& p = *a.inputs[0];
        tg::Tensor<T>& g = *a.grad_inputs[0];
        const T scale = a.grad_output[0] / static_cast<T>(p.size());
        for (std::size_t i = 0; i < p.size(); ++i) {
          // Clamped region has zero derivative.
          if (p[i] < eps || p[i] > T(1) - eps) continue;
          const T t = tgt[i];
          g[i] += scale * (-t / p[i] + (T(1) - t) / (T(1) - p[i]));
        }
      });
}

template <std::floating_point T>
tg::Var<T> soft_iou_loss(const tg::Var<T>& pred, const tg::Tensor<T>& target,
                         const tg::Tensor<T>* mask) {
  require_same<T>(pred.shape(), target.shape(), "soft_iou_loss");
  if (mask != nullptr) require_same<T>(pred.shape(), mask->shape(), "soft_iou_loss mask");
  const tg::Shape s = pred.shape();
  const std::size_t per = static_cast<std::size_t>(s.c) * s.plane();
  const tg::Tensor<T>& p = pred.value();

  // Per-entry intersection and union, kept for the backward rule.
  std::vector<double> inter(s.n, 0.0);
  std::vector<double> uni(s.n, 0.0);
  for (int n = 0; n < s.n; ++n) {
    const std::size_t base = static_cast<std::size_t>(n) * per;
    for (std::size_t i = base; i < base + per; ++i) {
      const T m = mask != nullptr ? (*mask)[i] : T(1);
      const T pm = p[i] * m;
      const T gm = target[i] * m;
      inter[n] += static_cast<double>(pm * gm);
      uni[n] += static_cast<double>(pm + gm - pm * gm);
    }
  }
  double loss = 0.0;
  for (int n = 0; n < s.n; ++n) {
    if (uni[n] > 0.0) loss += 1.0 - inter[n] / uni[n];
  }
  loss /= s.n;

  tg::Tensor<T> out(tg::Shape{1, 1, 1, 1}, static_cast<T>(loss));
  tg::Tensor<T> tgt = target;
  tg::Tensor<T> msk = mask != nullptr ? *mask : tg::Tensor<T>();
  return pred.tape().record(
      "soft_iou_loss", std::move(out), {pred.id()},
      [tgt = std::move(tgt), msk = std::move(msk), inter = std::move(inter), uni = std::move(uni),
       per](const tg::BackwardArgs<T>& a) {
        const int batch = a.inputs[0]->shape().n;
        tg::Tensor<T>& g = *a.grad_inputs[0];
        const double go = static_cast<double>(a.grad_output[0]) / batch;
        for (int n = 0; n < batch; ++n) {
          if (!(uni[n] > 0.0)) continue;
          const double u2 = uni[n] * uni[n];
          const std::size_t base = static_cast<std::size_t>(n) * per;
          for (std::size_t i = base; i < base + per; ++i) {
            const double m = msk.empty() ? 1.0 : static_cast<double>(msk[i]);
            if (m == 0.0) continue;
            const double gm = static_cast<double>(tgt[i]) * m;
            // d/dp' of 1 - I/U, chained through p' = p * m.
            const double d = -(gm * uni[n] - inter[n] * (1.0 - gm)) / u2;
            g[i] += static_cast<T>(go * d * m);
          }
        }
      });
}

template <std::floating_point T>
tg::Var<T> brl(const tg::Var<T>& pred, const tg::Tensor<T>& gt, const tg::Tensor<T>* band,
               boundary::Strategy strategy) {
  if (strategy == boundary::Strategy::grad) {
    auto& tape = pred.tape();
    const tg::Var<T> g = tape.constant(gt);
    const tg::Var<T> gs = boundary::sobel_magnitude(g);
    const tg::Var<T> ps = boundary::sobel_magnitude(pred);
    return soft_iou_loss(ps, gs.value());
  }
  if (band == nullptr) throw ConfigError("brl: expand strategy needs a boundary band");
  return soft_iou_loss(pred, gt, band);
}

template <std::floating_point T>
TotalLoss<T> total_loss(const tg::Var<T>& final_output, std::span<const tg::Var<T>> side_outputs,
                        const tg::Tensor<T>& gt, const tg::Tensor<T>* band, const LossConfig& cfg,
                        bool use_brl, boundary::Strategy strategy) {
  cfg.validate();
  if (side_outputs.size() != static_cast<std::size_t>(cfg.n_layers)) {
    throw ConfigError("total_loss: " + std::to_string(side_outputs.size()) +
                      " side outputs but N = " + std::to_string(cfg.n_layers));
  }
  const T eps = static_cast<T>(cfg.epsilon);
  const T sigma = static_cast<T>(cfg.sigma());
  const T eta = static_cast<T>(cfg.eta);

  LossBreakdown bd;
  bd.sigma = cfg.sigma();
  bd.eta = cfg.eta;
  bd.use_brl = use_brl;

  const tg::Var<T> lf = bce(final_output, gt, eps);
  bd.l_f = lf.value().item();
  tg::Var<T> total = lf;
  for (const auto& side : side_outputs) {
    const tg::Var<T> li = bce(side, gt, eps);
    bd.l_i.push_back(li.value().item());
    total = tg::add(total, tg::scale(li, sigma));
  }
  if (use_brl) {
    const tg::Var<T> lbf = brl(final_output, gt, band, strategy);
    bd.l_bf = lbf.value().item();
    tg::Var<T> boundary_term = lbf;
    for (const auto& side : side_outputs) {
      const tg::Var<T> lbi = brl(side, gt, band, strategy);
      bd.l_bi.push_back(lbi.value().item());
      boundary_term = tg::add(boundary_term, tg::scale(lbi, sigma));
    }
    total = tg::add(total, tg::scale(boundary_term, eta));
  } else {
    bd.l_bi.assign(side_outputs.size(), 0.0);
  }
  bd.total = combine(bd.l_f, bd.l_i, bd.l_bf, bd.l_bi, bd.sigma, bd.eta, use_brl);
  return {total, std::move(bd)};
}

#define RRN_INSTANTIATE_LOSSES(T)                                                               \
  template tg::Var<T> bce(const tg::Var<T>&, const tg::Tensor<T>&, T);                          \
  template tg::Var<T> soft_iou_loss(const tg::Var<T>&, const tg::Tensor<T>&,                    \
                                    const tg::Tensor<T>*);                                      \
  template tg::Var<T> brl(const tg::Var<T>&, const tg::Tensor<T>&, const tg::Tensor<T>*,        \
                          boundary::Strategy);                                                  \
  template TotalLoss<T> total_loss(const tg::Var<T>&, std::span<const tg::Var<T>>,              \
                                   const tg::Tensor<T>&, const tg::Tensor<T>*, const LossConfig&, \
                                   bool, boundary::Strategy);

RRN_INSTANTIATE_LOSSES(float)
RRN_INSTANTIATE_LOSSES(double)

#undef RRN_INSTANTIATE_LOSSES

}  // namespace rrn::losses
