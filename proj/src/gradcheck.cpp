#include "rrn/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <string>

#include "rrn/boundary.hpp"
#include "rrn/losses.hpp"
#include "rrn/network.hpp"
#include "rrn/ops.hpp"
#include "rrn/rng.hpp"

namespace rrn::gradcheck {
namespace {

using tg::Shape;
using tg::Tensor;
using tg::Var;

Tensor<double> random_tensor(Shape s, Rng& rng, double lo = -1.0, double hi = 1.0) {
  Tensor<double> t(s);
  for (auto& v : t.data()) v = rng.uniform(lo, hi);
  return t;
}

// Values bounded away from zero so ReLU kinks stay out of reach of the step.
Tensor<double> away_from_zero(Shape s, Rng& rng) {
  Tensor<double> t(s);
  for (auto& v : t.data()) v = (rng.bernoulli(0.5) ? 1.0 : -1.0) * rng.uniform(0.1, 1.0);
  return t;
}

Tensor<double> random_binary(Shape s, Rng& rng) {
  Tensor<double> t(s);
  for (auto& v : t.data()) v = rng.bernoulli(0.5) ? 1.0 : 0.0;
  return t;
}

// Disk-shaped ground truth so the boundary band is a proper contour.
Tensor<double> blob(Shape s, double cy, double cx, double r) {
  Tensor<double> t(s);
  for (int n = 0; n < s.n; ++n) {
    for (int y = 0; y < s.h; ++y) {
      for (int x = 0; x < s.w; ++x) {
        const double d = std::hypot(y - cy - n, x - cx);
        t.at(n, 0, y, x) = d <= r ? 1.0 : 0.0;
      }
    }
  }
  return t;
}

Tensor<double> band_of(const Tensor<double>& gt, int width) {
  const Shape& s = gt.shape();
  Tensor<double> out(s);
  for (int n = 0; n < s.n; ++n) {
    BinaryMap m(s.h, s.w);
    for (int y = 0; y < s.h; ++y) {
      for (int x = 0; x < s.w; ++x) m(y, x) = gt.at(n, 0, y, x) != 0.0;
    }
    const auto band = boundary::boundary_mask(m, {width, boundary::Strategy::expand});
    for (int y = 0; y < s.h; ++y) {
      for (int x = 0; x < s.w; ++x) out.at(n, 0, y, x) = band.bits(y, x);
    }
  }
  return out;
}

double evaluate(const std::vector<Tensor<double>>& inputs, const Function& fn, const Tensor<double>* weights) {
  tg::Tape<double> tape;
  std::vector<Var<double>> leaves;
  for (const auto& t : inputs) leaves.push_back(tape.leaf(t, true));
  const Var<double> out = fn(leaves);
  const auto v = out.value().data();
  if (!weights) return v[0];
  double s = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) s += v[i] * (*weights)[i];
  return s;
}

}  // namespace

CheckResult check(const std::string& name, const std::vector<Tensor<double>>& inputs, const Function& fn,
                  double tolerance, std::uint64_t seed, std::size_t max_entries, double step) {
  Rng rng(mix_seed(seed, 0x6772616463686bULL));
  CheckResult res;
  res.name = name;
  res.tolerance = tolerance;

  // Analytic pass.
  tg::Tape<double> tape;
  std::vector<Var<double>> leaves;
  for (const auto& t : inputs) leaves.push_back(tape.leaf(t, true));
  const Var<double> out = fn(leaves);
  std::optional<Tensor<double>> weights;
  Var<double> loss = out;
  if (out.value().size() != 1) {
    weights = random_tensor(out.shape(), rng, 0.5, 1.5);
    loss = tg::sum(tg::mul(out, tape.constant(*weights)));
  }
  const tg::Gradients<double> grads = tape.backward(loss);

  std::vector<Tensor<double>> probe = inputs;
  for (std::size_t k = 0; k < inputs.size(); ++k) {
    const Tensor<double> analytic = grads.has(leaves[k].id()) ? grads.at(leaves[k].id()) : Tensor<double>(inputs[k].shape());
    std::vector<std::size_t> idx(inputs[k].size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    if (max_entries > 0 && idx.size() > max_entries) {
      for (std::size_t i = 0; i < max_entries; ++i) std::swap(idx[i], idx[i + rng.below(idx.size() - i)]);
      idx.resize(max_entries);
    }
    for (std::size_t i : idx) {
      const double orig = probe[k][i];
      probe[k][i] = orig + step;
      const double up = evaluate(probe, fn, weights ? &*weights : nullptr);
      probe[k][i] = orig - step;
      const double down = evaluate(probe, fn, weights ? &*weights : nullptr);
      probe[k][i] = orig;
      const double numeric = (up - down) / (2.0 * step);
      const double a = analytic[i];
      const double rel = std::abs(a - numeric) / std::max({std::abs(a), std::abs(numeric), 1e-6});
      if (rel > res.max_rel_err) {
        res.max_rel_err = rel;
        res.worst_input = k;
        res.worst_index = i;
        res.worst_analytic = a;
        res.worst_numeric = numeric;
      }
      ++res.entries;
    }
  }
  return res;
}

std::vector<CheckResult> op_suite(std::uint64_t seed) {
  Rng rng(mix_seed(seed, 1));
  std::vector<CheckResult> out;
  const double tol = kOpTolerance;
  auto add = [&](const std::string& name, std::vector<Tensor<double>> in, const Function& fn) {
    out.push_back(check(name, in, fn, tol, mix_seed(seed, out.size())));
  };

  for (int k : {1, 3}) {
    for (int stride : {1, 2}) {
      if (k == 1 && stride == 2) continue;
      add("conv2d k" + std::to_string(k) + " s" + std::to_string(stride),
          {random_tensor({2, 3, 6, 6}, rng), random_tensor({4, 3, k, k}, rng), random_tensor({4, 1, 1, 1}, rng)},
          [stride](const auto& v) { return tg::conv2d(v[0], v[1], v[2], stride); });
    }
  }
  add("relu", {away_from_zero({2, 3, 4, 4}, rng)}, [](const auto& v) { return tg::relu(v[0]); });
  add("sigmoid", {random_tensor({2, 3, 4, 4}, rng, -4, 4)}, [](const auto& v) { return tg::sigmoid(v[0]); });
  add("add", {random_tensor({2, 3, 4, 4}, rng), random_tensor({2, 3, 4, 4}, rng)},
      [](const auto& v) { return tg::add(v[0], v[1]); });
  add("add broadcast", {random_tensor({2, 3, 4, 4}, rng), random_tensor({2, 1, 4, 4}, rng)},
      [](const auto& v) { return tg::add(v[0], v[1]); });
  add("mul", {random_tensor({2, 3, 4, 4}, rng), random_tensor({2, 3, 4, 4}, rng)},
      [](const auto& v) { return tg::mul(v[0], v[1]); });
  add("mul broadcast", {random_tensor({2, 3, 4, 4}, rng), random_tensor({2, 1, 4, 4}, rng)},
      [](const auto& v) { return tg::mul(v[0], v[1]); });
  add("scale", {random_tensor({1, 2, 3, 3}, rng)}, [](const auto& v) { return tg::scale(v[0], -1.7); });
  add("sum", {random_tensor({2, 2, 3, 3}, rng)}, [](const auto& v) { return tg::sum(v[0]); });
  add("mean", {random_tensor({2, 2, 3, 3}, rng)}, [](const auto& v) { return tg::mean(v[0]); });
  add("resize up", {random_tensor({1, 2, 3, 5}, rng)}, [](const auto& v) { return tg::resize_bilinear(v[0], 7, 8); });
  add("resize down", {random_tensor({1, 2, 9, 8}, rng)}, [](const auto& v) { return tg::resize_bilinear(v[0], 4, 3); });
  add("upsample x2", {random_tensor({2, 2, 4, 4}, rng)}, [](const auto& v) { return tg::upsample_x2(v[0]); });
  for (int b : {1, 2, 3, 6}) {
    add("adaptive pool " + std::to_string(b), {random_tensor({1, 2, 7, 6}, rng)},
        [b](const auto& v) { return tg::adaptive_avg_pool(v[0], b, b); });
  }
  add("concat", {random_tensor({2, 1, 3, 3}, rng), random_tensor({2, 3, 3, 3}, rng)},
      [](const auto& v) { return tg::concat_channels(std::vector<Var<double>>{v[0], v[1]}); });

  // Probability inputs for the losses stay inside (0.05, 0.95).
  const Shape ms{2, 1, 8, 8};
  const Tensor<double> gt = blob(ms, 3.5, 3.5, 2.6);
  const Tensor<double> band = band_of(gt, 1);
  const Tensor<double> mixed = random_binary(ms, rng);
  add("bce", {random_tensor(ms, rng, 0.05, 0.95)},
      [mixed](const auto& v) { return losses::bce(v[0], mixed, 1e-7); });
  add("soft iou", {random_tensor(ms, rng, 0.05, 0.95)},
      [mixed](const auto& v) { return losses::soft_iou_loss(v[0], mixed); });
  add("soft iou masked", {random_tensor(ms, rng, 0.05, 0.95)},
      [gt, band](const auto& v) { return losses::soft_iou_loss(v[0], gt, &band); });
  add("brl expand", {random_tensor(ms, rng, 0.05, 0.95)},
      [gt, band](const auto& v) { return losses::brl(v[0], gt, &band, boundary::Strategy::expand); });
  add("sobel", {random_tensor(ms, rng, 0.0, 0.5)}, [](const auto& v) { return boundary::sobel_magnitude(v[0]); });
  add("brl grad", {random_tensor(ms, rng, 0.0, 0.5)},
      [gt](const auto& v) { return losses::brl<double>(v[0], gt, nullptr, boundary::Strategy::grad); });

  losses::LossConfig lc;
  lc.n_layers = 2;
  add("total loss", {random_tensor(ms, rng, 0.05, 0.95), random_tensor(ms, rng, 0.05, 0.95), random_tensor(ms, rng, 0.05, 0.95)},
      [gt, band, lc](const auto& v) {
        const std::vector<Var<double>> sides{v[1], v[2]};
        return losses::total_loss<double>(v[0], sides, gt, &band, lc, true).total;
      });
  return out;
}

// Shifts every conv bias feeding a ReLU, in forward order, so that no
// pre-activation lies within kKinkMargin of zero. Zero lands in the widest
// gap between a channel's sorted pre-activations, or below all of them when
// no gap is wide enough.
constexpr double kKinkMargin = 0.02;

void clear_kinks(ParamStore<double>& params, const net::NetConfig& cfg, const Tensor<double>& image) {
  std::set<std::string> done;
  for (;;) {
    tg::Tape<double> tape;
    std::map<std::string, Var<double>> vars;
    std::map<tg::NodeId, std::string> bias_of;
    for (const auto& [name, t] : params) {
      const Var<double> v = tape.leaf(t, false);
      vars.emplace(name, v);
      if (name.ends_with(".bias")) bias_of.emplace(v.id(), name);
    }
    const auto bound = BoundParams<double>::from_vars(vars);
    (void)net::rrn_forward(tape.constant(image), bound, cfg);

    std::string target;
    tg::NodeId conv = 0;
    for (tg::NodeId id = 0; id < tape.size() && target.empty(); ++id) {
      if (tape.op_name(id) != "relu") continue;
      const tg::NodeId c = tape.inputs(id).at(0);
      if (tape.inputs(c).size() != 3) continue;
      const auto it = bias_of.find(tape.inputs(c)[2]);
      if (it == bias_of.end() || done.contains(it->second)) continue;
      target = it->second;
      conv = c;
    }
    if (target.empty()) return;
    done.insert(target);

    const Tensor<double>& z = tape.value(conv);
    Tensor<double>& bias = params.at(target);
    for (int ch = 0; ch < z.shape().c; ++ch) {
      std::vector<double> v;
      for (int n = 0; n < z.shape().n; ++n) {
        const auto p = z.plane(n, ch);
        v.insert(v.end(), p.begin(), p.end());
      }
      std::sort(v.begin(), v.end());
      double best_gap = 0.0;
      double zero_at = v.front() - kKinkMargin;
      for (std::size_t i = 1; i < v.size(); ++i) {
        if (v[i] - v[i - 1] > best_gap) {
          best_gap = v[i] - v[i - 1];
          if (best_gap >= 2.0 * kKinkMargin) zero_at = 0.5 * (v[i] + v[i - 1]);
        }
      }
      bias[static_cast<std::size_t>(ch)] -= zero_at;
    }
  }
}

CheckResult end_to_end(std::uint64_t seed) {
  net::NetConfig cfg;
  cfg.input_h = 16;
  cfg.input_w = 16;
  cfg.ppm_bins = {1, 2};
  ParamStore<double> params = net::init_params<double>(cfg, seed);
  Rng rng(mix_seed(seed, 2));
  const Shape is{1, 3, 16, 16};
  const Tensor<double> image = random_tensor(is, rng, 0.0, 1.0);
  const Tensor<double> gt = blob({1, 1, 16, 16}, 7.5, 7.5, 4.5);
  const Tensor<double> band = band_of(gt, 2);
  clear_kinks(params, cfg, image);

  std::vector<std::string> names;
  std::vector<Tensor<double>> inputs{image};
  for (const auto& [name, t] : params) {
    names.push_back(name);
    inputs.push_back(t);
  }
  losses::LossConfig lc;
  lc.n_layers = cfg.rrm.n_layers;
  const Function fn = [&](const std::vector<Var<double>>& v) {
    std::map<std::string, Var<double>> byname;
    for (std::size_t i = 0; i < names.size(); ++i) byname.emplace(names[i], v[i + 1]);
    const auto bound = BoundParams<double>::from_vars(std::move(byname));
    const auto out = net::rrn_forward(v[0], bound, cfg);
    return losses::total_loss<double>(out.final, out.side, gt, &band, lc, true).total;
  };
  return check("end-to-end network", inputs, fn, kEndToEndTolerance, seed, 16);
}

}  // namespace rrn::gradcheck
