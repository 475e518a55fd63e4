#include "rrn/metrics.hpp"

#include <algorithm>
#include <cmath>

#include "rrn/boundary.hpp"

namespace rrn::metrics {
namespace {

void check_dims(const GrayMap& p, const BinaryMap& g, const char* what) {
  if (!p.same_dims(g)) {
    throw ShapeError(std::string(what) + ": prediction " + p.dims_str() + " vs ground truth " + g.dims_str());
  }
}

void check_lists(std::span<const GrayMap> preds, std::span<const BinaryMap> gts, const char* what) {
  if (preds.empty()) throw ConfigError(std::string(what) + ": empty input");
  if (preds.size() != gts.size()) {
    throw ConfigError(std::string(what) + ": " + std::to_string(preds.size()) + " predictions vs " +
                      std::to_string(gts.size()) + " ground truths");
  }
  for (std::size_t i = 0; i < preds.size(); ++i) check_dims(preds[i], gts[i], what);
}

// Bucket index such that pred >= k/255 exactly for k <= bucket.
int top_threshold(double v) {
  int k = static_cast<int>(std::floor(v * 255.0));
  k = std::clamp(k, -1, kThresholds - 1);
  while (k + 1 < kThresholds && v >= (k + 1) / 255.0) ++k;
  while (k >= 0 && v < k / 255.0) --k;
  return k;
}

}  // namespace

double mae(const GrayMap& pred, const BinaryMap& gt) {
  check_dims(pred, gt, "mae");
  if (pred.size() == 0) return 0.0;
  double s = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) s += std::abs(pred.data[i] - gt.data[i]);
  return s / static_cast<double>(pred.size());
}

double f_beta(double precision, double recall, double beta_sq, FForm form) {
  const double den = beta_sq * precision + recall;
  if (den == 0.0) return 0.0;
  const double num = form == FForm::product ? precision * recall : precision + recall;
  return (1.0 + beta_sq) * num / den;
}

FCurve max_f_beta(std::span<const GrayMap> preds, std::span<const BinaryMap> gts, double beta_sq, FForm form) {
  check_lists(preds, gts, "max_f_beta");
  FCurve out;
  std::array<std::uint64_t, kThresholds + 1> pos_hist{};
  std::array<std::uint64_t, kThresholds + 1> all_hist{};
  for (std::size_t i = 0; i < preds.size(); ++i) {
    pos_hist.fill(0);
    all_hist.fill(0);
    std::uint64_t n_pos = 0;
    for (std::size_t p = 0; p < preds[i].size(); ++p) {
      const int k = top_threshold(preds[i].data[p]) + 1;  // shift so "never positive" is 0
      ++all_hist[k];
      if (gts[i].data[p]) {
        ++pos_hist[k];
        ++n_pos;
      }
    }
    // Counts of pixels with top threshold >= t, accumulated from the top.
    std::uint64_t tp = 0;
    std::uint64_t pp = 0;
    for (int t = kThresholds - 1; t >= 0; --t) {
      tp += pos_hist[t + 1];
      pp += all_hist[t + 1];
      out.precision[t] += pp ? static_cast<double>(tp) / static_cast<double>(pp) : 0.0;
      out.recall[t] += n_pos ? static_cast<double>(tp) / static_cast<double>(n_pos) : 0.0;
    }
  }
  const double n = static_cast<double>(preds.size());
  for (int t = 0; t < kThresholds; ++t) {
    out.precision[t] /= n;
    out.recall[t] /= n;
    out.curve[t] = f_beta(out.precision[t], out.recall[t], beta_sq, form);
    out.max_f = std::max(out.max_f, out.curve[t]);
  }
  return out;
}

Confusion confusion(std::span<const GrayMap> preds, std::span<const BinaryMap> gts, double threshold) {
  check_lists(preds, gts, "ber");
  Confusion c;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    for (std::size_t p = 0; p < preds[i].size(); ++p) {
      const bool pos = preds[i].data[p] >= threshold;
      if (gts[i].data[p]) {
        pos ? ++c.tp : ++c.fn;
      } else {
        pos ? ++c.fp : ++c.tn;
      }
    }
  }
  return c;
}

double ber_from_rates(double pos_rate, double neg_rate) { return 100.0 - 50.0 * pos_rate - 50.0 * neg_rate; }

double ber(const Confusion& c) {
  const double pos = c.tp + c.fn ? static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fn) : 1.0;
  const double neg = c.tn + c.fp ? static_cast<double>(c.tn) / static_cast<double>(c.tn + c.fp) : 1.0;
  return ber_from_rates(pos, neg);
}

double ber(std::span<const GrayMap> preds, std::span<const BinaryMap> gts, double threshold) {
  return ber(confusion(preds, gts, threshold));
}

GrayMap error_map(const GrayMap& pred, const BinaryMap& gt) {
  check_dims(pred, gt, "error_map");
  GrayMap out(pred.height, pred.width);
  for (std::size_t i = 0; i < pred.size(); ++i) out.data[i] = std::abs(pred.data[i] - gt.data[i]);
  return out;
}

double boundary_mae(const GrayMap& pred, const BinaryMap& gt, int width) {
  check_dims(pred, gt, "boundary_mae");
  if (width < 1) throw ConfigError("boundary_mae: width must be >= 1");
  const boundary::BoundaryMask band = boundary::dilate(boundary::extract_boundary(gt), width);
  double s = 0.0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    if (!band.bits.data[i]) continue;
    s += std::abs(pred.data[i] - gt.data[i]);
    ++n;
  }
  return n ? s / static_cast<double>(n) : 0.0;
}

nlohmann::json MetricReport::to_json() const {
  nlohmann::json j = {{"dataset", dataset},   {"n_images", n_images}, {"mae", mae},
                      {"max_f_beta", max_f_beta}, {"beta_sq", beta_sq}, {"f_curve", f_curve}};
  j["ber"] = ber ? nlohmann::json(*ber) : nlohmann::json(nullptr);
  j["boundary_mae"] = boundary_mae ? nlohmann::json(*boundary_mae) : nlohmann::json(nullptr);
  return j;
}

MetricReport MetricReport::from_json(const nlohmann::json& j) {
  MetricReport r;
  try {
    r.dataset = j.at("dataset").get<std::string>();
    r.n_images = j.at("n_images").get<std::size_t>();
    r.mae = j.at("mae").get<double>();
    r.max_f_beta = j.at("max_f_beta").get<double>();
    r.beta_sq = j.at("beta_sq").get<double>();
    const auto& c = j.at("f_curve");
    if (c.size() != kThresholds) throw FormatError("f_curve must have 256 entries");
    for (int i = 0; i < kThresholds; ++i) r.f_curve[i] = c[i].get<double>();
    if (j.contains("ber") && !j["ber"].is_null()) r.ber = j["ber"].get<double>();
    if (j.contains("boundary_mae") && !j["boundary_mae"].is_null()) r.boundary_mae = j["boundary_mae"].get<double>();
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("metric report: ") + e.what());
  }
  return r;
}

MetricReport evaluate(const std::string& dataset, std::span<const GrayMap> preds, std::span<const BinaryMap> gts,
                      const EvalOptions& opt) {
  check_lists(preds, gts, "evaluate");
  MetricReport r;
  r.dataset = dataset;
  r.n_images = preds.size();
  const FCurve f = max_f_beta(preds, gts, kBetaSq, opt.form);
  r.max_f_beta = f.max_f;
  r.f_curve = f.curve;
  double m = 0.0;
  for (std::size_t i = 0; i < preds.size(); ++i) m += mae(preds[i], gts[i]);
  r.mae = m / static_cast<double>(preds.size());
  if (opt.with_ber) r.ber = ber(preds, gts);
  if (opt.boundary_width) {
    double b = 0.0;
    for (std::size_t i = 0; i < preds.size(); ++i) b += boundary_mae(preds[i], gts[i], *opt.boundary_width);
    r.boundary_mae = b / static_cast<double>(preds.size());
  }
  return r;
}

}  // namespace rrn::metrics
