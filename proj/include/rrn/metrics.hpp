#pragma once

#include <array>
#include <optional>
#include <span>
#include <string>

#include "json.hpp"
#include "rrn/map2d.hpp"

namespace rrn::metrics {

inline constexpr int kThresholds = 256;
inline constexpr double kBetaSq = 0.3;

/// Mean |P - G| over all pixels.
double mae(const GrayMap& pred, const BinaryMap& gt);

enum class FForm {
  product,  // (1 + b2) P R / (b2 P + R)
  sum,      // (1 + b2) (P + R) / (b2 P + R)
};

struct FCurve {
  double max_f = 0.0;
  std::array<double, kThresholds> curve{};
  std::array<double, kThresholds> precision{};
  std::array<double, kThresholds> recall{};
};

/// Threshold k/255 binarises as pred >= k/255. Precision and recall are
/// averaged per image before combining.
FCurve max_f_beta(std::span<const GrayMap> preds, std::span<const BinaryMap> gts, double beta_sq = kBetaSq,
                  FForm form = FForm::product);

/// F from mean precision and recall; 0 when the denominator is 0.
double f_beta(double precision, double recall, double beta_sq = kBetaSq, FForm form = FForm::product);

struct Confusion {
  std::uint64_t tp = 0, tn = 0, fp = 0, fn = 0;
};

/// Pixel counts over every image, positive where pred >= threshold.
Confusion confusion(std::span<const GrayMap> preds, std::span<const BinaryMap> gts, double threshold = 0.5);

/// 100 * (1 - (pos_rate + neg_rate) / 2).
double ber_from_rates(double pos_rate, double neg_rate);
double ber(const Confusion& c);
double ber(std::span<const GrayMap> preds, std::span<const BinaryMap> gts, double threshold = 0.5);

/// |P - G| per pixel.
GrayMap error_map(const GrayMap& pred, const BinaryMap& gt);

/// MAE restricted to boundary_mask(gt, width); 0 for an empty band.
double boundary_mae(const GrayMap& pred, const BinaryMap& gt, int width);

struct MetricReport {
  std::string dataset;
  std::size_t n_images = 0;
  double mae = 0.0;
  double max_f_beta = 0.0;
  double beta_sq = kBetaSq;
  std::array<double, kThresholds> f_curve{};
  std::optional<double> ber;
  std::optional<double> boundary_mae;

  [[nodiscard]] nlohmann::json to_json() const;
  static MetricReport from_json(const nlohmann::json& j);
};

struct EvalOptions {
  bool with_ber = false;
  std::optional<int> boundary_width;
  FForm form = FForm::product;
};

/// Dataset-level report; MAE and boundary MAE are per-image means.
MetricReport evaluate(const std::string& dataset, std::span<const GrayMap> preds, std::span<const BinaryMap> gts,
                      const EvalOptions& opt = {});

}  // namespace rrn::metrics
