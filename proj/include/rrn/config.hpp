#pragma once

#include <cstdint>
#include <filesystem>
#include <string_view>

#include "json.hpp"
#include "rrn/boundary.hpp"
#include "rrn/data.hpp"
#include "rrn/losses.hpp"
#include "rrn/network.hpp"

namespace rrn::config {

enum class Precision { f32, f64 };
std::string_view to_string(Precision p);
Precision parse_precision(std::string_view s);

struct TrainConfig {
  double base_lr = 0.01;
  double power = 0.9;
  double momentum = 0.9;
  double weight_decay = 1e-4;
  int epochs = 20;
  int batch = 8;
  bool use_brl = true;
  std::uint64_t seed = 0;
  Precision precision = Precision::f32;
  losses::LossConfig loss{};
  boundary::BoundaryConfig boundary{};
  data::AugmentConfig aug{};

  void validate() const;
};

/// Everything a training run depends on besides the data.
struct RunConfig {
  net::NetConfig net{};
  TrainConfig train{};

  /// Also checks cross-section consistency (loss depth = RRM depth, crop
  /// usable by the network).
  void validate() const;
};

/// Sections: net, train, loss, boundary, aug. Missing keys keep their
/// defaults; unknown keys and wrong types raise ConfigError.
RunConfig from_json(const nlohmann::json& j);
nlohmann::json to_json(const RunConfig& cfg);

RunConfig load_run_config(const std::filesystem::path& path);
void save_run_config(const std::filesystem::path& path, const RunConfig& cfg);

}  // namespace rrn::config
