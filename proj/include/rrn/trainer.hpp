#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "json.hpp"
#include "rrn/config.hpp"
#include "rrn/data.hpp"
#include "rrn/losses.hpp"
#include "rrn/metrics.hpp"
#include "rrn/params.hpp"

namespace rrn::train {

using config::RunConfig;
using config::TrainConfig;

/// base * (1 - iter / max_iter)^power for 0 <= iter <= max_iter.
double poly_lr(double base, long iter, long max_iter, double power);

/// Iteration horizon of the poly schedule: epochs * ceil(n / batch).
long max_iterations(int epochs, std::size_t train_size, int batch);

template <std::floating_point T>
struct OptState {
  std::map<std::string, tg::Tensor<T>> velocity;
  std::uint64_t step = 0;

  /// Zero buffers mirroring `params`.
  static OptState zeros_like(const ParamStore<T>& params);
};

/// v = momentum * v + g + wd * p; p -= lr * v.
template <std::floating_point T>
void sgd_step(ParamStore<T>& params, const std::map<std::string, tg::Tensor<T>>& grads, OptState<T>& state,
              double lr, double momentum, double weight_decay);

// ---------------------------------------------------------------------------
// Checkpoints.

using AnyTensor = std::variant<tg::Tensor<float>, tg::Tensor<double>>;

struct Checkpoint {
  static constexpr std::uint32_t kVersion = 1;

  std::map<std::string, AnyTensor> tensors;
  std::optional<std::map<std::string, AnyTensor>> velocity;
  std::uint64_t step = 0;
  nlohmann::json config = nlohmann::json::object();

  template <std::floating_point T>
  static Checkpoint from(const ParamStore<T>& params, const OptState<T>* opt, nlohmann::json config);

  /// Throws FormatError if any tensor is stored with a different dtype.
  template <std::floating_point T>
  [[nodiscard]] ParamStore<T> params() const;

  template <std::floating_point T>
  [[nodiscard]] OptState<T> opt_state() const;

  /// 0 for f32, 1 for f64; throws on an empty table or mixed dtypes.
  [[nodiscard]] int dtype() const;

  friend bool operator==(const Checkpoint&, const Checkpoint&) = default;
};

std::string encode_checkpoint(const Checkpoint& ckpt);
Checkpoint decode_checkpoint(std::string_view bytes);
void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::filesystem::path& path);

// ---------------------------------------------------------------------------
// Training.

struct EpochLog {
  int epoch = 0;
  long iter = 0;  // global index of the epoch's last iteration
  double lr = 0.0;
  double l_f = 0.0;
  double l_side_sum = 0.0;
  double l_bf = 0.0;
  double l_bside_sum = 0.0;
  double total = 0.0;
  std::optional<double> val_mae;

  [[nodiscard]] nlohmann::json to_json() const;
};

struct IterationInfo {
  int epoch = 0;
  long iter = 0;
  double lr = 0.0;
  const losses::LossBreakdown* breakdown = nullptr;
};

/// Called after every optimiser step; returning false ends training early
/// (checkpoints and reports are still written).
using Observer = std::function<bool(const IterationInfo&)>;

struct TrainResult {
  std::vector<EpochLog> log;
  int best_epoch = 0;
  metrics::MetricReport train_report;
  std::optional<metrics::MetricReport> val_report;
  std::optional<metrics::MetricReport> test_report;
  std::filesystem::path final_ckpt;
  std::filesystem::path best_ckpt;
};

inline constexpr std::string_view kLogName = "train_log.jsonl";
inline constexpr std::string_view kFinalCkpt = "final.ckpt";
inline constexpr std::string_view kBestCkpt = "best.ckpt";
inline constexpr std::string_view kMetricsName = "final_metrics.json";

/// Trains on the manifest's train split, tracks val MAE for the best
/// checkpoint and writes log, checkpoints and split reports into out_dir.
TrainResult train(const RunConfig& cfg, const data::Manifest& manifest, const std::filesystem::path& out_dir,
                  const Observer& observer = {});

// ---------------------------------------------------------------------------
// Inference and evaluation.

/// Final saliency map for one (1,3,H,W) image, quantised to 8 bits as it
/// would be after a PGM round trip.
GrayMap infer(const Checkpoint& ckpt, const data::Image& image);

/// Per-split report with BER and boundary MAE at `boundary_width`.
template <std::floating_point T>
metrics::MetricReport evaluate_split(const ParamStore<T>& params, const net::NetConfig& net,
                                     std::span<const data::Sample> samples, const std::string& name,
                                     int boundary_width);

// ---------------------------------------------------------------------------
// Multi-seed statistics.

struct Stat {
  double mean = 0.0;
  double std = 0.0;  // population (divide by n)
};

Stat aggregate(std::span<const double> values);

struct MultirunResult {
  std::vector<std::uint64_t> seeds;
  std::vector<metrics::MetricReport> reports;
  std::map<std::string, Stat> aggregate;

  [[nodiscard]] nlohmann::json to_json() const;
};

/// Per-metric mean/std over reports (mae, max_f_beta, ber, boundary_mae).
std::map<std::string, Stat> aggregate(std::span<const metrics::MetricReport> reports);

/// Trains one run per seed into out_dir/seed_<k> and aggregates the test
/// split reports.
MultirunResult multirun(const RunConfig& cfg, std::span<const std::uint64_t> seeds, const data::Manifest& manifest,
                        const std::filesystem::path& out_dir);

}  // namespace rrn::train
