#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <optional>

#include "rrn/boundary.hpp"
#include "rrn/network.hpp"
#include "rrn/trainer.hpp"

namespace rrn::train {
namespace {

namespace fs = std::filesystem;

constexpr std::uint64_t kShuffleStream = 0x53485546464c45ULL;

template <std::floating_point T>
tg::Tensor<T> map_tensor(const BinaryMap& m) {
  tg::Tensor<T> t(tg::Shape{1, 1, m.height, m.width});
  for (std::size_t i = 0; i < m.size(); ++i) t[i] = static_cast<T>(m.data[i]);
  return t;
}

template <std::floating_point T>
GrayMap predict_quantized(const ParamStore<T>& params, const net::NetConfig& cfg, const data::Image& image) {
  const tg::Tensor<T> out = net::predict(image.cast<T>(), params, cfg);
  const tg::Shape& s = out.shape();
  GrayMap m(s.h, s.w);
  for (std::size_t i = 0; i < m.size(); ++i) m.data[i] = data::quantize8(static_cast<double>(out[i]));
  return m;
}

void write_json(const fs::path& path, const nlohmann::json& j) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw FormatError("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

template <std::floating_point T>
TrainResult train_impl(const RunConfig& cfg, const data::Manifest& manifest, const fs::path& out_dir,
                       const Observer& observer) {
  const TrainConfig& tc = cfg.train;
  const std::vector<data::Sample> train_set = data::load_split(manifest, data::Split::train);
  if (train_set.empty()) throw FormatError("manifest has no train samples");
  const std::vector<data::Sample> val_set = data::load_split(manifest, data::Split::val);
  const std::vector<data::Sample> test_set = data::load_split(manifest, data::Split::test);

  // Bands are derived once from the untransformed ground truth.
  const bool need_band = tc.use_brl && tc.boundary.strategy == boundary::Strategy::expand;
  std::vector<BinaryMap> bands;
  if (need_band) {
    for (const auto& s : train_set) bands.push_back(boundary::boundary_mask(s.gt, tc.boundary).bits);
  }

  fs::create_directories(out_dir);
  std::ofstream log(out_dir / kLogName, std::ios::trunc);
  if (!log) throw FormatError("cannot write " + (out_dir / kLogName).string());

  const nlohmann::json cfg_json = config::to_json(cfg);
  ParamStore<T> params = net::init_params<T>(cfg.net, tc.seed);
  OptState<T> opt = OptState<T>::zeros_like(params);

  const std::size_t n = train_set.size();
  const long max_iter = max_iterations(tc.epochs, n, tc.batch);
  const int width = std::max(1, tc.boundary.width);

  TrainResult result;
  result.final_ckpt = out_dir / kFinalCkpt;
  result.best_ckpt = out_dir / kBestCkpt;
  double best_val = std::numeric_limits<double>::infinity();
  long iter = 0;
  bool stop = false;

  for (int epoch = 1; epoch <= tc.epochs && !stop; ++epoch) {
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng shuffle(mix_seed(tc.seed, kShuffleStream, static_cast<std::uint64_t>(epoch)));
    for (std::size_t i = n; i > 1; --i) std::swap(order[i - 1], order[shuffle.below(i)]);

    EpochLog entry;
    entry.epoch = epoch;
    long iters_this_epoch = 0;
    for (std::size_t start = 0; start < n && !stop; start += static_cast<std::size_t>(tc.batch)) {
      const std::size_t stop_at = std::min(n, start + static_cast<std::size_t>(tc.batch));
      std::vector<tg::Tensor<T>> images;
      std::vector<tg::Tensor<T>> gts;
      std::vector<tg::Tensor<T>> band_ts;
      for (std::size_t k = start; k < stop_at; ++k) {
        const std::size_t idx = order[k];
        const data::Sample& s = train_set[idx];
        Rng rng(mix_seed(tc.seed, idx, static_cast<std::uint64_t>(epoch)));
        const data::GeometricTransform t = data::sample_transform(s.gt.height, s.gt.width, tc.aug, rng);
        images.push_back(data::apply_transform(t, s.image).template cast<T>());
        gts.push_back(map_tensor<T>(data::apply_transform(t, s.gt)));
        if (need_band) band_ts.push_back(map_tensor<T>(data::apply_transform(t, bands[idx])));
      }
      const tg::Tensor<T> x_batch = tg::stack_batch<T>(images);
      const tg::Tensor<T> gt_batch = tg::stack_batch<T>(gts);
      std::optional<tg::Tensor<T>> band_batch;
      if (need_band) band_batch = tg::stack_batch<T>(band_ts);

      const double lr = poly_lr(tc.base_lr, iter, max_iter, tc.power);
      tg::Tape<T> tape;
      const BoundParams<T> bound(tape, params, true);
      std::optional<losses::TotalLoss<T>> loss;
      std::map<std::string, tg::Tensor<T>> grads;
      try {
        const auto out = net::rrn_forward(tape.constant(x_batch), bound, cfg.net);
        loss = losses::total_loss<T>(out.final, out.side, gt_batch, band_batch ? &*band_batch : nullptr, tc.loss,
                                     tc.use_brl, tc.boundary.strategy);
        if (!std::isfinite(loss->breakdown.total)) throw NumericalError("loss is not finite");
        grads = bound.collect(tape.backward(loss->total));
        for (const auto& [name, g] : grads) {
          if (!g.all_finite()) throw NumericalError("gradient of '" + name + "' is not finite");
        }
      } catch (const NumericalError& e) {
        throw NumericalError("training diverged at iteration " + std::to_string(iter) + " (epoch " +
                             std::to_string(epoch) + "): " + e.what());
      }
      sgd_step(params, grads, opt, lr, tc.momentum, tc.weight_decay);

      const losses::LossBreakdown& b = loss->breakdown;
      entry.l_f += b.l_f;
      entry.l_side_sum += b.side_sum();
      entry.l_bf += b.l_bf;
      entry.l_bside_sum += b.boundary_side_sum();
      entry.total += b.total;
      entry.lr = lr;
      entry.iter = iter;
      ++iters_this_epoch;
      if (observer && !observer(IterationInfo{epoch, iter, lr, &b})) stop = true;
      ++iter;
    }

    const auto k = static_cast<double>(iters_this_epoch);
    entry.l_f /= k;
    entry.l_side_sum /= k;
    entry.l_bf /= k;
    entry.l_bside_sum /= k;
    entry.total /= k;

    bool is_best = val_set.empty();
    if (!val_set.empty()) {
      double mae = 0.0;
      for (const auto& s : val_set) mae += metrics::mae(predict_quantized(params, cfg.net, s.image), s.gt);
      mae /= static_cast<double>(val_set.size());
      entry.val_mae = mae;
      is_best = mae < best_val;
      if (is_best) best_val = mae;
    }
    if (is_best) {
      result.best_epoch = epoch;
      save_checkpoint(result.best_ckpt, Checkpoint::from(params, &opt, cfg_json));
    }
    log << entry.to_json().dump() << '\n';
    log.flush();
    result.log.push_back(entry);
  }

  save_checkpoint(result.final_ckpt, Checkpoint::from(params, &opt, cfg_json));
  result.train_report = evaluate_split(params, cfg.net, train_set, "train", width);
  nlohmann::json reports = {{"best_epoch", result.best_epoch}, {"train", result.train_report.to_json()}};
  if (!val_set.empty()) {
    result.val_report = evaluate_split(params, cfg.net, val_set, "val", width);
    reports["val"] = result.val_report->to_json();
  }
  if (!test_set.empty()) {
    result.test_report = evaluate_split(params, cfg.net, test_set, "test", width);
    reports["test"] = result.test_report->to_json();
  }
  write_json(out_dir / kMetricsName, reports);
  return result;
}

}  // namespace

nlohmann::json EpochLog::to_json() const {
  nlohmann::json j = {{"epoch", epoch},           {"iter", iter},       {"lr", lr},
                      {"l_f", l_f},               {"l_side_sum", l_side_sum},
                      {"l_bf", l_bf},             {"l_bside_sum", l_bside_sum},
                      {"total", total}};
  if (val_mae) j["val_mae"] = *val_mae;
  return j;
}

template <std::floating_point T>
metrics::MetricReport evaluate_split(const ParamStore<T>& params, const net::NetConfig& net,
                                     std::span<const data::Sample> samples, const std::string& name,
                                     int boundary_width) {
  std::vector<GrayMap> preds;
  std::vector<BinaryMap> gts;
  for (const auto& s : samples) {
    preds.push_back(predict_quantized(params, net, s.image));
    gts.push_back(s.gt);
  }
  metrics::EvalOptions opt;
  opt.with_ber = true;
  if (boundary_width >= 1) opt.boundary_width = boundary_width;
  return metrics::evaluate(name, preds, gts, opt);
}

template metrics::MetricReport evaluate_split<float>(const ParamStore<float>&, const net::NetConfig&,
                                                     std::span<const data::Sample>, const std::string&, int);
template metrics::MetricReport evaluate_split<double>(const ParamStore<double>&, const net::NetConfig&,
                                                      std::span<const data::Sample>, const std::string&, int);

TrainResult train(const RunConfig& cfg, const data::Manifest& manifest, const std::filesystem::path& out_dir,
                  const Observer& observer) {
  cfg.validate();
  if (cfg.train.precision == config::Precision::f64) return train_impl<double>(cfg, manifest, out_dir, observer);
  return train_impl<float>(cfg, manifest, out_dir, observer);
}

GrayMap infer(const Checkpoint& ckpt, const data::Image& image) {
  const RunConfig cfg = config::from_json(ckpt.config);
  if (ckpt.dtype() == 1) return predict_quantized(ckpt.params<double>(), cfg.net, image);
  return predict_quantized(ckpt.params<float>(), cfg.net, image);
}

std::map<std::string, Stat> aggregate(std::span<const metrics::MetricReport> reports) {
  std::map<std::string, std::vector<double>> cols;
  for (const auto& r : reports) {
    cols["mae"].push_back(r.mae);
    cols["max_f_beta"].push_back(r.max_f_beta);
    if (r.ber) cols["ber"].push_back(*r.ber);
    if (r.boundary_mae) cols["boundary_mae"].push_back(*r.boundary_mae);
  }
  std::map<std::string, Stat> out;
  for (const auto& [k, v] : cols) {
    if (v.size() == reports.size()) out[k] = aggregate(std::span<const double>(v));
  }
  return out;
}

nlohmann::json MultirunResult::to_json() const {
  nlohmann::json runs = nlohmann::json::array();
  for (std::size_t i = 0; i < reports.size(); ++i) runs.push_back({{"seed", seeds[i]}, {"report", reports[i].to_json()}});
  nlohmann::json agg = nlohmann::json::object();
  for (const auto& [k, s] : aggregate) agg[k] = {{"mean", s.mean}, {"std", s.std}};
  return {{"runs", runs}, {"aggregate", agg}};
}

MultirunResult multirun(const RunConfig& cfg, std::span<const std::uint64_t> seeds, const data::Manifest& manifest,
                        const std::filesystem::path& out_dir) {
  if (seeds.size() < 2) throw ConfigError("multirun needs at least 2 seeds");
  MultirunResult r;
  for (std::uint64_t seed : seeds) {
    RunConfig c = cfg;
    c.train.seed = seed;
    const TrainResult tr = train(c, manifest, out_dir / ("seed_" + std::to_string(seed)));
    r.seeds.push_back(seed);
    r.reports.push_back(tr.test_report ? *tr.test_report : tr.val_report ? *tr.val_report : tr.train_report);
  }
  r.aggregate = aggregate(std::span<const metrics::MetricReport>(r.reports));
  write_json(out_dir / "multirun.json", r.to_json());
  return r;
}

}  // namespace rrn::train
