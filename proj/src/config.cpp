#include "rrn/config.hpp"

#include <fstream>
#include <set>

namespace rrn::config {

using nlohmann::json;

namespace {

// Reads typed fields out of one JSON object and rejects keys nobody asked for.
class Section {
 public:
  Section(const json& root, std::string name) : name_(std::move(name)) {
    if (!root.contains(name_)) return;
    obj_ = &root.at(name_);
    if (!obj_->is_object()) throw ConfigError("config section '" + name_ + "' must be an object");
  }
  Section(const json* obj, std::string name) : obj_(obj), name_(std::move(name)) {
    if (obj_ && !obj_->is_object()) throw ConfigError("config section '" + name_ + "' must be an object");
  }

  template <class V>
  void get(const char* key, V& out) {
    seen_.insert(key);
    if (!obj_ || !obj_->contains(key)) return;
    try {
      out = obj_->at(key).get<V>();
    } catch (const json::exception&) {
      throw ConfigError("config key '" + name_ + "." + key + "' has the wrong type");
    }
  }

  void range(const char* key, double& lo, double& hi) {
    std::vector<double> v{lo, hi};
    get(key, v);
    if (v.size() != 2) throw ConfigError("config key '" + name_ + "." + key + "' must be [min, max]");
    lo = v[0];
    hi = v[1];
  }

  const json* child(const char* key) {
    seen_.insert(key);
    return obj_ && obj_->contains(key) ? &obj_->at(key) : nullptr;
  }

  void finish() const {
    if (!obj_) return;
    for (const auto& [k, _] : obj_->items()) {
      if (!seen_.count(k)) throw ConfigError("unknown config key '" + name_ + "." + k + "'");
    }
  }

 private:
  const json* obj_ = nullptr;
  std::string name_;
  std::set<std::string> seen_;
};

}  // namespace

std::string_view to_string(Precision p) { return p == Precision::f32 ? "f32" : "f64"; }

Precision parse_precision(std::string_view s) {
  if (s == "f32") return Precision::f32;
  if (s == "f64") return Precision::f64;
  throw ConfigError("precision must be f32 or f64, got '" + std::string(s) + "'");
}

void TrainConfig::validate() const {
  if (!(base_lr >= 0.0) || !(power >= 0.0) || !(momentum >= 0.0) || !(weight_decay >= 0.0)) {
    throw ConfigError("train rates must be >= 0");
  }
  if (epochs < 1) throw ConfigError("train.epochs must be >= 1");
  if (batch < 1) throw ConfigError("train.batch must be >= 1");
  loss.validate();
  if (boundary.width < 0) throw ConfigError("boundary.width must be >= 0");
  aug.validate();
}

void RunConfig::validate() const {
  net.validate();
  train.validate();
  if (train.loss.n_layers != net.rrm.n_layers) {
    throw ConfigError("loss depth " + std::to_string(train.loss.n_layers) + " differs from rrm.n_layers " +
                      std::to_string(net.rrm.n_layers));
  }
  if (train.aug.crop % 16 != 0) throw ConfigError("aug.crop must be a multiple of 16");
  train.boundary.validate(train.aug.crop, train.aug.crop);
}

RunConfig from_json(const json& j) {
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  for (const auto& [k, _] : j.items()) {
    if (k != "net" && k != "train" && k != "loss" && k != "boundary" && k != "aug") {
      throw ConfigError("unknown config section '" + k + "'");
    }
  }
  RunConfig cfg;

  Section net(j, "net");
  net.get("stage_channels", cfg.net.stage_channels);
  net.get("fuse_channels", cfg.net.fuse_channels);
  net.get("ppm_bins", cfg.net.ppm_bins);
  net.get("input_h", cfg.net.input_h);
  net.get("input_w", cfg.net.input_w);
  Section rrm(net.child("rrm"), "net.rrm");
  rrm.get("n_layers", cfg.net.rrm.n_layers);
  rrm.get("convs_per_layer", cfg.net.rrm.convs_per_layer);
  rrm.get("channels", cfg.net.rrm.channels);
  rrm.get("use_mask", cfg.net.rrm.use_mask);
  rrm.finish();
  net.finish();

  TrainConfig& t = cfg.train;
  Section train(j, "train");
  train.get("base_lr", t.base_lr);
  train.get("power", t.power);
  train.get("momentum", t.momentum);
  train.get("weight_decay", t.weight_decay);
  train.get("epochs", t.epochs);
  train.get("batch", t.batch);
  train.get("use_brl", t.use_brl);
  train.get("seed", t.seed);
  std::string precision(to_string(t.precision));
  train.get("precision", precision);
  t.precision = parse_precision(precision);
  train.finish();

  Section loss(j, "loss");
  loss.get("lambda", t.loss.lambda);
  loss.get("eta", t.loss.eta);
  loss.get("epsilon", t.loss.epsilon);
  loss.finish();
  t.loss.n_layers = cfg.net.rrm.n_layers;

  Section bnd(j, "boundary");
  bnd.get("width", t.boundary.width);
  std::string strategy(boundary::to_string(t.boundary.strategy));
  bnd.get("strategy", strategy);
  try {
    t.boundary.strategy = boundary::parse_strategy(strategy);
  } catch (const Error& e) {
    throw ConfigError(e.what());
  }
  bnd.finish();

  Section aug(j, "aug");
  aug.get("mirror", t.aug.mirror);
  aug.range("scale_range", t.aug.scale_min, t.aug.scale_max);
  aug.range("rotation_deg", t.aug.rotation_min_deg, t.aug.rotation_max_deg);
  aug.get("crop", t.aug.crop);
  aug.finish();

  cfg.validate();
  return cfg;
}

json to_json(const RunConfig& cfg) {
  const TrainConfig& t = cfg.train;
  return {
      {"net",
       {{"stage_channels", cfg.net.stage_channels},
        {"fuse_channels", cfg.net.fuse_channels},
        {"ppm_bins", cfg.net.ppm_bins},
        {"input_h", cfg.net.input_h},
        {"input_w", cfg.net.input_w},
        {"rrm",
         {{"n_layers", cfg.net.rrm.n_layers},
          {"convs_per_layer", cfg.net.rrm.convs_per_layer},
          {"channels", cfg.net.rrm.channels},
          {"use_mask", cfg.net.rrm.use_mask}}}}},
      {"train",
       {{"base_lr", t.base_lr},
        {"power", t.power},
        {"momentum", t.momentum},
        {"weight_decay", t.weight_decay},
        {"epochs", t.epochs},
        {"batch", t.batch},
        {"use_brl", t.use_brl},
        {"seed", t.seed},
        {"precision", std::string(to_string(t.precision))}}},
      {"loss", {{"lambda", t.loss.lambda}, {"eta", t.loss.eta}, {"epsilon", t.loss.epsilon}}},
      {"boundary", {{"width", t.boundary.width}, {"strategy", std::string(boundary::to_string(t.boundary.strategy))}}},
      {"aug",
       {{"mirror", t.aug.mirror},
        {"scale_range", {t.aug.scale_min, t.aug.scale_max}},
        {"rotation_deg", {t.aug.rotation_min_deg, t.aug.rotation_max_deg}},
        {"crop", t.aug.crop}}},
  };
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  return from_json(j);
}

void save_run_config(const std::filesystem::path& path, const RunConfig& cfg) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw ConfigError("cannot write " + path.string());
  out << to_json(cfg).dump(2) << '\n';
}

}  // namespace rrn::config
