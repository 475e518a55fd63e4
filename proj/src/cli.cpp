#include "rrn/cli.hpp"

#include <CLI11.hpp>
#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#include "rrn/boundary.hpp"
#include "rrn/config.hpp"
#include "rrn/data.hpp"
#include "rrn/gradcheck.hpp"
#include "rrn/metrics.hpp"
#include "rrn/trainer.hpp"

namespace rrn::cli {
namespace {

namespace fs = std::filesystem;
using config::RunConfig;

void write_json(const fs::path& path, const nlohmann::json& j) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream f(path, std::ios::trunc);
  if (!f) throw FormatError("cannot write " + path.string());
  f << j.dump(2) << '\n';
}

RunConfig load_config(const std::string& path) {
  return path.empty() ? RunConfig{} : config::load_run_config(path);
}

std::vector<double> parse_csv(const std::string& csv) {
  std::vector<double> out;
  std::stringstream ss(csv);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw ConfigError("--values: '" + item + "' is not a number");
    }
  }
  if (out.empty()) throw ConfigError("--values is empty");
  return out;
}

int as_int(double v, const char* what) {
  if (v != std::floor(v)) throw ConfigError(std::string(what) + " must be an integer");
  return static_cast<int>(v);
}

/// Applies one ablation value. Depth changes keep sigma fixed.
RunConfig ablated(RunConfig cfg, const std::string& param, double v) {
  const double sigma = cfg.train.loss.sigma();
  if (param == "sigma") {
    cfg.train.loss.lambda = v * cfg.net.rrm.n_layers;
  } else if (param == "n") {
    cfg.net.rrm.n_layers = as_int(v, "n");
    cfg.train.loss.n_layers = cfg.net.rrm.n_layers;
    cfg.train.loss.lambda = sigma * cfg.net.rrm.n_layers;
  } else if (param == "m") {
    cfg.net.rrm.convs_per_layer = as_int(v, "m");
  } else if (param == "width") {
    cfg.train.boundary.width = as_int(v, "width");
  } else {
    throw ConfigError("--param must be sigma, n, m or width");
  }
  cfg.validate();
  return cfg;
}

std::string value_tag(double v) {
  std::ostringstream s;
  s << v;
  return s.str();
}

void print_epoch(std::ostream& out, const train::EpochLog& e) {
  out << "epoch " << e.epoch << " total " << e.total << " l_f " << e.l_f;
  if (e.val_mae) out << " val_mae " << *e.val_mae;
  out << '\n';
}

// Each subcommand returns an exit code; failures propagate as exceptions.

int run_gen_data(const fs::path& out_dir, int count, int size, std::uint64_t seed, std::ostream& out) {
  if (count < 1) throw ConfigError("--count must be >= 1");
  if (size < 16 || size % 16 != 0) throw ConfigError("--size must be a positive multiple of 16");
  const data::Manifest m = data::gen_synthetic(count, size, seed, out_dir);
  out << "wrote " << m.entries.size() << " samples to " << out_dir.string() << '\n';
  return kOk;
}

int run_boundary_mask(const fs::path& gt_path, int width, const std::string& strategy, const fs::path& out_path) {
  const BinaryMap gt = to_binary(data::load_pgm(gt_path));
  const boundary::BoundaryConfig cfg{width, boundary::parse_strategy(strategy)};
  cfg.validate(gt.height, gt.width);
  if (cfg.strategy == boundary::Strategy::expand) {
    data::save_pgm(out_path, to_gray(boundary::boundary_mask(gt, cfg).bits));
  } else {
    data::save_pgm(out_path, boundary::sobel_magnitude(to_gray(gt)));
  }
  return kOk;
}

int run_train(RunConfig cfg, const fs::path& data_dir, const fs::path& out_dir, std::ostream& out) {
  const data::Manifest m = data::load_manifest(data_dir);
  fs::create_directories(out_dir);
  config::save_run_config(out_dir / "config.json", cfg);
  const train::TrainResult r = train::train(cfg, m, out_dir);
  for (const auto& e : r.log) print_epoch(out, e);
  const auto& rep = r.test_report ? *r.test_report : r.train_report;
  out << rep.dataset << " max_f " << rep.max_f_beta << " mae " << rep.mae << '\n';
  return kOk;
}

int run_infer(const fs::path& ckpt_path, const fs::path& image_path, const fs::path& out_path) {
  const train::Checkpoint ckpt = train::load_checkpoint(ckpt_path);
  const data::Image image = data::load_ppm(image_path);
  data::save_pgm(out_path, train::infer(ckpt, image));
  return kOk;
}

int run_eval(const fs::path& pred_dir, const fs::path& gt_dir, const fs::path& report_path, bool with_ber,
             int boundary_width, bool f_sum, std::ostream& out) {
  if (!fs::is_directory(gt_dir)) throw FormatError("not a directory: " + gt_dir.string());
  std::vector<fs::path> gt_files;
  for (const auto& e : fs::directory_iterator(gt_dir)) {
    if (e.is_regular_file() && e.path().extension() == ".pgm") gt_files.push_back(e.path());
  }
  std::sort(gt_files.begin(), gt_files.end());
  if (gt_files.empty()) throw FormatError("no .pgm ground truth in " + gt_dir.string());
  std::vector<GrayMap> preds;
  std::vector<BinaryMap> gts;
  for (const auto& g : gt_files) {
    const fs::path p = pred_dir / g.filename();
    if (!fs::exists(p)) throw FormatError("missing prediction " + p.string());
    GrayMap pred = data::load_pgm(p);
    BinaryMap gt;
    try {
      gt = to_binary(data::load_pgm(g));
    } catch (const FormatError& e) {
      throw FormatError(g.string() + ": " + e.what());
    }
    if (!pred.same_dims(gt)) {
      throw FormatError(p.string() + ": prediction " + pred.dims_str() + " vs ground truth " + gt.dims_str());
    }
    preds.push_back(std::move(pred));
    gts.push_back(std::move(gt));
  }
  metrics::EvalOptions opt;
  opt.with_ber = with_ber;
  if (boundary_width > 0) opt.boundary_width = boundary_width;
  opt.form = f_sum ? metrics::FForm::sum : metrics::FForm::product;
  const metrics::MetricReport r = metrics::evaluate(gt_dir.string(), preds, gts, opt);
  write_json(report_path, r.to_json());
  out << "n " << r.n_images << " max_f " << r.max_f_beta << " mae " << r.mae;
  if (r.ber) out << " ber " << *r.ber;
  if (r.boundary_mae) out << " boundary_mae " << *r.boundary_mae;
  out << '\n';
  return kOk;
}

int run_gradcheck(std::uint64_t seed, std::ostream& out) {
  std::vector<gradcheck::CheckResult> results = gradcheck::op_suite(seed);
  results.push_back(gradcheck::end_to_end(seed));
  bool ok = true;
  for (const auto& r : results) {
    ok = ok && r.passed();
    out << (r.passed() ? "ok   " : "FAIL ") << std::left << std::setw(22) << r.name << " max_rel_err "
        << std::scientific << std::setprecision(3) << r.max_rel_err << " (tol " << r.tolerance << ", "
        << r.entries << " entries)" << std::defaultfloat << '\n';
  }
  return ok ? kOk : kGradcheckFailed;
}

int run_multirun(const RunConfig& cfg, int runs, const fs::path& data_dir, const fs::path& out_dir,
                 std::ostream& out) {
  if (runs < 2) throw ConfigError("--runs must be >= 2");
  const data::Manifest m = data::load_manifest(data_dir);
  std::vector<std::uint64_t> seeds;
  for (int i = 0; i < runs; ++i) seeds.push_back(cfg.train.seed + static_cast<std::uint64_t>(i));
  const train::MultirunResult r = train::multirun(cfg, seeds, m, out_dir);
  for (const auto& [k, s] : r.aggregate) out << k << " mean " << s.mean << " std " << s.std << '\n';
  return kOk;
}

int run_ablate(const RunConfig& base, const std::string& param, const std::string& csv, const fs::path& data_dir,
               const fs::path& out_dir, std::ostream& out) {
  const std::vector<double> values = parse_csv(csv);
  std::vector<RunConfig> cfgs;
  for (double v : values) cfgs.push_back(ablated(base, param, v));  // validate all before training
  const data::Manifest m = data::load_manifest(data_dir);
  nlohmann::json summary = nlohmann::json::array();
  for (std::size_t i = 0; i < values.size(); ++i) {
    const std::string tag = param + "_" + value_tag(values[i]);
    const train::TrainResult r = train::train(cfgs[i], m, out_dir / tag);
    const auto& rep = r.test_report ? *r.test_report : r.train_report;
    write_json(out_dir / (tag + ".json"), rep.to_json());
    summary.push_back({{"param", param}, {"value", values[i]}, {"report", rep.to_json()}});
    out << tag << " max_f " << rep.max_f_beta << " mae " << rep.mae;
    if (rep.boundary_mae) out << " boundary_mae " << *rep.boundary_mae;
    out << '\n';
  }
  write_json(out_dir / "ablate.json", summary);
  return kOk;
}

}  // namespace

int dispatch(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Region refinement network toolkit"};
  app.require_subcommand(1);

  std::string out_path, data_dir, config_path, gt_path, image_path, ckpt_path, pred_dir, report_path, strategy = "expand",
                                                                                                     param, values;
  int count = 250, size = 64, width = 5, runs = 2, boundary_width = 0;
  std::uint64_t seed = 0;
  bool no_brl = false, no_mask = false, with_ber = false, f_sum = false;

  auto* gen = app.add_subcommand("gen-data", "Generate the synthetic dataset");
  gen->add_option("--out", out_path)->required();
  gen->add_option("--count", count);
  gen->add_option("--size", size);
  gen->add_option("--seed", seed);

  auto* bmask = app.add_subcommand("boundary-mask", "Write the boundary band of a ground-truth mask");
  bmask->add_option("--gt", gt_path)->required();
  bmask->add_option("--width", width);
  bmask->add_option("--strategy", strategy)->check(CLI::IsMember({"expand", "grad"}));
  bmask->add_option("--out", out_path)->required();

  auto* tr = app.add_subcommand("train", "Train a model");
  tr->add_option("--config", config_path);
  tr->add_option("--data", data_dir)->required();
  tr->add_option("--out", out_path)->required();
  auto* seed_opt = tr->add_option("--seed", seed);
  tr->add_flag("--no-brl", no_brl);
  tr->add_flag("--no-mask", no_mask);

  auto* inf = app.add_subcommand("infer", "Predict a saliency map");
  inf->add_option("--ckpt", ckpt_path)->required();
  inf->add_option("--image", image_path)->required();
  inf->add_option("--out", out_path)->required();

  auto* ev = app.add_subcommand("eval", "Score predictions against ground truth");
  ev->add_option("--pred", pred_dir)->required();
  ev->add_option("--gt", gt_path)->required();
  ev->add_option("--report", report_path)->required();
  ev->add_flag("--ber", with_ber);
  ev->add_option("--boundary-width", boundary_width);
  ev->add_flag("--f-sum", f_sum, "Use the (P + R) numerator variant of the F-measure");

  auto* gc = app.add_subcommand("gradcheck", "Run the finite-difference gradient suite");
  gc->add_option("--seed", seed);

  auto* mr = app.add_subcommand("multirun", "Train several seeds and aggregate");
  mr->add_option("--runs", runs)->required();
  mr->add_option("--config", config_path);
  mr->add_option("--data", data_dir)->required();
  mr->add_option("--out", out_path)->required();

  auto* ab = app.add_subcommand("ablate", "Sweep one hyperparameter");
  ab->add_option("--param", param)->required()->check(CLI::IsMember({"sigma", "n", "m", "width"}));
  ab->add_option("--values", values)->required();
  ab->add_option("--config", config_path);
  ab->add_option("--data", data_dir)->required();
  ab->add_option("--out", out_path)->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kBadConfig;
  }

  try {
    if (*gen) return run_gen_data(out_path, count, size, seed, out);
    if (*bmask) return run_boundary_mask(gt_path, width, strategy, out_path);
    if (*inf) return run_infer(ckpt_path, image_path, out_path);
    if (*ev) return run_eval(pred_dir, gt_path, report_path, with_ber, boundary_width, f_sum, out);
    if (*gc) return run_gradcheck(seed, out);

    RunConfig cfg = load_config(config_path);
    if (*tr) {
      if (*seed_opt) cfg.train.seed = seed;
      if (no_brl) cfg.train.use_brl = false;
      if (no_mask) cfg.net.rrm.use_mask = false;
      cfg.validate();
      return run_train(cfg, data_dir, out_path, out);
    }
    if (*mr) return run_multirun(cfg, runs, data_dir, out_path, out);
    if (*ab) return run_ablate(cfg, param, values, data_dir, out_path, out);
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << '\n';
    return kBadConfig;
  } catch (const NumericalError& e) {
    err << "error: " << e.what() << '\n';
    return kNumerical;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kDataError;
  } catch (const std::filesystem::filesystem_error& e) {
    err << "error: " << e.what() << '\n';
    return kDataError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
  return kBadConfig;
}

}  // namespace rrn::cli
