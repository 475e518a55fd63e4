#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

#include "helpers.hpp"
#include "json.hpp"
#include "rrn/network.hpp"
#include "rrn/trainer.hpp"

namespace {

using namespace rrn;
using rrn::testing::random_tensor;
using rrn::testing::read_bytes;
using rrn::testing::TempDir;
using rrn::testing::write_bytes;
using tg::Shape;
using tg::Tensor;

// ---------------------------------------------------------------------------
// Schedule.

TEST(PolyLr, Endpoints) {
  EXPECT_DOUBLE_EQ(train::poly_lr(0.01, 0, 1000, 0.9), 0.01);
  EXPECT_EQ(train::poly_lr(0.01, 1000, 1000, 0.9), 0.0);
}

TEST(PolyLr, HalfWay) {
  EXPECT_NEAR(train::poly_lr(0.01, 500, 1000, 0.9), 0.0053589, 1e-7);
  EXPECT_DOUBLE_EQ(train::poly_lr(0.01, 500, 1000, 0.9), 0.01 * std::pow(0.5, 0.9));
}

TEST(PolyLr, StrictlyDecreasing) {
  for (double power : {0.5, 0.9, 1.0, 2.0}) {
    double prev = train::poly_lr(0.01, 0, 257, power);
    for (long i = 1; i <= 257; ++i) {
      const double lr = train::poly_lr(0.01, i, 257, power);
      ASSERT_LT(lr, prev) << "power " << power << " iter " << i;
      prev = lr;
    }
  }
}

TEST(PolyLr, OutOfRange) {
  EXPECT_THROW(train::poly_lr(0.01, 11, 10, 0.9), ConfigError);
  EXPECT_THROW(train::poly_lr(0.01, -1, 10, 0.9), ConfigError);
  EXPECT_THROW(train::poly_lr(0.01, 0, 0, 0.9), ConfigError);
}

TEST(PolyLr, MaxIterations) {
  EXPECT_EQ(train::max_iterations(20, 200, 8), 500);
  EXPECT_EQ(train::max_iterations(3, 17, 4), 15);
  EXPECT_EQ(train::max_iterations(1, 1, 8), 1);
  EXPECT_THROW(train::max_iterations(0, 10, 2), ConfigError);
  EXPECT_THROW(train::max_iterations(1, 0, 2), ConfigError);
}

// ---------------------------------------------------------------------------
// Optimiser.

struct Scalar {
  ParamStore<double> params;
  std::map<std::string, Tensor<double>> grads;
  train::OptState<double> state;

  Scalar(double w, double g) {
    params.set("w", Tensor<double>({1, 1, 1, 1}, w));
    grads.emplace("w", Tensor<double>({1, 1, 1, 1}, g));
    state = train::OptState<double>::zeros_like(params);
  }
  double w() const { return params.at("w")[0]; }
  double v() const { return state.velocity.at("w")[0]; }
};

TEST(Sgd, PlainDescent) {
  Scalar s(1.0, 0.1);
  train::sgd_step(s.params, s.grads, s.state, 0.1, 0.0, 0.0);
  EXPECT_DOUBLE_EQ(s.w(), 0.99);
}

TEST(Sgd, MomentumTrace) {
  Scalar s(1.0, 0.1);
  train::sgd_step(s.params, s.grads, s.state, 0.1, 0.9, 0.0);
  EXPECT_DOUBLE_EQ(s.w(), 0.99);
  train::sgd_step(s.params, s.grads, s.state, 0.1, 0.9, 0.0);
  EXPECT_DOUBLE_EQ(s.v(), 0.19);
  EXPECT_DOUBLE_EQ(s.w(), 0.971);
  EXPECT_EQ(s.state.step, 2u);
}

TEST(Sgd, PureDecay) {
  Scalar s(1.0, 0.0);
  train::sgd_step(s.params, s.grads, s.state, 0.1, 0.0, 0.1);
  EXPECT_DOUBLE_EQ(s.w(), 0.99);
}

TEST(Sgd, ZeroRateKeepsParamsButUpdatesVelocity) {
  Rng rng(3);
  ParamStore<double> p;
  p.set("a", random_tensor({2, 3, 1, 1}, rng));
  p.set("b", random_tensor({1, 1, 1, 4}, rng));
  std::map<std::string, Tensor<double>> g;
  for (const auto& [n, t] : p) g.emplace(n, random_tensor(t.shape(), rng));
  auto st = train::OptState<double>::zeros_like(p);
  const ParamStore<double> before = p;
  train::sgd_step(p, g, st, 0.0, 0.9, 1e-4);
  EXPECT_EQ(p, before);
  for (const auto& [n, v] : st.velocity) {
    for (std::size_t i = 0; i < v.size(); ++i) EXPECT_DOUBLE_EQ(v[i], g.at(n)[i] + 1e-4 * before.at(n)[i]);
  }
}

TEST(Sgd, ShapeMismatch) {
  Scalar s(1.0, 0.1);
  s.grads.at("w") = Tensor<double>({1, 1, 1, 2});
  EXPECT_THROW(train::sgd_step(s.params, s.grads, s.state, 0.1, 0.9, 0.0), ShapeError);
}

// ---------------------------------------------------------------------------
// Checkpoints.

template <typename T>
train::Checkpoint sample_checkpoint(std::uint64_t seed, bool with_opt) {
  net::NetConfig cfg;
  cfg.stage_channels = {4, 4, 4, 4};
  cfg.fuse_channels = 4;
  cfg.rrm.channels = 4;
  const auto p = net::init_params<T>(cfg, seed);
  auto st = train::OptState<T>::zeros_like(p);
  st.step = 7;
  Rng rng(seed);
  for (auto& [_, v] : st.velocity)
    for (auto& e : v.data()) e = static_cast<T>(rng.uniform(-1.0, 1.0));
  return train::Checkpoint::from(p, with_opt ? &st : nullptr, nlohmann::json{{"note", "x"}});
}

TEST(Checkpoint, RoundTripF32) {
  const auto c = sample_checkpoint<float>(1, true);
  const std::string bytes = train::encode_checkpoint(c);
  EXPECT_EQ(bytes.substr(0, 8), "RRNCKPT1");
  const auto d = train::decode_checkpoint(bytes);
  EXPECT_EQ(d, c);
  EXPECT_EQ(d.dtype(), 0);
  EXPECT_EQ(train::encode_checkpoint(d), bytes);
  EXPECT_EQ(d.opt_state<float>().step, 7u);
}

TEST(Checkpoint, F64StaysF64) {
  const auto c = sample_checkpoint<double>(2, false);
  const auto d = train::decode_checkpoint(train::encode_checkpoint(c));
  EXPECT_EQ(d.dtype(), 1);
  EXPECT_EQ(d.params<double>(), c.params<double>());
  EXPECT_THROW((void)d.params<float>(), FormatError);
  EXPECT_FALSE(d.velocity.has_value());
}

TEST(Checkpoint, FileRoundTrip) {
  TempDir dir;
  const auto c = sample_checkpoint<double>(3, true);
  train::save_checkpoint(dir / "a.ckpt", c);
  EXPECT_EQ(train::load_checkpoint(dir / "a.ckpt"), c);
  EXPECT_EQ(read_bytes(dir / "a.ckpt"), train::encode_checkpoint(c));
}

TEST(Checkpoint, BadMagic) {
  std::string bytes = train::encode_checkpoint(sample_checkpoint<float>(4, false));
  bytes[3] ^= 0x20;
  try {
    (void)train::decode_checkpoint(bytes);
    FAIL() << "accepted a flipped magic byte";
  } catch (const FormatError& e) {
    EXPECT_NE(std::string(e.what()).find("bad magic"), std::string::npos) << e.what();
  }
}

TEST(Checkpoint, UnknownVersion) {
  std::string bytes = train::encode_checkpoint(sample_checkpoint<float>(4, false));
  bytes[8] = 2;
  EXPECT_THROW((void)train::decode_checkpoint(bytes), FormatError);
}

TEST(Checkpoint, TruncationAndTrailingBytes) {
  const std::string bytes = train::encode_checkpoint(sample_checkpoint<float>(5, true));
  for (std::size_t cut : {std::size_t{0}, std::size_t{7}, std::size_t{12}, std::size_t{40}, bytes.size() / 2,
                          bytes.size() - 1}) {
    EXPECT_THROW((void)train::decode_checkpoint(std::string_view(bytes).substr(0, cut)), FormatError) << cut;
  }
  EXPECT_THROW((void)train::decode_checkpoint(bytes + '\0'), FormatError);
}

TEST(Checkpoint, DuplicateNames) {
  train::Checkpoint c;
  c.tensors.emplace("a", Tensor<float>({1, 1, 1, 1}, 1.0f));
  c.tensors.emplace("b", Tensor<float>({1, 1, 1, 1}, 2.0f));
  std::string bytes = train::encode_checkpoint(c);
  const std::string needle("\x01\x00\x00\x00"
                           "b",
                           5);
  const auto pos = bytes.find(needle);
  ASSERT_NE(pos, std::string::npos);
  bytes[pos + 4] = 'a';
  EXPECT_THROW((void)train::decode_checkpoint(bytes), FormatError);
}

TEST(Checkpoint, MissingFile) {
  TempDir dir;
  EXPECT_THROW((void)train::load_checkpoint(dir / "none.ckpt"), FormatError);
}

// ---------------------------------------------------------------------------
// Multi-seed statistics.

struct Column {
  const char* name;
  std::vector<double> values;
  double mean;
  double std_e3;
};

// Published ten-run columns; means and std (x1e-3) as printed.
const std::vector<Column>& published_columns() {
  static const std::vector<Column> t = {
      {"ecssd_f", {.925, .924, .921, .922, .922, .921, .921, .923, .924, .925}, 0.923, 1.536},
      {"ecssd_mae", {.054, .050, .052, .051, .052, .053, .051, .051, .052, .050}, 0.052, 1.200},
      {"hku_f", {.921, .921, .922, .921, .919, .922, .920, .922, .922, .921}, 0.921, 0.943},
      {"hku_mae", {.043, .040, .042, .040, .041, .044, .040, .041, .039, .040}, 0.041, 1.483},
      {"omron_f", {.813, .813, .814, .815, .820, .811, .816, .815, .814, .813}, 0.814, 2.289},
      {"omron_mae", {.079, .075, .075, .079, .077, .075, .077, .078, .075, .079}, 0.077, 1.700},
      {"duts_f", {.858, .861, .861, .861, .857, .859, .862, .860, .861, .855}, 0.859, 2.110},
      {"duts_mae", {.064, .061, .062, .063, .065, .062, .062, .064, .062, .064}, 0.063, 1.221},
      {"pascal_f", {.863, .853, .856, .855, .855, .854, .856, .862, .856, .860}, 0.857, 3.256},
      {"pascal_mae", {.096, .098, .096, .096, .098, .096, .096, .095, .100, .094}, 0.097, 1.628},
  };
  return t;
}

TEST(Aggregate, EcssdColumn) {
  const auto& c = published_columns().front();
  const train::Stat s = train::aggregate(std::span<const double>(c.values));
  EXPECT_NEAR(s.std, 1.536e-3, 1e-6);
  EXPECT_NEAR(s.mean, 0.9228, 1e-12);
  EXPECT_EQ(std::round(s.mean * 1000.0) / 1000.0, 0.923);
}

TEST(Aggregate, EveryPublishedColumn) {
  for (const auto& c : published_columns()) {
    const train::Stat s = train::aggregate(std::span<const double>(c.values));
    // Printed means carry three decimals, stds three decimals of 1e-3.
    EXPECT_LE(std::abs(s.mean - c.mean), 5e-4 + 1e-12) << c.name;
    EXPECT_LE(std::abs(s.std * 1e3 - c.std_e3), 5e-4 + 1e-9) << c.name;
  }
}

TEST(Aggregate, SampleStdDoesNotMatch) {
  const auto& c = published_columns().front();
  const double mean = std::accumulate(c.values.begin(), c.values.end(), 0.0) / 10.0;
  double ss = 0.0;
  for (double v : c.values) ss += (v - mean) * (v - mean);
  EXPECT_GT(std::abs(std::sqrt(ss / 9.0) - 1.536e-3), 5e-5);
}

TEST(Aggregate, SmallCases) {
  const std::vector<double> two{0.0, 1.0};
  const train::Stat a = train::aggregate(std::span<const double>(two));
  EXPECT_DOUBLE_EQ(a.mean, 0.5);
  EXPECT_DOUBLE_EQ(a.std, 0.5);
  const std::vector<double> same(6, 0.37);
  EXPECT_EQ(train::aggregate(std::span<const double>(same)).std, 0.0);
}

TEST(Aggregate, Reports) {
  std::vector<metrics::MetricReport> r(3);
  for (int i = 0; i < 3; ++i) {
    r[i].mae = 0.1 * (i + 1);
    r[i].max_f_beta = 0.9;
    r[i].boundary_mae = 0.2;
  }
  r[1].ber = 3.0;
  const auto agg = train::aggregate(std::span<const metrics::MetricReport>(r));
  EXPECT_EQ(agg.count("ber"), 0u);
  EXPECT_NEAR(agg.at("mae").mean, 0.2, 1e-12);
  EXPECT_NEAR(agg.at("mae").std, std::sqrt(2.0 / 300.0), 1e-12);
  EXPECT_EQ(agg.at("max_f_beta").std, 0.0);
  EXPECT_DOUBLE_EQ(agg.at("boundary_mae").mean, 0.2);
}

// ---------------------------------------------------------------------------
// Training loop.

config::RunConfig small_config() {
  config::RunConfig cfg;
  cfg.net.input_h = cfg.net.input_w = 32;
  cfg.train.aug.crop = 32;
  cfg.train.epochs = 2;
  cfg.train.batch = 4;
  cfg.train.seed = 5;
  return cfg;
}

TEST(Train, DeterministicGivenSeed) {
  TempDir dir;
  const auto m = data::gen_synthetic(20, 32, 1, dir / "data");
  const auto cfg = small_config();
  const auto a = train::train(cfg, m, dir / "a");
  const auto b = train::train(cfg, m, dir / "b");
  ASSERT_EQ(a.log.size(), 2u);
  EXPECT_EQ(read_bytes(dir / "a" / std::string(train::kFinalCkpt)),
            read_bytes(dir / "b" / std::string(train::kFinalCkpt)));
  EXPECT_EQ(read_bytes(dir / "a" / std::string(train::kBestCkpt)),
            read_bytes(dir / "b" / std::string(train::kBestCkpt)));
  EXPECT_EQ(read_bytes(dir / "a" / std::string(train::kLogName)),
            read_bytes(dir / "b" / std::string(train::kLogName)));

  auto other = cfg;
  other.train.seed = 6;
  train::train(other, m, dir / "c");
  EXPECT_NE(read_bytes(dir / "a" / std::string(train::kFinalCkpt)),
            read_bytes(dir / "c" / std::string(train::kFinalCkpt)));
}

TEST(Train, LogLinesCarryBreakdown) {
  TempDir dir;
  const auto m = data::gen_synthetic(20, 32, 1, dir / "data");
  const auto r = train::train(small_config(), m, dir / "run");
  std::istringstream log(read_bytes(dir / "run" / std::string(train::kLogName)));
  std::string line;
  int n = 0;
  while (std::getline(log, line)) {
    const auto j = nlohmann::json::parse(line);
    for (const char* k : {"epoch", "iter", "lr", "l_f", "l_side_sum", "l_bf", "l_bside_sum", "total"}) {
      EXPECT_TRUE(j.contains(k)) << k;
    }
    EXPECT_EQ(j["epoch"].get<int>(), ++n);
  }
  EXPECT_EQ(n, 2);
  EXPECT_EQ(r.log.back().iter, train::max_iterations(2, 16, 4) - 1);
}

TEST(Train, BrlToggleChangesOnlyBoundaryTerms) {
  TempDir dir;
  const auto m = data::gen_synthetic(20, 32, 1, dir / "data");
  auto run = [&](bool brl) {
    auto cfg = small_config();
    cfg.train.use_brl = brl;
    losses::LossBreakdown first;
    train::train(cfg, m, dir / (brl ? "on" : "off"), [&](const train::IterationInfo& it) {
      first = *it.breakdown;
      return false;
    });
    return first;
  };
  const auto on = run(true);
  const auto off = run(false);
  EXPECT_EQ(on.l_f, off.l_f);
  EXPECT_EQ(on.l_i, off.l_i);
  EXPECT_TRUE(on.use_brl);
  EXPECT_FALSE(off.use_brl);
  EXPECT_GT(on.l_bf, 0.0);
  const double eta_term = on.eta * (on.l_bf + on.sigma * on.boundary_side_sum());
  EXPECT_NEAR(on.total - off.total, eta_term, 1e-6 * std::abs(on.total));
  EXPECT_NEAR(off.total, off.l_f + off.sigma * off.side_sum(), 1e-12);
}

TEST(Train, EmptyTrainSplit) {
  TempDir dir;
  auto m = data::gen_synthetic(10, 32, 1, dir / "data");
  std::erase_if(m.entries, [](const data::ManifestEntry& e) { return e.split == data::Split::train; });
  EXPECT_THROW(train::train(small_config(), m, dir / "run"), FormatError);
}

TEST(Train, DivergenceNamesIteration) {
  TempDir dir;
  const auto m = data::gen_synthetic(20, 32, 1, dir / "data");
  auto cfg = small_config();
  cfg.train.base_lr = 1e12;
  try {
    train::train(cfg, m, dir / "run");
    FAIL() << "training with lr 1e12 did not diverge";
  } catch (const NumericalError& e) {
    EXPECT_NE(std::string(e.what()).find("iteration"), std::string::npos) << e.what();
  }
}

TEST(Train, LossFallsOverTenEpochs) {
  TempDir dir;
  const auto m = data::gen_synthetic(250, 64, 0, dir / "data");
  const config::RunConfig cfg;
  const long per_epoch = train::max_iterations(1, m.split(data::Split::train).size(), cfg.train.batch);
  const auto r = train::train(cfg, m, dir / "run",
                              [&](const train::IterationInfo& it) { return it.iter + 1 < 10 * per_epoch; });
  ASSERT_EQ(r.log.size(), 10u);
  EXPECT_LT(r.log[9].total, r.log[0].total);
}

}  // namespace
