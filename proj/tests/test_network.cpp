#include <gtest/gtest.h>

#include <set>

#include "helpers.hpp"
#include "rrn/gradcheck.hpp"
#include "rrn/network.hpp"
#include "rrn/ops.hpp"

namespace {

using namespace rrn;
using rrn::testing::random_tensor;
using tg::Shape;
using tg::Tensor;
using tg::Var;

ParamStore<double> with_random_biases(ParamStore<double> p, Rng& rng) {
  for (auto& [name, t] : p) {
    if (name.ends_with(".bias")) {
      for (auto& v : t.data()) v = rng.uniform(-0.1, 0.1);
    }
  }
  return p;
}

TEST(Backbone, StridesAndChannels) {
  net::NetConfig cfg;
  const auto p = net::init_params<double>(cfg, 0);
  Rng rng(1);
  tg::Tape<double> tape;
  const BoundParams<double> b(tape, p, false);
  const auto f = net::backbone_forward(tape.constant(random_tensor({2, 3, 64, 64}, rng, 0.0, 1.0)), b, cfg);
  ASSERT_EQ(f.size(), 4u);
  const int sizes[] = {32, 16, 8, 4};
  for (int s = 0; s < 4; ++s) {
    EXPECT_EQ(f[s].shape(), (Shape{2, cfg.stage_channels[s], sizes[s], sizes[s]}));
  }
}

TEST(Backbone, ZeroImageGivesZeroFeatures) {
  net::NetConfig cfg;
  const auto p = net::init_params<double>(cfg, 3);
  tg::Tape<double> tape;
  const BoundParams<double> b(tape, p, false);
  for (const auto& f : net::backbone_forward(tape.constant(Tensor<double>({1, 3, 32, 32})), b, cfg)) {
    for (double v : f.value().data()) EXPECT_EQ(v, 0.0);
  }
}

TEST(Backbone, RejectsBadInput) {
  net::NetConfig cfg;
  const auto p = net::init_params<double>(cfg, 0);
  tg::Tape<double> tape;
  const BoundParams<double> b(tape, p, false);
  EXPECT_THROW(net::backbone_forward(tape.constant(Tensor<double>({1, 3, 40, 32})), b, cfg), ShapeError);
  EXPECT_THROW(net::backbone_forward(tape.constant(Tensor<double>({1, 1, 32, 32})), b, cfg), ShapeError);
}

TEST(Fuse, ChannelBookkeeping) {
  net::NetConfig cfg;
  std::map<std::string, ConvSpec> specs;
  for (const auto& s : net::layout(cfg)) specs.emplace(s.name, s);
  for (int l = 1; l <= 4; ++l) EXPECT_EQ(specs.at("fpn.reduce." + std::to_string(l)).out, 16);
  for (int b : {1, 2, 3, 6}) {
    EXPECT_EQ(specs.at("ppm.bin" + std::to_string(b)).in, 64);
    EXPECT_EQ(specs.at("ppm.bin" + std::to_string(b)).out, 16);
  }
  EXPECT_EQ(specs.at("fpn.merge").in, 128);
  EXPECT_EQ(specs.at("fpn.merge").out, cfg.rrm.channels);
}

TEST(Fuse, QuarterResolution) {
  net::NetConfig cfg;
  const auto p = net::init_params<double>(cfg, 0);
  Rng rng(2);
  for (auto [h, w] : {std::pair{32, 32}, std::pair{64, 48}, std::pair{96, 64}}) {
    tg::Tape<double> tape;
    const BoundParams<double> b(tape, p, false);
    const auto f = net::backbone_forward(tape.constant(random_tensor({1, 3, h, w}, rng, 0.0, 1.0)), b, cfg);
    EXPECT_EQ(net::fpn_fuse(f, b, cfg).shape(), (Shape{1, cfg.rrm.channels, h / 4, w / 4}));
  }
}

TEST(Fuse, ConstantFeaturesGiveConstantMap) {
  net::NetConfig cfg;
  Rng rng(4);
  const auto p = with_random_biases(net::init_params<double>(cfg, 1), rng);
  tg::Tape<double> tape;
  const BoundParams<double> b(tape, p, false);
  std::vector<Var<double>> levels;
  const int sizes[] = {16, 8, 4, 2};
  for (int s = 0; s < 4; ++s) {
    Tensor<double> t({1, cfg.stage_channels[s], sizes[s], sizes[s]});
    for (int c = 0; c < t.shape().c; ++c) {
      const double v = rng.uniform(0.0, 1.0);
      for (auto& e : t.plane(0, c)) e = v;
    }
    levels.push_back(tape.constant(t));
  }
  const Tensor<double> m = net::fpn_fuse(levels, b, cfg).value();
  for (int c = 0; c < m.shape().c; ++c) {
    const auto plane = m.plane(0, c);
    for (double v : plane) EXPECT_NEAR(v, plane[0], 1e-12);
  }
}

TEST(Fuse, LevelCountMismatch) {
  net::NetConfig cfg;
  const auto p = net::init_params<double>(cfg, 0);
  tg::Tape<double> tape;
  const BoundParams<double> b(tape, p, false);
  const std::vector<Var<double>> three(3, tape.constant(Tensor<double>({1, 16, 8, 8})));
  EXPECT_THROW(net::fpn_fuse(three, b, cfg), ShapeError);
}

TEST(Forward, OutputsAtInputResolution) {
  net::NetConfig cfg;
  const auto p = net::init_params<double>(cfg, 5);
  Rng rng(5);
  tg::Tape<double> tape;
  const BoundParams<double> b(tape, p, false);
  const auto out = net::rrn_forward(tape.constant(random_tensor({2, 3, 64, 64}, rng, 0.0, 1.0)), b, cfg);
  ASSERT_EQ(out.side.size(), static_cast<std::size_t>(cfg.rrm.n_layers));
  std::vector<Var<double>> all = out.side;
  all.push_back(out.final);
  for (const auto& v : all) {
    EXPECT_EQ(v.shape(), (Shape{2, 1, 64, 64}));
    for (double e : v.value().data()) {
      EXPECT_GT(e, 0.0);
      EXPECT_LT(e, 1.0);
    }
  }
}

TEST(Forward, DeterministicAndPredictMatches) {
  net::NetConfig cfg;
  const auto p = net::init_params<float>(cfg, 6);
  Rng rng(6);
  const Tensor<float> img = random_tensor({1, 3, 32, 32}, rng, 0.0, 1.0).cast<float>();
  const Tensor<float> a = net::predict(img, p, cfg);
  const Tensor<float> b = net::predict(img, p, cfg);
  EXPECT_EQ(a, b);
  tg::Tape<float> tape;
  const BoundParams<float> bound(tape, p, true);
  EXPECT_EQ(net::rrn_forward(tape.constant(img), bound, cfg).final.value(), a);
}

TEST(Init, DeterministicPerSeed) {
  net::NetConfig cfg;
  EXPECT_EQ(net::init_params<double>(cfg, 9), net::init_params<double>(cfg, 9));
  EXPECT_FALSE(net::init_params<double>(cfg, 9) == net::init_params<double>(cfg, 10));
}

TEST(Init, ZeroBiasesAndKaimingVariance) {
  net::NetConfig cfg;
  const auto p = net::init_params<double>(cfg, 11);
  for (const auto& s : net::layout(cfg)) {
    for (double v : p.at(s.name + ".bias").data()) EXPECT_EQ(v, 0.0);
    const Tensor<double>& w = p.at(s.name + ".weight");
    const double bound = std::sqrt(2.0 / static_cast<double>(s.fan_in()));
    for (double v : w.data()) EXPECT_LE(std::abs(v), bound);
    if (w.size() < 5000) continue;
    double mean = 0.0;
    for (double v : w.data()) mean += v;
    mean /= static_cast<double>(w.size());
    double var = 0.0;
    for (double v : w.data()) var += (v - mean) * (v - mean);
    var /= static_cast<double>(w.size());
    const double expect = 2.0 / (3.0 * static_cast<double>(s.fan_in()));
    EXPECT_NEAR(var / expect, 1.0, 0.2) << s.name;
  }
}

TEST(Init, StableNameOrder) {
  net::NetConfig cfg;
  const auto p = net::init_params<float>(cfg, 0);
  std::vector<std::string> names;
  for (const auto& [n, _] : p) names.push_back(n);
  EXPECT_TRUE(std::is_sorted(names.begin(), names.end()));
  EXPECT_EQ(std::set<std::string>(names.begin(), names.end()).size(), names.size());
  EXPECT_EQ(names.size(), 2 * net::layout(cfg).size());
}

TEST(NetConfig, Validation) {
  net::NetConfig cfg;
  EXPECT_NO_THROW(cfg.validate());
  cfg.input_h = 40;
  EXPECT_THROW(cfg.validate(), ConfigError);
  cfg = {};
  cfg.stage_channels = {8, 8, 8};
  EXPECT_THROW(cfg.validate(), ConfigError);
  cfg = {};
  cfg.ppm_bins.clear();
  EXPECT_THROW(cfg.validate(), ConfigError);
}

TEST(EndToEndGradient, SeveralSeeds) {
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    const auto r = gradcheck::end_to_end(seed);
    EXPECT_TRUE(r.passed()) << "seed " << seed << " err " << r.max_rel_err;
  }
}

}  // namespace
