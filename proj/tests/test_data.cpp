#include <gtest/gtest.h>

#include <chrono>
#include <set>

#include "json.hpp"

#include "helpers.hpp"
#include "rrn/data.hpp"

namespace {

using namespace rrn;
using rrn::testing::read_bytes;
using rrn::testing::TempDir;
using rrn::testing::write_bytes;
namespace fs = std::filesystem;

data::Image random_image(int h, int w, Rng& rng) {
  return rrn::testing::random_tensor({1, 3, h, w}, rng, 0.0, 1.0);
}

data::AugmentConfig identity_aug(int size) {
  data::AugmentConfig c;
  c.mirror = false;
  c.scale_min = c.scale_max = 1.0;
  c.rotation_min_deg = c.rotation_max_deg = 0.0;
  c.crop = size;
  return c;
}

TEST(Netpbm, WhitePixelPgmBytes) {
  const std::string expect = std::string("P5\n1 1\n255\n") + '\xff';
  EXPECT_EQ(data::encode_pgm(GrayMap(1, 1, 1.0)), expect);
  const GrayMap g = data::decode_pgm(expect);
  ASSERT_EQ(g.height, 1);
  EXPECT_EQ(g.data[0], 1.0);
}

TEST(Netpbm, PpmLayoutIsInterleaved) {
  data::Image img(tg::Shape{1, 3, 1, 2});
  img.at(0, 0, 0, 1) = 1.0;
  img.at(0, 2, 0, 0) = 1.0;
  const std::string bytes = data::encode_ppm(img);
  const std::string header = "P6\n2 1\n255\n";
  ASSERT_EQ(bytes.size(), header.size() + 6);
  EXPECT_EQ(bytes.substr(header.size()), std::string("\x00\x00\xff\xff\x00\x00", 6));
}

TEST(Netpbm, RoundTripQuantises) {
  Rng rng(1);
  TempDir dir;
  const data::Image img = random_image(13, 17, rng);
  data::save_ppm(dir / "a.ppm", img);
  const data::Image back = data::load_ppm(dir / "a.ppm");
  ASSERT_EQ(back.shape(), img.shape());
  for (std::size_t i = 0; i < img.size(); ++i) {
    EXPECT_LE(std::abs(back[i] - img[i]), 1.0 / 510.0 + 1e-12);
    EXPECT_EQ(back[i], data::quantize8(img[i]));
  }
  data::save_ppm(dir / "b.ppm", back);
  EXPECT_EQ(read_bytes(dir / "a.ppm"), read_bytes(dir / "b.ppm"));

  GrayMap g(5, 9);
  for (auto& v : g.data) v = rng.uniform(0.0, 1.0);
  data::save_pgm(dir / "g.pgm", g);
  const GrayMap gb = data::load_pgm(dir / "g.pgm");
  for (std::size_t i = 0; i < g.size(); ++i) EXPECT_EQ(gb.data[i], data::quantize8(g.data[i]));
}

TEST(Netpbm, CommentsInHeader) {
  const std::string bytes = std::string("P5\n# made by hand\n2 1 # width height\n255\n") + '\x00' + '\xff';
  const GrayMap g = data::decode_pgm(bytes);
  EXPECT_EQ(g.width, 2);
  EXPECT_EQ(g.data[1], 1.0);
}

TEST(Netpbm, Rejections) {
  EXPECT_THROW(data::decode_ppm(std::string("P6\n1 1\n65535\n") + std::string(6, '\0')), FormatError);
  EXPECT_THROW(data::decode_pgm(std::string("P6\n1 1\n255\n") + std::string(3, '\0')), FormatError);
  EXPECT_THROW(data::decode_ppm("P3\n1 1\n255\n0 0 0\n"), FormatError);
  try {
    data::decode_ppm(std::string("P6\n2 2\n255\n") + std::string(5, '\0'));
    FAIL() << "truncated payload accepted";
  } catch (const FormatError& e) {
    EXPECT_NE(std::string(e.what()).find("offset"), std::string::npos) << e.what();
  }
}

TEST(Netpbm, MissingFileNamesPath) {
  TempDir dir;
  try {
    data::load_pgm(dir / "nope.pgm");
    FAIL();
  } catch (const FormatError& e) {
    EXPECT_NE(std::string(e.what()).find("nope.pgm"), std::string::npos);
  }
}

TEST(Synthetic, DeterministicBytes) {
  TempDir dir;
  data::gen_synthetic(12, 32, 5, dir / "a");
  data::gen_synthetic(12, 32, 5, dir / "b");
  for (const auto& e : fs::recursive_directory_iterator(dir / "a")) {
    if (!e.is_regular_file()) continue;
    const fs::path rel = fs::relative(e.path(), dir / "a");
    EXPECT_EQ(read_bytes(e.path()), read_bytes(dir / "b" / rel.string())) << rel;
  }
  data::gen_synthetic(12, 32, 6, dir / "c");
  EXPECT_NE(read_bytes(dir / "a" / "images/00000.ppm"), read_bytes(dir / "c" / "images/00000.ppm"));
}

TEST(Synthetic, ForegroundFractionAndSplits) {
  TempDir dir;
  const data::Manifest m = data::gen_synthetic(40, 32, 9, dir.path());
  EXPECT_EQ(m.split(data::Split::train).size(), 32u);
  EXPECT_EQ(m.split(data::Split::val).size(), 4u);
  EXPECT_EQ(m.split(data::Split::test).size(), 4u);
  for (const auto& e : m.entries) {
    const data::Sample s = data::load_sample(m, e);
    double fg = 0;
    for (auto v : s.gt.data) fg += v;
    fg /= static_cast<double>(s.gt.size());
    EXPECT_GT(fg, 0.02);
    EXPECT_LT(fg, 0.6);
    for (double v : s.image.data()) {
      EXPECT_GE(v, 0.0);
      EXPECT_LE(v, 1.0);
    }
  }
}

TEST(Synthetic, TwoHundredImagesUnderTenSeconds) {
  TempDir dir;
  const auto t0 = std::chrono::steady_clock::now();
  data::gen_synthetic(200, 64, 0, dir.path());
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  EXPECT_LT(secs, 10.0);
}

TEST(Synthetic, RejectsBadSize) {
  TempDir dir;
  EXPECT_THROW(data::gen_synthetic(3, 40, 0, dir.path()), ConfigError);
  EXPECT_THROW(data::gen_synthetic(0, 32, 0, dir.path()), ConfigError);
}

TEST(Manifest, RoundTripAndValidation) {
  TempDir dir;
  const data::Manifest m = data::gen_synthetic(10, 16, 3, dir.path());
  const data::Manifest back = data::load_manifest(dir.path());
  ASSERT_EQ(back.entries.size(), 10u);
  EXPECT_EQ(back.generator_seed, 3u);
  for (std::size_t i = 0; i < 10; ++i) {
    EXPECT_EQ(back.entries[i].id, m.entries[i].id);
    EXPECT_EQ(back.entries[i].split, m.entries[i].split);
    EXPECT_EQ(back.entries[i].mask_path, m.entries[i].mask_path);
  }

  const fs::path file = dir / std::string(data::kManifestName);
  const std::string original = read_bytes(file);
  auto j = nlohmann::json::parse(original);
  j["entries"][1]["id"] = j["entries"][0]["id"];
  write_bytes(file, j.dump());
  EXPECT_THROW(data::load_manifest(dir.path()), FormatError);

  j = nlohmann::json::parse(original);
  j["entries"][2]["mask_path"] = "masks/missing.pgm";
  write_bytes(file, j.dump());
  EXPECT_THROW(data::load_manifest(dir.path()), FormatError);

  j = nlohmann::json::parse(original);
  j["entries"][0]["split"] = "holdout";
  write_bytes(file, j.dump());
  EXPECT_THROW(data::load_manifest(dir.path()), FormatError);

  write_bytes(file, "{ not json");
  EXPECT_THROW(data::load_manifest(dir.path()), FormatError);
}

TEST(Manifest, NonBinaryMaskRejected) {
  TempDir dir;
  const data::Manifest m = data::gen_synthetic(2, 16, 3, dir.path());
  GrayMap g(16, 16, 0.5);
  data::save_pgm(dir / m.entries[0].mask_path, g);
  EXPECT_THROW(data::load_sample(m, m.entries[0]), FormatError);
}

TEST(Augment, DisabledIsIdentity) {
  const data::Sample s = data::synth_sample(32, 4);
  Rng rng(4);
  for (int i = 0; i < 5; ++i) {
    const data::Sample a = data::augment(s, identity_aug(32), rng);
    EXPECT_EQ(a.image, s.image);
    EXPECT_EQ(a.gt, s.gt);
  }
}

TEST(Augment, MirrorGivesIdentityOrFlip) {
  const data::Sample s = data::synth_sample(32, 5);
  data::AugmentConfig c = identity_aug(32);
  c.mirror = true;
  Rng rng(5);
  std::set<bool> seen;
  for (int i = 0; i < 20; ++i) {
    const data::Sample a = data::augment(s, c, rng);
    const bool flipped = !(a.gt == s.gt);
    seen.insert(flipped);
    EXPECT_EQ(a.image, flipped ? data::hflip(s.image) : s.image);
    EXPECT_EQ(a.gt, flipped ? data::hflip(s.gt) : s.gt);
  }
  EXPECT_EQ(seen.size(), 2u);
}

TEST(Augment, DoubleMirrorIsOriginal) {
  Rng rng(6);
  const data::Image img = random_image(7, 9, rng);
  EXPECT_EQ(data::hflip(data::hflip(img)), img);
  const BinaryMap m = rrn::testing::random_mask(7, 9, rng);
  EXPECT_EQ(data::hflip(data::hflip(m)), m);
  EXPECT_EQ(data::hflip(m)(2, 0), m(2, 8));
}

TEST(Augment, HalfTurnReversesPixels) {
  Rng rng(7);
  const data::Sample s{random_image(16, 16, rng), rrn::testing::random_mask(16, 16, rng), "x"};
  data::AugmentConfig c = identity_aug(16);
  c.rotation_min_deg = c.rotation_max_deg = 180.0;
  const data::Sample a = data::augment(s, c, rng);
  for (int y = 0; y < 16; ++y) {
    for (int x = 0; x < 16; ++x) {
      EXPECT_EQ(a.gt(y, x), s.gt(15 - y, 15 - x));
      for (int ch = 0; ch < 3; ++ch) EXPECT_NEAR(a.image.at(0, ch, y, x), s.image.at(0, ch, 15 - y, 15 - x), 1e-9);
    }
  }
}

TEST(Augment, DoubleScaleNearestMask) {
  Rng rng(8);
  const BinaryMap m = rrn::testing::random_mask(8, 8, rng);
  data::AugmentConfig c = identity_aug(16);
  c.scale_min = c.scale_max = 2.0;
  const data::GeometricTransform t = data::sample_transform(8, 8, c, rng);
  const BinaryMap out = data::apply_transform(t, m);
  for (int y = 0; y < 16; ++y)
    for (int x = 0; x < 16; ++x) EXPECT_EQ(out(y, x), m(y / 2, x / 2));
}

TEST(Augment, MaskStaysBinaryAndSizeIsCrop) {
  const data::Sample s = data::synth_sample(64, 8);
  data::AugmentConfig c;
  c.crop = 48;
  Rng rng(8);
  for (int i = 0; i < 20; ++i) {
    const data::Sample a = data::augment(s, c, rng);
    EXPECT_EQ(a.gt.height, 48);
    EXPECT_EQ(a.image.shape(), (tg::Shape{1, 3, 48, 48}));
    for (auto v : a.gt.data) EXPECT_TRUE(v == 0 || v == 1);
  }
  c.crop = 96;
  const data::Sample big = data::augment(s, c, rng);
  EXPECT_EQ(big.gt.width, 96);
}

TEST(Augment, DeterministicGivenSeed) {
  const data::Sample s = data::synth_sample(64, 9);
  const data::AugmentConfig c;
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    Rng a(mix_seed(seed, 4, 1));
    Rng b(mix_seed(seed, 4, 1));
    const data::Sample x = data::augment(s, c, a);
    const data::Sample y = data::augment(s, c, b);
    EXPECT_EQ(x.image, y.image);
    EXPECT_EQ(x.gt, y.gt);
  }
}

TEST(Augment, ConfigValidation) {
  data::AugmentConfig c;
  EXPECT_NO_THROW(c.validate());
  c.scale_min = 0.0;
  EXPECT_THROW(c.validate(), ConfigError);
  c = {};
  c.rotation_min_deg = 5;
  c.rotation_max_deg = -5;
  EXPECT_THROW(c.validate(), ConfigError);
  c = {};
  c.crop = 4;
  EXPECT_THROW(c.validate(), ConfigError);
}

}  // namespace
