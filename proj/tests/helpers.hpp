#pragma once

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "rrn/map2d.hpp"
#include "rrn/rng.hpp"
#include "rrn/tensor.hpp"

namespace rrn::testing {

inline tg::Tensor<double> random_tensor(tg::Shape s, Rng& rng, double lo = -1.0, double hi = 1.0) {
  tg::Tensor<double> t(s);
  for (auto& v : t.data()) v = rng.uniform(lo, hi);
  return t;
}

inline BinaryMap random_mask(int h, int w, Rng& rng, double p = 0.5) {
  BinaryMap m(h, w);
  for (auto& v : m.data) v = rng.bernoulli(p) ? 1 : 0;
  return m;
}

inline tg::Tensor<double> map_to_tensor(const BinaryMap& m) {
  tg::Tensor<double> t(tg::Shape{1, 1, m.height, m.width});
  for (std::size_t i = 0; i < m.size(); ++i) t[i] = m.data[i];
  return t;
}

inline double max_abs_diff(const tg::Tensor<double>& a, const tg::Tensor<double>& b) {
  EXPECT_EQ(a.shape(), b.shape());
  double d = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) d = std::max(d, std::abs(a[i] - b[i]));
  return d;
}

/// Random shape with every extent at most the given bound.
inline tg::Shape small_shape(Rng& rng, int n = 4, int c = 3, int h = 6, int w = 6) {
  return {rng.uniform_int(1, n), rng.uniform_int(1, c), rng.uniform_int(1, h), rng.uniform_int(1, w)};
}

/// Fresh directory named after the running test, removed on destruction.
class TempDir {
 public:
  TempDir() {
    const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
    path_ = std::filesystem::temp_directory_path() /
            ("rrn_" + std::string(info->test_suite_name()) + "_" + info->name());
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  [[nodiscard]] const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& rel) const { return path_ / rel; }

 private:
  std::filesystem::path path_;
};

inline std::string read_bytes(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_bytes(const std::filesystem::path& p, const std::string& bytes) {
  std::ofstream out(p, std::ios::binary);
  out << bytes;
}

}  // namespace rrn::testing
