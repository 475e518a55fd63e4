#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "rrn/errors.hpp"

namespace rrn {

/// Single-channel H x W raster, row-major.
template <class T>
struct Map2D {
  int height = 0;
  int width = 0;
  std::vector<T> data;

  Map2D() = default;
  Map2D(int h, int w, T fill = T{}) : height(h), width(w), data(static_cast<std::size_t>(h) * w, fill) {
    if (h < 0 || w < 0) throw ShapeError("negative map extent");
  }

  [[nodiscard]] std::size_t size() const { return data.size(); }
  T& operator()(int y, int x) { return data[static_cast<std::size_t>(y) * width + x]; }
  const T& operator()(int y, int x) const { return data[static_cast<std::size_t>(y) * width + x]; }
  [[nodiscard]] bool same_dims(const auto& other) const {
    return height == other.height && width == other.width;
  }
  [[nodiscard]] std::string dims_str() const {
    return std::to_string(height) + "x" + std::to_string(width);
  }

  friend bool operator==(const Map2D&, const Map2D&) = default;
};

/// {0,1}-valued map (ground truth, boundary bands).
using BinaryMap = Map2D<std::uint8_t>;
/// Real-valued map, typically in [0,1] (saliency predictions).
using GrayMap = Map2D<double>;

inline GrayMap to_gray(const BinaryMap& m) {
  GrayMap g(m.height, m.width);
  for (std::size_t i = 0; i < m.size(); ++i) g.data[i] = m.data[i];
  return g;
}

/// Throws FormatError unless every value is exactly 0 or 1.
inline BinaryMap to_binary(const GrayMap& g) {
  BinaryMap m(g.height, g.width);
  for (std::size_t i = 0; i < g.size(); ++i) {
    const double v = g.data[i];
    if (v != 0.0 && v != 1.0) {
      throw FormatError("map is not binary: value " + std::to_string(v) + " at index " +
                        std::to_string(i));
    }
    m.data[i] = static_cast<std::uint8_t>(v);
  }
  return m;
}

}  // namespace rrn
