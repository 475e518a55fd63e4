#pragma once

#include <string_view>

#include "rrn/map2d.hpp"
#include "rrn/tape.hpp"

namespace rrn::boundary {

enum class Strategy { expand, grad };

Strategy parse_strategy(std::string_view s);
std::string_view to_string(Strategy s);

struct BoundaryConfig {
  int width = 5;
  Strategy strategy = Strategy::expand;

  /// Throws ConfigError if width < 0 or width > min(h, w).
  void validate(int h, int w) const;
};

/// Binary band around ground-truth contours.
struct BoundaryMask {
  BinaryMap bits;
  int width = 0;

  [[nodiscard]] bool empty() const;
  [[nodiscard]] std::size_t count() const;
};

/// Foreground pixels with at least one background 4-neighbour. Pixels
/// outside the frame count as background.
BoundaryMask extract_boundary(const BinaryMap& gt);

/// Square (Chebyshev) dilation of radius `width`; width 0 is the identity.
BoundaryMask dilate(const BoundaryMask& mask, int width);

/// dilate(extract_boundary(gt), width). Only the expand strategy produces
/// a mask; the grad strategy works on Sobel maps instead.
BoundaryMask boundary_mask(const BinaryMap& gt, const BoundaryConfig& config);

/// min(1, |Sobel| / 4) with replicate-padded borders.
GrayMap sobel_magnitude(const GrayMap& map);

/// Differentiable Sobel magnitude over every (n, c) plane of x.
template <std::floating_point T>
tg::Var<T> sobel_magnitude(const tg::Var<T>& x);

}  // namespace rrn::boundary
