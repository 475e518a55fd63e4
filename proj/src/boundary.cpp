#include "rrn/boundary.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace rrn::boundary {
namespace {

void require_binary(const BinaryMap& gt) {
  for (std::size_t i = 0; i < gt.size(); ++i) {
    if (gt.data[i] > 1) {
      throw FormatError("ground truth is not binary: value " + std::to_string(gt.data[i]) +
                        " at index " + std::to_string(i));
    }
  }
}

// Replicate padding.
template <class T>
T clamped(const T* p, int h, int w, int y, int x) {
  y = std::clamp(y, 0, h - 1);
  x = std::clamp(x, 0, w - 1);
  return p[static_cast<std::size_t>(y) * w + x];
}

template <class T>
void sobel_plane(const T* src, int h, int w, T* mag, T* gx_out, T* gy_out) {
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      auto v = [&](int dy, int dx) { return clamped(src, h, w, y + dy, x + dx); };
      const T gx = (v(-1, 1) + 2 * v(0, 1) + v(1, 1)) - (v(-1, -1) + 2 * v(0, -1) + v(1, -1));
      const T gy = (v(1, -1) + 2 * v(1, 0) + v(1, 1)) - (v(-1, -1) + 2 * v(-1, 0) + v(-1, 1));
      const std::size_t i = static_cast<std::size_t>(y) * w + x;
      mag[i] = std::min(T(1), std::sqrt(gx * gx + gy * gy) / T(4));
      if (gx_out != nullptr) {
        gx_out[i] = gx;
        gy_out[i] = gy;
      }
    }
  }
}

}  // namespace

Strategy parse_strategy(std::string_view s) {
  if (s == "expand") return Strategy::expand;
  if (s == "grad") return Strategy::grad;
  throw ConfigError("unknown boundary strategy '" + std::string(s) + "' (expected expand|grad)");
}

std::string_view to_string(Strategy s) { return s == Strategy::expand ? "expand" : "grad"; }

void BoundaryConfig::validate(int h, int w) const {
  if (width < 0) throw ConfigError("boundary width must be >= 0, got " + std::to_string(width));
  if (width > std::min(h, w)) {
    throw ConfigError("boundary width " + std::to_string(width) + " exceeds min(H, W) = " +
                      std::to_string(std::min(h, w)));
  }
}

bool BoundaryMask::empty() const { return count() == 0; }

std::size_t BoundaryMask::count() const {
  return static_cast<std::size_t>(std::count(bits.data.begin(), bits.data.end(), 1));
}

BoundaryMask extract_boundary(const BinaryMap& gt) {
  require_binary(gt);
  const int h = gt.height;
  const int w = gt.width;
  BoundaryMask out{BinaryMap(h, w, 0), 0};
  auto bg = [&](int y, int x) { return y < 0 || y >= h || x < 0 || x >= w || gt(y, x) == 0; };
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (gt(y, x) == 1 && (bg(y - 1, x) || bg(y + 1, x) || bg(y, x - 1) || bg(y, x + 1))) {
        out.bits(y, x) = 1;
      }
    }
  }
  return out;
}

BoundaryMask dilate(const BoundaryMask& mask, int width) {
  if (width < 0) throw ConfigError("dilation width must be >= 0");
  const int h = mask.bits.height;
  const int w = mask.bits.width;
  if (width == 0) return BoundaryMask{mask.bits, mask.width};
  // The square structuring element separates into a row pass and a column pass.
  BinaryMap rows(h, w, 0);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const int x0 = std::max(0, x - width);
      const int x1 = std::min(w - 1, x + width);
      for (int xx = x0; xx <= x1; ++xx) {
        if (mask.bits(y, xx) != 0) {
          rows(y, x) = 1;
          break;
        }
      }
    }
  }
  BoundaryMask out{BinaryMap(h, w, 0), mask.width + width};
  for (int y = 0; y < h; ++y) {
    const int y0 = std::max(0, y - width);
    const int y1 = std::min(h - 1, y + width);
    for (int x = 0; x < w; ++x) {
      for (int yy = y0; yy <= y1; ++yy) {
        if (rows(yy, x) != 0) {
          out.bits(y, x) = 1;
          break;
        }
      }
    }
  }
  return out;
}

BoundaryMask boundary_mask(const BinaryMap& gt, const BoundaryConfig& config) {
  if (config.strategy != Strategy::expand) {
    throw ConfigError("boundary_mask requires the expand strategy");
  }
  config.validate(gt.height, gt.width);
  BoundaryMask edge = extract_boundary(gt);
  // A uniform map has no contour between classes, only the frame.
  if (std::all_of(gt.data.begin(), gt.data.end(), [](std::uint8_t v) { return v == 1; })) {
    edge.bits = BinaryMap(gt.height, gt.width);
  }
  return dilate(edge, config.width);
}

GrayMap sobel_magnitude(const GrayMap& map) {
  GrayMap out(map.height, map.width);
  if (map.size() == 0) return out;
  sobel_plane<double>(map.data.data(), map.height, map.width, out.data.data(), nullptr, nullptr);
  return out;
}

template <std::floating_point T>
tg::Var<T> sobel_magnitude(const tg::Var<T>& x) {
  const tg::Shape s = x.shape();
  tg::Tensor<T> mag(s);
  for (int n = 0; n < s.n; ++n) {
    for (int c = 0; c < s.c; ++c) {
      sobel_plane<T>(x.value().plane(n, c).data(), s.h, s.w, mag.plane(n, c).data(), nullptr,
                     nullptr);
    }
  }
  return x.tape().record(
      "sobel_magnitude", std::move(mag), {x.id()}, [](const tg::BackwardArgs<T>& a) {
        const tg::Shape& s = a.output.shape();
        std::vector<T> gx(s.plane());
        std::vector<T> gy(s.plane());
        std::vector<T> mag(s.plane());
        const int h = s.h;
        const int w = s.w;
        for (int n = 0; n < s.n; ++n) {
          for (int c = 0; c < s.c; ++c) {
            sobel_plane<T>(a.inputs[0]->plane(n, c).data(), h, w, mag.data(), gx.data(), gy.data());
            auto go = a.grad_output.plane(n, c);
            T* gin = a.grad_inputs[0]->plane(n, c).data();
            for (int y = 0; y < h; ++y) {
              for (int x = 0; x < w; ++x) {
                const std::size_t i = static_cast<std::size_t>(y) * w + x;
                const T norm = std::sqrt(gx[i] * gx[i] + gy[i] * gy[i]);
                // Zero gradient where clamped at 1 or where the magnitude vanishes.
                if (norm == T(0) || norm / T(4) >= T(1)) continue;
                const T dgx = go[i] * gx[i] / (T(4) * norm);
                const T dgy = go[i] * gy[i] / (T(4) * norm);
                // Transpose of the replicate-padded stencil.
                for (int dy = -1; dy <= 1; ++dy) {
                  for (int dx = -1; dx <= 1; ++dx) {
                    const T kx = static_cast<T>(dx * (dy == 0 ? 2 : 1));
                    const T ky = static_cast<T>(dy * (dx == 0 ? 2 : 1));
                    if (kx == T(0) && ky == T(0)) continue;
                    const int sy = std::clamp(y + dy, 0, h - 1);
                    const int sx = std::clamp(x + dx, 0, w - 1);
                    gin[static_cast<std::size_t>(sy) * w + sx] += kx * dgx + ky * dgy;
                  }
                }
              }
            }
          }
        }
      });
}

template tg::Var<float> sobel_magnitude(const tg::Var<float>&);
template tg::Var<double> sobel_magnitude(const tg::Var<double>&);

}  // namespace rrn::boundary
