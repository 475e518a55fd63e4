#include <algorithm>
#include <cmath>
#include <numbers>

#include "rrn/data.hpp"
#include "rrn/ops.hpp"

namespace rrn::data {
namespace {

struct Extent {
  int h;
  int w;
};

Extent scaled_extent(const GeometricTransform& t) {
  if (t.scale == 1.0) return {t.src_h, t.src_w};
  return {std::max(1, static_cast<int>(std::lround(t.src_h * t.scale))),
          std::max(1, static_cast<int>(std::lround(t.src_w * t.scale)))};
}

Extent padded_extent(const GeometricTransform& t) {
  const Extent e = scaled_extent(t);
  return {std::max(e.h, t.crop), std::max(e.w, t.crop)};
}

// Per-plane pipeline shared by images (bilinear) and masks (nearest). Planes
// are double rasters; masks hold 0/1.
template <bool Nearest>
std::vector<double> transform_plane(const GeometricTransform& t, const std::vector<double>& src) {
  int h = t.src_h;
  int w = t.src_w;
  std::vector<double> cur = src;

  if (t.flip) {
    for (int y = 0; y < h; ++y) std::reverse(cur.begin() + y * w, cur.begin() + (y + 1) * w);
  }

  const Extent se = scaled_extent(t);
  if (se.h != h || se.w != w) {
    std::vector<double> out(static_cast<std::size_t>(se.h) * se.w);
    if constexpr (Nearest) {
      for (int y = 0; y < se.h; ++y) {
        const int sy = std::min(h - 1, static_cast<int>(std::floor((y + 0.5) * h / se.h)));
        for (int x = 0; x < se.w; ++x) {
          const int sx = std::min(w - 1, static_cast<int>(std::floor((x + 0.5) * w / se.w)));
          out[static_cast<std::size_t>(y) * se.w + x] = cur[static_cast<std::size_t>(sy) * w + sx];
        }
      }
    } else {
      tg::Tensor<double> plane(tg::Shape{1, 1, h, w}, cur);
      out = tg::kernel::resize_bilinear(plane, se.h, se.w).vec();
    }
    cur = std::move(out);
    h = se.h;
    w = se.w;
  }

  if (t.angle_deg != 0.0) {
    const double a = t.angle_deg * std::numbers::pi / 180.0;
    const double c = std::cos(a);
    const double s = std::sin(a);
    const double cx = 0.5 * (w - 1);
    const double cy = 0.5 * (h - 1);
    std::vector<double> out(cur.size(), 0.0);
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        const double dx = x - cx;
        const double dy = y - cy;
        const double sx = cx + c * dx + s * dy;
        const double sy = cy - s * dx + c * dy;
        double v = 0.0;
        if constexpr (Nearest) {
          const long ix = std::lround(sx);
          const long iy = std::lround(sy);
          if (ix >= 0 && ix < w && iy >= 0 && iy < h) v = cur[static_cast<std::size_t>(iy) * w + ix];
        } else {
          // Round-off in cos/sin must not push edge pixels out of the frame.
          constexpr double kSlack = 1e-9;
          if (sx >= -kSlack && sx <= w - 1 + kSlack && sy >= -kSlack && sy <= h - 1 + kSlack) {
            const double qx = std::clamp(sx, 0.0, w - 1.0);
            const double qy = std::clamp(sy, 0.0, h - 1.0);
            const int x0 = static_cast<int>(std::floor(qx));
            const int y0 = static_cast<int>(std::floor(qy));
            const int x1 = std::min(x0 + 1, w - 1);
            const int y1 = std::min(y0 + 1, h - 1);
            const double fx = qx - x0;
            const double fy = qy - y0;
            auto at = [&](int yy, int xx) { return cur[static_cast<std::size_t>(yy) * w + xx]; };
            const double top = at(y0, x0) + fx * (at(y0, x1) - at(y0, x0));
            const double bot = at(y1, x0) + fx * (at(y1, x1) - at(y1, x0));
            v = top + fy * (bot - top);
          }
        }
        out[static_cast<std::size_t>(y) * w + x] = v;
      }
    }
    cur = std::move(out);
  }

  // Zero-pad (centred) up to the crop size, then cut the crop window.
  const Extent pe = padded_extent(t);
  const int oy = (pe.h - h) / 2;
  const int ox = (pe.w - w) / 2;
  std::vector<double> out(static_cast<std::size_t>(t.crop) * t.crop, 0.0);
  for (int y = 0; y < t.crop; ++y) {
    const int py = y + t.crop_y - oy;
    if (py < 0 || py >= h) continue;
    for (int x = 0; x < t.crop; ++x) {
      const int px = x + t.crop_x - ox;
      if (px < 0 || px >= w) continue;
      out[static_cast<std::size_t>(y) * t.crop + x] = cur[static_cast<std::size_t>(py) * w + px];
    }
  }
  return out;
}

}  // namespace

void AugmentConfig::validate() const {
  if (!(scale_min > 0.0) || scale_max < scale_min) throw ConfigError("aug.scale_range must be positive and ordered");
  if (rotation_max_deg < rotation_min_deg) throw ConfigError("aug.rotation_deg must be ordered");
  if (crop < 8) throw ConfigError("aug.crop must be >= 8");
}

GeometricTransform sample_transform(int h, int w, const AugmentConfig& cfg, Rng& rng) {
  cfg.validate();
  GeometricTransform t;
  t.src_h = h;
  t.src_w = w;
  t.crop = cfg.crop;
  // Every draw happens unconditionally so the stream position is config-independent.
  const bool flip = rng.bernoulli(0.5);
  const double scale = rng.uniform(cfg.scale_min, cfg.scale_max);
  const double angle = rng.uniform(cfg.rotation_min_deg, cfg.rotation_max_deg);
  const double cy = rng.uniform();
  const double cx = rng.uniform();
  t.flip = cfg.mirror && flip;
  t.scale = scale;
  t.angle_deg = angle;
  const Extent pe = padded_extent(t);
  t.crop_y = std::min(pe.h - t.crop, static_cast<int>(cy * (pe.h - t.crop + 1)));
  t.crop_x = std::min(pe.w - t.crop, static_cast<int>(cx * (pe.w - t.crop + 1)));
  return t;
}

Image apply_transform(const GeometricTransform& t, const Image& image) {
  const tg::Shape& s = image.shape();
  if (s.h != t.src_h || s.w != t.src_w) throw ShapeError("apply_transform: image " + s.str() + " does not match transform");
  Image out(tg::Shape{s.n, s.c, t.crop, t.crop});
  for (int n = 0; n < s.n; ++n) {
    for (int c = 0; c < s.c; ++c) {
      auto p = image.plane(n, c);
      const auto r = transform_plane<false>(t, std::vector<double>(p.begin(), p.end()));
      std::copy(r.begin(), r.end(), out.plane(n, c).begin());
    }
  }
  return out;
}

BinaryMap apply_transform(const GeometricTransform& t, const BinaryMap& mask) {
  if (mask.height != t.src_h || mask.width != t.src_w) throw ShapeError("apply_transform: mask does not match transform");
  std::vector<double> plane(mask.data.begin(), mask.data.end());
  const auto r = transform_plane<true>(t, plane);
  BinaryMap out(t.crop, t.crop);
  for (std::size_t i = 0; i < r.size(); ++i) out.data[i] = r[i] != 0.0 ? 1 : 0;
  return out;
}

Sample augment(const Sample& sample, const AugmentConfig& cfg, Rng& rng) {
  const GeometricTransform t = sample_transform(sample.gt.height, sample.gt.width, cfg, rng);
  return Sample{apply_transform(t, sample.image), apply_transform(t, sample.gt), sample.id};
}

Image hflip(const Image& image) {
  Image out = image;
  const tg::Shape& s = image.shape();
  for (int n = 0; n < s.n; ++n) {
    for (int c = 0; c < s.c; ++c) {
      auto p = out.plane(n, c);
      for (int y = 0; y < s.h; ++y) std::reverse(p.begin() + y * s.w, p.begin() + (y + 1) * s.w);
    }
  }
  return out;
}

BinaryMap hflip(const BinaryMap& mask) {
  BinaryMap out = mask;
  for (int y = 0; y < mask.height; ++y) {
    std::reverse(out.data.begin() + y * mask.width, out.data.begin() + (y + 1) * mask.width);
  }
  return out;
}

}  // namespace rrn::data
