#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <numbers>

#include "rrn/data.hpp"

namespace rrn::data {
namespace {

using Rgb = std::array<double, 3>;

struct Point {
  double x;
  double y;
};

double cross(const Point& o, const Point& a, const Point& b) {
  return (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x);
}

// Andrew's monotone chain; counter-clockwise hull.
std::vector<Point> convex_hull(std::vector<Point> pts) {
  std::sort(pts.begin(), pts.end(), [](const Point& a, const Point& b) {
    return a.x < b.x || (a.x == b.x && a.y < b.y);
  });
  std::vector<Point> hull(2 * pts.size());
  std::size_t k = 0;
  for (const auto& p : pts) {
    while (k >= 2 && cross(hull[k - 2], hull[k - 1], p) <= 0) --k;
    hull[k++] = p;
  }
  for (std::size_t i = pts.size() - 1, t = k + 1; i-- > 0;) {
    while (k >= t && cross(hull[k - 2], hull[k - 1], pts[i]) <= 0) --k;
    hull[k++] = pts[i];
  }
  hull.resize(k - 1);
  return hull;
}

bool inside_convex(const std::vector<Point>& hull, const Point& p) {
  for (std::size_t i = 0; i < hull.size(); ++i) {
    if (cross(hull[i], hull[(i + 1) % hull.size()], p) < 0) return false;
  }
  return true;
}

// Rasterises one random shape, testing pixel centres.
BinaryMap random_shape(int size, Rng& rng) {
  BinaryMap m(size, size, 0);
  const int kind = rng.uniform_int(0, 2);
  const double r = rng.uniform(0.10, 0.28) * size;
  const double cx = rng.uniform(0.15, 0.85) * size;
  const double cy = rng.uniform(0.15, 0.85) * size;
  if (kind == 0) {  // rotated ellipse
    const double rx = r;
    const double ry = r * rng.uniform(0.5, 1.0);
    const double th = rng.uniform(0.0, std::numbers::pi);
    const double c = std::cos(th);
    const double s = std::sin(th);
    for (int y = 0; y < size; ++y) {
      for (int x = 0; x < size; ++x) {
        const double dx = x + 0.5 - cx;
        const double dy = y + 0.5 - cy;
        const double u = (c * dx + s * dy) / rx;
        const double v = (-s * dx + c * dy) / ry;
        if (u * u + v * v <= 1.0) m(y, x) = 1;
      }
    }
  } else if (kind == 1) {  // axis-aligned rectangle
    const double hw = r * rng.uniform(0.6, 1.0);
    const double hh = r * rng.uniform(0.6, 1.0);
    for (int y = 0; y < size; ++y) {
      for (int x = 0; x < size; ++x) {
        if (std::abs(x + 0.5 - cx) <= hw && std::abs(y + 0.5 - cy) <= hh) m(y, x) = 1;
      }
    }
  } else {  // convex polygon: hull of random points on a ring
    std::vector<Point> pts;
    const int n = rng.uniform_int(5, 8);
    for (int i = 0; i < n; ++i) {
      const double a = rng.uniform(0.0, 2.0 * std::numbers::pi);
      const double rr = r * rng.uniform(0.6, 1.0);
      pts.push_back({cx + rr * std::cos(a), cy + rr * std::sin(a)});
    }
    const auto hull = convex_hull(pts);
    if (hull.size() >= 3) {
      for (int y = 0; y < size; ++y) {
        for (int x = 0; x < size; ++x) {
          if (inside_convex(hull, {x + 0.5, y + 0.5})) m(y, x) = 1;
        }
      }
    }
  }
  return m;
}

double colour_distance(const Rgb& a, const Rgb& b) {
  double d = 0.0;
  for (int c = 0; c < 3; ++c) d = std::max(d, std::abs(a[c] - b[c]));
  return d;
}

// Low-saturation background endpoint: a mid grey with a small tint.
Rgb muted_colour(Rng& rng) {
  const double g = rng.uniform(0.3, 0.7);
  return {g + rng.uniform(-0.08, 0.08), g + rng.uniform(-0.08, 0.08), g + rng.uniform(-0.08, 0.08)};
}

// Saturated object colour from HSV with S, V in [0.7, 1].
Rgb vivid_colour(Rng& rng) {
  const double h = rng.uniform(0.0, 6.0);
  const double s = rng.uniform(0.7, 1.0);
  const double v = rng.uniform(0.7, 1.0);
  const double c = v * s;
  const double x = c * (1.0 - std::abs(std::fmod(h, 2.0) - 1.0));
  const double m = v - c;
  Rgb rgb{};
  switch (static_cast<int>(h)) {
    case 0: rgb = {c, x, 0}; break;
    case 1: rgb = {x, c, 0}; break;
    case 2: rgb = {0, c, x}; break;
    case 3: rgb = {0, x, c}; break;
    case 4: rgb = {x, 0, c}; break;
    default: rgb = {c, 0, x}; break;
  }
  for (auto& ch : rgb) ch += m;
  return rgb;
}

// Touching or overlapping an existing object (8-neighbourhood) counts as occlusion.
bool collides(const BinaryMap& shape, const BinaryMap& taken) {
  const int h = shape.height;
  const int w = shape.width;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (shape(y, x) == 0) continue;
      for (int dy = -1; dy <= 1; ++dy) {
        for (int dx = -1; dx <= 1; ++dx) {
          const int yy = y + dy;
          const int xx = x + dx;
          if (yy >= 0 && yy < h && xx >= 0 && xx < w && taken(yy, xx) != 0) return true;
        }
      }
    }
  }
  return false;
}

}  // namespace

Sample synth_sample(int size, std::uint64_t seed, const SynthOptions& opt) {
  if (size < 16 || size % 16 != 0) throw ConfigError("synthetic size must be a positive multiple of 16");
  Rng rng(seed);

  const Rgb bg0 = muted_colour(rng);
  const Rgb bg1 = muted_colour(rng);
  const double dir = rng.uniform(0.0, 2.0 * std::numbers::pi);

  BinaryMap gt;
  std::vector<std::pair<BinaryMap, Rgb>> objects;
  const auto total = static_cast<double>(size) * size;
  for (;;) {
    gt = BinaryMap(size, size, 0);
    objects.clear();
    const int wanted = rng.uniform_int(1, 3);
    for (int attempt = 0; attempt < 60 && static_cast<int>(objects.size()) < wanted; ++attempt) {
      BinaryMap shape = random_shape(size, rng);
      if (std::count(shape.data.begin(), shape.data.end(), 1) == 0 || collides(shape, gt)) continue;
      Rgb colour = vivid_colour(rng);
      for (int tries = 0; tries < 100; ++tries) {
        bool ok = true;
        for (const auto& [_, other] : objects) ok = ok && colour_distance(colour, other) >= 0.2;
        if (ok) break;
        colour = vivid_colour(rng);
      }
      for (std::size_t i = 0; i < gt.size(); ++i) gt.data[i] |= shape.data[i];
      objects.emplace_back(std::move(shape), colour);
    }
    const double frac = static_cast<double>(std::count(gt.data.begin(), gt.data.end(), 1)) / total;
    if (frac > opt.min_fg_fraction && frac < opt.max_fg_fraction) break;
  }

  Image img(tg::Shape{1, 3, size, size});
  const double ux = std::cos(dir);
  const double uy = std::sin(dir);
  const double half = 0.5 * size * (std::abs(ux) + std::abs(uy));
  for (int y = 0; y < size; ++y) {
    for (int x = 0; x < size; ++x) {
      const double proj = (x + 0.5 - 0.5 * size) * ux + (y + 0.5 - 0.5 * size) * uy;
      const double t = std::clamp(0.5 + 0.5 * proj / half, 0.0, 1.0);
      for (int c = 0; c < 3; ++c) img.at(0, c, y, x) = bg0[c] + (bg1[c] - bg0[c]) * t;
    }
  }
  for (const auto& [shape, colour] : objects) {
    for (int y = 0; y < size; ++y) {
      for (int x = 0; x < size; ++x) {
        if (shape(y, x) == 0) continue;
        for (int c = 0; c < 3; ++c) img.at(0, c, y, x) = colour[c];
      }
    }
  }
  for (auto& v : img.data()) v = std::clamp(v + opt.noise_sigma * rng.normal(), 0.0, 1.0);

  return Sample{std::move(img), std::move(gt), {}};
}

Manifest gen_synthetic(int count, int size, std::uint64_t seed, const std::filesystem::path& out_dir,
                       const SynthOptions& opt) {
  namespace fs = std::filesystem;
  if (count < 1) throw ConfigError("gen_synthetic: count must be >= 1");
  std::error_code ec;
  fs::create_directories(out_dir / "images", ec);
  fs::create_directories(out_dir / "masks", ec);
  if (ec || !fs::is_directory(out_dir / "images") || !fs::is_directory(out_dir / "masks")) {
    throw FormatError("cannot create output directory " + out_dir.string());
  }
  const int n_train = count * 8 / 10;
  const int n_val = count / 10;

  Manifest m;
  m.generator_seed = seed;
  m.root = out_dir;
  for (int i = 0; i < count; ++i) {
    char id[16];
    std::snprintf(id, sizeof id, "%05d", i);
    Sample s = synth_sample(size, mix_seed(seed, static_cast<std::uint64_t>(i)), opt);
    ManifestEntry e;
    e.id = id;
    e.image_path = "images/" + e.id + ".ppm";
    e.mask_path = "masks/" + e.id + ".pgm";
    e.split = i < n_train ? Split::train : (i < n_train + n_val ? Split::val : Split::test);
    save_ppm(out_dir / e.image_path, s.image);
    save_pgm(out_dir / e.mask_path, to_gray(s.gt));
    m.entries.push_back(std::move(e));
  }
  save_manifest(m, out_dir);
  return m;
}

}  // namespace rrn::data
