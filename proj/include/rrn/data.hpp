#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "rrn/map2d.hpp"
#include "rrn/rng.hpp"
#include "rrn/tensor.hpp"

namespace rrn::data {

/// Planar RGB image, shape (1, 3, H, W), values in [0, 1].
using Image = tg::Tensor<double>;

struct Sample {
  Image image;
  BinaryMap gt;
  std::string id;
};

// ---------------------------------------------------------------------------
// Netpbm IO. Binary P6 (RGB) and P5 (gray) with maxval 255 only. Values are
// v / 255 in memory and round(v * 255) on disk.

std::string encode_ppm(const Image& image);
std::string encode_pgm(const GrayMap& map);
Image decode_ppm(std::string_view bytes);
GrayMap decode_pgm(std::string_view bytes);

Image load_ppm(const std::filesystem::path& path);
GrayMap load_pgm(const std::filesystem::path& path);
void save_ppm(const std::filesystem::path& path, const Image& image);
void save_pgm(const std::filesystem::path& path, const GrayMap& map);

/// round(v * 255) / 255 with v clamped to [0, 1]: what a save/load cycle yields.
double quantize8(double v);

// ---------------------------------------------------------------------------
// Dataset manifest.

enum class Split { train, val, test };
std::string_view to_string(Split s);
Split parse_split(std::string_view s);

struct ManifestEntry {
  std::string id;
  std::string image_path;  // relative to the manifest directory
  std::string mask_path;
  Split split = Split::train;
};

struct Manifest {
  int version = 1;
  std::uint64_t generator_seed = 0;
  std::vector<ManifestEntry> entries;
  std::filesystem::path root;  // directory holding manifest.json; not serialised

  [[nodiscard]] std::vector<const ManifestEntry*> split(Split s) const;
};

inline constexpr std::string_view kManifestName = "manifest.json";

void save_manifest(const Manifest& m, const std::filesystem::path& dir);
/// Reads DIR/manifest.json; checks ids are unique and every file exists.
Manifest load_manifest(const std::filesystem::path& dir);

Sample load_sample(const Manifest& m, const ManifestEntry& e);
std::vector<Sample> load_split(const Manifest& m, Split s);

// ---------------------------------------------------------------------------
// Synthetic saliency data: smooth two-colour background gradient plus noise,
// with 1-3 non-overlapping solid shapes as the salient objects.

struct SynthOptions {
  double noise_sigma = 0.05;
  double min_fg_fraction = 0.02;
  double max_fg_fraction = 0.6;
};

/// One synthetic sample; deterministic in (size, seed).
Sample synth_sample(int size, std::uint64_t seed, const SynthOptions& opt = {});

/// Writes images/ (PPM), masks/ (PGM) and manifest.json into out_dir.
/// Entries are split 80/10/10 by index into train/val/test.
Manifest gen_synthetic(int count, int size, std::uint64_t seed, const std::filesystem::path& out_dir,
                       const SynthOptions& opt = {});

// ---------------------------------------------------------------------------
// Augmentation: mirror -> rescale -> rotate -> crop.

struct AugmentConfig {
  bool mirror = true;
  double scale_min = 0.75;
  double scale_max = 1.25;
  double rotation_min_deg = -10.0;
  double rotation_max_deg = 10.0;
  int crop = 64;

  void validate() const;
};

/// Randomly drawn geometric transform, applicable to any number of aligned
/// rasters of the source size.
struct GeometricTransform {
  int src_h = 0;
  int src_w = 0;
  bool flip = false;
  double scale = 1.0;
  double angle_deg = 0.0;
  int crop = 0;
  int crop_y = 0;  // offsets into the padded, scaled, rotated raster
  int crop_x = 0;
};

/// Draws flip, scale, angle and crop offsets in that order.
GeometricTransform sample_transform(int h, int w, const AugmentConfig& cfg, Rng& rng);

/// Bilinear resampling for images.
Image apply_transform(const GeometricTransform& t, const Image& image);
/// Nearest-neighbour resampling for binary rasters; stays binary.
BinaryMap apply_transform(const GeometricTransform& t, const BinaryMap& mask);

Sample augment(const Sample& sample, const AugmentConfig& cfg, Rng& rng);

Image hflip(const Image& image);
BinaryMap hflip(const BinaryMap& mask);

}  // namespace rrn::data
