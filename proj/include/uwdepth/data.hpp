#pragma once

#include <array>
#include <filesystem>
#include <string>
#include <vector>

#include "uwdepth/image.hpp"
#include "uwdepth/rng.hpp"

namespace uwdepth::data {

enum class Camera { perspective, equirect };

/// Aligned RGB + metric depth with camera metadata. RGB lives in planar
/// doubles: raw [0,1] after loading, network units after normalization.
struct ImagePair {
  img::ImageF64 rgb;
  img::DepthMap depth;
  Camera camera = Camera::perspective;
  double fov_x = 0.0;  // radians, perspective only
  std::string id;
};

struct ManifestRecord {
  std::string id;
  std::string rgb_path;
  std::string depth_path;
  Camera camera = Camera::perspective;
  double fov_x = 0.0;  // perspective meta
  int w = 0, h = 0;    // equirect meta when known
  std::string split = "train";
};

/// Line-oriented text manifest, one record per line:
///   id rgb_path depth_path persp <fov_rad> <split>
///   id rgb_path depth_path equirect <WxH|-> <split>
/// Relative paths resolve against the manifest's directory.
struct Manifest {
  std::filesystem::path base_dir;
  std::vector<ManifestRecord> records;
};

Manifest read_manifest(const std::filesystem::path& path);
void write_manifest(const Manifest& m, const std::filesystem::path& path);

/// Loads and validates one pair: PNG RGB, depth by extension (16-bit PNG
/// millimeters or PFM meters). Throws IoError / FormatError /
/// AlignmentError.
ImagePair load_pair(const Manifest& m, const ManifestRecord& rec);

struct Dataset {
  std::vector<ImagePair> pairs;
};

/// All records whose split matches (empty = all).
Dataset load_split(const Manifest& m, const std::string& split);

struct AugmentConfig {
  double scale_min = 1.0;
  double scale_max = 1.5;
  /// Perspective: image rotation range in degrees. Equirectangular: planar
  /// rotation is not a sphere isometry, so the same range drives a
  /// longitude roll of round(deg/360 * W) columns instead.
  double rotation_deg = 5.0;
  double flip_prob = 0.5;
  double jitter = 0.1;  // per-channel gain range [1-j, 1+j]
  std::array<double, 3> norm_mean{0.5, 0.5, 0.5};
  std::array<double, 3> norm_std{0.5, 0.5, 0.5};
  int crop_h = 0;  // 0 = no crop
  int crop_w = 0;

  void validate() const;
  /// Degenerate config: every range collapsed, normalization mean 0 std 1.
  static AugmentConfig identity();
};

/// Scale, rotation/roll, flip, color jitter, normalization, center crop, in
/// that order. Depth follows the spatial transforms; perspective scale s
/// divides depth values by s. Deterministic given (pair, cfg, rng state).
ImagePair augment(const ImagePair& pair, const AugmentConfig& cfg, Rng& rng);

/// Symmetric crop with floor bias toward the top-left on odd remainders.
ImagePair center_crop(const ImagePair& pair, int h, int w);

/// Resamples a perspective pair so fov_x / W matches target_app (rad/pixel,
/// small-angle approximation at the image center). Bilinear RGB, nearest
/// depth; depth values unchanged.
ImagePair rescale_angle_per_pixel(const ImagePair& pair, double target_app);

}  // namespace uwdepth::data
