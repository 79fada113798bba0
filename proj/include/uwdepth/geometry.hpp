#pragma once

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <vector>

#include "uwdepth/errors.hpp"

namespace uwdepth::geo {

inline constexpr double kPi = 3.14159265358979323846;

/// Point on the unit sphere: latitude phi in [-pi/2, pi/2], longitude theta
/// in [-pi, pi).
struct LonLat {
  double phi = 0.0;
  double theta = 0.0;
};

/// Continuous pixel position on an equirectangular image. u grows with
/// longitude, v grows downward (v = 0 is the north-pole row).
struct PixelCoord {
  double u = 0.0;
  double v = 0.0;
};

/// Point on the tangent plane of the sphere (gnomonic image plane).
struct TangentPoint {
  double x = 0.0;
  double y = 0.0;
};

/// Square kernel geometry: side length n (odd) and the angular step covered
/// by one kernel column / row.
struct KernelSpec {
  int n = 3;
  double delta_theta = 0.0;
  double delta_phi = 0.0;

  /// One-source-pixel-per-step spec for a W x H equirectangular image:
  /// delta_theta = 2*pi/W, delta_phi = pi/H. At the equator this reproduces
  /// the ordinary integer pixel neighborhood.
  static KernelSpec for_image(int n, int width, int height);

  /// Throws ParamError unless n is odd and >= 1 and both deltas lie in
  /// (0, pi/2).
  void validate() const;
};

/// Wrap a longitude into [-pi, pi).
double wrap_longitude(double theta);

/// Wrap a horizontal pixel coordinate into [0, width).
double wrap_u(double u, int width);

/// Great-circle angular distance between two points.
double angular_distance(const LonLat& a, const LonLat& b);

/// Equirectangular pixel -> sphere: phi = (H/2 - v) * pi/H,
/// theta = (u - W/2) * 2*pi/W (then wrapped). Total on real inputs.
LonLat pixel_to_lonlat(const PixelCoord& p, int width, int height);

/// Exact algebraic inverse of pixel_to_lonlat (no wrapping applied).
PixelCoord lonlat_to_pixel(const LonLat& s, int width, int height);

/// Gnomonic projection of `point` onto the plane tangent at `center`.
/// Throws DomainError when the point lies on or beyond the tangent horizon
/// (cos of the angular distance <= 0).
TangentPoint gnomonic_forward(const LonLat& center, const LonLat& point);

/// Inverse gnomonic projection. Defined for every finite tangent point;
/// pole crossings come out with phi still in range and theta wrapped.
LonLat gnomonic_inverse(const LonLat& center, const TangentPoint& t);

/// Tangent-plane offsets of an n x n kernel centered at the tangent point,
/// stored in image order: row r runs top to bottom, column c left to right.
/// The offset at (r, c) corresponds to signed indices i = c - (n-1)/2
/// (longitude direction) and j = (n-1)/2 - r (latitude direction):
///   x = sign(i) * tan(|i| * delta_theta)
///   y = sign(j) * tan(|j| * delta_phi) / cos(|i| * delta_theta)
class KernelOffsets {
 public:
  KernelOffsets(int n, std::vector<TangentPoint> taps);

  int n() const { return n_; }
  /// Image-order access, r/c in [0, n).
  const TangentPoint& at(int r, int c) const { return taps_[r * n_ + c]; }
  /// Signed-index access, i/j in [-(n-1)/2, (n-1)/2].
  const TangentPoint& at_signed(int i, int j) const;
  const std::vector<TangentPoint>& taps() const { return taps_; }

 private:
  int n_;
  std::vector<TangentPoint> taps_;
};

/// Throws DomainError when any |i|*delta reaches pi/2.
KernelOffsets kernel_offsets(const KernelSpec& k);

/// Precomputed fractional source coordinates for every output pixel of a
/// spherical convolution / pooling layer. Coordinates are stored wrapped
/// (u in [0, W)) and clamped (v in [0, H-1]); within one output row the
/// n^2 taps of different columns differ only by a constant horizontal
/// shift mod W, so construction is done once per row.
struct SamplingGrid {
  int in_w = 0;
  int in_h = 0;
  int out_w = 0;
  int out_h = 0;
  int n = 0;
  int stride = 1;
  /// out_h * out_w * n^2 coordinates; tap index t = r*n + c in image order.
  std::vector<PixelCoord> coords;

  const PixelCoord& at(int row, int col, int tap) const {
    return coords[(static_cast<size_t>(row) * out_w + col) * (n * n) + tap];
  }
};

/// Builds the grid: each output pixel center (stride*out + (stride-1)/2) is
/// mapped to the sphere, the kernel offsets are pulled back through the
/// inverse gnomonic projection and converted to pixel coordinates.
SamplingGrid build_sampling_grid(int width, int height, const KernelSpec& k,
                                 int stride);

/// Process-wide cache keyed by (W, H, kernel, stride). Thread-safe; the
/// returned grid is immutable and shareable.
std::shared_ptr<const SamplingGrid> cached_grid(int width, int height,
                                                const KernelSpec& k,
                                                int stride);

/// Text dump, one record per output pixel: "row col u0 v0 u1 v1 ...",
/// 9 decimal digits.
void write_grid(const SamplingGrid& grid, std::ostream& os);

}  // namespace uwdepth::geo
