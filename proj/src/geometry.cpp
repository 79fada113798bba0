#include "uwdepth/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <map>
#include <mutex>
#include <ostream>
#include <tuple>

namespace uwdepth::geo {

KernelSpec KernelSpec::for_image(int n, int width, int height) {
  return KernelSpec{n, 2.0 * kPi / width, kPi / height};
}

void KernelSpec::validate() const {
  if (n < 1 || n % 2 == 0)
    throw ParamError("KernelSpec: n must be odd and >= 1, got " +
                     std::to_string(n));
  if (!(delta_theta > 0.0) || !(delta_theta < kPi / 2))
    throw ParamError("KernelSpec: delta_theta must lie in (0, pi/2)");
  if (!(delta_phi > 0.0) || !(delta_phi < kPi / 2))
    throw ParamError("KernelSpec: delta_phi must lie in (0, pi/2)");
}

double wrap_longitude(double theta) {
  double t = std::fmod(theta + kPi, 2.0 * kPi);
  if (t < 0.0) t += 2.0 * kPi;
  return t - kPi;
}

double wrap_u(double u, int width) {
  double w = static_cast<double>(width);
  double r = std::fmod(u, w);
  if (r < 0.0) r += w;
  if (r >= w) r = 0.0;  // fmod can land exactly on w after the correction
  return r;
}

double angular_distance(const LonLat& a, const LonLat& b) {
  double c = std::sin(a.phi) * std::sin(b.phi) +
             std::cos(a.phi) * std::cos(b.phi) * std::cos(b.theta - a.theta);
  return std::acos(std::clamp(c, -1.0, 1.0));
}

LonLat pixel_to_lonlat(const PixelCoord& p, int width, int height) {
  double phi = (height / 2.0 - p.v) * (kPi / height);
  double theta = (p.u - width / 2.0) * (2.0 * kPi / width);
  return LonLat{phi, wrap_longitude(theta)};
}

PixelCoord lonlat_to_pixel(const LonLat& s, int width, int height) {
  double u = width / 2.0 + s.theta * (width / (2.0 * kPi));
  double v = height / 2.0 - s.phi * (height / kPi);
  return PixelCoord{u, v};
}

TangentPoint gnomonic_forward(const LonLat& center, const LonLat& point) {
  double sp1 = std::sin(center.phi), cp1 = std::cos(center.phi);
  double sp = std::sin(point.phi), cp = std::cos(point.phi);
  double dt = point.theta - center.theta;
  double cdt = std::cos(dt), sdt = std::sin(dt);
  double cos_c = sp1 * sp + cp1 * cp * cdt;
  if (cos_c <= 0.0)
    throw DomainError("gnomonic_forward: point on or beyond tangent horizon");
  return TangentPoint{cp * sdt / cos_c, (cp1 * sp - sp1 * cp * cdt) / cos_c};
}

LonLat gnomonic_inverse(const LonLat& center, const TangentPoint& t) {
  // Closed form of the textbook rho/atan(rho) formulation:
  //   phi   = asin((sin phi1 + y cos phi1) / sqrt(1 + x^2 + y^2))
  //   theta = theta0 + atan2(x, cos phi1 - y sin phi1)
  // The rho -> 0 limit is the tangent point itself.
  double sp1 = std::sin(center.phi), cp1 = std::cos(center.phi);
  double denom = std::sqrt(1.0 + t.x * t.x + t.y * t.y);
  double s = std::clamp((sp1 + t.y * cp1) / denom, -1.0, 1.0);
  double phi = std::asin(s);
  double theta = center.theta + std::atan2(t.x, cp1 - t.y * sp1);
  return LonLat{phi, wrap_longitude(theta)};
}

KernelOffsets::KernelOffsets(int n, std::vector<TangentPoint> taps)
    : n_(n), taps_(std::move(taps)) {}

const TangentPoint& KernelOffsets::at_signed(int i, int j) const {
  int half = (n_ - 1) / 2;
  return at(half - j, i + half);
}

KernelOffsets kernel_offsets(const KernelSpec& k) {
  k.validate();
  int half = (k.n - 1) / 2;
  if (half * k.delta_theta >= kPi / 2 || half * k.delta_phi >= kPi / 2)
    throw DomainError("kernel_offsets: kernel extent reaches the horizon");
  auto sign = [](int v) { return v > 0 ? 1.0 : (v < 0 ? -1.0 : 0.0); };
  std::vector<TangentPoint> taps(static_cast<size_t>(k.n) * k.n);
  for (int r = 0; r < k.n; ++r) {
    int j = half - r;
    for (int c = 0; c < k.n; ++c) {
      int i = c - half;
      double x = sign(i) * std::tan(std::abs(i) * k.delta_theta);
      double y = sign(j) * std::tan(std::abs(j) * k.delta_phi) /
                 std::cos(std::abs(i) * k.delta_theta);
      taps[static_cast<size_t>(r) * k.n + c] = TangentPoint{x, y};
    }
  }
  return KernelOffsets(k.n, std::move(taps));
}

SamplingGrid build_sampling_grid(int width, int height, const KernelSpec& k,
                                 int stride) {
  if (stride < 1) throw ParamError("build_sampling_grid: stride must be >= 1");
  if (width < k.n || height < k.n)
    throw ParamError("build_sampling_grid: image smaller than kernel");
  KernelOffsets offsets = kernel_offsets(k);

  SamplingGrid g;
  g.in_w = width;
  g.in_h = height;
  g.n = k.n;
  g.stride = stride;
  g.out_w = (width + stride - 1) / stride;
  g.out_h = (height + stride - 1) / stride;
  int taps = k.n * k.n;
  g.coords.resize(static_cast<size_t>(g.out_h) * g.out_w * taps);

  // Center of the stride window: input coordinate stride*out + (stride-1)/2.
  double center_off = (stride - 1) / 2.0;
  std::vector<PixelCoord> row_base(taps);
  for (int row = 0; row < g.out_h; ++row) {
    double v_c = stride * row + center_off;
    LonLat center = pixel_to_lonlat(PixelCoord{center_off, v_c}, width, height);
    for (int t = 0; t < taps; ++t) {
      LonLat s = gnomonic_inverse(center, offsets.taps()[t]);
      PixelCoord p = lonlat_to_pixel(s, width, height);
      row_base[t] = PixelCoord{p.u, std::clamp(p.v, 0.0, height - 1.0)};
    }
    // Longitude shifts are exact column translations: share the row result.
    for (int col = 0; col < g.out_w; ++col) {
      size_t base = (static_cast<size_t>(row) * g.out_w + col) * taps;
      double du = static_cast<double>(stride) * col;
      for (int t = 0; t < taps; ++t) {
        g.coords[base + t] =
            PixelCoord{wrap_u(row_base[t].u + du, width), row_base[t].v};
      }
    }
  }
  return g;
}

namespace {

struct GridKey {
  int w, h, n, stride;
  uint64_t dtheta_bits, dphi_bits;
  auto tie() const { return std::tie(w, h, n, stride, dtheta_bits, dphi_bits); }
  bool operator<(const GridKey& o) const { return tie() < o.tie(); }
};

uint64_t bits_of(double d) {
  uint64_t b;
  std::memcpy(&b, &d, sizeof b);
  return b;
}

}  // namespace

std::shared_ptr<const SamplingGrid> cached_grid(int width, int height,
                                                const KernelSpec& k,
                                                int stride) {
  static std::mutex mu;
  static std::map<GridKey, std::shared_ptr<const SamplingGrid>> cache;
  GridKey key{width, height, k.n, stride, bits_of(k.delta_theta),
              bits_of(k.delta_phi)};
  std::lock_guard<std::mutex> lock(mu);
  auto it = cache.find(key);
  if (it != cache.end()) return it->second;
  auto grid = std::make_shared<const SamplingGrid>(
      build_sampling_grid(width, height, k, stride));
  cache.emplace(key, grid);
  return grid;
}

void write_grid(const SamplingGrid& grid, std::ostream& os) {
  int taps = grid.n * grid.n;
  char buf[64];
  for (int row = 0; row < grid.out_h; ++row) {
    for (int col = 0; col < grid.out_w; ++col) {
      os << row << ' ' << col;
      for (int t = 0; t < taps; ++t) {
        const PixelCoord& p = grid.at(row, col, t);
        std::snprintf(buf, sizeof buf, " %.9f %.9f", p.u, p.v);
        os << buf;
      }
      os << '\n';
    }
  }
}

}  // namespace uwdepth::geo
