#include "uwdepth/synthesis.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

namespace uwdepth::synth {

void SynthParams::validate() const {
  if (!(gamma > 0.0) || !(gamma < 1.0))
    throw ParamError("synthesis.gamma must lie in (0, 1), got " +
                     std::to_string(gamma));
  if (!(depth_step > 0.0))
    throw ParamError("synthesis.depth_step must be positive");
  if (!(sigma_scale > 0.0))
    throw ParamError("synthesis.sigma_scale must be positive");
  if (green_tint < 0.0 || blue_tint < 0.0)
    throw ParamError("synthesis tint factors must be non-negative");
}

img::ImageU8 attenuate_red(const img::ImageU8& rgb, const SynthParams& p) {
  p.validate();
  if (rgb.ch != 3) throw ShapeError("attenuate_red: expected RGB image");
  img::ImageU8 out(rgb.h, rgb.w, 3);
  double fac[3] = {p.gamma, p.green_tint, p.blue_tint};
  for (int y = 0; y < rgb.h; ++y)
    for (int x = 0; x < rgb.w; ++x)
      for (int c = 0; c < 3; ++c) {
        double v = std::round(fac[c] * rgb.at(y, x, c));
        out.at(y, x, c) = static_cast<uint8_t>(std::clamp(v, 0.0, 255.0));
      }
  return out;
}

Eigen::MatrixXd gaussian_kernel(int size, double sigma) {
  if (size < 1 || size % 2 == 0)
    throw ParamError("gaussian_kernel: size must be odd and >= 1");
  if (!(sigma > 0.0)) throw ParamError("gaussian_kernel: sigma must be > 0");
  Eigen::MatrixXd k(size, size);
  int half = size / 2;
  for (int r = 0; r < size; ++r)
    for (int c = 0; c < size; ++c) {
      double dy = r - half, dx = c - half;
      k(r, c) = std::exp(-(dx * dx + dy * dy) / (2.0 * sigma * sigma));
    }
  k /= k.sum();
  return k;
}

int blur_kernel_size(double depth_m, const SynthParams& p) {
  if (depth_m < 0.0) depth_m = 0.0;
  return 2 * static_cast<int>(std::floor(depth_m / p.depth_step)) + 1;
}

namespace {

// Normalized 1-d Gaussian; the 2-d kernel separates into its outer product.
std::vector<double> gaussian_1d(int size, double sigma) {
  std::vector<double> k(static_cast<size_t>(size));
  int half = size / 2;
  double sum = 0.0;
  for (int i = 0; i < size; ++i) {
    double d = i - half;
    k[static_cast<size_t>(i)] = std::exp(-d * d / (2.0 * sigma * sigma));
    sum += k[static_cast<size_t>(i)];
  }
  for (double& v : k) v /= sum;
  return k;
}

int mirror_x(int x, int w, Border border) {
  if (border == Border::wrap_x) {
    int r = x % w;
    return r < 0 ? r + w : r;
  }
  return std::clamp(x, 0, w - 1);
}

// Separable blur of one channel plane, doubles in, doubles out.
void blur_plane(const std::vector<double>& src, int h, int w,
                const std::vector<double>& k1, Border border,
                std::vector<double>& tmp, std::vector<double>& dst) {
  int half = static_cast<int>(k1.size()) / 2;
  // Horizontal pass.
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      double acc = 0.0;
      for (int t = -half; t <= half; ++t)
        acc += k1[static_cast<size_t>(t + half)] *
               src[static_cast<size_t>(y) * w + mirror_x(x + t, w, border)];
      tmp[static_cast<size_t>(y) * w + x] = acc;
    }
  // Vertical pass, always edge-replicated.
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      double acc = 0.0;
      for (int t = -half; t <= half; ++t) {
        int yy = std::clamp(y + t, 0, h - 1);
        acc += k1[static_cast<size_t>(t + half)] *
               tmp[static_cast<size_t>(yy) * w + x];
      }
      dst[static_cast<size_t>(y) * w + x] = acc;
    }
}

}  // namespace

img::ImageU8 synthesize_underwater(const img::ImageU8& rgb,
                                   const img::DepthMap& depth,
                                   const SynthParams& p, Border border) {
  p.validate();
  if (rgb.h != depth.h || rgb.w != depth.w)
    throw ShapeError("synthesize_underwater: RGB and depth sizes differ");

  img::ImageU8 attenuated = attenuate_red(rgb, p);
  int h = rgb.h, w = rgb.w;
  size_t npix = static_cast<size_t>(h) * w;

  // Depth band per pixel; -1 marks invalid depth.
  std::vector<int> band(npix, -1);
  std::set<int> occupied;
  for (size_t i = 0; i < npix; ++i) {
    double d = depth.v[i];
    if (d > 0.0) {
      band[i] = static_cast<int>(std::floor(d / p.depth_step));
      occupied.insert(band[i]);
    }
  }

  // One full-image blur per occupied band, composited per pixel.
  std::vector<std::vector<double>> planes(3, std::vector<double>(npix));
  for (int c = 0; c < 3; ++c)
    for (size_t i = 0; i < npix; ++i)
      planes[static_cast<size_t>(c)][i] = attenuated.v[i * 3 + c];

  img::ImageU8 out = attenuated;  // band 0 and invalid pixels stay sharp
  std::vector<double> tmp(npix), blurred(npix);
  for (int b : occupied) {
    int size = 2 * b + 1;
    if (size <= 1) continue;
    double sigma = p.sigma_scale * (size - 1) / 2.0;
    std::vector<double> k1 = gaussian_1d(size, sigma);
    for (int c = 0; c < 3; ++c) {
      blur_plane(planes[static_cast<size_t>(c)], h, w, k1, border, tmp,
                 blurred);
      for (size_t i = 0; i < npix; ++i)
        if (band[i] == b)
          out.v[i * 3 + c] = static_cast<uint8_t>(
              std::clamp(std::round(blurred[i]), 0.0, 255.0));
    }
  }
  return out;
}

}  // namespace uwdepth::synth
