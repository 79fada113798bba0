#pragma once

#include <cstdint>
#include <vector>

#include "uwdepth/errors.hpp"

namespace uwdepth::img {

/// 8-bit image, interleaved row-major (file-facing layout).
struct ImageU8 {
  int h = 0, w = 0, ch = 0;
  std::vector<uint8_t> v;

  ImageU8() = default;
  ImageU8(int h_, int w_, int ch_)
      : h(h_), w(w_), ch(ch_),
        v(static_cast<size_t>(h_) * w_ * ch_, 0) {}
  uint8_t& at(int y, int x, int c) {
    return v[(static_cast<size_t>(y) * w + x) * ch + c];
  }
  uint8_t at(int y, int x, int c) const {
    return v[(static_cast<size_t>(y) * w + x) * ch + c];
  }
};

/// Double image, planar channel-major (tensor-facing layout). Values are
/// raw [0,1] after loading; augmentation may map them to network units.
struct ImageF64 {
  int h = 0, w = 0, ch = 0;
  std::vector<double> v;

  ImageF64() = default;
  ImageF64(int h_, int w_, int ch_)
      : h(h_), w(w_), ch(ch_),
        v(static_cast<size_t>(h_) * w_ * ch_, 0.0) {}
  double& at(int c, int y, int x) {
    return v[(static_cast<size_t>(c) * h + y) * w + x];
  }
  double at(int c, int y, int x) const {
    return v[(static_cast<size_t>(c) * h + y) * w + x];
  }
  double* plane(int c) { return v.data() + static_cast<size_t>(c) * h * w; }
  const double* plane(int c) const {
    return v.data() + static_cast<size_t>(c) * h * w;
  }
};

/// Metric depth in meters; 0 marks an invalid pixel.
struct DepthMap {
  int h = 0, w = 0;
  std::vector<double> v;

  DepthMap() = default;
  DepthMap(int h_, int w_) : h(h_), w(w_), v(static_cast<size_t>(h_) * w_, 0.0) {}
  double& at(int y, int x) { return v[static_cast<size_t>(y) * w + x]; }
  double at(int y, int x) const { return v[static_cast<size_t>(y) * w + x]; }
};

/// u8 -> [0,1] planar.
ImageF64 to_f64(const ImageU8& im);
/// [0,1] planar -> u8, round half up, clamped.
ImageU8 to_u8(const ImageF64& im);

ImageF64 resize_bilinear(const ImageF64& im, int out_h, int out_w);
DepthMap resize_nearest(const DepthMap& d, int out_h, int out_w);

/// Mirror columns (longitude negation on equirectangular images).
ImageF64 flip_horizontal(const ImageF64& im);
DepthMap flip_horizontal(const DepthMap& d);

/// Cyclic column shift (positive shifts move content right).
ImageF64 roll_columns(const ImageF64& im, int shift);
DepthMap roll_columns(const DepthMap& d, int shift);

}  // namespace uwdepth::img
