#include "uwdepth/image.hpp"

#include <algorithm>
#include <cmath>

namespace uwdepth::img {

ImageF64 to_f64(const ImageU8& im) {
  ImageF64 out(im.h, im.w, im.ch);
  for (int c = 0; c < im.ch; ++c)
    for (int y = 0; y < im.h; ++y)
      for (int x = 0; x < im.w; ++x)
        out.at(c, y, x) = im.at(y, x, c) / 255.0;
  return out;
}

ImageU8 to_u8(const ImageF64& im) {
  ImageU8 out(im.h, im.w, im.ch);
  for (int c = 0; c < im.ch; ++c)
    for (int y = 0; y < im.h; ++y)
      for (int x = 0; x < im.w; ++x) {
        double s = std::round(im.at(c, y, x) * 255.0);
        out.at(y, x, c) = static_cast<uint8_t>(std::clamp(s, 0.0, 255.0));
      }
  return out;
}

namespace {

struct Tap {
  int i0, i1;
  double f;
};

std::vector<Tap> taps(int in, int out) {
  std::vector<Tap> t(static_cast<size_t>(out));
  double scale = static_cast<double>(in) / out;
  for (int o = 0; o < out; ++o) {
    double src = std::clamp((o + 0.5) * scale - 0.5, 0.0, in - 1.0);
    int i0 = static_cast<int>(std::floor(src));
    t[static_cast<size_t>(o)] = {i0, std::min(i0 + 1, in - 1), src - i0};
  }
  return t;
}

}  // namespace

ImageF64 resize_bilinear(const ImageF64& im, int out_h, int out_w) {
  ImageF64 out(out_h, out_w, im.ch);
  auto ty = taps(im.h, out_h), tx = taps(im.w, out_w);
  for (int c = 0; c < im.ch; ++c)
    for (int y = 0; y < out_h; ++y) {
      const Tap& a = ty[static_cast<size_t>(y)];
      for (int x = 0; x < out_w; ++x) {
        const Tap& b = tx[static_cast<size_t>(x)];
        double top = (1 - b.f) * im.at(c, a.i0, b.i0) + b.f * im.at(c, a.i0, b.i1);
        double bot = (1 - b.f) * im.at(c, a.i1, b.i0) + b.f * im.at(c, a.i1, b.i1);
        out.at(c, y, x) = (1 - a.f) * top + a.f * bot;
      }
    }
  return out;
}

DepthMap resize_nearest(const DepthMap& d, int out_h, int out_w) {
  DepthMap out(out_h, out_w);
  double sy = static_cast<double>(d.h) / out_h;
  double sx = static_cast<double>(d.w) / out_w;
  for (int y = 0; y < out_h; ++y) {
    int iy = std::min(static_cast<int>((y + 0.5) * sy), d.h - 1);
    for (int x = 0; x < out_w; ++x) {
      int ix = std::min(static_cast<int>((x + 0.5) * sx), d.w - 1);
      out.at(y, x) = d.at(iy, ix);
    }
  }
  return out;
}

ImageF64 flip_horizontal(const ImageF64& im) {
  ImageF64 out(im.h, im.w, im.ch);
  for (int c = 0; c < im.ch; ++c)
    for (int y = 0; y < im.h; ++y)
      for (int x = 0; x < im.w; ++x)
        out.at(c, y, x) = im.at(c, y, im.w - 1 - x);
  return out;
}

DepthMap flip_horizontal(const DepthMap& d) {
  DepthMap out(d.h, d.w);
  for (int y = 0; y < d.h; ++y)
    for (int x = 0; x < d.w; ++x) out.at(y, x) = d.at(y, d.w - 1 - x);
  return out;
}

namespace {
int wrap_shift(int x, int w) {
  int r = x % w;
  return r < 0 ? r + w : r;
}
}  // namespace

ImageF64 roll_columns(const ImageF64& im, int shift) {
  ImageF64 out(im.h, im.w, im.ch);
  for (int c = 0; c < im.ch; ++c)
    for (int y = 0; y < im.h; ++y)
      for (int x = 0; x < im.w; ++x)
        out.at(c, y, wrap_shift(x + shift, im.w)) = im.at(c, y, x);
  return out;
}

DepthMap roll_columns(const DepthMap& d, int shift) {
  DepthMap out(d.h, d.w);
  for (int y = 0; y < d.h; ++y)
    for (int x = 0; x < d.w; ++x)
      out.at(y, wrap_shift(x + shift, d.w)) = d.at(y, x);
  return out;
}

}  // namespace uwdepth::img
