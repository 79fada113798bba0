#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "testutil.hpp"
#include "uwdepth/synthesis.hpp"

using namespace uwdepth;
using namespace uwdepth::synth;

namespace {

img::ImageU8 checkerboard(int h, int w, int cell) {
  img::ImageU8 im(h, w, 3);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      uint8_t v = ((x / cell + y / cell) % 2 == 0) ? 230 : 25;
      for (int c = 0; c < 3; ++c) im.at(y, x, c) = v;
    }
  return im;
}

// Mean magnitude of horizontal+vertical differences over a region.
double gradient_energy(const img::ImageU8& im, int x0, int x1) {
  double sum = 0.0;
  long count = 0;
  for (int y = 1; y < im.h - 1; ++y)
    for (int x = std::max(1, x0); x < std::min(im.w - 1, x1); ++x)
      for (int c = 0; c < 3; ++c) {
        sum += std::abs(static_cast<double>(im.at(y, x + 1, c)) - im.at(y, x - 1, c));
        sum += std::abs(static_cast<double>(im.at(y + 1, x, c)) - im.at(y - 1, x, c));
        ++count;
      }
  return sum / count;
}

}  // namespace

TEST_CASE("attenuate_red scales only the red channel by default") {
  img::ImageU8 im(2, 2, 3);
  for (int y = 0; y < 2; ++y)
    for (int x = 0; x < 2; ++x) {
      im.at(y, x, 0) = 200;
      im.at(y, x, 1) = 90;
      im.at(y, x, 2) = 45;
    }
  SynthParams p;
  p.gamma = 0.6;
  img::ImageU8 out = attenuate_red(im, p);
  CHECK(out.at(0, 0, 0) == 120);
  CHECK(out.at(0, 0, 1) == 90);
  CHECK(out.at(0, 0, 2) == 45);
}

TEST_CASE("attenuate_red near gamma=1 changes at most one level") {
  img::ImageU8 im(1, 256, 3);
  for (int x = 0; x < 256; ++x)
    for (int c = 0; c < 3; ++c) im.at(0, x, c) = static_cast<uint8_t>(x);
  SynthParams p;
  p.gamma = 0.999;
  img::ImageU8 out = attenuate_red(im, p);
  for (int x = 0; x < 256; ++x)
    for (int c = 0; c < 3; ++c)
      CHECK(std::abs(static_cast<int>(out.at(0, x, c)) - x) <= 1);
}

TEST_CASE("attenuate_red validates gamma") {
  img::ImageU8 im(1, 1, 3);
  SynthParams p;
  p.gamma = 1.0;
  CHECK_THROWS_AS(attenuate_red(im, p), ParamError);
  p.gamma = 0.0;
  CHECK_THROWS_AS(attenuate_red(im, p), ParamError);
}

TEST_CASE("gaussian_kernel properties") {
  CHECK(gaussian_kernel(1, 0.5)(0, 0) == doctest::Approx(1.0));
  for (int size : {3, 5, 9}) {
    for (double sigma : {0.4, 1.0, 2.5}) {
      Eigen::MatrixXd k = gaussian_kernel(size, sigma);
      CHECK(std::abs(k.sum() - 1.0) < 1e-15);
      // Symmetric under horizontal and vertical flips.
      for (int r = 0; r < size; ++r)
        for (int c = 0; c < size; ++c) {
          CHECK(k(r, c) == doctest::Approx(k(size - 1 - r, c)));
          CHECK(k(r, c) == doctest::Approx(k(r, size - 1 - c)));
        }
    }
  }
  CHECK_THROWS_AS(gaussian_kernel(2, 1.0), ParamError);
  CHECK_THROWS_AS(gaussian_kernel(3, 0.0), ParamError);
}

TEST_CASE("blur_kernel_size is odd, monotone, and 1 at contact") {
  SynthParams p;
  p.depth_step = 2.0;
  CHECK(blur_kernel_size(0.0, p) == 1);
  CHECK(blur_kernel_size(5.0, p) == 5);
  int prev = 1;
  for (double d = 0.0; d < 12.0; d += 0.37) {
    int k = blur_kernel_size(d, p);
    CHECK(k % 2 == 1);
    CHECK(k >= prev);
    prev = k;
  }
}

TEST_CASE("zero-band depth leaves only the attenuation") {
  img::ImageU8 im = checkerboard(12, 16, 2);
  img::DepthMap d(12, 16);
  for (double& v : d.v) v = 0.5;  // inside band 0 -> kernel size 1
  SynthParams p;
  img::ImageU8 out = synthesize_underwater(im, d, p, Border::replicate);
  img::ImageU8 expect = attenuate_red(im, p);
  CHECK(out.v == expect.v);
}

TEST_CASE("constant color stays constant under any depth") {
  img::ImageU8 im(10, 14, 3);
  for (auto& v : im.v) v = 180;
  img::DepthMap d(10, 14);
  for (int y = 0; y < 10; ++y)
    for (int x = 0; x < 14; ++x) d.at(y, x) = 1.0 + 0.5 * x;
  SynthParams p;
  img::ImageU8 out = synthesize_underwater(im, d, p, Border::replicate);
  for (int y = 0; y < 10; ++y)
    for (int x = 0; x < 14; ++x) {
      CHECK(out.at(y, x, 0) == out.at(0, 0, 0));
      CHECK(out.at(y, x, 1) == 180);
      CHECK(out.at(y, x, 2) == 180);
    }
}

TEST_CASE("two-band scene: near half sharper than far half") {
  int h = 32, w = 64;
  img::ImageU8 im = checkerboard(h, w, 2);
  img::DepthMap d(h, w);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) d.at(y, x) = x < w / 2 ? 1.0 : 9.0;
  SynthParams p;
  img::ImageU8 out = synthesize_underwater(im, d, p, Border::replicate);
  double near = gradient_energy(out, 2, w / 2 - 2);
  double far = gradient_energy(out, w / 2 + 2, w - 2);
  CHECK(near > far);
}

TEST_CASE("invalid-depth pixels copy the unblurred attenuated image") {
  int h = 8, w = 8;
  img::ImageU8 im = checkerboard(h, w, 1);
  img::DepthMap d(h, w);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) d.at(y, x) = (y == 3 && x == 3) ? 0.0 : 8.0;
  SynthParams p;
  img::ImageU8 out = synthesize_underwater(im, d, p, Border::replicate);
  img::ImageU8 att = attenuate_red(im, p);
  for (int c = 0; c < 3; ++c) CHECK(out.at(3, 3, c) == att.at(3, 3, c));
}

TEST_CASE("synthesis is deterministic") {
  img::ImageU8 im = checkerboard(16, 24, 3);
  img::DepthMap d(16, 24);
  for (int y = 0; y < 16; ++y)
    for (int x = 0; x < 24; ++x) d.at(y, x) = 0.3 * x + 0.1 * y;
  SynthParams p;
  img::ImageU8 a = synthesize_underwater(im, d, p, Border::wrap_x);
  img::ImageU8 b = synthesize_underwater(im, d, p, Border::wrap_x);
  CHECK(a.v == b.v);
}

TEST_CASE("misaligned pair raises ShapeError") {
  img::ImageU8 im(4, 4, 3);
  img::DepthMap d(4, 5);
  CHECK_THROWS_AS(synthesize_underwater(im, d, SynthParams{}, Border::replicate),
                  ShapeError);
}

TEST_CASE("red mean scales by gamma within rounding on a uniform band") {
  img::ImageU8 im = checkerboard(16, 16, 4);
  img::DepthMap d(16, 16);
  for (double& v : d.v) v = 4.5;  // one band for the whole image
  SynthParams p;
  img::ImageU8 out = synthesize_underwater(im, d, p, Border::replicate);
  double in_mean = 0.0, out_mean = 0.0;
  for (int y = 0; y < 16; ++y)
    for (int x = 0; x < 16; ++x) {
      in_mean += im.at(y, x, 0);
      out_mean += out.at(y, x, 0);
    }
  in_mean /= 256.0;
  out_mean /= 256.0;
  // Blur preserves the mean up to border replication effects + rounding.
  CHECK(std::abs(out_mean - p.gamma * in_mean) < 1.0);
}
