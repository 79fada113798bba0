#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <sstream>

#include "uwdepth/geometry.hpp"
#include "uwdepth/rng.hpp"

using namespace uwdepth;
using namespace uwdepth::geo;

TEST_CASE("pixel_to_lonlat hits the documented anchors") {
  // Center of the image is the equator / prime meridian.
  LonLat c = pixel_to_lonlat({180.0, 90.0}, 360, 180);
  CHECK(c.phi == doctest::Approx(0.0).epsilon(1e-15));
  CHECK(c.theta == doctest::Approx(0.0).epsilon(1e-15));

  LonLat corner = pixel_to_lonlat({0.0, 0.0}, 360, 180);
  CHECK(corner.phi == doctest::Approx(kPi / 2));
  CHECK(corner.theta == doctest::Approx(-kPi));

  LonLat p = pixel_to_lonlat({270.0, 45.0}, 360, 180);
  CHECK(p.phi == doctest::Approx(kPi / 4).epsilon(1e-14));
  CHECK(p.theta == doctest::Approx(kPi / 2).epsilon(1e-14));
}

TEST_CASE("lonlat_to_pixel inverts the anchors") {
  PixelCoord c = lonlat_to_pixel({0.0, 0.0}, 360, 180);
  CHECK(c.u == doctest::Approx(180.0));
  CHECK(c.v == doctest::Approx(90.0));

  PixelCoord corner = lonlat_to_pixel({kPi / 2, -kPi}, 360, 180);
  CHECK(corner.u == doctest::Approx(0.0));
  CHECK(corner.v == doctest::Approx(0.0));
}

TEST_CASE("pixel<->lonlat round-trips to 1e-12") {
  Rng rng(7);
  int W = 512, H = 256;
  for (int i = 0; i < 1000; ++i) {
    PixelCoord p{rng.uniform(0.0, W), rng.uniform(0.0, static_cast<double>(H))};
    PixelCoord q = lonlat_to_pixel(pixel_to_lonlat(p, W, H), W, H);
    CHECK(std::abs(q.u - p.u) < 1e-12);
    CHECK(std::abs(q.v - p.v) < 1e-12);
  }
}

TEST_CASE("gnomonic_forward basics") {
  TangentPoint origin = gnomonic_forward({0.0, 0.0}, {0.0, 0.0});
  CHECK(origin.x == 0.0);
  CHECK(origin.y == 0.0);

  // At an equatorial center, x is tan(theta).
  TangentPoint t = gnomonic_forward({0.0, 0.0}, {0.0, 0.1});
  CHECK(t.x == doctest::Approx(std::tan(0.1)).epsilon(1e-14));
  CHECK(t.y == doctest::Approx(0.0));

  CHECK_THROWS_AS(gnomonic_forward({0.0, 0.0}, {0.0, 1.6}), DomainError);
  CHECK_THROWS_AS(gnomonic_forward({0.0, 0.0}, {0.0, 3.0}), DomainError);
}

TEST_CASE("gnomonic_inverse closed forms") {
  LonLat at_origin = gnomonic_inverse({0.0, 0.0}, {0.0, 0.0});
  CHECK(at_origin.phi == 0.0);
  CHECK(at_origin.theta == 0.0);

  // phi = atan(y) at an equatorial center.
  LonLat p = gnomonic_inverse({0.0, 0.0}, {0.0, std::tan(0.3)});
  CHECK(p.phi == doctest::Approx(0.3).epsilon(1e-14));
  CHECK(p.theta == doctest::Approx(0.0));
}

TEST_CASE("gnomonic round-trip to 1e-10 within 1.2 rad") {
  Rng rng(11);
  int checked = 0;
  while (checked < 1000) {
    LonLat center{rng.uniform(-kPi / 2, kPi / 2), rng.uniform(-kPi, kPi)};
    LonLat point{rng.uniform(-kPi / 2, kPi / 2), rng.uniform(-kPi, kPi)};
    if (angular_distance(center, point) >= 1.2) continue;
    ++checked;
    LonLat back = gnomonic_inverse(center, gnomonic_forward(center, point));
    CHECK(std::abs(back.phi - point.phi) < 1e-10);
    double dt = wrap_longitude(back.theta - point.theta);
    CHECK(std::abs(dt) < 1e-10);
  }
}

TEST_CASE("gnomonic_inverse crosses the pole transparently") {
  // A tall tangent offset from a near-polar center lands on the far side.
  LonLat center{1.4, 0.0};
  LonLat p = gnomonic_inverse(center, {0.0, 10.0});
  CHECK(p.phi <= kPi / 2);
  CHECK(p.phi >= -kPi / 2);
  CHECK(std::abs(wrap_longitude(p.theta - kPi)) < 1e-9);  // flipped longitude
}

TEST_CASE("kernel_offsets matches the closed forms") {
  KernelSpec one{1, 0.1, 0.1};
  KernelOffsets k1 = kernel_offsets(one);
  CHECK(k1.at(0, 0).x == 0.0);
  CHECK(k1.at(0, 0).y == 0.0);

  KernelSpec spec{3, 0.1, 0.1};
  KernelOffsets k = kernel_offsets(spec);
  CHECK(k.at_signed(1, 0).x == doctest::Approx(std::tan(0.1)).epsilon(1e-14));
  CHECK(k.at_signed(1, 0).y == doctest::Approx(0.0));
  // y picks up the 1/cos factor off the central column.
  CHECK(k.at_signed(1, 1).y ==
        doctest::Approx(std::tan(0.1) / std::cos(0.1)).epsilon(1e-14));
}

TEST_CASE("kernel_offsets equals gnomonic_forward at the equator") {
  for (int n : {1, 3, 5}) {
    for (double d : {0.01, 0.1, 0.5}) {
      KernelSpec spec{n, d, d};
      KernelOffsets k = kernel_offsets(spec);
      int half = (n - 1) / 2;
      for (int i = -half; i <= half; ++i)
        for (int j = -half; j <= half; ++j) {
          TangentPoint ref =
              gnomonic_forward({0.0, 0.0}, {j * d, i * d});
          CHECK(std::abs(k.at_signed(i, j).x - ref.x) < 1e-12);
          CHECK(std::abs(k.at_signed(i, j).y - ref.y) < 1e-12);
        }
    }
  }
}

TEST_CASE("kernel_offsets symmetry") {
  KernelSpec spec{5, 0.07, 0.11};
  KernelOffsets k = kernel_offsets(spec);
  for (int i = -2; i <= 2; ++i)
    for (int j = -2; j <= 2; ++j) {
      CHECK(k.at_signed(-i, j).x == doctest::Approx(-k.at_signed(i, j).x));
      CHECK(k.at_signed(i, -j).y == doctest::Approx(-k.at_signed(i, j).y));
    }
}

TEST_CASE("kernel_offsets rejects kernels reaching the horizon") {
  CHECK_THROWS_AS(kernel_offsets(KernelSpec{3, 1.6, 0.1}), ParamError);
  CHECK_THROWS_AS(kernel_offsets(KernelSpec{5, 0.8, 0.1}), DomainError);
  CHECK_THROWS_AS(kernel_offsets(KernelSpec{2, 0.1, 0.1}), ParamError);
}

TEST_CASE("1x1 sampling grid is the identity pixel map") {
  KernelSpec spec = KernelSpec::for_image(1, 8, 4);
  SamplingGrid g = build_sampling_grid(8, 4, spec, 1);
  CHECK(g.out_w == 8);
  CHECK(g.out_h == 4);
  for (int row = 0; row < 4; ++row)
    for (int col = 0; col < 8; ++col) {
      const PixelCoord& p = g.at(row, col, 0);
      CHECK(p.u == doctest::Approx(col).epsilon(1e-12));
      CHECK(p.v == doctest::Approx(row).epsilon(1e-12));
    }
}

TEST_CASE("equator row of the default grid lands on integer neighbors") {
  int W = 360, H = 180;
  KernelSpec spec = KernelSpec::for_image(3, W, H);
  SamplingGrid g = build_sampling_grid(W, H, spec, 1);
  int row = H / 2;  // phi = 0 row under Eq. 1
  int col = W / 2;
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c) {
      const PixelCoord& p = g.at(row, col, r * 3 + c);
      CHECK(std::abs(p.u - (col + c - 1)) < 1e-9);
      CHECK(std::abs(p.v - (row + r - 1)) < 1e-9);
    }
}

TEST_CASE("grid rows are column translations of each other") {
  int W = 64, H = 32;
  KernelSpec spec = KernelSpec::for_image(3, W, H);
  SamplingGrid g = build_sampling_grid(W, H, spec, 1);
  // Independent oracle: recompute one arbitrary column from scratch with
  // the raw geometry operations and compare against the shared-row grid.
  KernelOffsets offs = kernel_offsets(spec);
  for (int row : {0, 5, 16, 31}) {
    for (int col : {3, 17, 63}) {
      LonLat center = pixel_to_lonlat({static_cast<double>(col),
                                       static_cast<double>(row)}, W, H);
      for (int t = 0; t < 9; ++t) {
        LonLat s = gnomonic_inverse(center, offs.taps()[t]);
        PixelCoord expect = lonlat_to_pixel(s, W, H);
        const PixelCoord& got = g.at(row, col, t);
        CHECK(std::abs(got.u - wrap_u(expect.u, W)) < 1e-9);
        CHECK(std::abs(got.v - std::clamp(expect.v, 0.0, H - 1.0)) < 1e-9);
      }
    }
  }
}

TEST_CASE("grid wraps u and clamps v") {
  int W = 32, H = 16;
  KernelSpec spec = KernelSpec::for_image(3, W, H);
  SamplingGrid g = build_sampling_grid(W, H, spec, 1);
  for (const PixelCoord& p : g.coords) {
    CHECK(p.u >= 0.0);
    CHECK(p.u < W);
    CHECK(p.v >= 0.0);
    CHECK(p.v <= H - 1.0);
  }
}

TEST_CASE("strided grid centers the stride window") {
  int W = 16, H = 8;
  KernelSpec spec = KernelSpec::for_image(1, W, H);
  SamplingGrid g = build_sampling_grid(W, H, spec, 2);
  CHECK(g.out_w == 8);
  CHECK(g.out_h == 4);
  CHECK(g.at(0, 0, 0).u == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(g.at(0, 0, 0).v == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(g.at(1, 2, 0).u == doctest::Approx(4.5).epsilon(1e-12));
  CHECK(g.at(1, 2, 0).v == doctest::Approx(2.5).epsilon(1e-12));
}

TEST_CASE("build_sampling_grid validates its inputs") {
  KernelSpec spec = KernelSpec::for_image(3, 32, 16);
  CHECK_THROWS_AS(build_sampling_grid(32, 16, spec, 0), ParamError);
  CHECK_THROWS_AS(build_sampling_grid(2, 2, spec, 1), ParamError);
}

TEST_CASE("grid dump format: one record per output pixel") {
  KernelSpec spec = KernelSpec::for_image(1, 8, 4);
  SamplingGrid g = build_sampling_grid(8, 4, spec, 1);
  std::ostringstream os;
  write_grid(g, os);
  std::istringstream is(os.str());
  std::string line;
  int lines = 0;
  while (std::getline(is, line)) {
    if (!line.empty()) ++lines;
  }
  CHECK(lines == g.out_h * g.out_w);
  // First record: "0 0 u v" with 9 decimals.
  CHECK(os.str().substr(0, 4) == "0 0 ");
}

TEST_CASE("cached_grid returns the same immutable grid") {
  KernelSpec spec = KernelSpec::for_image(3, 64, 32);
  auto a = cached_grid(64, 32, spec, 1);
  auto b = cached_grid(64, 32, spec, 1);
  CHECK(a.get() == b.get());
}
