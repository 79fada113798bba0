#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <memory>

#include "testutil.hpp"
#include "uwdepth/ops.hpp"
#include "uwdepth/sphere_ops.hpp"

using namespace uwdepth;
using namespace uwdepth::ad;
using namespace uwdepth::sph;
using testutil::numeric_grad;
using testutil::random_tensor;
using testutil::rel_err;

namespace {

PlanPtr plan_for(int W, int H, int n, int stride) {
  return cached_plan(W, H, geo::KernelSpec::for_image(n, W, H), stride);
}

// Cyclic column roll of a [N,C,H,W] tensor (positive = rightward).
Tensor roll_cols(const Tensor& x, long k) {
  long N = x.dim(0), C = x.dim(1), H = x.dim(2), W = x.dim(3);
  Tensor y = Tensor::zeros(x.shape());
  for (long nc = 0; nc < N * C; ++nc)
    for (long r = 0; r < H; ++r)
      for (long c = 0; c < W; ++c) {
        long dst = ((k + c) % W + W) % W;
        y.data()[(nc * H + r) * W + dst] = x.data()[(nc * H + r) * W + c];
      }
  return y;
}

// Planar conv with one column of horizontal wrap padding on each side,
// evaluated on interior rows only; the reference for equator agreement.
Tensor wrapped_planar_conv(const Tensor& x, const Tensor& w, const Tensor& b) {
  long N = x.dim(0), C = x.dim(1), H = x.dim(2), W = x.dim(3);
  Tensor ext = Tensor::zeros({N, C, H, W + 2});
  for (long nc = 0; nc < N * C; ++nc)
    for (long r = 0; r < H; ++r) {
      const double* src = x.data() + (nc * H + r) * W;
      double* dst = ext.data() + (nc * H + r) * (W + 2);
      dst[0] = src[W - 1];
      for (long c = 0; c < W; ++c) dst[c + 1] = src[c];
      dst[W + 1] = src[0];
    }
  return conv2d(ext, w, b, 1, 0);  // [N,F,H-2,W]
}

}  // namespace

TEST_CASE("gather with a 1x1 grid copies pixels exactly") {
  Rng rng(5);
  Tensor x = random_tensor({2, 3, 8, 16}, rng);
  Tensor g = bilinear_gather(x, plan_for(16, 8, 1, 1));
  REQUIRE(g.shape() == Shape{2, 3, 8, 16, 1});
  for (long i = 0; i < x.size(); ++i)
    CHECK(g.values()[i] == doctest::Approx(x.values()[i]).epsilon(1e-12));
}

TEST_CASE("gather midway between two pixels averages them") {
  // Hand-built plan: one sample at u = 1.5, v = 0 on a 1x4 image.
  auto plan = std::make_shared<GatherPlan>();
  plan->in_w = 4;
  plan->in_h = 1;
  plan->out_w = 1;
  plan->out_h = 1;
  plan->n = 1;
  plan->idx = {1, 2, 1, 2};
  plan->weight = {0.5, 0.5, 0.0, 0.0};
  Tensor x = Tensor::from_data({1, 1, 1, 4}, {10, 20, 30, 40});
  Tensor g = bilinear_gather(x, plan);
  CHECK(g.values()[0] == doctest::Approx(25.0));
}

TEST_CASE("gather at u = W-0.5 blends the last and first columns") {
  // Wrap oracle: gathering a rolled image at the shifted coordinate gives
  // the same value.
  auto plan = std::make_shared<GatherPlan>();
  plan->in_w = 4;
  plan->in_h = 1;
  plan->out_w = 1;
  plan->out_h = 1;
  plan->n = 1;
  plan->idx = {3, 0, 3, 0};  // u = 3.5 wraps its right neighbor to column 0
  plan->weight = {0.5, 0.5, 0.0, 0.0};
  Tensor x = Tensor::from_data({1, 1, 1, 4}, {10, 20, 30, 40});
  Tensor g = bilinear_gather(x, plan);
  CHECK(g.values()[0] == doctest::Approx((40.0 + 10.0) / 2));

  auto mid = std::make_shared<GatherPlan>(*plan);
  mid->idx = {1, 2, 1, 2};  // same weights at u = 1.5 on the rolled image
  Tensor rolled = roll_cols(x, -2);
  CHECK(bilinear_gather(rolled, mid).values()[0] == doctest::Approx(25.0));
}

TEST_CASE("bilinear weights form a partition of unity") {
  Tensor ones = Tensor::full({1, 2, 16, 32}, 1.0);
  for (int stride : {1, 2}) {
    Tensor g = bilinear_gather(ones, plan_for(32, 16, 3, stride));
    for (long i = 0; i < g.size(); ++i)
      CHECK(std::abs(g.values()[i] - 1.0) <= 1e-12);
  }
}

TEST_CASE("gather plan mismatch raises ShapeError") {
  Tensor x = Tensor::zeros({1, 1, 8, 16});
  CHECK_THROWS_AS(bilinear_gather(x, plan_for(32, 16, 3, 1)), ShapeError);
}

TEST_CASE("sphere_conv2d on the equator equals wrapped planar conv") {
  Rng rng(9);
  int H = 128, W = 256;
  Tensor x = random_tensor({1, 2, H, W}, rng);
  Tensor w = random_tensor({3, 2, 3, 3}, rng);
  Tensor b = random_tensor({3}, rng);

  Tensor sphere = sphere_conv2d(x, w, b, plan_for(W, H, 3, 1));
  Tensor planar = wrapped_planar_conv(x, w, b);

  long eq = H / 2;  // phi = 0 row
  for (long f = 0; f < 3; ++f)
    for (long c = 0; c < W; ++c) {
      double s = sphere.values()[(f * H + eq) * W + c];
      double p = planar.values()[(f * (H - 2) + (eq - 1)) * W + c];
      CHECK(std::abs(s - p) < 1e-6);
    }
}

TEST_CASE("constant input with a kernel of ones gives c*n^2") {
  Tensor x = Tensor::full({1, 2, 12, 24}, 1.7);
  Tensor w = Tensor::full({1, 2, 3, 3}, 1.0);
  Tensor y = sphere_conv2d(x, w, Tensor(), plan_for(24, 12, 3, 1));
  for (long i = 0; i < y.size(); ++i)
    CHECK(y.values()[i] == doctest::Approx(2 * 9 * 1.7).epsilon(1e-12));
}

TEST_CASE("azimuthal equivariance of sphere_conv2d") {
  Rng rng(13);
  int H = 64, W = 128;
  Tensor x = random_tensor({1, 2, H, W}, rng);
  Tensor w = random_tensor({2, 2, 3, 3}, rng);
  Tensor b = random_tensor({2}, rng);

  SUBCASE("stride 1, roll 16") {
    Tensor base = sphere_conv2d(x, w, b, plan_for(W, H, 3, 1));
    Tensor rolled = sphere_conv2d(roll_cols(x, 16), w, b, plan_for(W, H, 3, 1));
    Tensor expect = roll_cols(base, 16);
    double max_diff = (rolled.values() - expect.values()).abs().maxCoeff();
    CHECK(max_diff < 1e-10);
  }
  SUBCASE("stride 2, roll 16 -> output roll 8") {
    Tensor base = sphere_conv2d(x, w, b, plan_for(W, H, 3, 2));
    Tensor rolled = sphere_conv2d(roll_cols(x, 16), w, b, plan_for(W, H, 3, 2));
    Tensor expect = roll_cols(base, 8);
    double max_diff = (rolled.values() - expect.values()).abs().maxCoeff();
    CHECK(max_diff < 1e-10);
  }
}

TEST_CASE("sphere_pool basics and equivalences") {
  Rng rng(21);
  int H = 16, W = 32;
  Tensor x = random_tensor({1, 2, H, W}, rng);

  SUBCASE("constant input stays constant in both modes") {
    Tensor c = Tensor::full({1, 1, H, W}, 3.25);
    for (PoolMode mode : {PoolMode::max, PoolMode::avg}) {
      Tensor y = sphere_pool(c, plan_for(W, H, 3, 1), mode);
      for (long i = 0; i < y.size(); ++i)
        CHECK(y.values()[i] == doctest::Approx(3.25).epsilon(1e-12));
    }
  }

  SUBCASE("avg pool equals sphere conv with uniform 1/n^2 weight") {
    Tensor avg = sphere_pool(x, plan_for(W, H, 3, 1), PoolMode::avg);
    Tensor w = Tensor::zeros({2, 2, 3, 3});
    // Depthwise surrogate: channel f reads only channel f.
    for (long f = 0; f < 2; ++f)
      for (long t = 0; t < 9; ++t) w.values()[(f * 2 + f) * 9 + t] = 1.0 / 9.0;
    Tensor conv = sphere_conv2d(x, w, Tensor(), plan_for(W, H, 3, 1));
    double max_diff = (avg.values() - conv.values()).abs().maxCoeff();
    CHECK(max_diff < 1e-12);
  }

  SUBCASE("equator max pool equals planar max pool") {
    Tensor pooled = sphere_pool(x, plan_for(W, H, 3, 1), PoolMode::max);
    // Wrapped planar 3x3 max pool, interior rows.
    long eq = H / 2;
    for (long c = 0; c < W; ++c) {
      double best = -1e300;
      for (long dr = -1; dr <= 1; ++dr)
        for (long dc = -1; dc <= 1; ++dc) {
          long cc = ((c + dc) % W + W) % W;
          best = std::max(best, x.values()[(0 * H + eq + dr) * W + cc]);
        }
      CHECK(std::abs(pooled.values()[(0 * H + eq) * W + c] - best) < 1e-6);
    }
  }

  SUBCASE("azimuthal equivariance") {
    Tensor base = sphere_pool(x, plan_for(W, H, 3, 1), PoolMode::max);
    Tensor rolled = sphere_pool(roll_cols(x, 8), plan_for(W, H, 3, 1),
                                PoolMode::max);
    double max_diff =
        (rolled.values() - roll_cols(base, 8).values()).abs().maxCoeff();
    CHECK(max_diff < 1e-10);
  }
}

TEST_CASE("sphere_conv2d gradients pass finite differences at the poles") {
  Rng rng(27);
  int H = 8, W = 16;
  Tensor x = random_tensor({1, 2, H, W}, rng).set_requires_grad(true);
  Tensor w = random_tensor({2, 2, 3, 3}, rng).set_requires_grad(true);
  Tensor b = random_tensor({2}, rng).set_requires_grad(true);
  Tensor coeffs = random_tensor({1, 2, H, W}, rng);
  auto plan = plan_for(W, H, 3, 1);  // output rows 0 and H-1 hug the poles

  auto eval = [&]() {
    return sum(mul(sphere_conv2d(x, w, b, plan), coeffs)).item();
  };
  backward(sum(mul(sphere_conv2d(x, w, b, plan), coeffs)));
  for (Tensor* t : {&x, &w, &b}) {
    auto grad = t->grad();
    for (long i = 0; i < t->size(); i += 3) {
      double fd = numeric_grad(*t, i, eval);
      CHECK(rel_err(grad[i], fd) < 1e-4);
    }
  }
}

TEST_CASE("sphere_pool gradients pass finite differences") {
  Rng rng(33);
  int H = 8, W = 16;
  Tensor coeffs = random_tensor({1, 1, 4, 8}, rng);
  for (PoolMode mode : {PoolMode::max, PoolMode::avg}) {
    Tensor x = random_tensor({1, 1, H, W}, rng).set_requires_grad(true);
    auto plan = plan_for(W, H, 3, 2);
    auto eval = [&]() {
      return sum(mul(sphere_pool(x, plan, mode), coeffs)).item();
    };
    backward(sum(mul(sphere_pool(x, plan, mode), coeffs)));
    auto grad = x.grad();
    for (long i = 0; i < x.size(); i += 5) {
      double fd = numeric_grad(x, i, eval);
      CHECK(rel_err(grad[i], fd) < 1e-4);
    }
  }
}

TEST_CASE("sphere_conv2d validates weight against the plan") {
  Tensor x = Tensor::zeros({1, 1, 8, 16});
  Tensor w = Tensor::zeros({1, 1, 5, 5});
  CHECK_THROWS_AS(sphere_conv2d(x, w, Tensor(), plan_for(16, 8, 3, 1)),
                  ShapeError);
}
