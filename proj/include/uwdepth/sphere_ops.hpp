#pragma once

#include <memory>
#include <vector>

#include "uwdepth/geometry.hpp"
#include "uwdepth/ops.hpp"
#include "uwdepth/tensor.hpp"

namespace uwdepth::sph {

enum class PoolMode { max, avg };

/// Bilinear realization of a SamplingGrid: per fractional coordinate, the
/// four integer source pixels (u wrapped, v clamped) and their weights.
/// Immutable after construction and safe to share across threads.
struct GatherPlan {
  int in_w = 0;
  int in_h = 0;
  int out_w = 0;
  int out_h = 0;
  int n = 0;
  int stride = 1;
  /// out_h*out_w*n^2 samples, 4 entries each; indices are flat into the
  /// H*W plane, weights are non-negative and sum to 1 per sample.
  std::vector<int32_t> idx;
  std::vector<double> weight;

  int taps() const { return n * n; }

  static GatherPlan build(const geo::SamplingGrid& grid);
};

using PlanPtr = std::shared_ptr<const GatherPlan>;

/// Process-wide plan cache sharing the geometry grid cache's key space.
PlanPtr cached_plan(int width, int height, const geo::KernelSpec& k,
                    int stride);

/// Gathers the plan's samples from x[N,C,H,W] into [N,C,H',W',n^2]; tap
/// order matches the kernel's image order (row-major over the window).
/// Differentiable: the backward pass scatters weighted gradients.
ad::Tensor bilinear_gather(const ad::Tensor& x, const PlanPtr& plan);

/// Spherical convolution: gather then contraction with w[F,C,n,n] (kernel
/// tap (r,c) pairs with grid sample (r,c)) plus optional bias[F].
ad::Tensor sphere_conv2d(const ad::Tensor& x, const ad::Tensor& w,
                         const ad::Tensor& bias, const PlanPtr& plan);

/// Max or mean over the n^2 gathered samples; max gradient routes to the
/// argmax sample, ties to the lowest flat index.
ad::Tensor sphere_pool(const ad::Tensor& x, const PlanPtr& plan,
                       PoolMode mode);

}  // namespace uwdepth::sph
