#pragma once

#include <Eigen/Core>

#include "uwdepth/image.hpp"

namespace uwdepth::synth {

/// Underwater styling parameters: red attenuation factor, meters of depth
/// per blur band, Gaussian sigma as a fraction of the kernel radius, and
/// optional green/blue multipliers.
struct SynthParams {
  double gamma = 0.6;
  double depth_step = 2.0;
  double sigma_scale = 1.0 / 3.0;
  double green_tint = 1.0;
  double blue_tint = 1.0;

  void validate() const;  // ParamError naming the offending field
};

/// How blur treats pixels past the border.
enum class Border {
  replicate,  // perspective images
  wrap_x      // equirectangular: wrap horizontally, replicate vertically
};

/// R' = round(gamma * R); G and B scaled by their tint factors.
img::ImageU8 attenuate_red(const img::ImageU8& rgb, const SynthParams& p);

/// Discrete 2-d Gaussian, normalized to sum exactly 1.
Eigen::MatrixXd gaussian_kernel(int size, double sigma);

/// Depth-dependent kernel size: 2*floor(d/depth_step) + 1 (odd, monotone,
/// 1 at zero depth).
int blur_kernel_size(double depth_m, const SynthParams& p);

/// Full styling: attenuate first, then per-depth-band Gaussian blur with
/// band compositing. Invalid-depth pixels (0) come from the unblurred
/// attenuated image. Deterministic; byte-identical across reruns.
img::ImageU8 synthesize_underwater(const img::ImageU8& rgb,
                                   const img::DepthMap& depth,
                                   const SynthParams& p, Border border);

}  // namespace uwdepth::synth
