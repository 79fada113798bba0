#pragma once

#include "uwdepth/image.hpp"

namespace uwdepth::io {

/// Fixed perceptually-uniform ramp over depth clamped to [0, d_max];
/// invalid pixels (depth 0) render black.
img::ImageU8 colorize_depth(const img::DepthMap& d, double d_max);

}  // namespace uwdepth::io
