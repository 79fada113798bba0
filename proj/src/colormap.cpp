#include "uwdepth/colormap.hpp"

#include <algorithm>
#include <cmath>

namespace uwdepth::io {

namespace {

// Viridis control points at 9 evenly spaced stops.
constexpr double kRamp[9][3] = {
    {68, 1, 84},    {71, 44, 122},  {59, 81, 139},
    {44, 113, 142}, {33, 144, 141}, {39, 173, 129},
    {92, 200, 99},  {170, 220, 50}, {253, 231, 37},
};

}  // namespace

img::ImageU8 colorize_depth(const img::DepthMap& d, double d_max) {
  if (!(d_max > 0.0)) throw ParamError("colorize_depth: d_max must be > 0");
  img::ImageU8 out(d.h, d.w, 3);
  for (int y = 0; y < d.h; ++y)
    for (int x = 0; x < d.w; ++x) {
      double depth = d.at(y, x);
      if (depth <= 0.0) continue;  // invalid stays black
      double t = std::clamp(depth / d_max, 0.0, 1.0) * 8.0;
      int i = std::min(static_cast<int>(t), 7);
      double f = t - i;
      for (int c = 0; c < 3; ++c) {
        double v = (1.0 - f) * kRamp[i][c] + f * kRamp[i + 1][c];
        out.at(y, x, c) = static_cast<uint8_t>(std::lround(v));
      }
    }
  return out;
}

}  // namespace uwdepth::io
