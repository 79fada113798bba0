#pragma once

#include <filesystem>

#include "uwdepth/image.hpp"

namespace uwdepth::io {

/// 8-bit RGB PNG (gray and palette images are expanded to RGB; 16-bit color
/// is rejected).
img::ImageU8 read_png_rgb8(const std::filesystem::path& path);
void write_png_rgb8(const std::filesystem::path& path, const img::ImageU8& im);

/// 16-bit grayscale PNG holding millimeters; converted to meters.
img::DepthMap read_depth_png16(const std::filesystem::path& path);
/// Meters -> millimeters, rounded, saturating at 65535.
void write_depth_png16(const std::filesystem::path& path,
                       const img::DepthMap& d);

/// Grayscale PFM ("Pf"), 32-bit floats in meters; scanlines bottom-to-top,
/// negative scale marks little-endian data.
img::DepthMap read_pfm(const std::filesystem::path& path);
void write_pfm(const std::filesystem::path& path, const img::DepthMap& d);

/// Dispatch on extension: .png -> 16-bit millimeter PNG, .pfm -> float PFM.
img::DepthMap read_depth_auto(const std::filesystem::path& path);
void write_depth_auto(const std::filesystem::path& path,
                      const img::DepthMap& d);

}  // namespace uwdepth::io
