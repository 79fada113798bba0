#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "uwdepth/optim.hpp"
#include "uwdepth/tensor.hpp"

namespace uwdepth::io {

inline constexpr uint32_t kCheckpointVersion = 1;

struct CheckpointEntry {
  std::string name;
  ad::Shape shape;
  std::vector<double> data;
};

/// Binary format: magic "SDCK", u32 version, u32 record count, then per
/// record: u32 name length, UTF-8 name, u32 rank, u64 extents, raw f64
/// values. All integers and values little-endian. Round-trips bit-exactly.
void save_checkpoint(const std::filesystem::path& path,
                     const std::vector<ad::Parameter>& params);

/// Throws CheckpointVersionError on a version mismatch, FormatError on a
/// corrupt file, IoError when unreadable.
std::vector<CheckpointEntry> load_checkpoint(const std::filesystem::path& path);

}  // namespace uwdepth::io
