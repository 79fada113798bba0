#include "uwdepth/checkpoint.hpp"

#include <cstring>
#include <fstream>

namespace uwdepth::io {

namespace {

constexpr char kMagic[4] = {'S', 'D', 'C', 'K'};

void put_u32(std::ostream& os, uint32_t v) {
  char b[4];
  for (int i = 0; i < 4; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xff);
  os.write(b, 4);
}

void put_u64(std::ostream& os, uint64_t v) {
  char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xff);
  os.write(b, 8);
}

void put_f64(std::ostream& os, double d) {
  uint64_t v;
  std::memcpy(&v, &d, 8);
  put_u64(os, v);
}

uint32_t get_u32(std::istream& is) {
  unsigned char b[4];
  is.read(reinterpret_cast<char*>(b), 4);
  uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<uint32_t>(b[i]) << (8 * i);
  return v;
}

uint64_t get_u64(std::istream& is) {
  unsigned char b[8];
  is.read(reinterpret_cast<char*>(b), 8);
  uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<uint64_t>(b[i]) << (8 * i);
  return v;
}

double get_f64(std::istream& is) {
  uint64_t v = get_u64(is);
  double d;
  std::memcpy(&d, &v, 8);
  return d;
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path,
                     const std::vector<ad::Parameter>& params) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open " + path.string());
  f.write(kMagic, 4);
  put_u32(f, kCheckpointVersion);
  put_u32(f, static_cast<uint32_t>(params.size()));
  for (const ad::Parameter& p : params) {
    put_u32(f, static_cast<uint32_t>(p.name.size()));
    f.write(p.name.data(), static_cast<std::streamsize>(p.name.size()));
    put_u32(f, static_cast<uint32_t>(p.tensor.shape().size()));
    for (long d : p.tensor.shape()) put_u64(f, static_cast<uint64_t>(d));
    for (long i = 0; i < p.tensor.size(); ++i) put_f64(f, p.tensor.values()[i]);
  }
  if (!f) throw IoError("checkpoint write failed: " + path.string());
}

std::vector<CheckpointEntry> load_checkpoint(
    const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open " + path.string());
  char magic[4];
  f.read(magic, 4);
  if (!f || std::memcmp(magic, kMagic, 4) != 0)
    throw FormatError("not a checkpoint file: " + path.string());
  uint32_t version = get_u32(f);
  if (version != kCheckpointVersion)
    throw CheckpointVersionError("checkpoint version " +
                                 std::to_string(version) + " unsupported (expected " +
                                 std::to_string(kCheckpointVersion) + ")");
  uint32_t count = get_u32(f);
  std::vector<CheckpointEntry> entries;
  entries.reserve(count);
  for (uint32_t i = 0; i < count; ++i) {
    CheckpointEntry e;
    uint32_t name_len = get_u32(f);
    if (!f || name_len > (1u << 20))
      throw FormatError("checkpoint: corrupt record name");
    e.name.resize(name_len);
    f.read(e.name.data(), name_len);
    uint32_t rank = get_u32(f);
    if (!f || rank > 16) throw FormatError("checkpoint: corrupt record rank");
    long size = 1;
    for (uint32_t d = 0; d < rank; ++d) {
      long ext = static_cast<long>(get_u64(f));
      e.shape.push_back(ext);
      size *= ext;
    }
    if (!f || size < 0 || size > (1l << 32))
      throw FormatError("checkpoint: corrupt record extents");
    e.data.resize(static_cast<size_t>(size));
    for (long v = 0; v < size; ++v) e.data[static_cast<size_t>(v)] = get_f64(f);
    if (!f) throw FormatError("checkpoint: truncated record data");
    entries.push_back(std::move(e));
  }
  return entries;
}

}  // namespace uwdepth::io
