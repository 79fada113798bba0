#include "uwdepth/image_io.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <csetjmp>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <memory>
#include <string>

namespace uwdepth::io {

namespace {

struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

FilePtr open_file(const std::filesystem::path& path, const char* mode) {
  FilePtr f(std::fopen(path.string().c_str(), mode));
  if (!f) throw IoError("cannot open " + path.string());
  return f;
}

struct PngReader {
  png_structp png = nullptr;
  png_infop info = nullptr;
  PngReader() {
    png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr,
                                 nullptr);
    if (png) info = png_create_info_struct(png);
    if (!png || !info) throw IoError("png: allocation failed");
  }
  ~PngReader() { png_destroy_read_struct(&png, &info, nullptr); }
};

struct PngWriter {
  png_structp png = nullptr;
  png_infop info = nullptr;
  PngWriter() {
    png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr,
                                  nullptr);
    if (png) info = png_create_info_struct(png);
    if (!png || !info) throw IoError("png: allocation failed");
  }
  ~PngWriter() { png_destroy_write_struct(&png, &info); }
};

void check_signature(std::FILE* f, const std::filesystem::path& path) {
  unsigned char sig[8];
  if (std::fread(sig, 1, 8, f) != 8 || png_sig_cmp(sig, 0, 8))
    throw FormatError("not a PNG file: " + path.string());
}

}  // namespace

img::ImageU8 read_png_rgb8(const std::filesystem::path& path) {
  FilePtr f = open_file(path, "rb");
  check_signature(f.get(), path);
  PngReader r;

  img::ImageU8 im;
  std::vector<png_bytep> rows;
  // libpng reports errors via longjmp; no C++ objects are created between
  // here and the reading calls.
  if (setjmp(png_jmpbuf(r.png)))
    throw FormatError("png: failed to decode " + path.string());

  png_init_io(r.png, f.get());
  png_set_sig_bytes(r.png, 8);
  png_read_info(r.png, r.info);

  png_uint_32 w, h;
  int bit_depth, color_type;
  png_get_IHDR(r.png, r.info, &w, &h, &bit_depth, &color_type, nullptr,
               nullptr, nullptr);
  if (bit_depth == 16)
    throw FormatError("read_png_rgb8: 16-bit color input not supported: " +
                      path.string());
  if (color_type == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(r.png);
  if (color_type == PNG_COLOR_TYPE_GRAY && bit_depth < 8)
    png_set_expand_gray_1_2_4_to_8(r.png);
  if (color_type == PNG_COLOR_TYPE_GRAY ||
      color_type == PNG_COLOR_TYPE_GRAY_ALPHA)
    png_set_gray_to_rgb(r.png);
  if (png_get_valid(r.png, r.info, PNG_INFO_tRNS))
    png_set_tRNS_to_alpha(r.png);
  png_set_strip_alpha(r.png);
  png_read_update_info(r.png, r.info);

  im = img::ImageU8(static_cast<int>(h), static_cast<int>(w), 3);
  rows.resize(h);
  for (png_uint_32 y = 0; y < h; ++y)
    rows[y] = im.v.data() + static_cast<size_t>(y) * w * 3;
  png_read_image(r.png, rows.data());
  png_read_end(r.png, nullptr);
  return im;
}

void write_png_rgb8(const std::filesystem::path& path, const img::ImageU8& im) {
  if (im.ch != 3)
    throw FormatError("write_png_rgb8: image must have 3 channels");
  FilePtr f = open_file(path, "wb");
  PngWriter wr;

  std::vector<png_bytep> rows(static_cast<size_t>(im.h));
  for (int y = 0; y < im.h; ++y)
    rows[static_cast<size_t>(y)] =
        const_cast<png_bytep>(im.v.data() + static_cast<size_t>(y) * im.w * 3);

  if (setjmp(png_jmpbuf(wr.png)))
    throw IoError("png: failed to encode " + path.string());
  png_init_io(wr.png, f.get());
  png_set_IHDR(wr.png, wr.info, static_cast<png_uint_32>(im.w),
               static_cast<png_uint_32>(im.h), 8, PNG_COLOR_TYPE_RGB,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
               PNG_FILTER_TYPE_DEFAULT);
  png_write_info(wr.png, wr.info);
  png_write_image(wr.png, rows.data());
  png_write_end(wr.png, nullptr);
}

img::DepthMap read_depth_png16(const std::filesystem::path& path) {
  FilePtr f = open_file(path, "rb");
  check_signature(f.get(), path);
  PngReader r;

  std::vector<uint8_t> raw;
  std::vector<png_bytep> rows;
  png_uint_32 w = 0, h = 0;
  if (setjmp(png_jmpbuf(r.png)))
    throw FormatError("png: failed to decode " + path.string());

  png_init_io(r.png, f.get());
  png_set_sig_bytes(r.png, 8);
  png_read_info(r.png, r.info);

  int bit_depth, color_type;
  png_get_IHDR(r.png, r.info, &w, &h, &bit_depth, &color_type, nullptr,
               nullptr, nullptr);
  if (color_type != PNG_COLOR_TYPE_GRAY || bit_depth != 16)
    throw FormatError("read_depth_png16: expected 16-bit grayscale: " +
                      path.string());
  png_read_update_info(r.png, r.info);

  raw.resize(static_cast<size_t>(h) * w * 2);
  rows.resize(h);
  for (png_uint_32 y = 0; y < h; ++y)
    rows[y] = raw.data() + static_cast<size_t>(y) * w * 2;
  png_read_image(r.png, rows.data());
  png_read_end(r.png, nullptr);

  img::DepthMap d(static_cast<int>(h), static_cast<int>(w));
  for (size_t i = 0; i < static_cast<size_t>(h) * w; ++i) {
    // PNG stores 16-bit samples big-endian.
    uint16_t mm = static_cast<uint16_t>((raw[2 * i] << 8) | raw[2 * i + 1]);
    d.v[i] = mm / 1000.0;
  }
  return d;
}

void write_depth_png16(const std::filesystem::path& path,
                       const img::DepthMap& d) {
  FilePtr f = open_file(path, "wb");
  PngWriter wr;

  std::vector<uint8_t> raw(static_cast<size_t>(d.h) * d.w * 2);
  for (size_t i = 0; i < d.v.size(); ++i) {
    double mm = std::clamp(std::round(d.v[i] * 1000.0), 0.0, 65535.0);
    uint16_t q = static_cast<uint16_t>(mm);
    raw[2 * i] = static_cast<uint8_t>(q >> 8);
    raw[2 * i + 1] = static_cast<uint8_t>(q & 0xff);
  }
  std::vector<png_bytep> rows(static_cast<size_t>(d.h));
  for (int y = 0; y < d.h; ++y)
    rows[static_cast<size_t>(y)] =
        raw.data() + static_cast<size_t>(y) * d.w * 2;

  if (setjmp(png_jmpbuf(wr.png)))
    throw IoError("png: failed to encode " + path.string());
  png_init_io(wr.png, f.get());
  png_set_IHDR(wr.png, wr.info, static_cast<png_uint_32>(d.w),
               static_cast<png_uint_32>(d.h), 16, PNG_COLOR_TYPE_GRAY,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
               PNG_FILTER_TYPE_DEFAULT);
  png_write_info(wr.png, wr.info);
  png_write_image(wr.png, rows.data());
  png_write_end(wr.png, nullptr);
}

img::DepthMap read_pfm(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open " + path.string());
  std::string magic;
  f >> magic;
  if (magic != "Pf")
    throw FormatError("read_pfm: expected grayscale 'Pf': " + path.string());
  int w, h;
  double scale;
  f >> w >> h >> scale;
  if (!f || w < 1 || h < 1 || scale == 0.0)
    throw FormatError("read_pfm: bad header: " + path.string());
  f.get();  // single whitespace after the header
  bool little_endian = scale < 0.0;

  std::vector<float> raw(static_cast<size_t>(w) * h);
  f.read(reinterpret_cast<char*>(raw.data()),
         static_cast<std::streamsize>(raw.size() * sizeof(float)));
  if (!f) throw FormatError("read_pfm: truncated data: " + path.string());
  if (!little_endian)
    for (float& v : raw) {
      uint32_t b;
      std::memcpy(&b, &v, 4);
      b = __builtin_bswap32(b);
      std::memcpy(&v, &b, 4);
    }

  // PFM rows run bottom-to-top.
  img::DepthMap d(h, w);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      d.at(y, x) = raw[static_cast<size_t>(h - 1 - y) * w + x];
  return d;
}

void write_pfm(const std::filesystem::path& path, const img::DepthMap& d) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open " + path.string());
  f << "Pf\n" << d.w << " " << d.h << "\n-1.0\n";
  std::vector<float> raw(static_cast<size_t>(d.w) * d.h);
  for (int y = 0; y < d.h; ++y)
    for (int x = 0; x < d.w; ++x)
      raw[static_cast<size_t>(d.h - 1 - y) * d.w + x] =
          static_cast<float>(d.at(y, x));
  f.write(reinterpret_cast<const char*>(raw.data()),
          static_cast<std::streamsize>(raw.size() * sizeof(float)));
  if (!f) throw IoError("write_pfm: write failed: " + path.string());
}

img::DepthMap read_depth_auto(const std::filesystem::path& path) {
  std::string ext = path.extension().string();
  if (ext == ".png") return read_depth_png16(path);
  if (ext == ".pfm") return read_pfm(path);
  throw FormatError("read_depth_auto: unsupported depth extension '" + ext +
                    "'");
}

void write_depth_auto(const std::filesystem::path& path,
                      const img::DepthMap& d) {
  std::string ext = path.extension().string();
  if (ext == ".png") return write_depth_png16(path, d);
  if (ext == ".pfm") return write_pfm(path, d);
  throw FormatError("write_depth_auto: unsupported depth extension '" + ext +
                    "'");
}

}  // namespace uwdepth::io
