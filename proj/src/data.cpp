#include "uwdepth/data.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "uwdepth/geometry.hpp"
#include "uwdepth/image_io.hpp"

namespace uwdepth::data {

Manifest read_manifest(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) throw IoError("cannot open manifest " + path.string());
  Manifest m;
  m.base_dir = path.parent_path();
  std::set<std::string> ids;
  std::string line;
  int lineno = 0;
  while (std::getline(f, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ss(line);
    ManifestRecord rec;
    std::string camera, meta;
    if (!(ss >> rec.id >> rec.rgb_path >> rec.depth_path >> camera >> meta >>
          rec.split))
      throw FormatError("manifest line " + std::to_string(lineno) +
                        ": expected 6 fields");
    if (camera == "persp") {
      rec.camera = Camera::perspective;
      try {
        rec.fov_x = std::stod(meta);
      } catch (const std::exception&) {
        throw FormatError("manifest line " + std::to_string(lineno) +
                          ": bad fov '" + meta + "'");
      }
    } else if (camera == "equirect") {
      rec.camera = Camera::equirect;
      if (meta != "-") {
        size_t x = meta.find('x');
        if (x == std::string::npos)
          throw FormatError("manifest line " + std::to_string(lineno) +
                            ": equirect meta must be WxH or '-'");
        rec.w = std::stoi(meta.substr(0, x));
        rec.h = std::stoi(meta.substr(x + 1));
      }
    } else {
      throw FormatError("manifest line " + std::to_string(lineno) +
                        ": unknown camera tag '" + camera + "'");
    }
    if (!ids.insert(rec.id).second)
      throw FormatError("manifest: duplicate id '" + rec.id + "'");
    m.records.push_back(std::move(rec));
  }
  return m;
}

void write_manifest(const Manifest& m, const std::filesystem::path& path) {
  std::ofstream f(path);
  if (!f) throw IoError("cannot open manifest for writing " + path.string());
  for (const ManifestRecord& r : m.records) {
    f << r.id << ' ' << r.rgb_path << ' ' << r.depth_path << ' ';
    if (r.camera == Camera::perspective) {
      char fov[32];
      std::snprintf(fov, sizeof fov, "%.9g", r.fov_x);
      f << "persp " << fov;
    } else if (r.w > 0 && r.h > 0) {
      f << "equirect " << r.w << 'x' << r.h;
    } else {
      f << "equirect -";
    }
    f << ' ' << r.split << '\n';
  }
  if (!f) throw IoError("manifest write failed: " + path.string());
}

namespace {

std::filesystem::path resolve(const std::filesystem::path& base,
                              const std::string& p) {
  std::filesystem::path fp(p);
  return fp.is_absolute() ? fp : base / fp;
}

}  // namespace

ImagePair load_pair(const Manifest& m, const ManifestRecord& rec) {
  ImagePair pair;
  pair.id = rec.id;
  pair.camera = rec.camera;
  pair.fov_x = rec.fov_x;
  img::ImageU8 rgb = io::read_png_rgb8(resolve(m.base_dir, rec.rgb_path));
  pair.depth = io::read_depth_auto(resolve(m.base_dir, rec.depth_path));
  if (rgb.h != pair.depth.h || rgb.w != pair.depth.w)
    throw AlignmentError("pair '" + rec.id + "': RGB " +
                         std::to_string(rgb.w) + "x" + std::to_string(rgb.h) +
                         " vs depth " + std::to_string(pair.depth.w) + "x" +
                         std::to_string(pair.depth.h));
  if (rec.camera == Camera::equirect && rgb.w != 2 * rgb.h)
    throw FormatError("pair '" + rec.id + "': equirect image must be 2:1");
  for (double& d : pair.depth.v)
    if (d < 0.0) d = 0.0;  // negative depth is treated as invalid
  pair.rgb = img::to_f64(rgb);
  return pair;
}

Dataset load_split(const Manifest& m, const std::string& split) {
  Dataset ds;
  for (const ManifestRecord& rec : m.records)
    if (split.empty() || rec.split == split) ds.pairs.push_back(load_pair(m, rec));
  return ds;
}

void AugmentConfig::validate() const {
  if (scale_min > scale_max || scale_min <= 0.0)
    throw ParamError("augment: scale range must satisfy 0 < min <= max");
  if (flip_prob < 0.0 || flip_prob > 1.0)
    throw ParamError("augment: flip_prob must lie in [0, 1]");
  if (jitter < 0.0 || jitter >= 1.0)
    throw ParamError("augment: jitter must lie in [0, 1)");
  if (rotation_deg < 0.0) throw ParamError("augment: rotation_deg must be >= 0");
  for (double s : norm_std)
    if (s <= 0.0) throw ParamError("augment: norm_std entries must be > 0");
  if (crop_h < 0 || crop_w < 0 || (crop_h == 0) != (crop_w == 0))
    throw ParamError("augment: crop dims must both be 0 or both positive");
}

AugmentConfig AugmentConfig::identity() {
  AugmentConfig cfg;
  cfg.scale_min = cfg.scale_max = 1.0;
  cfg.rotation_deg = 0.0;
  cfg.flip_prob = 0.0;
  cfg.jitter = 0.0;
  cfg.norm_mean = {0.0, 0.0, 0.0};
  cfg.norm_std = {1.0, 1.0, 1.0};
  cfg.crop_h = cfg.crop_w = 0;
  return cfg;
}

namespace {

// Rotation about the image center; RGB bilinear with edge clamp, depth
// nearest with out-of-frame pixels invalidated.
void rotate_perspective(ImagePair& pair, double degrees) {
  double a = degrees * geo::kPi / 180.0;
  double ca = std::cos(a), sa = std::sin(a);
  int h = pair.rgb.h, w = pair.rgb.w;
  double cy = (h - 1) / 2.0, cx = (w - 1) / 2.0;
  img::ImageF64 rgb(h, w, pair.rgb.ch);
  img::DepthMap depth(h, w);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      // Inverse map: rotate destination by -a around the center.
      double dy = y - cy, dx = x - cx;
      double sx = ca * dx + sa * dy + cx;
      double sy = -sa * dx + ca * dy + cy;
      bool inside = sx >= 0.0 && sx <= w - 1.0 && sy >= 0.0 && sy <= h - 1.0;
      double cxs = std::clamp(sx, 0.0, w - 1.0);
      double cys = std::clamp(sy, 0.0, h - 1.0);
      int x0 = static_cast<int>(cxs), y0 = static_cast<int>(cys);
      int x1 = std::min(x0 + 1, w - 1), y1 = std::min(y0 + 1, h - 1);
      double fx = cxs - x0, fy = cys - y0;
      for (int c = 0; c < pair.rgb.ch; ++c) {
        double top = (1 - fx) * pair.rgb.at(c, y0, x0) + fx * pair.rgb.at(c, y0, x1);
        double bot = (1 - fx) * pair.rgb.at(c, y1, x0) + fx * pair.rgb.at(c, y1, x1);
        rgb.at(c, y, x) = (1 - fy) * top + fy * bot;
      }
      int nx = std::min(static_cast<int>(std::lround(cxs)), w - 1);
      int ny = std::min(static_cast<int>(std::lround(cys)), h - 1);
      depth.at(y, x) = inside ? pair.depth.at(ny, nx) : 0.0;
    }
  pair.rgb = std::move(rgb);
  pair.depth = std::move(depth);
}

}  // namespace

ImagePair augment(const ImagePair& pair, const AugmentConfig& cfg, Rng& rng) {
  cfg.validate();
  ImagePair out = pair;

  // Scale.
  double s = cfg.scale_min == cfg.scale_max
                 ? cfg.scale_min
                 : rng.uniform(cfg.scale_min, cfg.scale_max);
  if (s != 1.0) {
    int nh = std::max(1, static_cast<int>(std::lround(out.rgb.h * s)));
    int nw = std::max(1, static_cast<int>(std::lround(out.rgb.w * s)));
    out.rgb = img::resize_bilinear(out.rgb, nh, nw);
    out.depth = img::resize_nearest(out.depth, nh, nw);
    if (out.camera == Camera::perspective)
      for (double& d : out.depth.v) d /= s;
  }

  // Rotation (perspective) or longitude roll (equirect).
  if (cfg.rotation_deg > 0.0) {
    double deg = rng.uniform(-cfg.rotation_deg, cfg.rotation_deg);
    if (out.camera == Camera::perspective) {
      rotate_perspective(out, deg);
    } else {
      int shift = static_cast<int>(std::lround(deg / 360.0 * out.rgb.w));
      if (shift != 0) {
        out.rgb = img::roll_columns(out.rgb, shift);
        out.depth = img::roll_columns(out.depth, shift);
      }
    }
  }

  // Horizontal flip; on the sphere this is longitude negation, still a
  // valid equirectangular image.
  if (cfg.flip_prob > 0.0 && rng.bernoulli(cfg.flip_prob)) {
    out.rgb = img::flip_horizontal(out.rgb);
    out.depth = img::flip_horizontal(out.depth);
  }

  // Color jitter: per-channel gain on RGB only.
  if (cfg.jitter > 0.0) {
    for (int c = 0; c < out.rgb.ch; ++c) {
      double g = rng.uniform(1.0 - cfg.jitter, 1.0 + cfg.jitter);
      double* p = out.rgb.plane(c);
      for (int i = 0; i < out.rgb.h * out.rgb.w; ++i)
        p[i] = std::clamp(p[i] * g, 0.0, 1.0);
    }
  }

  // Normalization last (before the crop, which is purely spatial).
  for (int c = 0; c < out.rgb.ch; ++c) {
    double m = cfg.norm_mean[static_cast<size_t>(c)];
    double sd = cfg.norm_std[static_cast<size_t>(c)];
    if (m == 0.0 && sd == 1.0) continue;
    double* p = out.rgb.plane(c);
    for (int i = 0; i < out.rgb.h * out.rgb.w; ++i) p[i] = (p[i] - m) / sd;
  }

  if (cfg.crop_h > 0) out = center_crop(out, cfg.crop_h, cfg.crop_w);
  return out;
}

ImagePair center_crop(const ImagePair& pair, int h, int w) {
  if (h < 1 || w < 1 || h > pair.rgb.h || w > pair.rgb.w)
    throw SizeError("center_crop: requested " + std::to_string(w) + "x" +
                    std::to_string(h) + " from " + std::to_string(pair.rgb.w) +
                    "x" + std::to_string(pair.rgb.h));
  int y0 = (pair.rgb.h - h) / 2;
  int x0 = (pair.rgb.w - w) / 2;
  ImagePair out;
  out.camera = pair.camera;
  out.fov_x = pair.fov_x;
  out.id = pair.id;
  out.rgb = img::ImageF64(h, w, pair.rgb.ch);
  out.depth = img::DepthMap(h, w);
  for (int c = 0; c < pair.rgb.ch; ++c)
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x)
        out.rgb.at(c, y, x) = pair.rgb.at(c, y0 + y, x0 + x);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) out.depth.at(y, x) = pair.depth.at(y0 + y, x0 + x);
  return out;
}

ImagePair rescale_angle_per_pixel(const ImagePair& pair, double target_app) {
  if (pair.camera != Camera::perspective)
    throw ParamError("rescale_angle_per_pixel: pair must be perspective");
  if (!(pair.fov_x > 0.0))
    throw ParamError("rescale_angle_per_pixel: fov_x unknown");
  if (!(target_app > 0.0))
    throw ParamError("rescale_angle_per_pixel: target must be positive");
  double app = pair.fov_x / pair.rgb.w;
  double factor = app / target_app;
  int nh = std::max(1, static_cast<int>(std::lround(pair.rgb.h * factor)));
  int nw = std::max(1, static_cast<int>(std::lround(pair.rgb.w * factor)));
  ImagePair out = pair;
  if (nh == pair.rgb.h && nw == pair.rgb.w) return out;
  out.rgb = img::resize_bilinear(pair.rgb, nh, nw);
  out.depth = img::resize_nearest(pair.depth, nh, nw);
  return out;
}

}  // namespace uwdepth::data
