#include <CLI11.hpp>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "uwdepth/colormap.hpp"
#include "uwdepth/config.hpp"
#include "uwdepth/image_io.hpp"
#include "uwdepth/model.hpp"
#include "uwdepth/synthesis.hpp"

namespace fs = std::filesystem;
using namespace uwdepth;

namespace {

// Exit codes: 0 success, 1 config/validation, 2 I/O, 3 checkpoint version.
constexpr int kExitOk = 0;
constexpr int kExitConfig = 1;
constexpr int kExitIo = 2;
constexpr int kExitCheckpoint = 3;

struct CommonOpts {
  std::string config_path;
  std::vector<std::string> overrides;
  long seed = -1;  // -1 = take from config
};

Config make_config(const CommonOpts& opts) {
  Config cfg;
  if (!opts.config_path.empty()) cfg.load_file(opts.config_path);
  for (const std::string& kv : opts.overrides) {
    size_t eq = kv.find('=');
    if (eq == std::string::npos)
      throw ConfigError("--set expects key=value, got '" + kv + "'");
    cfg.set(kv.substr(0, eq), kv.substr(eq + 1));
  }
  if (opts.seed >= 0) cfg.set("seed", std::to_string(opts.seed));
  return cfg;
}

void add_common(CLI::App* cmd, CommonOpts& opts) {
  cmd->add_option("--config", opts.config_path, "config file");
  cmd->add_option("--set", opts.overrides,
                  "override a config key (section.key=value), repeatable");
  cmd->add_option("--seed", opts.seed, "override the config seed");
}

synth::Border border_for(data::Camera camera) {
  return camera == data::Camera::equirect ? synth::Border::wrap_x
                                          : synth::Border::replicate;
}

int run_synth(const CommonOpts& opts, const std::string& manifest_path,
              const std::string& out_dir) {
  Config cfg = make_config(opts);
  synth::SynthParams params = cfg.synth_params();

  data::Manifest manifest = data::read_manifest(manifest_path);
  fs::create_directories(out_dir);
  data::Manifest out_manifest;
  out_manifest.base_dir = out_dir;

  for (const data::ManifestRecord& rec : manifest.records) {
    fs::path rgb_src = fs::path(rec.rgb_path).is_absolute()
                           ? fs::path(rec.rgb_path)
                           : manifest.base_dir / rec.rgb_path;
    fs::path depth_src = fs::path(rec.depth_path).is_absolute()
                             ? fs::path(rec.depth_path)
                             : manifest.base_dir / rec.depth_path;
    img::ImageU8 rgb = io::read_png_rgb8(rgb_src);
    img::DepthMap depth = io::read_depth_auto(depth_src);
    if (rgb.h != depth.h || rgb.w != depth.w)
      throw AlignmentError("pair '" + rec.id + "': RGB/depth size mismatch");

    img::ImageU8 styled =
        synth::synthesize_underwater(rgb, depth, params, border_for(rec.camera));

    data::ManifestRecord out_rec = rec;
    out_rec.rgb_path = rec.id + "_uw.png";
    out_rec.depth_path = rec.id + "_depth" +
                         fs::path(rec.depth_path).extension().string();
    io::write_png_rgb8(fs::path(out_dir) / out_rec.rgb_path, styled);
    io::write_depth_auto(fs::path(out_dir) / out_rec.depth_path, depth);
    if (rec.camera == data::Camera::equirect) {
      out_rec.w = rgb.w;
      out_rec.h = rgb.h;
    }
    out_manifest.records.push_back(std::move(out_rec));
  }
  data::write_manifest(out_manifest, fs::path(out_dir) / "manifest.txt");
  return kExitOk;
}

int run_grid(int width, int height, int n, int stride, double dtheta,
             double dphi, const std::string& out_path) {
  geo::KernelSpec spec = geo::KernelSpec::for_image(n, width, height);
  if (dtheta > 0.0) spec.delta_theta = dtheta;
  if (dphi > 0.0) spec.delta_phi = dphi;
  geo::SamplingGrid grid = geo::build_sampling_grid(width, height, spec, stride);
  std::ofstream f(out_path);
  if (!f) throw IoError("cannot open " + out_path);
  geo::write_grid(grid, f);
  if (!f) throw IoError("grid write failed: " + out_path);
  return kExitOk;
}

int run_train(const CommonOpts& opts, const std::string& manifest_path,
              const std::string& out_dir, const std::string& split) {
  Config cfg = make_config(opts);
  model::ModelSpec spec = cfg.model_spec();
  model::HyperParams hp = cfg.hyper_params();
  uint64_t seed = cfg.seed();

  data::Manifest manifest = data::read_manifest(manifest_path);
  data::Dataset train_set = data::load_split(manifest, split);
  double target_app = cfg.target_angle_per_pixel();
  if (target_app > 0.0)
    for (data::ImagePair& p : train_set.pairs)
      if (p.camera == data::Camera::perspective)
        p = data::rescale_angle_per_pixel(p, target_app);

  fs::create_directories(out_dir);
  model::Model net = model::build_model(spec, seed);
  model::TrainLog log = model::train(net, train_set, hp, seed, out_dir);
  model::write_train_log(log, fs::path(out_dir) / "train_log.txt");
  return kExitOk;
}

model::Model load_model(const Config& cfg, const std::string& checkpoint) {
  model::Model net = model::build_model(cfg.model_spec(), cfg.seed());
  net.load(checkpoint);
  return net;
}

int run_eval(const CommonOpts& opts, const std::string& checkpoint,
             const std::string& manifest_path, const std::string& split) {
  Config cfg = make_config(opts);
  model::Model net = load_model(cfg, checkpoint);
  data::AugmentConfig aug = cfg.augment_config();

  data::Manifest manifest = data::read_manifest(manifest_path);
  data::Dataset split_set = data::load_split(manifest, split);
  metrics::EvalReport report =
      model::evaluate(net, split_set, aug.norm_mean, aug.norm_std);
  std::cout << metrics::report_text(report) << metrics::report_csv(report);
  return kExitOk;
}

int run_predict(const CommonOpts& opts, const std::string& checkpoint,
                const std::string& image_path, const std::string& out_path) {
  Config cfg = make_config(opts);
  model::Model net = load_model(cfg, checkpoint);
  data::AugmentConfig aug = cfg.augment_config();

  img::ImageU8 rgb = io::read_png_rgb8(image_path);
  img::DepthMap depth =
      model::predict(net, img::to_f64(rgb), aug.norm_mean, aug.norm_std);

  fs::path out(out_path);
  io::write_depth_png16(out, depth);
  fs::path viz = out.parent_path() / (out.stem().string() + "_viz.png");
  io::write_png_rgb8(viz, io::colorize_depth(depth, cfg.viz_d_max()));
  return kExitOk;
}

int dispatch(int argc, char** argv) {
  CLI::App app{"Depth estimation for synthetic underwater perspective and "
               "omnidirectional images"};
  app.require_subcommand(1);

  CommonOpts synth_opts, train_opts, eval_opts, predict_opts, config_opts;
  std::string manifest_path, out_dir, checkpoint, image_path, out_path;
  std::string train_split = "train", eval_split = "val";
  int grid_w = 0, grid_h = 0, grid_n = 3, grid_stride = 1;
  double grid_dtheta = 0.0, grid_dphi = 0.0;
  std::string grid_out;

  CLI::App* synth = app.add_subcommand(
      "synth", "style a manifest's RGB images as underwater");
  synth->add_option("manifest", manifest_path)->required();
  synth->add_option("--out", out_dir, "output directory")->required();
  add_common(synth, synth_opts);

  CLI::App* grid = app.add_subcommand(
      "grid", "dump a spherical sampling grid as text");
  grid->add_option("--width", grid_w)->required();
  grid->add_option("--height", grid_h)->required();
  grid->add_option("-n,--kernel", grid_n, "kernel side (odd)");
  grid->add_option("--stride", grid_stride);
  grid->add_option("--delta-theta", grid_dtheta,
                   "override angular step per column (rad)");
  grid->add_option("--delta-phi", grid_dphi,
                   "override angular step per row (rad)");
  grid->add_option("--out", grid_out)->required();

  CLI::App* train = app.add_subcommand("train", "train a depth network");
  train->add_option("manifest", manifest_path)->required();
  train->add_option("--out", out_dir)->required();
  train->add_option("--split", train_split, "manifest split to train on");
  add_common(train, train_opts);

  CLI::App* eval = app.add_subcommand("eval", "evaluate a checkpoint");
  eval->add_option("checkpoint", checkpoint)->required();
  eval->add_option("manifest", manifest_path)->required();
  eval->add_option("--split", eval_split, "manifest split to evaluate");
  add_common(eval, eval_opts);

  CLI::App* predict = app.add_subcommand(
      "predict", "predict depth for one image (16-bit mm PNG + colormap)");
  predict->add_option("checkpoint", checkpoint)->required();
  predict->add_option("image", image_path)->required();
  predict->add_option("--out", out_path, "output depth PNG path")->required();
  add_common(predict, predict_opts);

  CLI::App* config = app.add_subcommand(
      "config", "print the effective configuration with documentation");
  add_common(config, config_opts);

  CLI11_PARSE(app, argc, argv);

  if (synth->parsed()) return run_synth(synth_opts, manifest_path, out_dir);
  if (grid->parsed())
    return run_grid(grid_w, grid_h, grid_n, grid_stride, grid_dtheta,
                    grid_dphi, grid_out);
  if (train->parsed())
    return run_train(train_opts, manifest_path, out_dir, train_split);
  if (eval->parsed())
    return run_eval(eval_opts, checkpoint, manifest_path, eval_split);
  if (predict->parsed())
    return run_predict(predict_opts, checkpoint, image_path, out_path);
  if (config->parsed()) {
    std::cout << make_config(config_opts).dump();
    return kExitOk;
  }
  return kExitConfig;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return dispatch(argc, argv);
  } catch (const CheckpointVersionError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitCheckpoint;
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const ParamError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const SpecError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const SizeError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const EmptyDatasetError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitIo;
  } catch (const FormatError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitIo;
  } catch (const AlignmentError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitIo;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitIo;
  }
}
