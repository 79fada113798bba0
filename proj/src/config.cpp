#include "uwdepth/config.hpp"

#include <fstream>
#include <sstream>

namespace uwdepth {

namespace {

std::string trim(const std::string& s) {
  size_t a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  size_t b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

}  // namespace

Config::Config() {
  auto reg = [this](const std::string& key, const std::string& def,
                    const std::string& doc) {
    entries_[key] = Entry{def, def, doc};
  };
  reg("seed", "42", "global RNG seed for init, shuffling and augmentation");

  reg("synthesis.gamma", "0.6", "red attenuation factor, in (0, 1)");
  reg("synthesis.depth_step", "2.0", "meters of depth per blur band");
  reg("synthesis.sigma_scale", "0.3333333333333333",
      "Gaussian sigma as a fraction of the kernel radius");
  reg("synthesis.green_tint", "1.0", "green channel multiplier");
  reg("synthesis.blue_tint", "1.0", "blue channel multiplier");

  reg("augment.scale_min", "1.0", "lower bound of the scale range");
  reg("augment.scale_max", "1.5", "upper bound of the scale range");
  reg("augment.rotation_deg", "5.0",
      "rotation range in degrees (equirect: longitude roll range)");
  reg("augment.flip_prob", "0.5", "horizontal flip probability");
  reg("augment.jitter", "0.1", "per-channel color gain range");
  reg("augment.norm_mean", "0.5,0.5,0.5", "normalization mean per channel");
  reg("augment.norm_std", "0.5,0.5,0.5", "normalization std per channel");
  reg("augment.crop_h", "0", "center crop height, 0 disables");
  reg("augment.crop_w", "0", "center crop width, 0 disables");

  reg("model.variant", "spherical", "planar | spherical");
  reg("model.input_h", "64", "network input height");
  reg("model.input_w", "128", "network input width (2x height for spherical)");
  reg("model.stem_channels", "16", "channels after the stem conv");
  reg("model.stem_pool", "true", "3x3 stride-2 max pool after the stem");
  reg("model.stage_channels", "16,32,64", "encoder stage channels");
  reg("model.stage_blocks", "2,2,2", "residual blocks per stage");
  reg("model.stage_strides", "1,2,2", "first-block stride per stage");
  reg("model.decoder_channels", "32,16,16", "decoder stage channels");
  reg("model.kernel", "3", "convolution kernel side (odd)");
  reg("model.planar_deconv", "false",
      "planar decoder uses stride-2 transposed conv instead of upsample+conv");

  reg("train.lr", "0.01", "start learning rate");
  reg("train.momentum", "0.9", "SGD momentum");
  reg("train.weight_decay", "0.0001", "L2 weight decay on conv weights");
  reg("train.lr_decay_factor", "0.8", "learning-rate decay factor");
  reg("train.lr_decay_every", "5", "epochs between decays, <= 0 disables");
  reg("train.batch_size", "16", "mini-batch size");
  reg("train.epochs", "30", "training epochs");
  reg("train.augment", "true", "apply data augmentation during training");

  reg("data.target_angle_per_pixel", "0.0",
      "rescale perspective pairs to this rad/pixel, 0 disables");

  reg("viz.d_max", "10.0", "depth clamp for colormapped visualizations");
}

void Config::require_key(const std::string& key) const {
  if (!entries_.count(key)) throw ConfigError("unknown config key '" + key + "'");
}

void Config::load_file(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot open config file " + path.string());
  std::string line, section;
  int lineno = 0;
  while (std::getline(f, line)) {
    ++lineno;
    std::string t = trim(line);
    if (t.empty() || t[0] == '#' || t[0] == ';') continue;
    if (t.front() == '[') {
      if (t.back() != ']')
        throw ConfigError("config line " + std::to_string(lineno) +
                          ": malformed section header");
      section = trim(t.substr(1, t.size() - 2));
      continue;
    }
    size_t eq = t.find('=');
    if (eq == std::string::npos)
      throw ConfigError("config line " + std::to_string(lineno) +
                        ": expected key = value");
    std::string key = trim(t.substr(0, eq));
    std::string value = trim(t.substr(eq + 1));
    if (!section.empty()) key = section + "." + key;
    set(key, value);
  }
}

void Config::set(const std::string& key, const std::string& value) {
  require_key(key);
  entries_[key].value = value;
}

std::string Config::get_string(const std::string& key) const {
  require_key(key);
  return entries_.at(key).value;
}

double Config::get_double(const std::string& key) const {
  std::string v = get_string(key);
  try {
    size_t pos = 0;
    double d = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return d;
  } catch (const std::exception&) {
    throw ConfigError("config key '" + key + "': expected a number, got '" +
                      v + "'");
  }
}

long Config::get_int(const std::string& key) const {
  std::string v = get_string(key);
  try {
    size_t pos = 0;
    long i = std::stol(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return i;
  } catch (const std::exception&) {
    throw ConfigError("config key '" + key + "': expected an integer, got '" +
                      v + "'");
  }
}

bool Config::get_bool(const std::string& key) const {
  std::string v = get_string(key);
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw ConfigError("config key '" + key + "': expected a boolean, got '" + v +
                    "'");
}

std::vector<long> Config::get_int_list(const std::string& key) const {
  std::string v = get_string(key);
  std::vector<long> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    try {
      size_t pos = 0;
      out.push_back(std::stol(item, &pos));
      if (pos != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw ConfigError("config key '" + key + "': expected integers, got '" +
                        v + "'");
    }
  }
  if (out.empty())
    throw ConfigError("config key '" + key + "': empty list");
  return out;
}

std::array<double, 3> Config::get_triple(const std::string& key) const {
  std::string v = get_string(key);
  std::array<double, 3> out{};
  std::stringstream ss(v);
  std::string item;
  int i = 0;
  while (std::getline(ss, item, ',')) {
    if (i >= 3) break;
    try {
      out[static_cast<size_t>(i++)] = std::stod(trim(item));
    } catch (const std::exception&) {
      throw ConfigError("config key '" + key +
                        "': expected three numbers, got '" + v + "'");
    }
  }
  if (i != 3)
    throw ConfigError("config key '" + key +
                      "': expected three comma-separated numbers");
  return out;
}

std::string Config::dump() const {
  std::string out;
  std::string section;
  for (const auto& [key, e] : entries_) {
    size_t dot = key.find('.');
    std::string sec = dot == std::string::npos ? "" : key.substr(0, dot);
    std::string name = dot == std::string::npos ? key : key.substr(dot + 1);
    if (sec != section) {
      section = sec;
      out += "\n[" + section + "]\n";
    }
    out += "# " + e.doc + " (default: " + e.def + ")\n";
    out += name + " = " + e.value + "\n";
  }
  return out;
}

uint64_t Config::seed() const {
  long s = get_int("seed");
  if (s < 0) throw ConfigError("config key 'seed': must be non-negative");
  return static_cast<uint64_t>(s);
}

synth::SynthParams Config::synth_params() const {
  synth::SynthParams p;
  p.gamma = get_double("synthesis.gamma");
  p.depth_step = get_double("synthesis.depth_step");
  p.sigma_scale = get_double("synthesis.sigma_scale");
  p.green_tint = get_double("synthesis.green_tint");
  p.blue_tint = get_double("synthesis.blue_tint");
  try {
    p.validate();
  } catch (const ParamError& e) {
    throw ConfigError(e.what());
  }
  return p;
}

data::AugmentConfig Config::augment_config() const {
  data::AugmentConfig cfg;
  cfg.scale_min = get_double("augment.scale_min");
  cfg.scale_max = get_double("augment.scale_max");
  cfg.rotation_deg = get_double("augment.rotation_deg");
  cfg.flip_prob = get_double("augment.flip_prob");
  cfg.jitter = get_double("augment.jitter");
  cfg.norm_mean = get_triple("augment.norm_mean");
  cfg.norm_std = get_triple("augment.norm_std");
  cfg.crop_h = static_cast<int>(get_int("augment.crop_h"));
  cfg.crop_w = static_cast<int>(get_int("augment.crop_w"));
  try {
    cfg.validate();
  } catch (const ParamError& e) {
    throw ConfigError(std::string("[augment] ") + e.what());
  }
  return cfg;
}

model::ModelSpec Config::model_spec() const {
  model::ModelSpec spec;
  std::string variant = get_string("model.variant");
  if (variant == "planar")
    spec.variant = model::Variant::planar;
  else if (variant == "spherical")
    spec.variant = model::Variant::spherical;
  else
    throw ConfigError("config key 'model.variant': expected planar|spherical");
  spec.in_h = static_cast<int>(get_int("model.input_h"));
  spec.in_w = static_cast<int>(get_int("model.input_w"));
  spec.stem_channels = static_cast<int>(get_int("model.stem_channels"));
  spec.stem_pool = get_bool("model.stem_pool");
  spec.kernel = static_cast<int>(get_int("model.kernel"));
  spec.planar_deconv = get_bool("model.planar_deconv");
  auto ch = get_int_list("model.stage_channels");
  auto bl = get_int_list("model.stage_blocks");
  auto st = get_int_list("model.stage_strides");
  if (ch.size() != bl.size() || ch.size() != st.size())
    throw ConfigError(
        "model.stage_channels/blocks/strides must have equal lengths");
  spec.stages.clear();
  for (size_t i = 0; i < ch.size(); ++i)
    spec.stages.push_back(model::StageSpec{static_cast<int>(ch[i]),
                                           static_cast<int>(bl[i]),
                                           static_cast<int>(st[i])});
  spec.decoder_channels.clear();
  for (long c : get_int_list("model.decoder_channels"))
    spec.decoder_channels.push_back(static_cast<int>(c));
  try {
    spec.validate();
  } catch (const SpecError& e) {
    throw ConfigError(std::string("[model] ") + e.what());
  }
  return spec;
}

model::HyperParams Config::hyper_params() const {
  model::HyperParams hp;
  hp.lr0 = get_double("train.lr");
  hp.momentum = get_double("train.momentum");
  hp.weight_decay = get_double("train.weight_decay");
  hp.lr_decay_factor = get_double("train.lr_decay_factor");
  hp.lr_decay_every = static_cast<int>(get_int("train.lr_decay_every"));
  hp.batch_size = static_cast<int>(get_int("train.batch_size"));
  hp.epochs = static_cast<int>(get_int("train.epochs"));
  hp.augment = get_bool("train.augment");
  hp.aug = augment_config();
  if (hp.lr0 <= 0.0) throw ConfigError("config key 'train.lr': must be > 0");
  if (hp.momentum < 0.0 || hp.momentum >= 1.0)
    throw ConfigError("config key 'train.momentum': must lie in [0, 1)");
  if (hp.batch_size < 1)
    throw ConfigError("config key 'train.batch_size': must be >= 1");
  if (hp.epochs < 0)
    throw ConfigError("config key 'train.epochs': must be >= 0");
  return hp;
}

double Config::viz_d_max() const {
  double d = get_double("viz.d_max");
  if (d <= 0.0) throw ConfigError("config key 'viz.d_max': must be > 0");
  return d;
}

double Config::target_angle_per_pixel() const {
  return get_double("data.target_angle_per_pixel");
}

}  // namespace uwdepth
