#pragma once

#include <filesystem>
#include <map>
#include <string>

#include "uwdepth/data.hpp"
#include "uwdepth/model.hpp"
#include "uwdepth/synthesis.hpp"

namespace uwdepth {

/// Nested key-value configuration ("[section]" + "key = value" lines, '#'
/// comments). Every key has a registered default; unknown keys are
/// rejected. Precedence: command-line overrides > file > defaults.
class Config {
 public:
  Config();

  /// Throws ConfigError on unknown keys or unreadable files.
  void load_file(const std::filesystem::path& path);
  /// Single "section.key" override.
  void set(const std::string& key, const std::string& value);

  std::string get_string(const std::string& key) const;
  double get_double(const std::string& key) const;
  long get_int(const std::string& key) const;
  bool get_bool(const std::string& key) const;
  std::vector<long> get_int_list(const std::string& key) const;
  std::array<double, 3> get_triple(const std::string& key) const;

  /// Full effective config with per-key documentation.
  std::string dump() const;

  // Typed views; each validates its section and reports offending keys.
  uint64_t seed() const;
  synth::SynthParams synth_params() const;
  data::AugmentConfig augment_config() const;
  model::ModelSpec model_spec() const;
  model::HyperParams hyper_params() const;
  double viz_d_max() const;
  double target_angle_per_pixel() const;

 private:
  struct Entry {
    std::string value;
    std::string def;
    std::string doc;
  };
  std::map<std::string, Entry> entries_;
  void require_key(const std::string& key) const;
};

}  // namespace uwdepth
