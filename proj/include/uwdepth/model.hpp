#pragma once

#include <filesystem>
#include <string>
#include <unordered_map>
#include <vector>

#include "uwdepth/data.hpp"
#include "uwdepth/metrics.hpp"
#include "uwdepth/optim.hpp"
#include "uwdepth/sphere_ops.hpp"
#include "uwdepth/tensor.hpp"

namespace uwdepth::model {

enum class Variant { planar, spherical };

struct StageSpec {
  int channels = 16;
  int blocks = 2;
  int stride = 1;
};

/// Encoder-decoder depth network description. The planar and spherical
/// variants share this graph; they differ only in which convolution and
/// pooling operators realize it.
struct ModelSpec {
  Variant variant = Variant::planar;
  int in_ch = 3;
  int in_h = 64;
  int in_w = 64;
  int stem_channels = 16;
  bool stem_pool = true;  // 3x3 stride-2 max pool after the stem
  std::vector<StageSpec> stages{{16, 2, 1}, {32, 2, 2}, {64, 2, 2}};
  std::vector<int> decoder_channels{32, 16, 16};
  int kernel = 3;
  /// Planar-only alternative decoder: stride-2 transposed convolution
  /// instead of upsample + conv.
  bool planar_deconv = false;

  int total_stride() const;
  /// Throws SpecError on inconsistent shapes (input not divisible by the
  /// stride product, decoder length not matching it, spherical input not
  /// 2:1, ...).
  void validate() const;

  static ModelSpec planar_tiny(int h, int w);
  static ModelSpec spherical_tiny(int h, int w);
};

struct Model {
  ModelSpec spec;
  std::vector<ad::Parameter> params;  // deterministic construction order

  ad::Tensor& param(const std::string& name);
  const ad::Tensor& param(const std::string& name) const;

  /// batch[N,3,H,W] -> depth[N,1,H,W] in meters (final ReLU keeps it
  /// non-negative). Training mode drives batch-norm statistics.
  ad::Tensor forward(const ad::Tensor& batch, bool training);

  void save(const std::filesystem::path& path) const;
  /// Loads a checkpoint written for the same spec; name or shape mismatch
  /// is a FormatError, version mismatch a CheckpointVersionError.
  void load(const std::filesystem::path& path);

 private:
  std::unordered_map<std::string, size_t> index_;
  friend Model build_model(const ModelSpec& spec, uint64_t seed);

  ad::Tensor conv_named(const std::string& name, const ad::Tensor& x,
                        int stride);
  ad::Tensor bn_named(const std::string& name, const ad::Tensor& x,
                      bool training);
  ad::Tensor basic_block(const std::string& name, const ad::Tensor& x,
                         long out_ch, int stride, bool training);
  ad::Tensor pool(const ad::Tensor& x);
};

/// Deterministic initialization from the seed: Kaiming-style fan-in scaled
/// uniform conv weights, zero biases, unit batch-norm scales.
Model build_model(const ModelSpec& spec, uint64_t seed);

struct HyperParams {
  double lr0 = 0.01;
  double momentum = 0.9;
  double weight_decay = 1e-4;
  double lr_decay_factor = 0.8;
  int lr_decay_every = 5;
  int batch_size = 16;
  int epochs = 30;
  bool augment = true;
  data::AugmentConfig aug;
};

struct EpochRecord {
  int epoch = 0;
  double lr = 0.0;
  double mean_l1 = 0.0;
  double seconds = 0.0;
};

/// Line-oriented training log, one record per epoch.
struct TrainLog {
  std::vector<EpochRecord> epochs;
};

void write_train_log(const TrainLog& log, const std::filesystem::path& path);

/// SGD training with the paper-style schedule. When out_dir is non-empty an
/// initial checkpoint and one per epoch are written there. Deterministic
/// given (model, dataset, hp, seed).
TrainLog train(Model& model, const data::Dataset& train_set,
               const HyperParams& hp, uint64_t seed,
               const std::filesystem::path& out_dir = {});

/// Single-image prediction at the image's own resolution (the network runs
/// at spec resolution; the result is resized back).
img::DepthMap predict(Model& model, const img::ImageF64& rgb_raw,
                      const std::array<double, 3>& norm_mean,
                      const std::array<double, 3>& norm_std);

/// Aggregated metrics over all valid pixels of the split; predictions are
/// resized to ground-truth resolution first.
metrics::EvalReport evaluate(Model& model, const data::Dataset& split,
                             const std::array<double, 3>& norm_mean,
                             const std::array<double, 3>& norm_std);

}  // namespace uwdepth::model
