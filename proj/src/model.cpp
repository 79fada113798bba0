#include "uwdepth/model.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>

#include "uwdepth/checkpoint.hpp"
#include "uwdepth/ops.hpp"

namespace uwdepth::model {

using ad::Tensor;

int ModelSpec::total_stride() const {
  int s = stem_pool ? 2 : 1;
  for (const StageSpec& st : stages) s *= st.stride;
  return s;
}

void ModelSpec::validate() const {
  if (in_ch < 1 || in_h < 1 || in_w < 1)
    throw SpecError("model: input dims must be positive");
  if (kernel < 1 || kernel % 2 == 0)
    throw SpecError("model: kernel side must be odd");
  if (stem_channels < 1) throw SpecError("model: stem_channels must be >= 1");
  if (stages.empty()) throw SpecError("model: at least one encoder stage");
  for (const StageSpec& st : stages)
    if (st.channels < 1 || st.blocks < 1 || st.stride < 1)
      throw SpecError("model: invalid stage descriptor");
  int s = total_stride();
  long expect = 1l << decoder_channels.size();
  if (expect != s)
    throw SpecError("model: decoder must undo the encoder stride (stride " +
                    std::to_string(s) + ", " +
                    std::to_string(decoder_channels.size()) +
                    " upsample stages)");
  if (in_h % s != 0 || in_w % s != 0)
    throw SpecError("model: input dims must be divisible by the stride product " +
                    std::to_string(s));
  if (variant == Variant::spherical && in_w != 2 * in_h)
    throw SpecError("model: spherical variant requires W = 2H input");
  if (planar_deconv && variant == Variant::spherical)
    throw SpecError("model: transposed-conv decoder is planar-only");
  for (int c : decoder_channels)
    if (c < 1) throw SpecError("model: invalid decoder channels");
}

ModelSpec ModelSpec::planar_tiny(int h, int w) {
  ModelSpec spec;
  spec.variant = Variant::planar;
  spec.in_h = h;
  spec.in_w = w;
  return spec;
}

ModelSpec ModelSpec::spherical_tiny(int h, int w) {
  ModelSpec spec;
  spec.variant = Variant::spherical;
  spec.in_h = h;
  spec.in_w = w;
  return spec;
}

Tensor& Model::param(const std::string& name) {
  auto it = index_.find(name);
  if (it == index_.end()) throw SpecError("model: unknown parameter " + name);
  return params[it->second].tensor;
}

const Tensor& Model::param(const std::string& name) const {
  auto it = index_.find(name);
  if (it == index_.end()) throw SpecError("model: unknown parameter " + name);
  return params[it->second].tensor;
}

namespace {

Tensor kaiming_uniform(const ad::Shape& shape, long fan_in, Rng& rng) {
  Tensor t = Tensor::zeros(shape);
  double bound = std::sqrt(6.0 / static_cast<double>(fan_in));
  for (long i = 0; i < t.size(); ++i)
    t.values()[i] = rng.uniform(-bound, bound);
  return t;
}

}  // namespace

Model build_model(const ModelSpec& spec, uint64_t seed) {
  spec.validate();
  Model m;
  m.spec = spec;
  Rng rng(seed);

  auto add = [&m](const std::string& name, Tensor t, bool learnable,
                  bool decay) {
    t.set_requires_grad(learnable);
    m.index_[name] = m.params.size();
    m.params.push_back(ad::Parameter{name, std::move(t), learnable, decay});
  };
  auto add_conv = [&](const std::string& name, long f, long c, long k) {
    add(name + ".weight", kaiming_uniform({f, c, k, k}, c * k * k, rng), true,
        true);
    add(name + ".bias", Tensor::zeros({f}), true, false);
  };
  auto add_bn = [&](const std::string& name, long c) {
    add(name + ".gamma", Tensor::full({c}, 1.0), true, false);
    add(name + ".beta", Tensor::zeros({c}), true, false);
    add(name + ".running_mean", Tensor::zeros({c}), false, false);
    add(name + ".running_var", Tensor::full({c}, 1.0), false, false);
  };

  long k = spec.kernel;
  add_conv("stem.conv", spec.stem_channels, spec.in_ch, k);
  add_bn("stem.bn", spec.stem_channels);

  long ch = spec.stem_channels;
  for (size_t si = 0; si < spec.stages.size(); ++si) {
    const StageSpec& st = spec.stages[si];
    for (int b = 0; b < st.blocks; ++b) {
      std::string base = "s" + std::to_string(si) + ".b" + std::to_string(b);
      int stride = b == 0 ? st.stride : 1;
      add_conv(base + ".conv1", st.channels, ch, k);
      add_bn(base + ".bn1", st.channels);
      add_conv(base + ".conv2", st.channels, st.channels, k);
      add_bn(base + ".bn2", st.channels);
      if (stride != 1 || ch != st.channels) {
        add_conv(base + ".down.conv", st.channels, ch, 1);
        add_bn(base + ".down.bn", st.channels);
      }
      ch = st.channels;
    }
  }

  for (size_t di = 0; di < spec.decoder_channels.size(); ++di) {
    std::string base = "dec" + std::to_string(di);
    long dc = spec.decoder_channels[di];
    if (spec.planar_deconv) {
      // Transposed conv weight is [in, out, 2, 2]; no bias (BN follows).
      add(base + ".tconv.weight", kaiming_uniform({ch, dc, 2, 2}, dc * 4, rng),
          true, true);
    } else {
      add_conv(base + ".conv", dc, ch, k);
    }
    add_bn(base + ".bn", dc);
    ch = dc;
  }

  add_conv("head.conv", 1, ch, k);
  return m;
}

Tensor Model::conv_named(const std::string& name, const Tensor& x,
                         int stride) {
  const Tensor& w = param(name + ".weight");
  const Tensor& b = param(name + ".bias");
  int k = static_cast<int>(w.dim(3));
  // A 1x1 kernel has no spatial support; both variants use the planar path.
  if (spec.variant == Variant::planar || k == 1)
    return ad::conv2d(x, w, b, stride, (k - 1) / 2);
  int width = static_cast<int>(x.dim(3)), height = static_cast<int>(x.dim(2));
  auto plan = sph::cached_plan(
      width, height, geo::KernelSpec::for_image(k, width, height), stride);
  return sph::sphere_conv2d(x, w, b, plan);
}

Tensor Model::bn_named(const std::string& name, const Tensor& x,
                       bool training) {
  return ad::batchnorm(x, param(name + ".gamma"), param(name + ".beta"),
                       param(name + ".running_mean"),
                       param(name + ".running_var"), training);
}

Tensor Model::pool(const Tensor& x) {
  if (spec.variant == Variant::planar) return ad::maxpool2d(x, 3, 2, 1);
  int width = static_cast<int>(x.dim(3)), height = static_cast<int>(x.dim(2));
  auto plan = sph::cached_plan(
      width, height, geo::KernelSpec::for_image(3, width, height), 2);
  return sph::sphere_pool(x, plan, sph::PoolMode::max);
}

Tensor Model::basic_block(const std::string& name, const Tensor& x,
                          long out_ch, int stride, bool training) {
  Tensor y = conv_named(name + ".conv1", x, stride);
  y = ad::relu(bn_named(name + ".bn1", y, training));
  y = conv_named(name + ".conv2", y, 1);
  y = bn_named(name + ".bn2", y, training);
  Tensor identity = x;
  if (stride != 1 || x.dim(1) != out_ch) {
    identity = conv_named(name + ".down.conv", x, stride);
    identity = bn_named(name + ".down.bn", identity, training);
  }
  return ad::relu(ad::add(y, identity));
}

Tensor Model::forward(const Tensor& batch, bool training) {
  if (batch.rank() != 4 || batch.dim(1) != spec.in_ch ||
      batch.dim(2) != spec.in_h || batch.dim(3) != spec.in_w)
    throw ShapeError("forward: batch " + ad::shape_str(batch.shape()) +
                     " does not match model input " +
                     std::to_string(spec.in_ch) + "x" +
                     std::to_string(spec.in_h) + "x" +
                     std::to_string(spec.in_w));

  Tensor x = conv_named("stem.conv", batch, 1);
  x = ad::relu(bn_named("stem.bn", x, training));
  if (spec.stem_pool) x = pool(x);

  for (size_t si = 0; si < spec.stages.size(); ++si) {
    const StageSpec& st = spec.stages[si];
    for (int b = 0; b < st.blocks; ++b) {
      std::string base = "s" + std::to_string(si) + ".b" + std::to_string(b);
      x = basic_block(base, x, st.channels, b == 0 ? st.stride : 1, training);
    }
  }

  for (size_t di = 0; di < spec.decoder_channels.size(); ++di) {
    std::string base = "dec" + std::to_string(di);
    if (spec.planar_deconv) {
      x = ad::transposed_conv2d(x, param(base + ".tconv.weight"), 2);
    } else {
      x = ad::upsample_nearest2(x);
      x = conv_named(base + ".conv", x, 1);
    }
    x = ad::relu(bn_named(base + ".bn", x, training));
  }

  Tensor y = ad::relu(conv_named("head.conv", x, 1));
  if (y.dim(2) != spec.in_h || y.dim(3) != spec.in_w)
    y = ad::resize_bilinear(y, spec.in_h, spec.in_w);
  return y;
}

void Model::save(const std::filesystem::path& path) const {
  io::save_checkpoint(path, params);
}

void Model::load(const std::filesystem::path& path) {
  auto entries = io::load_checkpoint(path);
  if (entries.size() != params.size())
    throw FormatError("checkpoint: expected " + std::to_string(params.size()) +
                      " records, got " + std::to_string(entries.size()));
  for (const io::CheckpointEntry& e : entries) {
    auto it = index_.find(e.name);
    if (it == index_.end())
      throw FormatError("checkpoint: unknown parameter '" + e.name + "'");
    Tensor& t = params[it->second].tensor;
    if (t.shape() != e.shape)
      throw FormatError("checkpoint: shape mismatch for '" + e.name + "'");
    t.values() = Eigen::Map<const Eigen::ArrayXd>(
        e.data.data(), static_cast<long>(e.data.size()));
    t.zero_grad();
  }
}

namespace {

// Stacks normalized pairs into network input / target / mask tensors,
// resizing to the model resolution when needed.
struct BatchTensors {
  Tensor input, target, mask;
};

data::ImagePair fit_to(const data::ImagePair& pair, int h, int w) {
  if (pair.rgb.h == h && pair.rgb.w == w) return pair;
  data::ImagePair out = pair;
  out.rgb = img::resize_bilinear(pair.rgb, h, w);
  out.depth = img::resize_nearest(pair.depth, h, w);
  return out;
}

BatchTensors make_batch(const std::vector<const data::ImagePair*>& pairs,
                        const ModelSpec& spec) {
  long n = static_cast<long>(pairs.size());
  long hw = static_cast<long>(spec.in_h) * spec.in_w;
  BatchTensors b;
  b.input = Tensor::zeros({n, spec.in_ch, spec.in_h, spec.in_w});
  b.target = Tensor::zeros({n, 1, spec.in_h, spec.in_w});
  b.mask = Tensor::zeros({n, 1, spec.in_h, spec.in_w});
  for (long i = 0; i < n; ++i) {
    const data::ImagePair& p = *pairs[static_cast<size_t>(i)];
    for (int c = 0; c < spec.in_ch; ++c)
      std::copy(p.rgb.plane(c), p.rgb.plane(c) + hw,
                b.input.data() + (i * spec.in_ch + c) * hw);
    for (long j = 0; j < hw; ++j) {
      double d = p.depth.v[static_cast<size_t>(j)];
      b.target.data()[i * hw + j] = d;
      b.mask.data()[i * hw + j] = d > 0.0 ? 1.0 : 0.0;
    }
  }
  return b;
}

img::DepthMap tensor_to_depth(const Tensor& y, long batch_index) {
  long h = y.dim(2), w = y.dim(3);
  img::DepthMap d(static_cast<int>(h), static_cast<int>(w));
  const double* src = y.data() + batch_index * h * w;
  std::copy(src, src + h * w, d.v.begin());
  return d;
}

img::ImageF64 normalize_rgb(const img::ImageF64& rgb,
                            const std::array<double, 3>& mean,
                            const std::array<double, 3>& std) {
  img::ImageF64 out = rgb;
  for (int c = 0; c < out.ch; ++c) {
    double m = mean[static_cast<size_t>(c)], s = std[static_cast<size_t>(c)];
    double* p = out.plane(c);
    for (int i = 0; i < out.h * out.w; ++i) p[i] = (p[i] - m) / s;
  }
  return out;
}

}  // namespace

void write_train_log(const TrainLog& log, const std::filesystem::path& path) {
  std::ofstream f(path);
  if (!f) throw IoError("cannot open train log " + path.string());
  f << "# epoch lr mean_l1 wall_time_s\n";
  char buf[160];
  for (const EpochRecord& e : log.epochs) {
    std::snprintf(buf, sizeof buf, "%d %.8g %.8g %.3f\n", e.epoch, e.lr,
                  e.mean_l1, e.seconds);
    f << buf;
  }
}

TrainLog train(Model& model, const data::Dataset& train_set,
               const HyperParams& hp, uint64_t seed,
               const std::filesystem::path& out_dir) {
  if (train_set.pairs.empty())
    throw EmptyDatasetError("train: empty training split");

  auto ckpt_path = [&out_dir](const std::string& name) {
    return out_dir / name;
  };
  if (!out_dir.empty()) model.save(ckpt_path("checkpoint_init.bin"));

  ad::OptimizerState opt;
  opt.momentum = hp.momentum;
  opt.weight_decay = hp.weight_decay;

  data::AugmentConfig eval_cfg = data::AugmentConfig::identity();
  eval_cfg.norm_mean = hp.aug.norm_mean;
  eval_cfg.norm_std = hp.aug.norm_std;
  eval_cfg.crop_h = hp.aug.crop_h;
  eval_cfg.crop_w = hp.aug.crop_w;
  const data::AugmentConfig& cfg = hp.augment ? hp.aug : eval_cfg;

  TrainLog log;
  size_t count = train_set.pairs.size();
  std::vector<size_t> order(count);
  std::iota(order.begin(), order.end(), 0);

  for (int epoch = 0; epoch < hp.epochs; ++epoch) {
    auto t0 = std::chrono::steady_clock::now();
    double lr = ad::lr_schedule(epoch, hp.lr0, hp.lr_decay_factor,
                                hp.lr_decay_every);
    opt.learning_rate = lr;
    opt.epoch = epoch;

    Rng shuffle_rng(derive_seed(seed, "shuffle", static_cast<uint64_t>(epoch)));
    for (size_t i = count; i > 1; --i)
      std::swap(order[i - 1], order[shuffle_rng.integer(i)]);

    double loss_sum = 0.0;
    long sample_count = 0;
    size_t batch = std::max(1, hp.batch_size);
    for (size_t start = 0; start < count; start += batch) {
      size_t stop = std::min(count, start + batch);
      std::vector<data::ImagePair> augmented;
      std::vector<const data::ImagePair*> ptrs;
      augmented.reserve(stop - start);
      for (size_t i = start; i < stop; ++i) {
        const data::ImagePair& p = train_set.pairs[order[i]];
        Rng aug_rng(derive_seed(seed, p.id, static_cast<uint64_t>(epoch)));
        augmented.push_back(
            fit_to(data::augment(p, cfg, aug_rng), model.spec.in_h,
                   model.spec.in_w));
      }
      for (const data::ImagePair& p : augmented) ptrs.push_back(&p);

      BatchTensors b = make_batch(ptrs, model.spec);
      b.input.set_requires_grad(false);
      Tensor pred = model.forward(b.input, /*training=*/true);
      Tensor loss = ad::l1_loss(pred, b.target, b.mask);
      ad::backward(loss);
      ad::sgd_step(model.params, opt);

      long bs = static_cast<long>(stop - start);
      loss_sum += loss.item() * bs;
      sample_count += bs;
    }

    double seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
            .count();
    double mean_l1 = loss_sum / sample_count;
    if (!std::isfinite(mean_l1))
      throw Error("train: loss diverged at epoch " + std::to_string(epoch));
    log.epochs.push_back(EpochRecord{epoch, lr, mean_l1, seconds});

    if (!out_dir.empty()) {
      char name[64];
      std::snprintf(name, sizeof name, "checkpoint_epoch_%03d.bin", epoch);
      model.save(ckpt_path(name));
    }
  }
  return log;
}

img::DepthMap predict(Model& model, const img::ImageF64& rgb_raw,
                      const std::array<double, 3>& norm_mean,
                      const std::array<double, 3>& norm_std) {
  ad::NoGradGuard no_grad;
  data::ImagePair pair;
  pair.rgb = normalize_rgb(rgb_raw, norm_mean, norm_std);
  pair.depth = img::DepthMap(rgb_raw.h, rgb_raw.w);
  data::ImagePair fitted = fit_to(pair, model.spec.in_h, model.spec.in_w);
  std::vector<const data::ImagePair*> ptrs{&fitted};
  BatchTensors b = make_batch(ptrs, model.spec);
  Tensor pred = model.forward(b.input, /*training=*/false);
  img::DepthMap d = tensor_to_depth(pred, 0);
  if (d.h == rgb_raw.h && d.w == rgb_raw.w) return d;
  // Bilinear resize back to the caller's resolution.
  img::ImageF64 plane(d.h, d.w, 1);
  std::copy(d.v.begin(), d.v.end(), plane.v.begin());
  img::ImageF64 resized = img::resize_bilinear(plane, rgb_raw.h, rgb_raw.w);
  img::DepthMap out(rgb_raw.h, rgb_raw.w);
  std::copy(resized.v.begin(), resized.v.end(), out.v.begin());
  return out;
}

metrics::EvalReport evaluate(Model& model, const data::Dataset& split,
                             const std::array<double, 3>& norm_mean,
                             const std::array<double, 3>& norm_std) {
  metrics::MetricAccumulator acc;
  for (const data::ImagePair& pair : split.pairs) {
    img::DepthMap pred = predict(model, pair.rgb, norm_mean, norm_std);
    metrics::accumulate(acc, pred, pair.depth);
  }
  return metrics::finalize(acc);
}

}  // namespace uwdepth::model
