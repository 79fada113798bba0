#include "uwdepth/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

namespace uwdepth::metrics {

void MetricAccumulator::add(double pred, double gt) {
  double err = pred - gt;
  sum_sq_err += err * err;
  sum_abs_err += std::abs(err);
  sum_rel_err += std::abs(err) / gt;
  double safe_pred = std::max(pred, 1e-6);
  double ratio = std::max(safe_pred / gt, gt / safe_pred);
  double threshold = 1.25;
  for (int k = 0; k < 3; ++k) {
    if (ratio < threshold) ++delta_counts[k];
    threshold *= 1.25;
  }
  ++n_valid;
}

void MetricAccumulator::merge(const MetricAccumulator& other) {
  sum_sq_err += other.sum_sq_err;
  sum_abs_err += other.sum_abs_err;
  sum_rel_err += other.sum_rel_err;
  for (int k = 0; k < 3; ++k) delta_counts[k] += other.delta_counts[k];
  n_valid += other.n_valid;
}

void accumulate(MetricAccumulator& acc, const img::DepthMap& pred,
                const img::DepthMap& gt, const img::DepthMap& mask) {
  if (pred.h != gt.h || pred.w != gt.w || mask.h != gt.h || mask.w != gt.w)
    throw ShapeError("metrics: prediction/ground-truth/mask sizes differ");
  for (size_t i = 0; i < gt.v.size(); ++i)
    if (mask.v[i] > 0.5) acc.add(pred.v[i], gt.v[i]);
}

void accumulate(MetricAccumulator& acc, const img::DepthMap& pred,
                const img::DepthMap& gt) {
  if (pred.h != gt.h || pred.w != gt.w)
    throw ShapeError("metrics: prediction/ground-truth sizes differ");
  for (size_t i = 0; i < gt.v.size(); ++i)
    if (gt.v[i] > 0.0) acc.add(pred.v[i], gt.v[i]);
}

EvalReport finalize(const MetricAccumulator& acc) {
  if (acc.n_valid == 0)
    throw EmptyMaskError("metrics: no valid pixel accumulated");
  EvalReport r;
  double n = static_cast<double>(acc.n_valid);
  r.rmse = std::sqrt(acc.sum_sq_err / n);
  r.mae = acc.sum_abs_err / n;
  r.rel = acc.sum_rel_err / n;
  r.delta1 = acc.delta_counts[0] / n;
  r.delta2 = acc.delta_counts[1] / n;
  r.delta3 = acc.delta_counts[2] / n;
  r.n_valid = acc.n_valid;
  return r;
}

std::string report_text(const EvalReport& r) {
  char buf[256];
  std::snprintf(buf, sizeof buf,
                "RMSE: %.6f\nMAE: %.6f\nREL: %.6f\ndelta1: %.6f\n"
                "delta2: %.6f\ndelta3: %.6f\nn_valid: %ld\n",
                r.rmse, r.mae, r.rel, r.delta1, r.delta2, r.delta3, r.n_valid);
  return buf;
}

std::string report_csv(const EvalReport& r) {
  char buf[160];
  std::snprintf(buf, sizeof buf, "rmse,mae,rel,delta1\n%.6f,%.6f,%.6f,%.6f\n",
                r.rmse, r.mae, r.rel, r.delta1);
  return buf;
}

}  // namespace uwdepth::metrics
