#pragma once

#include <string>

#include "uwdepth/image.hpp"

namespace uwdepth::metrics {

/// Final metric set over a dataset split (Table-style column order
/// RMSE, MAE, REL, delta1 in the CSV form).
struct EvalReport {
  double rmse = 0.0;
  double mae = 0.0;
  double rel = 0.0;
  double delta1 = 0.0;
  double delta2 = 0.0;
  double delta3 = 0.0;
  long n_valid = 0;
};

/// Streaming sufficient statistics; accumulators merge associatively, so
/// evaluation can shard pixels freely.
struct MetricAccumulator {
  double sum_sq_err = 0.0;
  double sum_abs_err = 0.0;
  double sum_rel_err = 0.0;
  long delta_counts[3] = {0, 0, 0};  // thresholds 1.25, 1.25^2, 1.25^3
  long n_valid = 0;

  /// One valid pixel (gt > 0 required). Prediction is clamped to 1e-6
  /// before the ratio test.
  void add(double pred, double gt);
  void merge(const MetricAccumulator& other);
};

/// Accumulates every pixel where mask > 0.5. Throws ShapeError on size
/// mismatch.
void accumulate(MetricAccumulator& acc, const img::DepthMap& pred,
                const img::DepthMap& gt, const img::DepthMap& mask);

/// Convenience overload with the standard validity mask gt > 0.
void accumulate(MetricAccumulator& acc, const img::DepthMap& pred,
                const img::DepthMap& gt);

/// Throws EmptyMaskError when nothing was accumulated.
EvalReport finalize(const MetricAccumulator& acc);

/// "key: value" lines for all six metrics plus pixel count.
std::string report_text(const EvalReport& r);

/// Header + one row, columns rmse,mae,rel,delta1.
std::string report_csv(const EvalReport& r);

}  // namespace uwdepth::metrics
