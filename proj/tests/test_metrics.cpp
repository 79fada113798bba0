#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "testutil.hpp"
#include "uwdepth/metrics.hpp"

using namespace uwdepth;
using namespace uwdepth::metrics;

namespace {

// Independent oracle: recompute everything over flat vectors in one pass.
EvalReport flat_metrics(const std::vector<double>& pred,
                        const std::vector<double>& gt) {
  double sq = 0, ab = 0, rel = 0;
  long d1 = 0, d2 = 0, d3 = 0;
  long n = static_cast<long>(pred.size());
  for (size_t i = 0; i < pred.size(); ++i) {
    double e = pred[i] - gt[i];
    sq += e * e;
    ab += std::abs(e);
    rel += std::abs(e) / gt[i];
    double p = std::max(pred[i], 1e-6);
    double ratio = std::max(p / gt[i], gt[i] / p);
    if (ratio < 1.25) ++d1;
    if (ratio < 1.25 * 1.25) ++d2;
    if (ratio < 1.25 * 1.25 * 1.25) ++d3;
  }
  EvalReport r;
  r.rmse = std::sqrt(sq / n);
  r.mae = ab / n;
  r.rel = rel / n;
  r.delta1 = static_cast<double>(d1) / n;
  r.delta2 = static_cast<double>(d2) / n;
  r.delta3 = static_cast<double>(d3) / n;
  r.n_valid = n;
  return r;
}

}  // namespace

TEST_CASE("perfect prediction zeroes all errors") {
  img::DepthMap gt(2, 2);
  gt.v = {1.0, 2.0, 3.0, 4.0};
  MetricAccumulator acc;
  accumulate(acc, gt, gt);
  EvalReport r = finalize(acc);
  CHECK(r.rmse == 0.0);
  CHECK(r.mae == 0.0);
  CHECK(r.rel == 0.0);
  CHECK(r.delta1 == 1.0);
  CHECK(r.n_valid == 4);
}

TEST_CASE("hand-computed two-pixel case") {
  img::DepthMap pred(1, 2), gt(1, 2);
  pred.v = {2.0, 2.0};
  gt.v = {1.0, 3.0};
  MetricAccumulator acc;
  accumulate(acc, pred, gt);
  EvalReport r = finalize(acc);
  CHECK(r.rmse == doctest::Approx(1.0));
  CHECK(r.mae == doctest::Approx(1.0));
  CHECK(r.rel == doctest::Approx((1.0 + 1.0 / 3.0) / 2.0));
}

TEST_CASE("delta threshold boundary cases") {
  MetricAccumulator in, out;
  in.add(1.2, 1.0);
  CHECK(in.delta_counts[0] == 1);
  out.add(1.3, 1.0);
  CHECK(out.delta_counts[0] == 0);
  CHECK(out.delta_counts[1] == 1);  // 1.3 < 1.5625
}

TEST_CASE("zero prediction is clamped, not divided by") {
  MetricAccumulator acc;
  acc.add(0.0, 2.0);
  EvalReport r = finalize(acc);
  CHECK(std::isfinite(r.rmse));
  CHECK(r.delta3 == 0.0);
}

TEST_CASE("mask excludes pixels") {
  img::DepthMap pred(1, 3), gt(1, 3), mask(1, 3);
  pred.v = {1.0, 5.0, 3.0};
  gt.v = {1.0, 1.0, 3.0};
  mask.v = {1.0, 0.0, 1.0};
  MetricAccumulator acc;
  accumulate(acc, pred, gt, mask);
  EvalReport r = finalize(acc);
  CHECK(r.n_valid == 2);
  CHECK(r.mae == 0.0);
}

TEST_CASE("empty accumulator raises EmptyMaskError; mismatch ShapeError") {
  MetricAccumulator acc;
  CHECK_THROWS_AS(finalize(acc), EmptyMaskError);
  img::DepthMap a(1, 2), b(2, 1);
  CHECK_THROWS_AS(accumulate(acc, a, b), ShapeError);
}

TEST_CASE("accumulator equals the flat-vector oracle") {
  Rng rng(5);
  for (int rep = 0; rep < 20; ++rep) {
    long n = 50 + static_cast<long>(rng.integer(200));
    std::vector<double> pred(static_cast<size_t>(n)), gt(static_cast<size_t>(n));
    for (long i = 0; i < n; ++i) {
      gt[static_cast<size_t>(i)] = rng.uniform(0.2, 10.0);
      pred[static_cast<size_t>(i)] = rng.uniform(0.0, 12.0);
    }
    MetricAccumulator acc;
    for (long i = 0; i < n; ++i)
      acc.add(pred[static_cast<size_t>(i)], gt[static_cast<size_t>(i)]);
    EvalReport got = finalize(acc);
    EvalReport want = flat_metrics(pred, gt);
    CHECK(std::abs(got.rmse - want.rmse) < 1e-12);
    CHECK(std::abs(got.mae - want.mae) < 1e-12);
    CHECK(std::abs(got.rel - want.rel) < 1e-12);
    CHECK(got.delta1 == want.delta1);
    CHECK(got.delta2 == want.delta2);
    CHECK(got.delta3 == want.delta3);
  }
}

TEST_CASE("delta ordering and RMSE >= MAE on random accumulators") {
  Rng rng(9);
  for (int rep = 0; rep < 100; ++rep) {
    MetricAccumulator acc;
    long n = 10 + static_cast<long>(rng.integer(100));
    for (long i = 0; i < n; ++i)
      acc.add(rng.uniform(0.0, 12.0), rng.uniform(0.2, 10.0));
    EvalReport r = finalize(acc);
    CHECK(r.delta1 <= r.delta2);
    CHECK(r.delta2 <= r.delta3);
    CHECK(r.delta3 <= 1.0);
    CHECK(r.rmse >= r.mae - 1e-15);
  }
}

TEST_CASE("merging accumulators equals accumulating everything") {
  Rng rng(13);
  for (int rep = 0; rep < 20; ++rep) {
    MetricAccumulator whole, a, b, c;
    long n = 60 + static_cast<long>(rng.integer(60));
    for (long i = 0; i < n; ++i) {
      double pred = rng.uniform(0.0, 12.0);
      double gt = rng.uniform(0.2, 10.0);
      whole.add(pred, gt);
      (i % 3 == 0 ? a : i % 3 == 1 ? b : c).add(pred, gt);
    }
    // Merge in a different association order.
    MetricAccumulator merged = c;
    merged.merge(a);
    merged.merge(b);
    EvalReport rw = finalize(whole), rm = finalize(merged);
    CHECK(rw.n_valid == rm.n_valid);
    CHECK(rw.rmse == doctest::Approx(rm.rmse).epsilon(1e-12));
    CHECK(rw.mae == doctest::Approx(rm.mae).epsilon(1e-12));
    CHECK(rw.rel == doctest::Approx(rm.rel).epsilon(1e-12));
    CHECK(rw.delta1 == rm.delta1);
  }
}

TEST_CASE("report serialization carries the table columns") {
  MetricAccumulator acc;
  acc.add(1.0, 1.0);
  EvalReport r = finalize(acc);
  std::string text = report_text(r);
  CHECK(text.find("RMSE:") != std::string::npos);
  CHECK(text.find("MAE:") != std::string::npos);
  CHECK(text.find("REL:") != std::string::npos);
  CHECK(text.find("delta1:") != std::string::npos);
  std::string csv = report_csv(r);
  CHECK(csv.substr(0, 21) == "rmse,mae,rel,delta1\n");
}
