#include <doctest.h>

#include <random>

#include "greenwave/classify.hpp"

using namespace greenwave;

namespace {

BucketMetrics metrics(std::optional<std::int64_t> cd, std::optional<double> wtd) {
  BucketMetrics m;
  m.median_cycle_discrepancy_s = cd;
  m.wait_time_diversity = wtd;
  m.cycle_count = 10;
  return m;
}

}  // namespace

TEST_CASE("quadrant mapping at the default thresholds") {
  CHECK(classify(metrics(2, 0.10)) == PredictabilityClass::HighBothStable);
  CHECK(classify(metrics(7, 0.35)) == PredictabilityClass::Low);
  CHECK(classify(metrics(7, 0.10)) ==
        PredictabilityClass::HighCycleStackingUnsuitable);
  CHECK(classify(metrics(2, 0.35)) ==
        PredictabilityClass::HighWaitTimeUnpredictable);
  CHECK(classify(metrics(2, std::nullopt)) == PredictabilityClass::Indeterminate);
  CHECK(classify(metrics(std::nullopt, 0.1)) == PredictabilityClass::Indeterminate);
}

TEST_CASE("strict inequality at the boundary") {
  CHECK(classify(metrics(5, 0.20)) == PredictabilityClass::HighBothStable);
  CHECK(classify(metrics(6, 0.20)) ==
        PredictabilityClass::HighCycleStackingUnsuitable);
  CHECK(classify(metrics(5, 0.21)) ==
        PredictabilityClass::HighWaitTimeUnpredictable);
}

TEST_CASE("custom thresholds") {
  Thresholds strict{1, 0.05};
  CHECK(classify(metrics(2, 0.10), strict) == PredictabilityClass::Low);
}

TEST_CASE("raising a threshold never demotes a bucket to Low") {
  std::mt19937_64 rng(4);
  std::uniform_int_distribution<std::int64_t> cd(0, 20);
  std::uniform_real_distribution<double> wtd(0.0, 1.0);
  std::uniform_int_distribution<std::int64_t> cd_thr(0, 15);
  std::uniform_real_distribution<double> wtd_thr(0.0, 0.9);
  for (int trial = 0; trial < 2000; ++trial) {
    auto m = metrics(cd(rng), wtd(rng));
    Thresholds base{cd_thr(rng), wtd_thr(rng)};
    Thresholds raised{base.cycle_discrepancy_s + 3,
                      base.wait_time_diversity + 0.05};
    auto before = classify(m, base);
    auto after = classify(m, raised);
    if (before != PredictabilityClass::Low)
      CHECK(after != PredictabilityClass::Low);
  }
}

TEST_CASE("mapping is exhaustive and exclusive over the metric plane") {
  for (std::int64_t cd = 0; cd <= 12; ++cd) {
    for (double wtd = 0.0; wtd <= 1.0; wtd += 0.05) {
      auto c = classify(metrics(cd, wtd));
      CHECK(c != PredictabilityClass::Indeterminate);
    }
  }
}
