#pragma once

// Maps a bucket's metric pair onto the predictability quadrants.

#include <cstdint>
#include <string_view>

#include "greenwave/model.hpp"

namespace greenwave {

enum class PredictabilityClass : std::uint8_t {
  HighBothStable,              // low discrepancy, low diversity
  HighCycleStackingUnsuitable, // high discrepancy, low diversity
  HighWaitTimeUnpredictable,   // low discrepancy, high diversity
  Low,                         // both high
  Indeterminate,               // a metric is absent
};

constexpr std::string_view class_name(PredictabilityClass c) {
  switch (c) {
    case PredictabilityClass::HighBothStable: return "high_both_stable";
    case PredictabilityClass::HighCycleStackingUnsuitable:
      return "high_cycle_stacking_unsuitable";
    case PredictabilityClass::HighWaitTimeUnpredictable:
      return "high_wait_time_unpredictable";
    case PredictabilityClass::Low: return "low";
    case PredictabilityClass::Indeterminate: return "indeterminate";
  }
  return "?";
}

struct Thresholds {
  std::int64_t cycle_discrepancy_s = 5;
  double wait_time_diversity = 0.20;
};

// "High" means strictly above the threshold on either axis.
inline PredictabilityClass classify(const BucketMetrics& metrics,
                                    const Thresholds& thresholds = {}) {
  if (!metrics.median_cycle_discrepancy_s || !metrics.wait_time_diversity)
    return PredictabilityClass::Indeterminate;
  bool cd_high = *metrics.median_cycle_discrepancy_s > thresholds.cycle_discrepancy_s;
  bool wtd_high = *metrics.wait_time_diversity > thresholds.wait_time_diversity;
  if (cd_high && wtd_high) return PredictabilityClass::Low;
  if (cd_high) return PredictabilityClass::HighCycleStackingUnsuitable;
  if (wtd_high) return PredictabilityClass::HighWaitTimeUnpredictable;
  return PredictabilityClass::HighBothStable;
}

}  // namespace greenwave
