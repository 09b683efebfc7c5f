#pragma once

// The two instability metrics (cycle discrepancy, wait time diversity)
// and green-length statistics per hourly bucket. All functions are pure;
// bucket-level computations are freely parallel.

#include <algorithm>
#include <cstdint>
#include <cstring>
#include <set>
#include <stdexcept>
#include <vector>

#include "greenwave/bucket.hpp"
#include "greenwave/model.hpp"

namespace greenwave {

// Seconds of second-wise disagreement between two cycles aligned at
// index 0; every second past the shorter cycle's end counts as one.
// Symmetric, zero iff the state sequences are identical.
inline std::int64_t cycle_discrepancy(const Cycle& c1, const Cycle& c2) {
  if (c1.states.empty() || c2.states.empty())
    throw std::invalid_argument("cycle_discrepancy: empty cycle");
  const std::size_t l1 = c1.states.size(), l2 = c2.states.size();
  const std::size_t common = std::min(l1, l2);
  std::int64_t overhang = static_cast<std::int64_t>(std::max(l1, l2) - common);
  if (l1 == l2 &&
      std::memcmp(c1.states.data(), c2.states.data(), common) == 0)
    return 0;
  std::int64_t mismatches = 0;
  for (std::size_t i = 0; i < common; ++i)
    mismatches += c1.states[i] != c2.states[i];
  return mismatches + overhang;
}

namespace detail {

// Lower-middle median; keeps integer inputs integral.
template <typename T>
T lower_middle_median(std::vector<T> values) {
  std::sort(values.begin(), values.end());
  return values[(values.size() - 1) / 2];
}

}  // namespace detail

// Median over all unordered pairs of distinct cycles, weeks pooled.
// Absent for buckets with fewer than two cycles.
inline std::optional<std::int64_t> median_cycle_discrepancy(
    const HourlyBucket& bucket) {
  const auto& cycles = bucket.cycles;
  if (cycles.size() < 2) return std::nullopt;
  std::vector<std::int64_t> pairs;
  pairs.reserve(cycles.size() * (cycles.size() - 1) / 2);
  for (std::size_t i = 0; i < cycles.size(); ++i)
    for (std::size_t j = i + 1; j < cycles.size(); ++j)
      pairs.push_back(cycle_discrepancy(cycles[i], cycles[j]));
  return detail::lower_middle_median(std::move(pairs));
}

// Total green seconds in a cycle, all green runs summed.
inline std::int64_t green_length(const Cycle& cycle) {
  return std::count(cycle.states.begin(), cycle.states.end(),
                    SignalState::Green);
}

inline std::optional<std::int64_t> median_green_length(
    const HourlyBucket& bucket) {
  if (bucket.cycles.empty()) return std::nullopt;
  std::vector<std::int64_t> lengths;
  lengths.reserve(bucket.cycles.size());
  for (const auto& cycle : bucket.cycles) lengths.push_back(green_length(cycle));
  return detail::lower_middle_median(std::move(lengths));
}

// Maximal green runs in a timeline, as (offset, length) pairs.
inline std::vector<std::pair<std::size_t, std::size_t>> green_runs(
    const std::vector<SignalState>& states) {
  std::vector<std::pair<std::size_t, std::size_t>> runs;
  std::size_t i = 0;
  while (i < states.size()) {
    if (states[i] != SignalState::Green) {
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j < states.size() && states[j] == SignalState::Green) ++j;
    runs.emplace_back(i, j - i);
    i = j;
  }
  return runs;
}

// Non-green seconds between each maximal green run and its successor
// within the timeline. A trailing green run contributes nothing.
inline std::vector<std::int64_t> wait_times(
    const std::vector<SignalState>& states) {
  auto runs = green_runs(states);
  std::vector<std::int64_t> waits;
  for (std::size_t k = 0; k + 1 < runs.size(); ++k) {
    std::size_t gap_start = runs[k].first + runs[k].second;
    waits.push_back(static_cast<std::int64_t>(runs[k + 1].first - gap_start));
  }
  return waits;
}

// Distinct wait times / total wait times, pooled over all of the
// bucket's continuous sequences. Absent when no wait time exists.
inline std::optional<double> wait_time_diversity(
    const std::vector<Sequence>& sequences) {
  std::vector<std::int64_t> pooled;
  for (const auto& seq : sequences) {
    auto waits = wait_times(seq.states);
    pooled.insert(pooled.end(), waits.begin(), waits.end());
  }
  if (pooled.empty()) return std::nullopt;
  std::set<std::int64_t> distinct(pooled.begin(), pooled.end());
  return static_cast<double>(distinct.size()) /
         static_cast<double>(pooled.size());
}

inline BucketMetrics bucket_metrics(const HourlyBucket& bucket,
                                    const std::vector<Sequence>& sequences) {
  BucketMetrics m;
  m.cycle_count = bucket.cycles.size();
  m.median_cycle_discrepancy_s = median_cycle_discrepancy(bucket);
  m.median_green_length_s = median_green_length(bucket);
  std::uint64_t waits = 0;
  for (const auto& seq : sequences) {
    auto runs = green_runs(seq.states);
    m.green_phase_count += runs.size();
    if (runs.size() > 1) waits += runs.size() - 1;
  }
  m.wait_time_count = waits;
  m.wait_time_diversity = wait_time_diversity(sequences);
  return m;
}

inline BucketMetrics bucket_metrics(const HourlyBucket& bucket) {
  return bucket_metrics(bucket, build_sequences(bucket));
}

}  // namespace greenwave
