#pragma once

// Data-quality pruning: duration limits on (red-)amber, disallowed state
// transitions, neighbor-relative length outliers, discontinuity
// bookkeeping, and the per-light exclusion rule.

#include <algorithm>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "greenwave/model.hpp"

namespace greenwave {

enum class CycleErrorKind : std::uint8_t {
  AmberTooLong,
  RedAmberTooLong,
  ForbiddenTransition,
  LengthOutlier,
};

struct CycleError {
  CycleErrorKind kind;
  // Set for ForbiddenTransition only.
  std::optional<std::pair<SignalState, SignalState>> transition;

  bool operator==(const CycleError&) const = default;
};

struct PruneOptions {
  std::int64_t amber_max_s = 6;
  std::int64_t red_amber_max_s = 2;
  // Cycles per side feeding the neighbor-length median.
  int neighbor_window = 2;
  double length_upper_factor = 1.5;
  double length_lower_factor = 0.5;
};

// Maximal-run duration limits. Runs truncated by the cycle boundary are
// measured as seen, never stitched across cycles.
inline std::vector<CycleError> check_durations(
    const Cycle& cycle, const PruneOptions& options = {}) {
  std::vector<CycleError> errors;
  bool amber_flagged = false, red_amber_flagged = false;
  std::size_t i = 0;
  const auto& states = cycle.states;
  while (i < states.size()) {
    std::size_t j = i;
    while (j < states.size() && states[j] == states[i]) ++j;
    std::int64_t run = static_cast<std::int64_t>(j - i);
    if (states[i] == SignalState::Amber && run > options.amber_max_s &&
        !amber_flagged) {
      errors.push_back({CycleErrorKind::AmberTooLong, {}});
      amber_flagged = true;
    }
    if (states[i] == SignalState::RedAmber && run > options.red_amber_max_s &&
        !red_amber_flagged) {
      errors.push_back({CycleErrorKind::RedAmberTooLong, {}});
      red_amber_flagged = true;
    }
    i = j;
  }
  return errors;
}

constexpr bool is_forbidden_transition(SignalState from, SignalState to) {
  using S = SignalState;
  return (from == S::Red && to == S::Amber) ||
         (from == S::Amber && to == S::Green) ||
         (from == S::Amber && to == S::RedAmber) ||
         (from == S::Green && to == S::RedAmber) ||
         (from == S::RedAmber && to == S::Red) ||
         (from == S::RedAmber && to == S::Amber);
}

// One error per occurrence of a disallowed adjacent-second transition.
inline std::vector<CycleError> check_transitions(const Cycle& cycle) {
  std::vector<CycleError> errors;
  const auto& states = cycle.states;
  for (std::size_t i = 1; i < states.size(); ++i) {
    if (states[i - 1] != states[i] &&
        is_forbidden_transition(states[i - 1], states[i])) {
      errors.push_back({CycleErrorKind::ForbiddenTransition,
                        std::make_pair(states[i - 1], states[i])});
    }
  }
  return errors;
}

// Lower-middle median, keeping results integral.
inline std::int64_t lower_median(std::vector<std::int64_t> values) {
  std::sort(values.begin(), values.end());
  return values[(values.size() - 1) / 2];
}

// Length outlier relative to the median length of up to 2+2 surrounding
// cycles. No error when no neighbor is available.
inline std::vector<CycleError> check_length(const Cycle& cycle,
                                            std::span<const Cycle> before,
                                            std::span<const Cycle> after,
                                            const PruneOptions& options = {}) {
  std::vector<std::int64_t> lengths;
  for (const auto& c : before) lengths.push_back(c.length_s());
  for (const auto& c : after) lengths.push_back(c.length_s());
  if (lengths.empty()) return {};
  double m = static_cast<double>(lower_median(std::move(lengths)));
  double len = static_cast<double>(cycle.length_s());
  if (len > options.length_upper_factor * m ||
      len < options.length_lower_factor * m)
    return {{CycleErrorKind::LengthOutlier, {}}};
  return {};
}

struct PruneStats {
  std::uint64_t removed = 0;
  std::uint64_t discontinuities = 0;
  std::uint64_t amber_too_long = 0;
  std::uint64_t red_amber_too_long = 0;
  std::uint64_t forbidden_transition = 0;
  std::uint64_t length_outlier = 0;

  void count(const CycleError& error) {
    switch (error.kind) {
      case CycleErrorKind::AmberTooLong: ++amber_too_long; break;
      case CycleErrorKind::RedAmberTooLong: ++red_amber_too_long; break;
      case CycleErrorKind::ForbiddenTransition: ++forbidden_transition; break;
      case CycleErrorKind::LengthOutlier: ++length_outlier; break;
    }
  }
};

inline std::vector<CycleError> check_cycle(const std::vector<Cycle>& cycles,
                                           std::size_t index,
                                           const PruneOptions& options) {
  const Cycle& cycle = cycles[index];
  auto errors = check_durations(cycle, options);
  auto transitions = check_transitions(cycle);
  errors.insert(errors.end(), transitions.begin(), transitions.end());
  std::size_t w = static_cast<std::size_t>(options.neighbor_window);
  std::size_t lo = index >= w ? index - w : 0;
  std::size_t hi = std::min(cycles.size(), index + 1 + w);
  auto length = check_length(
      cycle, std::span<const Cycle>(cycles.data() + lo, index - lo),
      std::span<const Cycle>(cycles.data() + index + 1, hi - index - 1),
      options);
  errors.insert(errors.end(), length.begin(), length.end());
  return errors;
}

// Removes every cycle carrying at least one error. Neighbor windows for
// the length rule come from the reconstructed (pre-prune) stream. A
// discontinuity is a removal whose temporal predecessor and successor
// were both kept and exactly adjacent to the removed cycle.
inline std::vector<Cycle> prune(const std::vector<Cycle>& cycles,
                                const PruneOptions& options,
                                PruneStats& stats) {
  std::vector<bool> keep(cycles.size(), true);
  for (std::size_t i = 0; i < cycles.size(); ++i) {
    auto errors = check_cycle(cycles, i, options);
    if (errors.empty()) continue;
    keep[i] = false;
    ++stats.removed;
    for (const auto& e : errors) stats.count(e);
  }
  std::vector<Cycle> kept;
  kept.reserve(cycles.size());
  for (std::size_t i = 0; i < cycles.size(); ++i) {
    if (keep[i]) {
      kept.push_back(cycles[i]);
      continue;
    }
    if (i > 0 && i + 1 < cycles.size() && keep[i - 1] && keep[i + 1] &&
        cycles[i - 1].end() == cycles[i].start &&
        cycles[i].end() == cycles[i + 1].start) {
      ++stats.discontinuities;
    }
  }
  return kept;
}

// A light is excluded when more than max_ratio of its reconstructed
// cycles were removed (strict inequality), or nothing was reconstructed.
inline bool is_excluded(std::uint64_t reconstructed, std::uint64_t removed,
                        double max_ratio = 0.10) {
  if (reconstructed == 0) return true;
  return static_cast<double>(removed) >
         max_ratio * static_cast<double>(reconstructed);
}

// Per-light validation record as exported to the store.
struct LightValidationReport {
  std::string light_id;
  std::uint64_t cycle_starts = 0;
  std::uint64_t reconstructed = 0;
  std::uint64_t skipped_spans = 0;
  std::uint64_t removed = 0;
  std::uint64_t amber_too_long = 0;
  std::uint64_t red_amber_too_long = 0;
  std::uint64_t forbidden_transition = 0;
  std::uint64_t length_outlier = 0;
  std::uint64_t discontinuities = 0;
  bool excluded = false;

  double removal_ratio() const {
    return reconstructed == 0
               ? 0.0
               : static_cast<double>(removed) / static_cast<double>(reconstructed);
  }
};

inline void to_json(nlohmann::json& j, const LightValidationReport& r) {
  j = nlohmann::json{{"light_id", r.light_id},
                     {"cycle_starts", r.cycle_starts},
                     {"reconstructed", r.reconstructed},
                     {"skipped_spans", r.skipped_spans},
                     {"removed", r.removed},
                     {"errors",
                      {{"amber_too_long", r.amber_too_long},
                       {"red_amber_too_long", r.red_amber_too_long},
                       {"forbidden_transition", r.forbidden_transition},
                       {"length_outlier", r.length_outlier}}},
                     {"discontinuities", r.discontinuities},
                     {"removal_ratio", r.removal_ratio()},
                     {"excluded", r.excluded}};
}

inline void from_json(const nlohmann::json& j, LightValidationReport& r) {
  r = LightValidationReport{};
  r.light_id = j.at("light_id").get<std::string>();
  r.cycle_starts = j.at("cycle_starts").get<std::uint64_t>();
  r.reconstructed = j.at("reconstructed").get<std::uint64_t>();
  r.skipped_spans = j.at("skipped_spans").get<std::uint64_t>();
  r.removed = j.at("removed").get<std::uint64_t>();
  const auto& e = j.at("errors");
  r.amber_too_long = e.at("amber_too_long").get<std::uint64_t>();
  r.red_amber_too_long = e.at("red_amber_too_long").get<std::uint64_t>();
  r.forbidden_transition = e.at("forbidden_transition").get<std::uint64_t>();
  r.length_outlier = e.at("length_outlier").get<std::uint64_t>();
  r.discontinuities = j.at("discontinuities").get<std::uint64_t>();
  r.excluded = j.at("excluded").get<bool>();
}

}  // namespace greenwave
