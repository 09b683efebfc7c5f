#pragma once

// Cycle reconstruction: turns one light's time-ordered observation
// stream into per-second color sequences between consecutive cycle
// starts. Between state changes the last state is held; the state at a
// cycle start is carried across the boundary.

#include <cstdint>
#include <optional>
#include <vector>

#include "greenwave/model.hpp"

namespace greenwave {

struct ReconstructOptions {
  // Spans longer than this are treated as non-reconstructible (lost
  // cycle starts); the length pruning rule handles anything subtler.
  std::int64_t max_cycle_length_s = 600;
};

struct ReconstructStats {
  std::uint64_t cycle_starts = 0;
  std::uint64_t reconstructed = 0;
  std::uint64_t skipped_spans = 0;     // unknown state or over-long span
  std::int64_t skipped_seconds = 0;
};

// Observations must belong to exactly one light and be time-ordered
// (CycleStart before StateChange on ties, as the partitioner emits).
// Trailing observations after the final CycleStart form no cycle.
inline std::vector<Cycle> reconstruct_cycles(
    const std::vector<Observation>& observations,
    const ReconstructOptions& options, ReconstructStats& stats) {
  std::vector<Cycle> cycles;
  std::optional<SignalState> current_state;
  std::optional<std::string> current_program;
  std::optional<std::int64_t> open_start;
  std::optional<SignalState> open_initial;  // state at open_start
  // state changes within the open span, as (offset, state)
  std::vector<std::pair<std::int64_t, SignalState>> changes;

  auto close_span = [&](std::int64_t end, const std::string& light_id) {
    if (!open_start) return;
    std::int64_t span = end - *open_start;
    if (span <= 0) return;  // duplicate cycle start, ignore
    if (!open_initial || span > options.max_cycle_length_s) {
      ++stats.skipped_spans;
      stats.skipped_seconds += span;
      return;
    }
    Cycle cycle;
    cycle.light_id = light_id;
    cycle.start = *open_start;
    cycle.program_id = current_program;
    cycle.states.assign(static_cast<std::size_t>(span), *open_initial);
    for (const auto& [offset, state] : changes) {
      for (std::int64_t i = offset; i < span; ++i)
        cycle.states[static_cast<std::size_t>(i)] = state;
    }
    ++stats.reconstructed;
    cycles.push_back(std::move(cycle));
  };

  for (const auto& obs : observations) {
    if (std::holds_alternative<CycleStart>(obs.kind)) {
      ++stats.cycle_starts;
      close_span(obs.timestamp, obs.light_id);
      open_start = obs.timestamp;
      open_initial = current_state;
      changes.clear();
    } else if (const auto* change = std::get_if<StateChange>(&obs.kind)) {
      current_state = change->state;
      if (open_start) {
        std::int64_t offset = obs.timestamp - *open_start;
        if (offset <= 0) {
          open_initial = change->state;  // change at the start second
          changes.clear();
        } else {
          changes.emplace_back(offset, change->state);
        }
      }
    } else if (const auto* prog = std::get_if<ProgramChange>(&obs.kind)) {
      current_program = prog->program_id;
    }
    // DetectorChange does not affect reconstruction.
  }
  return cycles;
}

}  // namespace greenwave
