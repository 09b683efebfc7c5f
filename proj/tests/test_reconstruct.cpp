#include <doctest.h>

#include <random>

#include "greenwave/reconstruct.hpp"
#include "oracle.hpp"

using namespace greenwave;

namespace {

std::vector<Observation> stream(
    std::initializer_list<std::pair<std::int64_t, ObservationKind>> events) {
  std::vector<Observation> out;
  for (const auto& [t, kind] : events) out.push_back({"tl", t, kind});
  return out;
}

}  // namespace

TEST_CASE("hold-last-state fill between changes") {
  ReconstructStats stats;
  auto cycles = reconstruct_cycles(
      stream({{0, CycleStart{}},
              {0, StateChange{SignalState::Green}},
              {30, StateChange{SignalState::Red}},
              {60, CycleStart{}}}),
      {}, stats);
  REQUIRE(cycles.size() == 1);
  CHECK(cycles[0].length_s() == 60);
  for (int i = 0; i < 30; ++i) CHECK(cycles[0].states[i] == SignalState::Green);
  for (int i = 30; i < 60; ++i) CHECK(cycles[0].states[i] == SignalState::Red);
  CHECK(stats.cycle_starts == 2);
  CHECK(stats.reconstructed == 1);
}

TEST_CASE("unknown state at span start is skipped and counted") {
  ReconstructStats stats;
  auto cycles = reconstruct_cycles(
      stream({{0, CycleStart{}},
              {10, StateChange{SignalState::Green}},  // first state mid-span
              {60, CycleStart{}}}),
      {}, stats);
  CHECK(cycles.empty());
  CHECK(stats.skipped_spans == 1);
  CHECK(stats.skipped_seconds == 60);
}

TEST_CASE("state carries across the cycle boundary") {
  ReconstructStats stats;
  auto cycles = reconstruct_cycles(
      stream({{0, CycleStart{}},
              {0, StateChange{SignalState::Green}},
              {30, StateChange{SignalState::Red}},
              {60, CycleStart{}},
              {70, StateChange{SignalState::Green}},
              {120, CycleStart{}}}),
      {}, stats);
  REQUIRE(cycles.size() == 2);
  for (int i = 0; i < 10; ++i) CHECK(cycles[1].states[i] == SignalState::Red);
  CHECK(cycles[1].states[10] == SignalState::Green);
}

TEST_CASE("trailing observations after the final cycle start form no cycle") {
  ReconstructStats stats;
  auto cycles = reconstruct_cycles(
      stream({{0, StateChange{SignalState::Red}},
              {5, CycleStart{}},
              {20, StateChange{SignalState::Green}}}),
      {}, stats);
  CHECK(cycles.empty());
  CHECK(stats.cycle_starts == 1);
}

TEST_CASE("max-cycle-length guard skips over-long spans") {
  ReconstructStats stats;
  ReconstructOptions options;
  options.max_cycle_length_s = 100;
  auto cycles = reconstruct_cycles(
      stream({{0, StateChange{SignalState::Red}},
              {0, CycleStart{}},
              {150, CycleStart{}},
              {200, CycleStart{}}}),
      options, stats);
  REQUIRE(cycles.size() == 1);
  CHECK(cycles[0].start == 150);
  CHECK(stats.skipped_spans == 1);
  CHECK(stats.skipped_seconds == 150);
}

TEST_CASE("program changes annotate but never split cycles") {
  ReconstructStats stats;
  auto cycles = reconstruct_cycles(
      stream({{0, StateChange{SignalState::Red}},
              {0, CycleStart{}},
              {30, ProgramChange{"p2"}},
              {60, CycleStart{}},
              {120, CycleStart{}}}),
      {}, stats);
  REQUIRE(cycles.size() == 2);
  CHECK(cycles[0].length_s() == 60);
  CHECK(cycles[0].program_id == "p2");
  CHECK(cycles[1].program_id == "p2");
}

TEST_CASE("duplicate cycle starts at the same second are ignored") {
  ReconstructStats stats;
  auto cycles = reconstruct_cycles(
      stream({{0, StateChange{SignalState::Red}},
              {0, CycleStart{}},
              {0, CycleStart{}},
              {60, CycleStart{}}}),
      {}, stats);
  CHECK(cycles.size() == 1);
}

TEST_CASE("oracle equivalence on random streams") {
  std::mt19937_64 rng(23);
  std::uniform_int_distribution<int> state(0, 4), step(1, 9), coin(0, 3);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<Observation> obs;
    std::int64_t t = 0;
    obs.push_back({"tl", 0, StateChange{static_cast<SignalState>(state(rng))}});
    std::vector<std::int64_t> starts;
    for (int i = 0; i < 40; ++i) {
      t += step(rng);
      if (coin(rng) == 0) {
        obs.push_back({"tl", t, CycleStart{}});
        starts.push_back(t);
      } else {
        obs.push_back({"tl", t, StateChange{static_cast<SignalState>(state(rng))}});
      }
    }
    ReconstructStats stats;
    auto cycles = reconstruct_cycles(obs, {}, stats);

    // Every reconstructed cycle must equal the brute-force replay.
    for (const auto& cycle : cycles) {
      auto replayed = oracle::replay(obs, cycle.start, cycle.end());
      REQUIRE(replayed.size() == cycle.states.size());
      for (std::size_t i = 0; i < replayed.size(); ++i) {
        REQUIRE(replayed[i].has_value());
        CHECK(*replayed[i] == cycle.states[i]);
      }
    }
    // Conservation: cycle seconds plus skipped seconds cover the span.
    if (starts.size() >= 2) {
      std::int64_t covered = starts.back() - starts.front();
      std::int64_t cycle_seconds = 0;
      for (const auto& c : cycles) cycle_seconds += c.length_s();
      CHECK(cycle_seconds + stats.skipped_seconds == covered);
    }
    CHECK(stats.reconstructed + stats.skipped_spans + 1 ==
          std::max<std::size_t>(starts.size(), 1));
  }
}
