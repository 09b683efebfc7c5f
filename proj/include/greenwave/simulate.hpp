#pragma once

// Signal-program generator for synthetic traffic lights at the three
// short-term adaptivity levels, plus deterministic error injection with
// a fault ledger. Output uses the same observation vocabulary as the
// ingest wire format, so simulated and recorded data are interchangeable.

#include <algorithm>
#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "greenwave/model.hpp"

namespace greenwave {

enum class AdaptivityLevel : std::uint8_t {
  FixedTime,         // level 1: identical cycles forever
  PartiallyAdaptive, // level 2: green shifts/stretches, cycle time constant
  FullyAdaptive,     // level 3: free switching under min/max green
};

inline std::optional<AdaptivityLevel> level_from_name(std::string_view name) {
  if (name == "fixed" || name == "fixed-time") return AdaptivityLevel::FixedTime;
  if (name == "partial" || name == "partially-adaptive")
    return AdaptivityLevel::PartiallyAdaptive;
  if (name == "full" || name == "fully-adaptive")
    return AdaptivityLevel::FullyAdaptive;
  return std::nullopt;
}

constexpr std::string_view level_name(AdaptivityLevel level) {
  switch (level) {
    case AdaptivityLevel::FixedTime: return "fixed";
    case AdaptivityLevel::PartiallyAdaptive: return "partial";
    case AdaptivityLevel::FullyAdaptive: return "full";
  }
  return "?";
}

struct ProgramSpec {
  std::string light_id = "tl_0";
  AdaptivityLevel level = AdaptivityLevel::FixedTime;

  // Levels 1-2: the base program.
  std::int64_t cycle_length_s = 60;
  std::int64_t green_offset_s = 10;  // green start within the cycle
  std::int64_t green_base_s = 20;    // base green length

  // Level 2: green start may shift within [-min_shift, +min_shift] and
  // green length extend within [0, max_extend], both demand-driven.
  std::int64_t min_shift_s = 0;
  std::int64_t max_extend_s = 0;

  // Level 3.
  std::int64_t min_green_s = 5;
  std::optional<std::int64_t> max_green_s;  // unset: no forced switch
  std::int64_t marker_interval_s = 60;      // free-running cycle markers
  std::int64_t service_base_s = 5;          // red per demand service
  std::int64_t service_per_arrival_s = 2;
  std::int64_t service_jitter_s = 15;       // secondary-traffic variation
  std::int64_t max_service_s = 60;

  // Demand: arrivals per hour, flat or scheduled over the UTC day.
  double demand_rate = 0.0;
  std::optional<std::array<double, 24>> hourly_demand;

  // Transition states.
  bool uses_amber = true;
  std::int64_t amber_s = 3;
  std::int64_t red_amber_s = 1;

  std::uint64_t seed = 1;

  double rate_at(std::int64_t epoch_s) const {
    if (!hourly_demand) return demand_rate;
    std::int64_t rem = ((epoch_s % 86400) + 86400) % 86400;
    return (*hourly_demand)[static_cast<std::size_t>(rem / 3600)];
  }

  // Returns an error message for infeasible programs, nullopt if valid.
  std::optional<std::string> validate() const {
    if (min_green_s < 1) return "min_green_s must be >= 1";
    if (amber_s < 0 || red_amber_s < 0) return "negative transition duration";
    if (level != AdaptivityLevel::FullyAdaptive) {
      if (cycle_length_s < 1) return "cycle_length_s must be >= 1";
      if (green_base_s < 1) return "green_base_s must be >= 1";
      if (min_shift_s < 0 || max_extend_s < 0) return "negative extension range";
      std::int64_t head = uses_amber ? red_amber_s : 0;
      if (green_offset_s - min_shift_s - head < 1)
        return "green window leaves no red head within the cycle";
      std::int64_t tail = uses_amber ? amber_s : 0;
      if (green_offset_s + min_shift_s + green_base_s + max_extend_s + tail +
              1 > cycle_length_s)
        return "green window does not fit in cycle_length_s";
    }
    if (demand_rate < 0) return "negative demand_rate";
    if (hourly_demand) {
      for (double r : *hourly_demand)
        if (r < 0) return "negative hourly demand";
    }
    return std::nullopt;
  }
};

inline void to_json(nlohmann::json& j, const ProgramSpec& s) {
  j = nlohmann::json{{"light_id", s.light_id},
                     {"level", level_name(s.level)},
                     {"cycle_length_s", s.cycle_length_s},
                     {"green_window", {{"offset_s", s.green_offset_s},
                                       {"length_s", s.green_base_s}}},
                     {"extension_range_s", {s.min_shift_s, s.max_extend_s}},
                     {"min_green_s", s.min_green_s},
                     {"marker_interval_s", s.marker_interval_s},
                     {"service_base_s", s.service_base_s},
                     {"service_per_arrival_s", s.service_per_arrival_s},
                     {"service_jitter_s", s.service_jitter_s},
                     {"max_service_s", s.max_service_s},
                     {"demand_rate", s.demand_rate},
                     {"uses_amber", s.uses_amber},
                     {"amber_s", s.amber_s},
                     {"red_amber_s", s.red_amber_s},
                     {"seed", s.seed}};
  if (s.max_green_s) j["max_green_s"] = *s.max_green_s;
  if (s.hourly_demand) j["hourly_demand"] = *s.hourly_demand;
}

inline void from_json(const nlohmann::json& j, ProgramSpec& s) {
  s = ProgramSpec{};
  s.light_id = j.at("light_id").get<std::string>();
  auto level = level_from_name(j.at("level").get<std::string>());
  if (!level) throw std::runtime_error("unknown adaptivity level");
  s.level = *level;
  if (j.contains("cycle_length_s")) s.cycle_length_s = j.at("cycle_length_s").get<std::int64_t>();
  if (j.contains("green_window")) {
    s.green_offset_s = j.at("green_window").at("offset_s").get<std::int64_t>();
    s.green_base_s = j.at("green_window").at("length_s").get<std::int64_t>();
  }
  if (j.contains("extension_range_s")) {
    s.min_shift_s = j.at("extension_range_s").at(0).get<std::int64_t>();
    s.max_extend_s = j.at("extension_range_s").at(1).get<std::int64_t>();
  }
  if (j.contains("min_green_s")) s.min_green_s = j.at("min_green_s").get<std::int64_t>();
  if (j.contains("max_green_s")) s.max_green_s = j.at("max_green_s").get<std::int64_t>();
  if (j.contains("marker_interval_s")) s.marker_interval_s = j.at("marker_interval_s").get<std::int64_t>();
  if (j.contains("service_base_s")) s.service_base_s = j.at("service_base_s").get<std::int64_t>();
  if (j.contains("service_per_arrival_s")) s.service_per_arrival_s = j.at("service_per_arrival_s").get<std::int64_t>();
  if (j.contains("service_jitter_s")) s.service_jitter_s = j.at("service_jitter_s").get<std::int64_t>();
  if (j.contains("max_service_s")) s.max_service_s = j.at("max_service_s").get<std::int64_t>();
  if (j.contains("demand_rate")) s.demand_rate = j.at("demand_rate").get<double>();
  if (j.contains("hourly_demand")) s.hourly_demand = j.at("hourly_demand").get<std::array<double, 24>>();
  if (j.contains("uses_amber")) s.uses_amber = j.at("uses_amber").get<bool>();
  if (j.contains("amber_s")) s.amber_s = j.at("amber_s").get<std::int64_t>();
  if (j.contains("red_amber_s")) s.red_amber_s = j.at("red_amber_s").get<std::int64_t>();
  if (j.contains("seed")) s.seed = j.at("seed").get<std::uint64_t>();
}

namespace detail {

class ObservationSink {
 public:
  ObservationSink(const std::string& light_id, std::vector<Observation>& out)
      : light_id_(light_id), out_(out) {}

  void cycle_start(std::int64_t t) { out_.push_back({light_id_, t, CycleStart{}}); }
  void state(std::int64_t t, SignalState s) {
    out_.push_back({light_id_, t, StateChange{s}});
  }
  // Detector pulses deduplicate into occupancy changes.
  void arrival(std::int64_t t) {
    if (detector_until_ && t <= *detector_until_) {
      detector_until_ = t + 1;  // still occupied, extend
      return;
    }
    flush_detector(t);
    out_.push_back({light_id_, t, DetectorChange{true}});
    detector_until_ = t + 1;
  }
  void flush_detector(std::int64_t now) {
    if (detector_until_ && *detector_until_ < now) {
      out_.push_back({light_id_, *detector_until_, DetectorChange{false}});
      detector_until_.reset();
    }
  }
  void finish(std::int64_t end) { flush_detector(end + 1); }

 private:
  std::string light_id_;
  std::vector<Observation>& out_;
  std::optional<std::int64_t> detector_until_;
};

inline void simulate_programmed(const ProgramSpec& spec, std::int64_t start,
                                std::int64_t duration_s,
                                std::vector<Observation>& out) {
  const std::int64_t cycle = spec.cycle_length_s;
  const std::int64_t end = start + duration_s;
  std::mt19937_64 rng(spec.seed);
  ObservationSink sink(spec.light_id, out);

  sink.state(start, SignalState::Red);
  for (std::int64_t t = start; t <= end; t += cycle) {
    sink.cycle_start(t);
    if (t == end) break;

    std::int64_t shift = 0, extend = 0;
    std::int64_t arrivals = 0;
    if (spec.level == AdaptivityLevel::PartiallyAdaptive) {
      double rate = spec.rate_at(t);
      std::poisson_distribution<std::int64_t> demand(
          rate * static_cast<double>(cycle) / 3600.0);
      arrivals = rate > 0 ? demand(rng) : 0;
      // Monotone, saturating response to demand.
      extend = std::min<std::int64_t>(2 * arrivals, spec.max_extend_s);
      shift = std::clamp<std::int64_t>(2 * arrivals - spec.min_shift_s,
                                       -spec.min_shift_s, spec.min_shift_s);
      if (arrivals > 0) {
        std::uniform_int_distribution<std::int64_t> where(0, cycle - 1);
        std::vector<std::int64_t> at(static_cast<std::size_t>(arrivals));
        for (auto& a : at) a = t + where(rng);
        std::sort(at.begin(), at.end());
        for (auto a : at) {
          sink.flush_detector(a);
          sink.arrival(a);
        }
      }
    }

    std::int64_t green_on = t + spec.green_offset_s + shift;
    std::int64_t green_off = green_on + spec.green_base_s + extend;
    if (spec.uses_amber) {
      sink.state(green_on - spec.red_amber_s, SignalState::RedAmber);
      sink.state(green_on, SignalState::Green);
      sink.state(green_off, SignalState::Amber);
      sink.state(green_off + spec.amber_s, SignalState::Red);
    } else {
      sink.state(green_on, SignalState::Green);
      sink.state(green_off, SignalState::Red);
    }
  }
  sink.finish(end);
}

inline void simulate_fully_adaptive(const ProgramSpec& spec, std::int64_t start,
                                    std::int64_t duration_s,
                                    std::vector<Observation>& out) {
  const std::int64_t end = start + duration_s;
  std::mt19937_64 rng(spec.seed);
  ObservationSink sink(spec.light_id, out);

  enum class Phase { Green, Amber, Red, RedAmber };
  Phase phase = Phase::Green;
  std::int64_t phase_until = 0;  // first second after current Amber/Red/RedAmber
  std::int64_t green_since = start;
  std::int64_t last_marker = start;
  std::int64_t queue = 0;
  std::int64_t service_s = 0;

  sink.state(start, SignalState::Green);
  sink.cycle_start(start);

  for (std::int64_t t = start; t < end; ++t) {
    // Demand arrivals, at most one per second.
    double rate = spec.rate_at(t);
    if (rate > 0) {
      std::bernoulli_distribution arrive(std::min(1.0, rate / 3600.0));
      if (arrive(rng)) {
        sink.flush_detector(t);
        sink.arrival(t);
        ++queue;
      }
    } else {
      sink.flush_detector(t);
    }

    switch (phase) {
      case Phase::Green: {
        std::int64_t run = t - green_since;
        bool demand_switch = queue > 0 && run >= spec.min_green_s;
        bool forced = spec.max_green_s && run >= *spec.max_green_s;
        if (demand_switch || forced) {
          std::uniform_int_distribution<std::int64_t> jitter(
              0, std::max<std::int64_t>(0, spec.service_jitter_s));
          service_s = std::min(spec.max_service_s,
                               spec.service_base_s +
                                   spec.service_per_arrival_s * queue +
                                   jitter(rng));
          queue = 0;
          if (spec.uses_amber && spec.amber_s > 0) {
            phase = Phase::Amber;
            phase_until = t + spec.amber_s;
            sink.state(t, SignalState::Amber);
          } else {
            phase = Phase::Red;
            phase_until = t + service_s;
            sink.state(t, SignalState::Red);
          }
        } else if (t - last_marker >= spec.marker_interval_s) {
          sink.cycle_start(t);
          last_marker = t;
        }
        break;
      }
      case Phase::Amber:
        if (t >= phase_until) {
          phase = Phase::Red;
          phase_until = t + service_s;
          sink.state(t, SignalState::Red);
        }
        break;
      case Phase::Red:
        if (t >= phase_until) {
          if (spec.uses_amber && spec.red_amber_s > 0) {
            phase = Phase::RedAmber;
            phase_until = t + spec.red_amber_s;
            sink.state(t, SignalState::RedAmber);
          } else {
            phase = Phase::Green;
            green_since = t;
            sink.state(t, SignalState::Green);
            sink.cycle_start(t);
            last_marker = t;
          }
        }
        break;
      case Phase::RedAmber:
        if (t >= phase_until) {
          phase = Phase::Green;
          green_since = t;
          sink.state(t, SignalState::Green);
          sink.cycle_start(t);
          last_marker = t;
        }
        break;
    }
  }
  sink.cycle_start(end);  // closing boundary for the trailing cycle
  sink.finish(end);
}

}  // namespace detail

// Generates one light's observation stream over [start, start+duration_s].
// Deterministic for a fixed seed. Throws std::invalid_argument on an
// infeasible spec.
inline std::vector<Observation> simulate(const ProgramSpec& spec,
                                         std::int64_t start,
                                         std::int64_t duration_s) {
  if (auto err = spec.validate())
    throw std::invalid_argument("invalid program spec: " + *err);
  if (spec.level != AdaptivityLevel::FullyAdaptive &&
      duration_s < spec.cycle_length_s)
    throw std::invalid_argument("duration shorter than one cycle");
  std::vector<Observation> out;
  if (spec.level == AdaptivityLevel::FullyAdaptive)
    detail::simulate_fully_adaptive(spec, start, duration_s, out);
  else
    detail::simulate_programmed(spec, start, duration_s, out);
  std::stable_sort(out.begin(), out.end(), [](const Observation& a, const Observation& b) {
    int ra = std::holds_alternative<CycleStart>(a.kind) ? 0 : 1;
    int rb = std::holds_alternative<CycleStart>(b.kind) ? 0 : 1;
    return std::tie(a.timestamp, ra) < std::tie(b.timestamp, rb);
  });
  return out;
}

// Merges several per-light streams into one time-ordered stream.
inline std::vector<Observation> merge_streams(
    std::vector<std::vector<Observation>> streams) {
  std::vector<Observation> merged;
  std::size_t total = 0;
  for (const auto& s : streams) total += s.size();
  merged.reserve(total);
  for (auto& s : streams)
    merged.insert(merged.end(), std::make_move_iterator(s.begin()),
                  std::make_move_iterator(s.end()));
  std::stable_sort(merged.begin(), merged.end(),
                   [](const Observation& a, const Observation& b) {
                     int ra = std::holds_alternative<CycleStart>(a.kind) ? 0 : 1;
                     int rb = std::holds_alternative<CycleStart>(b.kind) ? 0 : 1;
                     return std::tie(a.timestamp, a.light_id, ra) <
                            std::tie(b.timestamp, b.light_id, rb);
                   });
  return merged;
}

// ---------------------------------------------------------------------------
// Error injection

struct InjectionModel {
  double p_drop_state = 0.0;
  double p_drop_cyclestart = 0.0;
  double p_long_amber = 0.0;
  double p_forbidden_transition = 0.0;
  std::uint64_t seed = 1;
};

inline void from_json(const nlohmann::json& j, InjectionModel& m) {
  m = InjectionModel{};
  if (j.contains("p_drop_state")) m.p_drop_state = j.at("p_drop_state").get<double>();
  if (j.contains("p_drop_cyclestart")) m.p_drop_cyclestart = j.at("p_drop_cyclestart").get<double>();
  if (j.contains("p_long_amber")) m.p_long_amber = j.at("p_long_amber").get<double>();
  if (j.contains("p_forbidden_transition")) m.p_forbidden_transition = j.at("p_forbidden_transition").get<double>();
  if (j.contains("seed")) m.seed = j.at("seed").get<std::uint64_t>();
}

inline void to_json(nlohmann::json& j, const InjectionModel& m) {
  j = nlohmann::json{{"p_drop_state", m.p_drop_state},
                     {"p_drop_cyclestart", m.p_drop_cyclestart},
                     {"p_long_amber", m.p_long_amber},
                     {"p_forbidden_transition", m.p_forbidden_transition},
                     {"seed", m.seed}};
}

enum class FaultKind : std::uint8_t {
  DropState,
  DropCycleStart,
  LongAmber,
  ForbiddenTransitionFault,
};

constexpr std::string_view fault_name(FaultKind k) {
  switch (k) {
    case FaultKind::DropState: return "drop_state";
    case FaultKind::DropCycleStart: return "drop_cycle_start";
    case FaultKind::LongAmber: return "long_amber";
    case FaultKind::ForbiddenTransitionFault: return "forbidden_transition";
  }
  return "?";
}

inline std::optional<FaultKind> fault_from_name(std::string_view name) {
  if (name == "drop_state") return FaultKind::DropState;
  if (name == "drop_cycle_start") return FaultKind::DropCycleStart;
  if (name == "long_amber") return FaultKind::LongAmber;
  if (name == "forbidden_transition") return FaultKind::ForbiddenTransitionFault;
  return std::nullopt;
}

struct Fault {
  std::string light_id;
  std::int64_t time = 0;
  FaultKind kind = FaultKind::DropState;
};

struct FaultLedger {
  std::vector<Fault> faults;
};

inline void to_json(nlohmann::json& j, const FaultLedger& ledger) {
  j = nlohmann::json::array();
  for (const auto& f : ledger.faults)
    j.push_back({{"light_id", f.light_id},
                 {"time", f.time},
                 {"kind", fault_name(f.kind)}});
}

inline void from_json(const nlohmann::json& j, FaultLedger& ledger) {
  ledger.faults.clear();
  for (const auto& e : j) {
    auto kind = fault_from_name(e.at("kind").get<std::string>());
    if (!kind) throw std::runtime_error("unknown fault kind");
    ledger.faults.push_back({e.at("light_id").get<std::string>(),
                             e.at("time").get<std::int64_t>(), *kind});
  }
}

// Rewrites a time-ordered multi-light stream with seeded faults and
// records every injected fault. Amber extensions and forbidden-transition
// inserts are only applied where they stay within one cycle span, so the
// ledger maps one-to-one onto corrupted cycles.
inline std::vector<Observation> inject_errors(
    const std::vector<Observation>& stream, const InjectionModel& model,
    FaultLedger& ledger) {
  std::mt19937_64 rng(model.seed);
  std::bernoulli_distribution drop_state(model.p_drop_state);
  std::bernoulli_distribution drop_cs(model.p_drop_cyclestart);
  std::bernoulli_distribution long_amber(model.p_long_amber);
  std::bernoulli_distribution forbidden(model.p_forbidden_transition);

  // Per-light indices over the shared stream.
  std::map<std::string, std::vector<std::size_t>> by_light;
  for (std::size_t i = 0; i < stream.size(); ++i)
    by_light[stream[i].light_id].push_back(i);

  std::vector<bool> dropped(stream.size(), false);
  std::vector<Observation> inserted;

  for (auto& [light_id, indices] : by_light) {
    auto next_state_change = [&](std::size_t pos) -> std::optional<std::size_t> {
      for (std::size_t k = pos + 1; k < indices.size(); ++k)
        if (std::holds_alternative<StateChange>(stream[indices[k]].kind))
          return k;
      return std::nullopt;
    };
    auto next_cycle_start_after = [&](std::size_t pos) -> std::optional<std::int64_t> {
      for (std::size_t k = pos + 1; k < indices.size(); ++k)
        if (std::holds_alternative<CycleStart>(stream[indices[k]].kind))
          return stream[indices[k]].timestamp;
      return std::nullopt;
    };

    for (std::size_t k = 0; k < indices.size(); ++k) {
      const Observation& obs = stream[indices[k]];
      if (std::holds_alternative<CycleStart>(obs.kind)) {
        if (model.p_drop_cyclestart > 0 && drop_cs(rng)) {
          dropped[indices[k]] = true;
          ledger.faults.push_back({light_id, obs.timestamp, FaultKind::DropCycleStart});
        }
        continue;
      }
      const auto* change = std::get_if<StateChange>(&obs.kind);
      if (!change) continue;

      if (model.p_drop_state > 0 && drop_state(rng)) {
        dropped[indices[k]] = true;
        ledger.faults.push_back({light_id, obs.timestamp, FaultKind::DropState});
        continue;
      }

      if (model.p_long_amber > 0 && change->state == SignalState::Amber) {
        auto end_k = next_state_change(k);
        if (end_k) {
          std::int64_t t0 = obs.timestamp;
          std::int64_t t1 = stream[indices[*end_k]].timestamp;
          auto next_cs = next_cycle_start_after(k);
          auto after_end = next_state_change(*end_k);
          std::int64_t stretched = t0 + 7;
          bool room = t1 - t0 <= 6 && t1 < stretched &&
                      (!next_cs || *next_cs > stretched) &&
                      (!after_end ||
                       stream[indices[*after_end]].timestamp > stretched);
          if (room && long_amber(rng)) {
            dropped[indices[*end_k]] = true;
            Observation moved = stream[indices[*end_k]];
            moved.timestamp = stretched;
            inserted.push_back(std::move(moved));
            ledger.faults.push_back({light_id, t0, FaultKind::LongAmber});
            continue;
          }
        }
      }

      if (model.p_forbidden_transition > 0 && change->state == SignalState::Red) {
        auto next_k = next_state_change(k);
        std::int64_t t = obs.timestamp;
        auto next_cs = next_cycle_start_after(k);
        bool room = (!next_k || stream[indices[*next_k]].timestamp >= t + 3) &&
                    (next_cs && *next_cs > t + 2);
        if (room && forbidden(rng)) {
          // Red -> Amber (forbidden) -> Red
          inserted.push_back({light_id, t + 1, StateChange{SignalState::Amber}});
          inserted.push_back({light_id, t + 2, StateChange{SignalState::Red}});
          ledger.faults.push_back(
              {light_id, t + 1, FaultKind::ForbiddenTransitionFault});
        }
      }
    }
  }

  std::vector<Observation> out;
  out.reserve(stream.size() + inserted.size());
  for (std::size_t i = 0; i < stream.size(); ++i)
    if (!dropped[i]) out.push_back(stream[i]);
  out.insert(out.end(), std::make_move_iterator(inserted.begin()),
             std::make_move_iterator(inserted.end()));
  std::stable_sort(out.begin(), out.end(),
                   [](const Observation& a, const Observation& b) {
                     int ra = std::holds_alternative<CycleStart>(a.kind) ? 0 : 1;
                     int rb = std::holds_alternative<CycleStart>(b.kind) ? 0 : 1;
                     return std::tie(a.timestamp, a.light_id, ra) <
                            std::tie(b.timestamp, b.light_id, rb);
                   });
  return out;
}

}  // namespace greenwave
