#pragma once

// Shared domain vocabulary: signal states, observations, cycles,
// hourly buckets and per-bucket metric results. All values are plain
// immutable data and safe to share between threads.

#include <array>
#include <cctype>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <json.hpp>

namespace greenwave {

enum class SignalState : std::uint8_t { Green, Red, Amber, RedAmber, Dark };

constexpr std::array<SignalState, 5> kAllStates = {
    SignalState::Green, SignalState::Red, SignalState::Amber,
    SignalState::RedAmber, SignalState::Dark};

// Single-character codes used in RLE strings and sample exports.
// 'B' = red-amber (both lamps lit).
constexpr char state_code(SignalState s) {
  switch (s) {
    case SignalState::Green: return 'G';
    case SignalState::Red: return 'R';
    case SignalState::Amber: return 'A';
    case SignalState::RedAmber: return 'B';
    case SignalState::Dark: return 'D';
  }
  return '?';
}

constexpr std::optional<SignalState> state_from_code(char c) {
  switch (c) {
    case 'G': return SignalState::Green;
    case 'R': return SignalState::Red;
    case 'A': return SignalState::Amber;
    case 'B': return SignalState::RedAmber;
    case 'D': return SignalState::Dark;
    default: return std::nullopt;
  }
}

constexpr std::string_view state_name(SignalState s) {
  switch (s) {
    case SignalState::Green: return "green";
    case SignalState::Red: return "red";
    case SignalState::Amber: return "amber";
    case SignalState::RedAmber: return "red-amber";
    case SignalState::Dark: return "dark";
  }
  return "?";
}

inline std::optional<SignalState> state_from_name(std::string_view name) {
  for (SignalState s : kAllStates) {
    if (state_name(s) == name) return s;
  }
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// Observations

struct StateChange {
  SignalState state;
  bool operator==(const StateChange&) const = default;
};
struct CycleStart {
  bool operator==(const CycleStart&) const = default;
};
struct ProgramChange {
  std::string program_id;
  bool operator==(const ProgramChange&) const = default;
};
struct DetectorChange {
  bool occupied;
  bool operator==(const DetectorChange&) const = default;
};

using ObservationKind =
    std::variant<StateChange, CycleStart, ProgramChange, DetectorChange>;

// One timestamped broker event for one signal. Timestamps are UTC epoch
// seconds; sub-second input precision is truncated at parse time.
struct Observation {
  std::string light_id;
  std::int64_t timestamp = 0;
  ObservationKind kind;

  bool operator==(const Observation&) const = default;
};

// ---------------------------------------------------------------------------
// Cycles and buckets

// A reconstructed per-second color sequence between two consecutive
// cycle-start events. states holds one entry per second of [start, end).
struct Cycle {
  std::string light_id;
  std::int64_t start = 0;
  std::vector<SignalState> states;
  std::optional<std::string> program_id;

  std::int64_t length_s() const {
    return static_cast<std::int64_t>(states.size());
  }
  std::int64_t end() const { return start + length_s(); }

  bool operator==(const Cycle&) const = default;
};

// All cycles of one light starting in one (weekday, hour) cell,
// overlaid across recorded weeks, in chronological order.
struct HourlyBucket {
  int weekday = 0;  // 0 = Monday .. 6 = Sunday
  int hour = 0;     // 0..23
  std::vector<Cycle> cycles;
};

// A maximal run of exactly adjacent cycles, concatenated into one
// state-per-second timeline.
struct Sequence {
  std::int64_t start = 0;
  std::vector<SignalState> states;
};

struct BucketMetrics {
  std::optional<std::int64_t> median_cycle_discrepancy_s;
  std::optional<double> wait_time_diversity;
  std::optional<std::int64_t> median_green_length_s;
  std::uint64_t cycle_count = 0;
  std::uint64_t green_phase_count = 0;
  std::uint64_t wait_time_count = 0;

  bool operator==(const BucketMetrics&) const = default;
};

// ---------------------------------------------------------------------------
// Time handling

// Bucket timezone as a fixed UTC offset. Accepted spellings: "UTC",
// "+HH:MM", "-HH:MM", "UTC+HH:MM", "UTC-HH:MM". Named IANA zones are
// not supported by the current toolchain's <chrono>.
struct TimeZone {
  int offset_s = 0;

  static std::optional<TimeZone> parse(std::string_view spec) {
    if (spec == "UTC" || spec == "utc" || spec.empty()) return TimeZone{0};
    if (spec.substr(0, 3) == "UTC" || spec.substr(0, 3) == "utc")
      spec.remove_prefix(3);
    if (spec.size() != 6 || (spec[0] != '+' && spec[0] != '-') ||
        spec[3] != ':')
      return std::nullopt;
    auto digit = [](char c) { return std::isdigit(static_cast<unsigned char>(c)); };
    if (!digit(spec[1]) || !digit(spec[2]) || !digit(spec[4]) || !digit(spec[5]))
      return std::nullopt;
    int hh = (spec[1] - '0') * 10 + (spec[2] - '0');
    int mm = (spec[4] - '0') * 10 + (spec[5] - '0');
    if (hh > 14 || mm > 59) return std::nullopt;
    int off = hh * 3600 + mm * 60;
    return TimeZone{spec[0] == '-' ? -off : off};
  }
};

struct WeekSlot {
  int weekday = 0;  // 0 = Monday
  int hour = 0;

  int index() const { return weekday * 24 + hour; }
  bool operator==(const WeekSlot&) const = default;
};

// (weekday, hour) of a UTC instant under the given fixed-offset zone.
// 1970-01-01 was a Thursday (weekday 3 with Monday = 0).
inline WeekSlot week_slot(std::int64_t epoch_s, TimeZone tz) {
  std::int64_t local = epoch_s + tz.offset_s;
  std::int64_t days = local / 86400;
  std::int64_t rem = local % 86400;
  if (rem < 0) {
    rem += 86400;
    days -= 1;
  }
  int weekday = static_cast<int>(((days + 3) % 7 + 7) % 7);
  return WeekSlot{weekday, static_cast<int>(rem / 3600)};
}

// ---------------------------------------------------------------------------
// Run-length encoding of state sequences, e.g. "12R30G3A15R".

inline std::string rle_encode(const std::vector<SignalState>& states) {
  std::string out;
  std::size_t i = 0;
  while (i < states.size()) {
    std::size_t j = i;
    while (j < states.size() && states[j] == states[i]) ++j;
    out += std::to_string(j - i);
    out += state_code(states[i]);
    i = j;
  }
  return out;
}

inline std::optional<std::vector<SignalState>> rle_decode(std::string_view rle) {
  std::vector<SignalState> out;
  std::size_t i = 0;
  while (i < rle.size()) {
    std::uint64_t count = 0;
    std::size_t digits = 0;
    while (i < rle.size() && std::isdigit(static_cast<unsigned char>(rle[i]))) {
      count = count * 10 + static_cast<std::uint64_t>(rle[i] - '0');
      ++i;
      ++digits;
    }
    if (digits == 0 || i >= rle.size() || count == 0) return std::nullopt;
    auto s = state_from_code(rle[i]);
    if (!s) return std::nullopt;
    ++i;
    out.insert(out.end(), count, *s);
  }
  return out;
}

// ---------------------------------------------------------------------------
// JSON

inline void to_json(nlohmann::json& j, const Cycle& c) {
  j = nlohmann::json{{"start", c.start}, {"states", rle_encode(c.states)}};
  if (c.program_id) j["program"] = *c.program_id;
}

inline void from_json(const nlohmann::json& j, Cycle& c) {
  c.start = j.at("start").get<std::int64_t>();
  auto states = rle_decode(j.at("states").get<std::string>());
  if (!states) throw nlohmann::json::other_error::create(501, "bad RLE states", &j);
  c.states = std::move(*states);
  if (j.contains("program")) c.program_id = j.at("program").get<std::string>();
}

inline void to_json(nlohmann::json& j, const BucketMetrics& m) {
  j = nlohmann::json{{"cycle_count", m.cycle_count},
                     {"green_phase_count", m.green_phase_count},
                     {"wait_time_count", m.wait_time_count}};
  if (m.median_cycle_discrepancy_s)
    j["median_cycle_discrepancy_s"] = *m.median_cycle_discrepancy_s;
  if (m.wait_time_diversity) j["wait_time_diversity"] = *m.wait_time_diversity;
  if (m.median_green_length_s)
    j["median_green_length_s"] = *m.median_green_length_s;
}

inline void from_json(const nlohmann::json& j, BucketMetrics& m) {
  m = BucketMetrics{};
  m.cycle_count = j.at("cycle_count").get<std::uint64_t>();
  m.green_phase_count = j.at("green_phase_count").get<std::uint64_t>();
  m.wait_time_count = j.at("wait_time_count").get<std::uint64_t>();
  if (j.contains("median_cycle_discrepancy_s"))
    m.median_cycle_discrepancy_s =
        j.at("median_cycle_discrepancy_s").get<std::int64_t>();
  if (j.contains("wait_time_diversity"))
    m.wait_time_diversity = j.at("wait_time_diversity").get<double>();
  if (j.contains("median_green_length_s"))
    m.median_green_length_s = j.at("median_green_length_s").get<std::int64_t>();
}

}  // namespace greenwave
