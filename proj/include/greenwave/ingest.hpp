#pragma once

// Wire-format parsing and per-light stream partitioning.
//
// Record format, one observation per line:
//   epoch_seconds|light_id|kind|payload
// kind: S = state change (payload: state name), C = cycle start (empty
// payload), P = program change (payload: program id), D = detector
// change (payload: 0|1). Files may be gzip-compressed; zlib reads both
// transparently.

#include <charconv>
#include <cstdint>
#include <deque>
#include <functional>
#include <map>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <zlib.h>

#include "greenwave/model.hpp"

namespace greenwave {

inline std::string serialize_record(const Observation& obs) {
  std::string line = std::to_string(obs.timestamp);
  line += '|';
  line += obs.light_id;
  line += '|';
  if (const auto* s = std::get_if<StateChange>(&obs.kind)) {
    line += "S|";
    line += state_name(s->state);
  } else if (std::holds_alternative<CycleStart>(obs.kind)) {
    line += "C|";
  } else if (const auto* p = std::get_if<ProgramChange>(&obs.kind)) {
    line += "P|";
    line += p->program_id;
  } else {
    line += "D|";
    line += std::get<DetectorChange>(obs.kind).occupied ? '1' : '0';
  }
  return line;
}

// Parses one record line. On failure returns nullopt and, when err is
// non-null, a short reason.
inline std::optional<Observation> parse_record(std::string_view line,
                                               std::string* err = nullptr) {
  auto fail = [&](const char* why) -> std::optional<Observation> {
    if (err) *err = why;
    return std::nullopt;
  };
  auto field = [&](std::string_view& rest) -> std::optional<std::string_view> {
    auto pos = rest.find('|');
    if (pos == std::string_view::npos) return std::nullopt;
    auto f = rest.substr(0, pos);
    rest.remove_prefix(pos + 1);
    return f;
  };

  std::string_view rest = line;
  auto ts_field = field(rest);
  if (!ts_field) return fail("missing field separator");
  // Sub-second timestamps ("1695427200.25") truncate toward zero.
  auto ts_text = ts_field->substr(0, ts_field->find('.'));
  std::int64_t ts = 0;
  auto [p, ec] = std::from_chars(ts_text.data(), ts_text.data() + ts_text.size(), ts);
  if (ec != std::errc{} || p != ts_text.data() + ts_text.size())
    return fail("bad timestamp");

  auto id_field = field(rest);
  if (!id_field || id_field->empty()) return fail("missing light id");
  auto kind_field = field(rest);
  if (!kind_field || kind_field->size() != 1) return fail("bad kind");
  std::string_view payload = rest;

  Observation obs;
  obs.light_id = std::string(*id_field);
  obs.timestamp = ts;
  switch ((*kind_field)[0]) {
    case 'S': {
      auto state = state_from_name(payload);
      if (!state) return fail("unknown state");
      obs.kind = StateChange{*state};
      break;
    }
    case 'C':
      if (!payload.empty()) return fail("cycle start carries payload");
      obs.kind = CycleStart{};
      break;
    case 'P':
      if (payload.empty()) return fail("empty program id");
      obs.kind = ProgramChange{std::string(payload)};
      break;
    case 'D':
      if (payload != "0" && payload != "1") return fail("bad detector payload");
      obs.kind = DetectorChange{payload == "1"};
      break;
    default:
      return fail("unknown kind");
  }
  return obs;
}

// ---------------------------------------------------------------------------

// Line reader over a plain or gzip-compressed file.
class RecordReader {
 public:
  explicit RecordReader(const std::string& path) : file_(gzopen(path.c_str(), "rb")) {
    if (!file_) throw std::runtime_error("cannot open input file: " + path);
  }
  RecordReader(const RecordReader&) = delete;
  RecordReader& operator=(const RecordReader&) = delete;
  ~RecordReader() {
    if (file_) gzclose(file_);
  }

  // Reads the next line (without terminator) into out. False at EOF.
  bool next_line(std::string& out) {
    out.clear();
    char buf[1 << 14];
    bool got = false;
    while (gzgets(file_, buf, sizeof(buf)) != nullptr) {
      got = true;
      out += buf;
      if (!out.empty() && out.back() == '\n') {
        out.pop_back();
        if (!out.empty() && out.back() == '\r') out.pop_back();
        return true;
      }
    }
    return got;
  }

 private:
  gzFile file_;
};

struct IngestStats {
  std::uint64_t lines = 0;
  std::uint64_t parsed = 0;
  std::uint64_t malformed = 0;
  std::uint64_t dropped_late = 0;
};

// Splits a mixed observation stream into per-light, time-ordered streams.
// Out-of-order records are tolerated within a fixed reorder window
// relative to the light's high-water mark; anything later is dropped and
// counted. Same-second ties order CycleStart before all other kinds so a
// cycle's first second carries the new state; otherwise ties keep
// arrival order.
class LightPartitioner {
 public:
  explicit LightPartitioner(std::int64_t reorder_window_s = 300)
      : window_(reorder_window_s) {}

  void push(Observation obs) {
    auto& lane = lanes_[obs.light_id];
    if (lane.seen && obs.timestamp < lane.high_water - window_) {
      ++dropped_late_;
      return;
    }
    if (!lane.seen || obs.timestamp > lane.high_water) {
      lane.high_water = obs.timestamp;
      lane.seen = true;
    }
    // Insertion sort from the back; input is near-sorted so this stays
    // within the reorder window.
    auto key = sort_key(obs);
    auto it = lane.buffer.end();
    while (it != lane.buffer.begin() && sort_key(*std::prev(it)) > key) --it;
    lane.buffer.insert(it, std::move(obs));
  }

  std::uint64_t dropped_late() const { return dropped_late_; }

  // Light ids in lexicographic order.
  std::vector<std::string> light_ids() const {
    std::vector<std::string> ids;
    ids.reserve(lanes_.size());
    for (const auto& [id, lane] : lanes_) ids.push_back(id);
    return ids;
  }

  // Moves one light's ordered stream out of the partitioner.
  std::vector<Observation> take(const std::string& light_id) {
    auto it = lanes_.find(light_id);
    if (it == lanes_.end()) return {};
    std::vector<Observation> out(
        std::make_move_iterator(it->second.buffer.begin()),
        std::make_move_iterator(it->second.buffer.end()));
    it->second.buffer.clear();
    return out;
  }

 private:
  struct Lane {
    bool seen = false;
    std::int64_t high_water = 0;
    std::deque<Observation> buffer;
  };

  static std::pair<std::int64_t, int> sort_key(const Observation& obs) {
    int rank = std::holds_alternative<CycleStart>(obs.kind) ? 0 : 1;
    return {obs.timestamp, rank};
  }

  std::int64_t window_;
  std::uint64_t dropped_late_ = 0;
  std::map<std::string, Lane> lanes_;
};

// Reads all given files in order, partitioning into per-light streams.
// diag, when set, receives one message per malformed line.
inline LightPartitioner read_files(
    const std::vector<std::string>& paths, IngestStats& stats,
    std::int64_t reorder_window_s = 300,
    const std::function<void(const std::string&)>& diag = {}) {
  LightPartitioner partitioner(reorder_window_s);
  std::string line, err;
  for (const auto& path : paths) {
    RecordReader reader(path);
    std::uint64_t line_no = 0;
    while (reader.next_line(line)) {
      ++line_no;
      ++stats.lines;
      if (line.empty()) continue;
      auto obs = parse_record(line, &err);
      if (!obs) {
        ++stats.malformed;
        if (diag) diag(path + ":" + std::to_string(line_no) + ": " + err);
        continue;
      }
      ++stats.parsed;
      partitioner.push(std::move(*obs));
    }
  }
  stats.dropped_late = partitioner.dropped_late();
  return partitioner;
}

}  // namespace greenwave
