#pragma once

// Weekly 7x24 bucket table per light, continuous-sequence construction,
// and the on-disk bucket store (one JSON file per light, cycles stored
// as start + run-length-encoded states).

#include <array>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "greenwave/model.hpp"

namespace greenwave {

struct WeeklyTable {
  std::string light_id;
  std::array<HourlyBucket, 168> buckets{};
  // DetectorChange counts per (weekday, hour) slot.
  std::array<std::uint64_t, 168> detector_changes{};

  WeeklyTable() {
    for (int i = 0; i < 168; ++i) {
      buckets[static_cast<std::size_t>(i)].weekday = i / 24;
      buckets[static_cast<std::size_t>(i)].hour = i % 24;
    }
  }
};

// Assigns each cycle to the bucket of its start instant; cycles that
// spill into the next hour stay with their start bucket.
inline WeeklyTable bucketize(const std::string& light_id,
                             const std::vector<Cycle>& cycles, TimeZone tz) {
  WeeklyTable table;
  table.light_id = light_id;
  for (const auto& cycle : cycles) {
    auto slot = week_slot(cycle.start, tz);
    table.buckets[static_cast<std::size_t>(slot.index())].cycles.push_back(cycle);
  }
  return table;
}

// Maximal runs of exactly adjacent cycles (start == previous end),
// concatenated into one state-per-second timeline each. Overlaid weeks
// never join because their absolute timestamps differ.
inline std::vector<Sequence> build_sequences(const HourlyBucket& bucket) {
  std::vector<Sequence> sequences;
  for (const auto& cycle : bucket.cycles) {
    if (sequences.empty() ||
        sequences.back().start +
                static_cast<std::int64_t>(sequences.back().states.size()) !=
            cycle.start) {
      sequences.push_back(Sequence{cycle.start, {}});
    }
    auto& seq = sequences.back();
    seq.states.insert(seq.states.end(), cycle.states.begin(),
                      cycle.states.end());
  }
  return sequences;
}

// ---------------------------------------------------------------------------
// Store layout: <store>/lights/<light_id>.json
//   { "light_id": ..., "detector_changes": [168 counts],
//     "buckets": [ { "weekday": w, "hour": h,
//                    "cycles": [ {"start": ..., "states": "<rle>"} ] } ] }
// Only non-empty buckets are listed. <store>/validation.json carries the
// per-light validation records.

inline std::filesystem::path light_store_path(
    const std::filesystem::path& store_dir, const std::string& light_id) {
  return store_dir / "lights" / (light_id + ".json");
}

inline void to_json(nlohmann::json& j, const WeeklyTable& table) {
  j = nlohmann::json{{"light_id", table.light_id}};
  j["detector_changes"] = table.detector_changes;
  auto buckets = nlohmann::json::array();
  for (const auto& bucket : table.buckets) {
    if (bucket.cycles.empty()) continue;
    nlohmann::json b{{"weekday", bucket.weekday}, {"hour", bucket.hour}};
    b["cycles"] = bucket.cycles;
    buckets.push_back(std::move(b));
  }
  j["buckets"] = std::move(buckets);
}

inline void from_json(const nlohmann::json& j, WeeklyTable& table) {
  table = WeeklyTable{};
  table.light_id = j.at("light_id").get<std::string>();
  if (j.contains("detector_changes")) {
    const auto& d = j.at("detector_changes");
    for (std::size_t i = 0; i < 168 && i < d.size(); ++i)
      table.detector_changes[i] = d[i].get<std::uint64_t>();
  }
  for (const auto& b : j.at("buckets")) {
    int idx = b.at("weekday").get<int>() * 24 + b.at("hour").get<int>();
    auto& bucket = table.buckets.at(static_cast<std::size_t>(idx));
    bucket.cycles = b.at("cycles").get<std::vector<Cycle>>();
    for (auto& cycle : bucket.cycles) cycle.light_id = table.light_id;
  }
}

inline void write_light_table(const WeeklyTable& table,
                              const std::filesystem::path& store_dir) {
  std::filesystem::create_directories(store_dir / "lights");
  nlohmann::json j = table;
  std::ofstream out(light_store_path(store_dir, table.light_id),
                    std::ios::binary);
  if (!out) throw std::runtime_error("cannot write store file for " + table.light_id);
  out << j.dump() << '\n';
}

inline WeeklyTable read_light_table(const std::filesystem::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read store file " + file.string());
  nlohmann::json j;
  in >> j;
  return j.get<WeeklyTable>();
}

// Store files sorted by light id.
inline std::vector<std::filesystem::path> list_light_tables(
    const std::filesystem::path& store_dir) {
  std::vector<std::filesystem::path> files;
  auto dir = store_dir / "lights";
  if (!std::filesystem::is_directory(dir)) return files;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".json")
      files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  return files;
}

}  // namespace greenwave
