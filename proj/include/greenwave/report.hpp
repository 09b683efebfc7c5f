#pragma once

// Plot-ready exports over the bucket store: weekly timeline, green
// length vs cycle discrepancy matrix, per-light medians, and random
// bucket samples. All exports are pure views; re-running changes nothing.

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "greenwave/analyze.hpp"
#include "greenwave/bucket.hpp"
#include "greenwave/classify.hpp"
#include "greenwave/metrics.hpp"

namespace greenwave {

struct StoreData {
  std::vector<WeeklyTable> tables;  // sorted by light id
  std::vector<LightValidationReport> validation;
};

inline StoreData load_store(const std::filesystem::path& store_dir) {
  StoreData data;
  for (const auto& file : list_light_tables(store_dir))
    data.tables.push_back(read_light_table(file));
  if (std::filesystem::exists(store_dir / "validation.json"))
    data.validation = read_validation_reports(store_dir);
  return data;
}

struct BucketRow {
  std::string light_id;
  int weekday = 0;
  int hour = 0;
  std::uint64_t sequence_count = 0;
  BucketMetrics metrics;
  PredictabilityClass cls = PredictabilityClass::Indeterminate;
};

// Metrics + class for every non-empty bucket, ordered by
// (light, weekday, hour).
inline std::vector<BucketRow> compute_bucket_rows(
    const StoreData& data, const Thresholds& thresholds = {}) {
  std::vector<BucketRow> rows;
  for (const auto& table : data.tables) {
    for (const auto& bucket : table.buckets) {
      if (bucket.cycles.empty()) continue;
      auto sequences = build_sequences(bucket);
      BucketRow row;
      row.light_id = table.light_id;
      row.weekday = bucket.weekday;
      row.hour = bucket.hour;
      row.sequence_count = sequences.size();
      row.metrics = bucket_metrics(bucket, sequences);
      row.cls = classify(row.metrics, thresholds);
      rows.push_back(std::move(row));
    }
  }
  return rows;
}

namespace detail {

inline std::string format_fraction(double value) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(6) << value;
  return os.str();
}

template <typename T>
std::string opt_str(const std::optional<T>& value) {
  if (!value) return "";
  if constexpr (std::is_floating_point_v<T>)
    return format_fraction(*value);
  else
    return std::to_string(*value);
}

// Lower-middle order statistics q1/median/q3 on sorted positions
// (n-1)/4, (n-1)/2, 3(n-1)/4.
template <typename T>
std::array<T, 3> quartiles(std::vector<T> values) {
  std::sort(values.begin(), values.end());
  std::size_t n = values.size();
  return {values[(n - 1) / 4], values[(n - 1) / 2], values[3 * (n - 1) / 4]};
}

}  // namespace detail

// ---------------------------------------------------------------------------
// timeline.csv: per (weekday, hour) distribution summaries across lights.

inline void write_timeline_csv(const std::vector<BucketRow>& rows,
                               const StoreData& data,
                               const std::filesystem::path& out_file) {
  struct Slot {
    std::vector<std::int64_t> cd, green;
    std::vector<double> wtd;
    std::uint64_t green_phases = 0;
    std::uint64_t buckets = 0;
  };
  std::array<Slot, 168> slots;
  for (const auto& row : rows) {
    auto& slot = slots[static_cast<std::size_t>(row.weekday * 24 + row.hour)];
    ++slot.buckets;
    slot.green_phases += row.metrics.green_phase_count;
    if (row.metrics.median_cycle_discrepancy_s)
      slot.cd.push_back(*row.metrics.median_cycle_discrepancy_s);
    if (row.metrics.wait_time_diversity)
      slot.wtd.push_back(*row.metrics.wait_time_diversity);
    if (row.metrics.median_green_length_s)
      slot.green.push_back(*row.metrics.median_green_length_s);
  }
  std::array<std::uint64_t, 168> detector{};
  for (const auto& table : data.tables)
    for (std::size_t i = 0; i < 168; ++i)
      detector[i] += table.detector_changes[i];

  std::ofstream out(out_file, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + out_file.string());
  out << "weekday,hour,buckets,cd_q1,cd_median,cd_q3,"
         "wtd_q1,wtd_median,wtd_q3,green_q1,green_median,green_q3,"
         "green_phases,detector_changes\n";
  for (int i = 0; i < 168; ++i) {
    const auto& slot = slots[static_cast<std::size_t>(i)];
    out << i / 24 << ',' << i % 24 << ',' << slot.buckets << ',';
    if (!slot.cd.empty()) {
      auto q = detail::quartiles(slot.cd);
      out << q[0] << ',' << q[1] << ',' << q[2] << ',';
    } else {
      out << ",,,";
    }
    if (!slot.wtd.empty()) {
      auto q = detail::quartiles(slot.wtd);
      out << detail::format_fraction(q[0]) << ',' << detail::format_fraction(q[1])
          << ',' << detail::format_fraction(q[2]) << ',';
    } else {
      out << ",,,";
    }
    if (!slot.green.empty()) {
      auto q = detail::quartiles(slot.green);
      out << q[0] << ',' << q[1] << ',' << q[2] << ',';
    } else {
      out << ",,,";
    }
    out << slot.green_phases << ',' << detector[static_cast<std::size_t>(i)]
        << '\n';
  }
}

// ---------------------------------------------------------------------------
// green_vs_cd.csv: 2-D histogram over integer cells, plus the overlap
// statistic (fraction of green-bearing buckets where discrepancy < green
// length).

struct GreenVsDiscrepancy {
  // (median_green_length_s, median_cycle_discrepancy_s) -> bucket count
  std::map<std::pair<std::int64_t, std::int64_t>, std::uint64_t> cells;
  std::uint64_t green_bearing_buckets = 0;
  std::uint64_t overlapping_buckets = 0;

  double overlap_fraction() const {
    return green_bearing_buckets == 0
               ? 0.0
               : static_cast<double>(overlapping_buckets) /
                     static_cast<double>(green_bearing_buckets);
  }
};

inline GreenVsDiscrepancy green_vs_discrepancy_matrix(
    const std::vector<BucketRow>& rows) {
  GreenVsDiscrepancy result;
  for (const auto& row : rows) {
    const auto& m = row.metrics;
    if (!m.median_green_length_s || !m.median_cycle_discrepancy_s) continue;
    ++result.cells[{*m.median_green_length_s, *m.median_cycle_discrepancy_s}];
    if (m.green_phase_count >= 1) {
      ++result.green_bearing_buckets;
      if (*m.median_cycle_discrepancy_s < *m.median_green_length_s)
        ++result.overlapping_buckets;
    }
  }
  return result;
}

inline void write_green_vs_cd_csv(const GreenVsDiscrepancy& matrix,
                                  const std::filesystem::path& out_file) {
  std::ofstream out(out_file, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + out_file.string());
  out << "median_green_length_s,median_cycle_discrepancy_s,buckets\n";
  for (const auto& [cell, count] : matrix.cells)
    out << cell.first << ',' << cell.second << ',' << count << '\n';
}

// ---------------------------------------------------------------------------
// lights.csv / lights.json: per-light medians over the weekly table and
// the predominant class, for map export. Excluded lights keep a row with
// their reason and empty metrics.

struct LightRow {
  std::string light_id;
  bool excluded = false;
  std::string exclusion_reason;
  std::optional<std::int64_t> median_cd;
  std::optional<double> median_wtd;
  std::optional<std::int64_t> median_green;
  std::optional<PredictabilityClass> predominant_class;
};

inline std::vector<LightRow> per_light_medians(
    const std::vector<BucketRow>& rows, const StoreData& data) {
  std::map<std::string, std::vector<const BucketRow*>> by_light;
  for (const auto& row : rows) by_light[row.light_id].push_back(&row);

  std::vector<LightRow> out;
  for (const auto& [light_id, light_rows] : by_light) {
    LightRow lr;
    lr.light_id = light_id;
    std::vector<std::int64_t> cd, green;
    std::vector<double> wtd;
    std::map<PredictabilityClass, std::uint64_t> votes;
    for (const auto* row : light_rows) {
      if (row->metrics.median_cycle_discrepancy_s)
        cd.push_back(*row->metrics.median_cycle_discrepancy_s);
      if (row->metrics.wait_time_diversity)
        wtd.push_back(*row->metrics.wait_time_diversity);
      if (row->metrics.median_green_length_s)
        green.push_back(*row->metrics.median_green_length_s);
      ++votes[row->cls];
    }
    if (!cd.empty()) lr.median_cd = detail::quartiles(cd)[1];
    if (!wtd.empty()) lr.median_wtd = detail::quartiles(wtd)[1];
    if (!green.empty()) lr.median_green = detail::quartiles(green)[1];
    if (!votes.empty()) {
      // most frequent class; ties resolve to the smaller enum value
      auto best = votes.begin();
      for (auto it = votes.begin(); it != votes.end(); ++it)
        if (it->second > best->second) best = it;
      lr.predominant_class = best->first;
    }
    out.push_back(std::move(lr));
  }
  for (const auto& report : data.validation) {
    if (!report.excluded) continue;
    LightRow lr;
    lr.light_id = report.light_id;
    lr.excluded = true;
    lr.exclusion_reason = report.reconstructed == 0
                              ? "no reconstructed cycles"
                              : "removal ratio above threshold";
    out.push_back(std::move(lr));
  }
  std::sort(out.begin(), out.end(),
            [](const LightRow& a, const LightRow& b) {
              return a.light_id < b.light_id;
            });
  return out;
}

inline void write_lights_csv(const std::vector<LightRow>& rows,
                             const std::filesystem::path& out_file) {
  std::ofstream out(out_file, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + out_file.string());
  out << "light_id,status,median_cycle_discrepancy_s,wait_time_diversity,"
         "median_green_length_s,class\n";
  for (const auto& row : rows) {
    out << row.light_id << ','
        << (row.excluded ? "excluded" : "ok") << ','
        << detail::opt_str(row.median_cd) << ','
        << detail::opt_str(row.median_wtd) << ','
        << detail::opt_str(row.median_green) << ','
        << (row.predominant_class ? class_name(*row.predominant_class) : "")
        << '\n';
  }
}

inline void write_lights_json(const std::vector<LightRow>& rows,
                              const std::filesystem::path& out_file) {
  nlohmann::json j = nlohmann::json::array();
  for (const auto& row : rows) {
    nlohmann::json e{{"light_id", row.light_id}, {"excluded", row.excluded}};
    if (row.excluded) e["reason"] = row.exclusion_reason;
    if (row.median_cd) e["median_cycle_discrepancy_s"] = *row.median_cd;
    if (row.median_wtd) e["wait_time_diversity"] = *row.median_wtd;
    if (row.median_green) e["median_green_length_s"] = *row.median_green;
    if (row.predominant_class) e["class"] = class_name(*row.predominant_class);
    j.push_back(std::move(e));
  }
  std::ofstream out(out_file, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + out_file.string());
  out << j.dump(2) << '\n';
}

// ---------------------------------------------------------------------------
// samples/<light>_<weekday>_<hour>.csv: one rendering-ready cycle stack
// per sampled non-empty bucket. The header line carries the bucket's
// (cycle discrepancy, wait time diversity) title pair; each following
// line is one cycle's start and per-second state codes.

inline std::vector<const BucketRow*> sample_buckets(
    const std::vector<BucketRow>& rows, std::size_t count,
    std::uint64_t seed) {
  std::vector<const BucketRow*> all;
  all.reserve(rows.size());
  for (const auto& row : rows) all.push_back(&row);
  std::mt19937_64 rng(seed);
  std::shuffle(all.begin(), all.end(), rng);
  if (all.size() > count) all.resize(count);
  std::sort(all.begin(), all.end(), [](const BucketRow* a, const BucketRow* b) {
    return std::tie(a->light_id, a->weekday, a->hour) <
           std::tie(b->light_id, b->weekday, b->hour);
  });
  return all;
}

inline void write_sample_csv(const BucketRow& row, const WeeklyTable& table,
                             const std::filesystem::path& out_file) {
  const auto& bucket =
      table.buckets[static_cast<std::size_t>(row.weekday * 24 + row.hour)];
  std::ofstream out(out_file, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + out_file.string());
  out << "# " << row.light_id << " weekday=" << row.weekday
      << " hour=" << row.hour << " ("
      << detail::opt_str(row.metrics.median_cycle_discrepancy_s) << " s, "
      << detail::opt_str(row.metrics.wait_time_diversity) << ")\n";
  out << "start,states\n";
  for (const auto& cycle : bucket.cycles) {
    out << cycle.start << ',';
    for (auto s : cycle.states) out << state_code(s);
    out << '\n';
  }
}

inline void write_samples(const std::vector<BucketRow>& rows,
                          const StoreData& data,
                          const std::filesystem::path& out_dir,
                          std::size_t count, std::uint64_t seed) {
  std::filesystem::create_directories(out_dir);
  std::map<std::string, const WeeklyTable*> tables;
  for (const auto& table : data.tables) tables[table.light_id] = &table;
  for (const auto* row : sample_buckets(rows, count, seed)) {
    auto name = row->light_id + "_" + std::to_string(row->weekday) + "_" +
                std::to_string(row->hour) + ".csv";
    write_sample_csv(*row, *tables.at(row->light_id), out_dir / name);
  }
}

// ---------------------------------------------------------------------------
// Per-bucket metric export used by the classify stage.

inline void write_buckets_csv(const std::vector<BucketRow>& rows,
                              const std::filesystem::path& out_file) {
  std::ofstream out(out_file, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + out_file.string());
  out << "light_id,weekday,hour,cycle_count,sequence_count,green_phase_count,"
         "wait_time_count,median_cycle_discrepancy_s,wait_time_diversity,"
         "median_green_length_s,class\n";
  for (const auto& row : rows) {
    out << row.light_id << ',' << row.weekday << ',' << row.hour << ','
        << row.metrics.cycle_count << ',' << row.sequence_count << ','
        << row.metrics.green_phase_count << ',' << row.metrics.wait_time_count
        << ',' << detail::opt_str(row.metrics.median_cycle_discrepancy_s)
        << ',' << detail::opt_str(row.metrics.wait_time_diversity) << ','
        << detail::opt_str(row.metrics.median_green_length_s) << ','
        << class_name(row.cls) << '\n';
  }
}

inline void write_buckets_json(const std::vector<BucketRow>& rows,
                               const std::filesystem::path& out_file) {
  nlohmann::json j = nlohmann::json::array();
  for (const auto& row : rows) {
    nlohmann::json e{{"light_id", row.light_id},
                     {"weekday", row.weekday},
                     {"hour", row.hour},
                     {"sequence_count", row.sequence_count},
                     {"metrics", row.metrics},
                     {"class", class_name(row.cls)}};
    j.push_back(std::move(e));
  }
  std::ofstream out(out_file, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + out_file.string());
  out << j.dump(2) << '\n';
}

}  // namespace greenwave
