#pragma once

// Pipeline orchestration: ingest -> reconstruct -> prune -> bucketize ->
// store. Lights are processed by a worker pool; results are independent
// of the worker count because every light is handled in isolation and
// aggregation happens in light-id order.

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "greenwave/bucket.hpp"
#include "greenwave/ingest.hpp"
#include "greenwave/reconstruct.hpp"
#include "greenwave/validate.hpp"

namespace greenwave {

struct AnalyzeOptions {
  std::filesystem::path store_dir;
  TimeZone tz{};
  double max_removed_ratio = 0.10;
  ReconstructOptions reconstruct{};
  PruneOptions prune{};
  std::int64_t reorder_window_s = 300;
  unsigned jobs = 0;  // 0: hardware concurrency
};

struct AnalyzeSummary {
  std::uint64_t observations = 0;
  std::uint64_t malformed = 0;
  std::uint64_t dropped_late = 0;
  std::uint64_t lights = 0;
  std::uint64_t cycle_starts = 0;
  std::uint64_t reconstructed = 0;
  std::uint64_t skipped_spans = 0;
  std::uint64_t removed = 0;
  std::uint64_t amber_too_long = 0;
  std::uint64_t red_amber_too_long = 0;
  std::uint64_t forbidden_transition = 0;
  std::uint64_t length_outlier = 0;
  std::uint64_t discontinuities = 0;
  std::vector<std::string> excluded_lights;
};

inline void to_json(nlohmann::json& j, const AnalyzeSummary& s) {
  j = nlohmann::json{{"observations", s.observations},
                     {"malformed", s.malformed},
                     {"dropped_late", s.dropped_late},
                     {"lights", s.lights},
                     {"cycle_starts", s.cycle_starts},
                     {"reconstructed", s.reconstructed},
                     {"skipped_spans", s.skipped_spans},
                     {"removed", s.removed},
                     {"removed_by_rule",
                      {{"amber_too_long", s.amber_too_long},
                       {"red_amber_too_long", s.red_amber_too_long},
                       {"forbidden_transition", s.forbidden_transition},
                       {"length_outlier", s.length_outlier}}},
                     {"discontinuities", s.discontinuities},
                     {"excluded_lights", s.excluded_lights}};
}

// Reconstructs, prunes and bucketizes one light's observation stream.
// Returns the validation record; table is left empty for excluded lights.
inline LightValidationReport analyze_light(const std::string& light_id,
                                           const std::vector<Observation>& obs,
                                           const AnalyzeOptions& options,
                                           WeeklyTable& table) {
  ReconstructStats rstats;
  auto cycles = reconstruct_cycles(obs, options.reconstruct, rstats);
  PruneStats pstats;
  auto kept = prune(cycles, options.prune, pstats);

  LightValidationReport report;
  report.light_id = light_id;
  report.cycle_starts = rstats.cycle_starts;
  report.reconstructed = rstats.reconstructed;
  report.skipped_spans = rstats.skipped_spans;
  report.removed = pstats.removed;
  report.amber_too_long = pstats.amber_too_long;
  report.red_amber_too_long = pstats.red_amber_too_long;
  report.forbidden_transition = pstats.forbidden_transition;
  report.length_outlier = pstats.length_outlier;
  report.discontinuities = pstats.discontinuities;
  report.excluded = is_excluded(rstats.reconstructed, pstats.removed,
                                options.max_removed_ratio);
  if (report.excluded) return report;

  table = bucketize(light_id, kept, options.tz);
  for (const auto& o : obs) {
    if (std::holds_alternative<DetectorChange>(o.kind)) {
      auto slot = week_slot(o.timestamp, options.tz);
      ++table.detector_changes[static_cast<std::size_t>(slot.index())];
    }
  }
  return report;
}

inline void write_validation_reports(
    const std::vector<LightValidationReport>& reports,
    const std::filesystem::path& store_dir) {
  std::filesystem::create_directories(store_dir);
  nlohmann::json j = nlohmann::json::array();
  for (const auto& r : reports) j.push_back(r);
  std::ofstream out(store_dir / "validation.json", std::ios::binary);
  if (!out) throw std::runtime_error("cannot write validation.json");
  out << j.dump(2) << '\n';
}

inline std::vector<LightValidationReport> read_validation_reports(
    const std::filesystem::path& store_dir) {
  std::ifstream in(store_dir / "validation.json", std::ios::binary);
  if (!in) throw std::runtime_error("cannot read validation.json");
  nlohmann::json j;
  in >> j;
  return j.get<std::vector<LightValidationReport>>();
}

inline AnalyzeSummary run_analyze(const std::vector<std::string>& input_files,
                                  const AnalyzeOptions& options) {
  AnalyzeSummary summary;
  IngestStats istats;
  auto partitioner =
      read_files(input_files, istats, options.reorder_window_s);
  summary.observations = istats.parsed;
  summary.malformed = istats.malformed;
  summary.dropped_late = istats.dropped_late;

  auto ids = partitioner.light_ids();
  summary.lights = ids.size();
  std::vector<LightValidationReport> reports(ids.size());

  std::filesystem::create_directories(options.store_dir / "lights");

  unsigned jobs = options.jobs ? options.jobs
                               : std::max(1u, std::thread::hardware_concurrency());
  jobs = std::min<unsigned>(jobs, std::max<std::size_t>(ids.size(), 1));

  std::atomic<std::size_t> next{0};
  std::atomic<bool> failed{false};
  std::string failure;
  std::mutex failure_mutex;

  auto worker = [&] {
    for (;;) {
      std::size_t i = next.fetch_add(1);
      if (i >= ids.size() || failed.load()) return;
      try {
        auto obs = partitioner.take(ids[i]);
        WeeklyTable table;
        reports[i] = analyze_light(ids[i], obs, options, table);
        if (!reports[i].excluded) write_light_table(table, options.store_dir);
      } catch (const std::exception& e) {
        std::lock_guard lock(failure_mutex);
        failed.store(true);
        failure = e.what();
      }
    }
  };

  if (jobs <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < jobs; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  if (failed.load()) throw std::runtime_error("analyze failed: " + failure);

  for (const auto& r : reports) {
    summary.cycle_starts += r.cycle_starts;
    summary.reconstructed += r.reconstructed;
    summary.skipped_spans += r.skipped_spans;
    summary.removed += r.removed;
    summary.amber_too_long += r.amber_too_long;
    summary.red_amber_too_long += r.red_amber_too_long;
    summary.forbidden_transition += r.forbidden_transition;
    summary.length_outlier += r.length_outlier;
    summary.discontinuities += r.discontinuities;
    if (r.excluded) summary.excluded_lights.push_back(r.light_id);
  }
  write_validation_reports(reports, options.store_dir);
  return summary;
}

}  // namespace greenwave
