#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "greenwave/analyze.hpp"
#include "greenwave/report.hpp"
#include "greenwave/simulate.hpp"

using namespace greenwave;

namespace {

namespace fs = std::filesystem;

constexpr std::int64_t kStart = 1695427200;

// Builds a store from a small fixed-time fleet, once per process.
const fs::path& fleet_store() {
  static fs::path store = [] {
    fs::path dir = fs::temp_directory_path() / "greenwave_report_store";
    fs::remove_all(dir);
    std::vector<std::vector<Observation>> streams;
    for (int i = 0; i < 3; ++i) {
      ProgramSpec spec;
      spec.light_id = "rep_" + std::to_string(i);
      spec.cycle_length_s = 60;
      spec.green_offset_s = 10;
      spec.green_base_s = 20 + i * 5;
      spec.seed = 100 + static_cast<std::uint64_t>(i);
      streams.push_back(simulate(spec, kStart, 24 * 3600));
    }
    auto merged = merge_streams(std::move(streams));
    fs::path input = dir;
    fs::create_directories(input);
    std::ofstream out(input / "fleet.rec");
    for (const auto& obs : merged) out << serialize_record(obs) << '\n';
    out.close();
    AnalyzeOptions options;
    options.store_dir = dir / "store";
    run_analyze({(input / "fleet.rec").string()}, options);
    return dir / "store";
  }();
  return store;
}

std::vector<std::string> read_lines(const fs::path& file) {
  std::ifstream in(file);
  REQUIRE(in);
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) lines.push_back(line);
  return lines;
}

}  // namespace

TEST_CASE("fixed-time fleet: timeline flat at zero discrepancy") {
  auto data = load_store(fleet_store());
  REQUIRE(data.tables.size() == 3);
  auto rows = compute_bucket_rows(data);
  CHECK(rows.size() == 3 * 24);  // one simulated day
  for (const auto& row : rows) {
    CHECK(row.metrics.median_cycle_discrepancy_s == 0);
    CHECK(row.cls == PredictabilityClass::HighBothStable);
  }

  auto dir = fs::temp_directory_path() / "greenwave_report_out";
  fs::remove_all(dir);
  fs::create_directories(dir);
  write_timeline_csv(rows, data, dir / "timeline.csv");
  auto lines = read_lines(dir / "timeline.csv");
  CHECK(lines.size() == 169);  // header + 168 slots
  fs::remove_all(dir);
}

TEST_CASE("empty store: 168 timeline rows of absent values") {
  auto dir = fs::temp_directory_path() / "greenwave_report_empty";
  fs::remove_all(dir);
  fs::create_directories(dir);
  StoreData data;
  std::vector<BucketRow> rows;
  write_timeline_csv(rows, data, dir / "timeline.csv");
  auto lines = read_lines(dir / "timeline.csv");
  REQUIRE(lines.size() == 169);
  CHECK(lines[1] == "0,0,0,,,,,,,,,,0,0");
  fs::remove_all(dir);
}

TEST_CASE("green vs discrepancy matrix: level-1 mass on the zero column") {
  auto data = load_store(fleet_store());
  auto rows = compute_bucket_rows(data);
  auto matrix = green_vs_discrepancy_matrix(rows);
  CHECK(matrix.overlap_fraction() == doctest::Approx(1.0));
  std::uint64_t total = 0;
  for (const auto& [cell, count] : matrix.cells) {
    CHECK(cell.second == 0);  // discrepancy column
    total += count;
  }
  CHECK(total == rows.size());
}

TEST_CASE("all-red lights leave the overlap denominator") {
  std::vector<BucketRow> rows(1);
  rows[0].metrics.median_green_length_s = 0;
  rows[0].metrics.median_cycle_discrepancy_s = 0;
  rows[0].metrics.green_phase_count = 0;  // never green
  auto matrix = green_vs_discrepancy_matrix(rows);
  CHECK(matrix.green_bearing_buckets == 0);
  CHECK(matrix.cells.size() == 1);
}

TEST_CASE("per-light medians and predominant class") {
  auto data = load_store(fleet_store());
  auto rows = compute_bucket_rows(data);
  auto lights = per_light_medians(rows, data);
  REQUIRE(lights.size() == 3);
  for (const auto& light : lights) {
    CHECK(!light.excluded);
    CHECK(light.median_cd == 0);
    CHECK(light.predominant_class == PredictabilityClass::HighBothStable);
  }
}

TEST_CASE("excluded lights are reported with a reason") {
  StoreData data;
  LightValidationReport bad;
  bad.light_id = "dead_1";
  bad.reconstructed = 0;
  bad.excluded = true;
  data.validation.push_back(bad);
  auto lights = per_light_medians({}, data);
  REQUIRE(lights.size() == 1);
  CHECK(lights[0].excluded);
  CHECK(lights[0].exclusion_reason == "no reconstructed cycles");
}

TEST_CASE("bucket sampling is deterministic per seed") {
  auto data = load_store(fleet_store());
  auto rows = compute_bucket_rows(data);
  auto a = sample_buckets(rows, 5, 42);
  auto b = sample_buckets(rows, 5, 42);
  REQUIRE(a.size() == 5);
  CHECK(a == b);
  // asking for more than available returns everything
  CHECK(sample_buckets(rows, 10'000, 42).size() == rows.size());

  auto dir = fs::temp_directory_path() / "greenwave_report_samples";
  fs::remove_all(dir);
  write_samples(rows, data, dir, 4, 7);
  std::size_t files = 0;
  for (const auto& e : fs::directory_iterator(dir)) {
    ++files;
    auto lines = read_lines(e.path());
    CHECK(lines.size() >= 3);  // title, header, at least one cycle
    CHECK(lines[0].front() == '#');
  }
  CHECK(files == 4);
  fs::remove_all(dir);
}

TEST_CASE("exports are pure views: re-running changes nothing") {
  auto data = load_store(fleet_store());
  auto rows = compute_bucket_rows(data);
  auto dir = fs::temp_directory_path() / "greenwave_report_rerun";
  fs::remove_all(dir);
  fs::create_directories(dir);
  write_buckets_csv(rows, dir / "buckets.csv");
  auto first = read_lines(dir / "buckets.csv");
  write_buckets_csv(compute_bucket_rows(load_store(fleet_store())),
                    dir / "buckets.csv");
  CHECK(read_lines(dir / "buckets.csv") == first);
  fs::remove_all(dir);
}
