// Command-line pipeline driver: simulate, analyze, classify, report.
// Stages communicate through the on-disk bucket store so large runs can
// resume per stage. Every subcommand prints a machine-readable JSON
// summary to stdout. Exit codes: 0 success, 1 fatal I/O or config
// error, 2 invalid arguments.

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>
#include <zlib.h>

#include "greenwave/analyze.hpp"
#include "greenwave/classify.hpp"
#include "greenwave/ingest.hpp"
#include "greenwave/report.hpp"
#include "greenwave/simulate.hpp"

namespace {

using nlohmann::json;

struct Defaults {
  std::string store;
  std::string tz = "UTC";
  unsigned jobs = 0;
  double max_removed = 0.10;
  int neighbor_window = 2;
  std::int64_t cd_threshold = 5;
  double wtd_threshold = 0.20;
};

// Precedence: flag > environment > config file > built-in.
Defaults load_defaults(const std::string& config_path) {
  Defaults d;
  if (!config_path.empty()) {
    std::ifstream in(config_path);
    if (!in) throw std::runtime_error("cannot read config file " + config_path);
    json j;
    in >> j;
    if (j.contains("store")) d.store = j.at("store").get<std::string>();
    if (j.contains("tz")) d.tz = j.at("tz").get<std::string>();
    if (j.contains("jobs")) d.jobs = j.at("jobs").get<unsigned>();
    if (j.contains("max_removed")) d.max_removed = j.at("max_removed").get<double>();
    if (j.contains("neighbor_window")) d.neighbor_window = j.at("neighbor_window").get<int>();
    if (j.contains("cd")) d.cd_threshold = j.at("cd").get<std::int64_t>();
    if (j.contains("wtd")) d.wtd_threshold = j.at("wtd").get<double>();
  }
  if (const char* store = std::getenv("GREENWAVE_STORE")) d.store = store;
  if (const char* jobs = std::getenv("GREENWAVE_JOBS"))
    d.jobs = static_cast<unsigned>(std::strtoul(jobs, nullptr, 10));
  return d;
}

json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path);
  json j;
  in >> j;
  return j;
}

// Observation lines, gzip-compressed when the name ends in .gz.
void write_stream(const std::vector<greenwave::Observation>& stream,
                  const std::string& path) {
  bool gz = path.size() > 3 && path.substr(path.size() - 3) == ".gz";
  std::string buffer;
  buffer.reserve(stream.size() * 32);
  for (const auto& obs : stream) {
    buffer += greenwave::serialize_record(obs);
    buffer += '\n';
  }
  if (gz) {
    gzFile file = gzopen(path.c_str(), "wb");
    if (!file) throw std::runtime_error("cannot write " + path);
    if (gzwrite(file, buffer.data(), static_cast<unsigned>(buffer.size())) !=
        static_cast<int>(buffer.size())) {
      gzclose(file);
      throw std::runtime_error("short write to " + path);
    }
    gzclose(file);
  } else {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << buffer;
  }
}

int cmd_simulate(const std::string& spec_path, std::int64_t from,
                 std::int64_t hours, const std::string& out_path,
                 const std::string& inject_path, const std::string& ledger_path,
                 std::optional<std::uint64_t> seed) {
  json spec_json = read_json_file(spec_path);
  std::vector<greenwave::ProgramSpec> specs;
  if (spec_json.is_array())
    specs = spec_json.get<std::vector<greenwave::ProgramSpec>>();
  else
    specs.push_back(spec_json.get<greenwave::ProgramSpec>());

  std::vector<std::vector<greenwave::Observation>> streams;
  for (std::size_t i = 0; i < specs.size(); ++i) {
    if (seed) specs[i].seed = *seed + i;
    streams.push_back(greenwave::simulate(specs[i], from, hours * 3600));
  }
  auto merged = greenwave::merge_streams(std::move(streams));

  greenwave::FaultLedger ledger;
  if (!inject_path.empty()) {
    auto model = read_json_file(inject_path).get<greenwave::InjectionModel>();
    merged = greenwave::inject_errors(merged, model, ledger);
    json lj = ledger;
    std::string lpath = ledger_path.empty() ? out_path + ".faults.json" : ledger_path;
    std::ofstream lout(lpath);
    if (!lout) throw std::runtime_error("cannot write " + lpath);
    lout << lj.dump(2) << '\n';
  }
  write_stream(merged, out_path);

  json summary{{"lights", specs.size()},
               {"observations", merged.size()},
               {"injected_faults", ledger.faults.size()},
               {"out", out_path}};
  std::cout << summary.dump() << '\n';
  return 0;
}

int cmd_analyze(const std::vector<std::string>& inputs,
                const greenwave::AnalyzeOptions& options) {
  auto summary = greenwave::run_analyze(inputs, options);
  std::cout << json(summary).dump() << '\n';
  return 0;
}

int cmd_classify(const std::string& store, const std::string& out_dir,
                 const greenwave::Thresholds& thresholds) {
  auto data = greenwave::load_store(store);
  auto rows = greenwave::compute_bucket_rows(data, thresholds);
  std::filesystem::create_directories(out_dir);
  greenwave::write_buckets_csv(rows, std::filesystem::path(out_dir) / "buckets.csv");
  greenwave::write_buckets_json(rows, std::filesystem::path(out_dir) / "buckets.json");

  std::map<std::string, std::uint64_t> class_counts;
  for (const auto& row : rows)
    ++class_counts[std::string(greenwave::class_name(row.cls))];
  json summary{{"lights", data.tables.size()},
               {"buckets", rows.size()},
               {"class_counts", class_counts},
               {"thresholds",
                {{"cd_s", thresholds.cycle_discrepancy_s},
                 {"wtd", thresholds.wait_time_diversity}}}};
  std::cout << summary.dump() << '\n';
  return 0;
}

int cmd_report(const std::string& store, const std::string& out_dir,
               std::size_t samples, std::uint64_t seed,
               const greenwave::Thresholds& thresholds) {
  auto data = greenwave::load_store(store);
  auto rows = greenwave::compute_bucket_rows(data, thresholds);
  std::filesystem::path out(out_dir);
  std::filesystem::create_directories(out);

  greenwave::write_timeline_csv(rows, data, out / "timeline.csv");
  auto matrix = greenwave::green_vs_discrepancy_matrix(rows);
  greenwave::write_green_vs_cd_csv(matrix, out / "green_vs_cd.csv");
  auto lights = greenwave::per_light_medians(rows, data);
  greenwave::write_lights_csv(lights, out / "lights.csv");
  greenwave::write_lights_json(lights, out / "lights.json");
  greenwave::write_samples(rows, data, out / "samples", samples, seed);

  json summary{{"lights", lights.size()},
               {"buckets", rows.size()},
               {"overlap_fraction", matrix.overlap_fraction()},
               {"samples", std::min(samples, rows.size())},
               {"out", out_dir}};
  std::cout << summary.dump() << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Traffic light switching-cycle predictability pipeline"};
  app.require_subcommand(1);

  std::string config_path;
  app.add_option("--config", config_path, "JSON config file with defaults");

  // simulate
  auto* sim = app.add_subcommand("simulate", "Generate observation streams");
  std::string sim_spec, sim_out, sim_inject, sim_ledger;
  std::int64_t sim_from = 0, sim_hours = 1;
  std::optional<std::uint64_t> sim_seed;
  sim->add_option("--spec", sim_spec, "Program spec JSON (one light or array)")
      ->required();
  sim->add_option("--from", sim_from, "Start instant, UTC epoch seconds")
      ->required();
  sim->add_option("--hours", sim_hours, "Duration in hours")->required();
  sim->add_option("--out", sim_out, "Output record file (.gz for gzip)")
      ->required();
  sim->add_option("--inject", sim_inject, "Error injection model JSON");
  sim->add_option("--ledger", sim_ledger,
                  "Fault ledger output (default <out>.faults.json)");
  sim->add_option("--seed", sim_seed, "Override spec seeds (seed + light index)");

  // analyze
  auto* ana = app.add_subcommand("analyze", "Reconstruct, prune, bucketize");
  std::vector<std::string> ana_in;
  std::string ana_store, ana_tz;
  double ana_max_removed = -1;
  int ana_neighbor = -1;
  std::int64_t ana_reorder = 300, ana_max_cycle = 600;
  unsigned ana_jobs = 0;
  bool ana_jobs_set = false;
  ana->add_option("--in", ana_in, "Input record files, processed in order")
      ->required();
  ana->add_option("--store", ana_store, "Bucket store directory");
  ana->add_option("--tz", ana_tz, "Bucket timezone (UTC or fixed offset)");
  ana->add_option("--max-removed", ana_max_removed,
                  "Exclusion threshold on the removal ratio");
  ana->add_option("--neighbor-window", ana_neighbor,
                  "Cycles per side for the length rule median");
  ana->add_option("--reorder-window", ana_reorder, "Ingest reorder window, s");
  ana->add_option("--max-cycle-len", ana_max_cycle,
                  "Reconstruction guard on span length, s");
  ana->add_option("--jobs", ana_jobs, "Worker count (default: processors)")
      ->each([&](const std::string&) { ana_jobs_set = true; });

  // classify
  auto* cls = app.add_subcommand("classify", "Per-bucket metrics and classes");
  std::string cls_store, cls_out;
  std::optional<std::int64_t> cls_cd;
  std::optional<double> cls_wtd;
  cls->add_option("--store", cls_store, "Bucket store directory");
  cls->add_option("--out", cls_out, "Output directory")->required();
  cls->add_option("--cd", cls_cd, "Cycle discrepancy threshold, s");
  cls->add_option("--wtd", cls_wtd, "Wait time diversity threshold, fraction");

  // report
  auto* rep = app.add_subcommand("report", "Plot-ready exports");
  std::string rep_store, rep_out;
  std::size_t rep_samples = 16;
  std::uint64_t rep_seed = 1;
  std::optional<std::int64_t> rep_cd;
  std::optional<double> rep_wtd;
  rep->add_option("--store", rep_store, "Bucket store directory");
  rep->add_option("--out", rep_out, "Output directory")->required();
  rep->add_option("--samples", rep_samples, "Number of sampled buckets");
  rep->add_option("--seed", rep_seed, "Sampling seed");
  rep->add_option("--cd", rep_cd, "Cycle discrepancy threshold, s");
  rep->add_option("--wtd", rep_wtd, "Wait time diversity threshold, fraction");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    Defaults defaults = load_defaults(config_path);

    if (sim->parsed())
      return cmd_simulate(sim_spec, sim_from, sim_hours, sim_out, sim_inject,
                          sim_ledger, sim_seed);

    if (ana->parsed()) {
      greenwave::AnalyzeOptions options;
      std::string store = ana_store.empty() ? defaults.store : ana_store;
      if (store.empty())
        throw std::runtime_error("no store directory (flag --store, env "
                                 "GREENWAVE_STORE, or config)");
      options.store_dir = store;
      std::string tz_spec = ana_tz.empty() ? defaults.tz : ana_tz;
      auto tz = greenwave::TimeZone::parse(tz_spec);
      if (!tz) throw std::runtime_error("bad timezone spec: " + tz_spec);
      options.tz = *tz;
      options.max_removed_ratio =
          ana_max_removed >= 0 ? ana_max_removed : defaults.max_removed;
      options.prune.neighbor_window =
          ana_neighbor >= 0 ? ana_neighbor : defaults.neighbor_window;
      options.reorder_window_s = ana_reorder;
      options.reconstruct.max_cycle_length_s = ana_max_cycle;
      options.jobs = ana_jobs_set ? ana_jobs : defaults.jobs;
      return cmd_analyze(ana_in, options);
    }

    greenwave::Thresholds thresholds{defaults.cd_threshold,
                                     defaults.wtd_threshold};
    if (cls->parsed()) {
      if (cls_cd) thresholds.cycle_discrepancy_s = *cls_cd;
      if (cls_wtd) thresholds.wait_time_diversity = *cls_wtd;
      std::string store = cls_store.empty() ? defaults.store : cls_store;
      if (store.empty()) throw std::runtime_error("no store directory");
      return cmd_classify(store, cls_out, thresholds);
    }
    if (rep->parsed()) {
      if (rep_cd) thresholds.cycle_discrepancy_s = *rep_cd;
      if (rep_wtd) thresholds.wait_time_diversity = *rep_wtd;
      std::string store = rep_store.empty() ? defaults.store : rep_store;
      if (store.empty()) throw std::runtime_error("no store directory");
      return cmd_report(store, rep_out, rep_samples, rep_seed, thresholds);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
