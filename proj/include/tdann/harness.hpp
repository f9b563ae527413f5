#pragma once

#include <optional>
#include <string>
#include <vector>

#include "tdann/data.hpp"
#include "tdann/nets.hpp"
#include "tdann/train.hpp"

namespace tdann {

/// Optional file-based data source instead of the synthetic generator.
struct DataPaths {
  std::string source_csv;
  std::string target_csv;
  std::string target_val_csv;
};

/// Grid description for the comparison protocol: methods x label-supply
/// fractions x seeds. Loaded from JSON (schema documented in the README);
/// TDANN_OUT_DIR overrides out_dir when set.
struct ExperimentConfig {
  ShiftSpec data;
  std::optional<DataPaths> files;
  std::vector<std::string> methods = {"source_only", "target_only", "dann", "transdann"};
  std::vector<double> fractions = {1.0, 0.95, 0.90, 0.85, 0.80};
  std::vector<std::uint64_t> seeds = {1};
  NetSpec net;
  TrainConfig train;
  std::string out_dir = "runs";

  void validate() const;
  static ExperimentConfig from_json_file(const std::string& path);
  std::string to_json() const;
};

struct RunResult {
  std::string method;
  double fraction = 1.0;
  std::uint64_t seed = 0;
  double acc_target_test = 0.0;
  double acc_source_dev = -1.0;
  double dhat = 0.0;
  double wall_time_sec = 0.0;
  std::string status = "ok";  // "ok" or "failed: <reason>"
  std::string trace_path;
  std::string data_hash;
};

/// Runs the grid. Completed (method, fraction, seed, data-hash) runs found
/// under out_dir are loaded, not recomputed; failures are recorded and the
/// remaining runs continue. Appends to out_dir/results.csv.
std::vector<RunResult> run_experiment(const ExperimentConfig& cfg);

std::vector<RunResult> read_results_csv(const std::string& path);

struct Comparison {
  std::string table;              // aligned text table
  std::string csv;                // same content as CSV
  double max_improvement_pct = 0.0;  // max over fractions, TransDANN vs DANN
  std::vector<std::string> missing_pairs;
};

/// Per-fraction mean +- sd per method, plus the max percentage improvement
/// of transdann over dann computed on seed-means of matched pairs.
Comparison compare(const std::vector<RunResult>& results);

/// Plot-ready series: one row per fraction, mean and sd columns per method.
std::string plot_series_csv(const std::vector<RunResult>& results, const std::string& metric);

/// Self-contained SVG line chart of the same series.
std::string plot_series_svg(const std::vector<RunResult>& results, const std::string& metric);

/// FNV-1a hash of a dataset's bytes, as a hex string key component.
std::string dataset_hash(const LabeledSet& source, const UnlabeledSet& target,
                         const LabeledSet& target_val);

}  // namespace tdann
