#pragma once

#include <string>
#include <vector>

#include "gradsurge/train.hpp"

namespace gradsurge {

struct RunReport {
  std::string config_hash;
  std::uint64_t seed = 0;
  nlohmann::json config;
  std::vector<EpochStats> epochs;
  int best_epoch = -1;
  double test_auc = 0.0;
  std::vector<TraceEntry> w_trace;
  std::vector<TraceEntry> kappa_trace;
  double wall_clock_sec = 0.0;

  nlohmann::json to_json() const;
  static RunReport from_json(const nlohmann::json& j);
};

// gen -> split -> train -> evaluate test ROC-AUC at the best-validation
// epoch. Deterministic given the config (wall clock aside).
RunReport run_experiment(const ExperimentConfig& cfg);

// writes <out_dir>/runs/<hash>/report.json and trace_{w,kappa}.csv
void write_run_artifacts(const RunReport& report, const std::string& out_dir);

struct SweepRow {
  std::string method;
  int n_seeds = 0;
  double mean_auc = 0.0;
  double std_auc = 0.0;  // sample standard deviation
  std::vector<double> aucs;
};

// Executes configs x seeds on a worker pool (run state fully isolated; all
// file writing happens on the calling thread afterwards) and writes
// <out_dir>/sweep_summary.csv. Seeds are base_seed .. base_seed+n_seeds-1.
std::vector<SweepRow> sweep(const std::vector<ExperimentConfig>& configs, int n_seeds, int threads,
                            const std::string& out_dir);

// independent re-aggregation from the per-run report.json files
std::vector<SweepRow> aggregate_reports(const std::string& out_dir);

std::string format_sweep_table(const std::vector<SweepRow>& rows);
void write_sweep_csv(const std::string& path, const std::vector<SweepRow>& rows);

}  // namespace gradsurge
