#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "gsphar/data_panel.hpp"
#include "gsphar/evaluation.hpp"
#include "gsphar/models.hpp"

namespace gsphar {

struct SyntheticData {
  int n = 6;
  int t = 2000;
  std::optional<Matrix> coupling;  // default: planted_coupling(n)
  double noise_scale = 0.4;
  double log_mean = 0.0;
  std::uint64_t seed = 0;
};

struct RunConfig {
  // Exactly one data source.
  std::string panel_path;
  std::string intraday_path;
  std::optional<SyntheticData> synthetic;
  double scale = 100.0;

  std::vector<ModelKind> models;
  std::vector<int> horizons{1, 5, 22};
  TargetMode target = TargetMode::Direct;
  int var_p = 22;
  double var_ridge = 1e-4;
  int graph_horizon = 0;  // 0: the forecast horizon
  double train_fraction = 0.7;
  double valid_fraction = 0.1;
  double test_fraction = 0.2;
  TrainingConfig training;
  std::string reference_model = "GSPHAR";
  McsConfig mcs;
  std::optional<std::uint64_t> seed;
  std::string output_dir;
  std::string source;  // canonical JSON of the parsed document
};

/// Parses and validates a run configuration. Unknown keys, unknown model
/// names and inconsistent settings are rejected. Relative paths resolve
/// against `base_dir`.
RunConfig parse_run_config(const std::string& text, const std::string& base_dir = ".");
RunConfig load_run_config(const std::string& path);

/// FNV-1a of the canonical configuration (with the effective seed).
std::uint64_t config_hash(const RunConfig& config);

/// Diagonal persistence 0.5 plus a chain of one-directional spillovers
/// i -> i + 1 of strength 0.3.
Matrix planted_coupling(int n);

struct SplitRows {
  Index train_end = 0;
  Index valid_end = 0;
  Index rows = 0;
};

SplitRows split_rows(Index rows, const RunConfig& config);

struct RunSummary {
  std::string output_dir;
  std::vector<std::string> files;  // relative to output_dir
  EvalReport report;
};

VolPanel load_data(const RunConfig& config);

/// ingest -> graph -> fit -> forecast -> evaluate -> report. Failures are
/// rethrown with the stage name prepended.
RunSummary cmd_run(RunConfig config, const std::optional<std::uint64_t>& seed_override = std::nullopt,
                   const std::string& out_override = "");

void cmd_compute_rv(const std::string& intraday_csv, const std::string& out_csv, double scale = 100.0);

void cmd_build_graph(const std::string& panel_csv, int p, int horizon, double ridge, const std::string& out_dir);

void cmd_describe(const std::string& panel_csv, const std::string& out_csv);

}  // namespace gsphar
