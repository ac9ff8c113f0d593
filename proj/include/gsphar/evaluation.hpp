#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "gsphar/types.hpp"

namespace gsphar {

using Index = Eigen::Index;

struct ForecastSet {
  std::string model;
  int horizon = 1;
  Matrix forecasts;  // T_out x N
  Matrix truth;      // T_out x N
  std::vector<std::string> labels;
};

/// Per-index mean absolute error.
Vector mae(const ForecastSet& fs);

struct DmResult {
  double statistic = 0.0;
  double p_value = 0.5;  // upper tail: small when model 1 is more accurate
  double mean = 0.0;     // d-bar
  double variance = 0.0; // V_d = long-run variance / T
  int lag = 0;
};

/// One-sided DM test on d_t = |e0_t| - |e1_t| with a Bartlett
/// Newey-West variance of lag H - 1.
DmResult dm_test(const Vector& e0, const Vector& e1, int horizon);

/// Bartlett-weighted long-run variance with autocovariances over T.
double newey_west_variance(const Vector& d, int lag);

double normal_upper_tail(double x);

struct McsConfig {
  int bootstrap = 1000;
  int block_length = 0;  // 0: max(2, floor(T^(1/3)))
  double level = 0.05;
  std::uint64_t seed = 0;
};

struct McsResult {
  std::vector<double> p_values;      // per model, input order
  std::vector<bool> included;        // p >= level
  std::vector<int> elimination_order;
  int replications = 0;
  int block_length = 0;
};

int default_block_length(Index length);

/// Model Confidence Set with the range statistic and a moving-block
/// bootstrap. `losses` is T x m, one column per model.
McsResult mcs_test(const Matrix& losses, const McsConfig& config);

struct HorizonReport {
  int horizon = 1;
  std::vector<std::string> models;
  std::vector<std::string> labels;
  Matrix mae;                   // N x m
  std::vector<int> row_minimum; // per index, first model attaining the minimum
  std::string reference;        // DM reference model; empty if not applicable
  std::vector<std::string> competitors;
  std::vector<std::vector<DmResult>> dm;  // competitor x index
  std::vector<McsResult> mcs;             // per index; empty if not applicable
};

struct EvalReport {
  std::vector<HorizonReport> horizons;
};

/// Groups the sets by horizon (ascending), keeping model order of first
/// appearance. DM compares every other model (e0) with `reference` (e1).
EvalReport build_report(const std::vector<ForecastSet>& sets, const std::string& reference, const McsConfig& mcs);

std::string mae_csv(const HorizonReport& r);
std::string dm_csv(const HorizonReport& r);
std::string mcs_csv(const HorizonReport& r);

/// Three-decimal tables with the row minimum marked by '*'.
std::string human_tables(const HorizonReport& r);

/// <dir>/h<H>/{mae,dm,mcs}.csv and tables.txt for every horizon.
void write_report(const EvalReport& report, const std::string& dir);

}  // namespace gsphar
