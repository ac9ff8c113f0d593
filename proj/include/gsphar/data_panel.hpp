#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "gsphar/types.hpp"

namespace gsphar {

/// Intraday log-returns, one sequence per (day, index) cell.
struct ReturnPanel {
  std::vector<std::string> labels;
  std::vector<std::string> days;
  // returns[day][index] holds the intraday returns in within-day order.
  std::vector<std::vector<std::vector<double>>> returns;
};

/// Aligned T x N panel of scaled square-root realized volatility.
struct VolPanel {
  std::vector<std::string> labels;
  std::vector<std::string> days;
  Matrix values;  // rows = days, columns = indices
  double scale = 100.0;

  Eigen::Index rows() const { return values.rows(); }
  Eigen::Index cols() const { return values.cols(); }
};

/// Throws if the panel breaks its invariants (finite, non-negative, ordered
/// days, unique labels, consistent shapes).
void validate(const VolPanel& panel);

struct IndexStats {
  std::string label;
  double mean = 0.0;
  double stddev = 0.0;
  double skewness = 0.0;
  double kurtosis = 0.0;  // raw, not excess
  double adf_stat = 0.0;
  bool adf_reject = false;
  std::string adf_band;  // "<0.01", "<0.05", "<0.10" or ">0.10"
};

struct PanelStats {
  std::vector<IndexStats> rows;
};

struct SyntheticSpec {
  int n = 0;
  int t = 0;
  Matrix coupling;  // coupling(i, j): effect of log-vol j at t-1 on log-vol i at t
  double noise_scale = 0.3;
  std::uint64_t seed = 0;
  double log_mean = 0.0;
  int burn_in = 500;
};

struct AdfResult {
  double statistic = 0.0;
  bool reject_5pct = false;
  int lags = 0;
};

/// A single dated series for alignment.
struct DatedSeries {
  std::string label;
  std::vector<std::string> days;
  std::vector<double> values;
};

/// Intraday returns of one index, grouped by day.
struct IntradaySeries {
  std::string label;
  std::vector<std::string> days;
  std::vector<std::vector<double>> returns;
};

inline constexpr double kAdfCritical5 = -2.86;

VolPanel compute_rv(const ReturnPanel& returns, double scale = 100.0);

VolPanel align_panels(const std::vector<DatedSeries>& raw, double scale = 100.0);

/// Restricts intraday series to their common days and builds a ReturnPanel.
ReturnPanel align_returns(const std::vector<IntradaySeries>& raw);

/// Sorted intersection of the day sets; throws when it is empty.
std::vector<std::string> common_days(const std::vector<std::vector<std::string>>& day_sets);

PanelStats describe(const VolPanel& panel);

AdfResult adf_test(const std::vector<double>& series);

/// floor(12 (T / 100)^(1/4)) augmentation lags.
int adf_default_lag(std::size_t t);

VolPanel generate_synthetic(const SyntheticSpec& spec);

double spectral_radius(const Matrix& m);

/// `count` consecutive Monday-to-Friday ISO dates starting at `start`.
std::vector<std::string> business_days(const std::string& start, int count);

// --- file formats -------------------------------------------------------

/// Header `date,<label1>,...,<labelN>`, one row per day.
VolPanel read_panel_csv(const std::string& path);
void write_panel_csv(const VolPanel& panel, const std::string& path);
std::string panel_csv(const VolPanel& panel);

/// Header `date,label,ret`, one row per intraday return. An empty `ret`
/// field records a day without trades (a single zero return). Series are
/// returned in order of first label appearance.
std::vector<IntradaySeries> read_intraday_csv(const std::string& path);

std::string stats_csv(const PanelStats& stats);

}  // namespace gsphar
