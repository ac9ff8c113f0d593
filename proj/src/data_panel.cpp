#include "gsphar/data_panel.hpp"

#include <algorithm>
#include <cstdio>
#include <limits>
#include <cmath>
#include <map>
#include <set>
#include <sstream>
#include <unordered_map>

#include <Eigen/Eigenvalues>

#include "gsphar/csv.hpp"
#include "gsphar/rng.hpp"

namespace gsphar {

namespace {

void require_unique_labels(const std::vector<std::string>& labels) {
  std::set<std::string> seen;
  for (const auto& l : labels) {
    require(seen.insert(l).second, "duplicate index label '" + l + "'");
  }
}

void require_increasing_days(const std::vector<std::string>& days, const std::string& what) {
  for (std::size_t i = 1; i < days.size(); ++i) {
    require(days[i - 1] < days[i], what + ": days not strictly increasing at '" + days[i] + "'");
  }
}

// Howard Hinnant's civil-from-days.
std::string iso_date(long z) {
  z += 719468;
  const long era = (z >= 0 ? z : z - 146096) / 146097;
  const long doe = z - era * 146097;
  const long yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
  const long doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
  const long mp = (5 * doy + 2) / 153;
  const long d = doy - (153 * mp + 2) / 5 + 1;
  const long m = mp < 10 ? mp + 3 : mp - 9;
  const long y = yoe + era * 400 + (m <= 2 ? 1 : 0);
  char buf[64];
  std::snprintf(buf, sizeof buf, "%04ld-%02ld-%02ld", y, m, d);
  return buf;
}

long days_from_civil(long y, long m, long d) {
  y -= m <= 2 ? 1 : 0;
  const long era = (y >= 0 ? y : y - 399) / 400;
  const long yoe = y - era * 400;
  const long doy = (153 * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
  const long doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
  return era * 146097 + doe - 719468;
}

}  // namespace

std::vector<std::string> business_days(const std::string& start, int count) {
  require(start.size() == 10 && start[4] == '-' && start[7] == '-', "business_days: expected YYYY-MM-DD");
  long z = days_from_civil(std::stol(start.substr(0, 4)), std::stol(start.substr(5, 2)),
                           std::stol(start.substr(8, 2)));
  std::vector<std::string> days;
  days.reserve(static_cast<std::size_t>(std::max(count, 0)));
  while (static_cast<int>(days.size()) < count) {
    const long weekday = (z + 4) % 7;  // 1970-01-01 was a Thursday; 0 = Sunday
    if (weekday != 0 && weekday != 6) days.push_back(iso_date(z));
    ++z;
  }
  return days;
}

void validate(const VolPanel& panel) {
  require(panel.values.rows() == static_cast<Eigen::Index>(panel.days.size()),
          "panel row count does not match day count");
  require(panel.values.cols() == static_cast<Eigen::Index>(panel.labels.size()),
          "panel column count does not match label count");
  require(panel.scale > 0.0, "panel scale must be positive");
  require_unique_labels(panel.labels);
  require_increasing_days(panel.days, "panel");
  for (Eigen::Index t = 0; t < panel.values.rows(); ++t) {
    for (Eigen::Index i = 0; i < panel.values.cols(); ++i) {
      const double v = panel.values(t, i);
      require(std::isfinite(v) && v >= 0.0, "panel value at day '" + panel.days[t] + "', index '" +
                                                panel.labels[i] + "' is not a finite non-negative number");
    }
  }
}

VolPanel compute_rv(const ReturnPanel& returns, double scale) {
  require(scale > 0.0, "compute_rv: scale must be positive");
  require_unique_labels(returns.labels);
  require_increasing_days(returns.days, "compute_rv");
  const auto t_count = returns.days.size();
  const auto n_count = returns.labels.size();
  require(returns.returns.size() == t_count, "compute_rv: return grid has wrong day count");

  VolPanel out;
  out.labels = returns.labels;
  out.days = returns.days;
  out.scale = scale;
  out.values = Matrix::Zero(static_cast<Eigen::Index>(t_count), static_cast<Eigen::Index>(n_count));
  for (std::size_t t = 0; t < t_count; ++t) {
    require(returns.returns[t].size() == n_count, "compute_rv: return grid has wrong index count");
    for (std::size_t i = 0; i < n_count; ++i) {
      const auto& cell = returns.returns[t][i];
      require(!cell.empty(), "compute_rv: no returns for day '" + returns.days[t] + "', index '" +
                                 returns.labels[i] + "'");
      double rv = 0.0;
      for (std::size_t m = 0; m < cell.size(); ++m) {
        if (!std::isfinite(cell[m])) {
          throw Error("compute_rv: non-finite return #" + std::to_string(m) + " on day '" +
                      returns.days[t] + "', index '" + returns.labels[i] + "'");
        }
        rv += cell[m] * cell[m];
      }
      out.values(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(i)) = scale * std::sqrt(rv);
    }
  }
  return out;
}

std::vector<std::string> common_days(const std::vector<std::vector<std::string>>& day_sets) {
  require(!day_sets.empty(), "alignment needs at least one series");
  std::vector<std::string> common(day_sets.front());
  std::sort(common.begin(), common.end());
  for (std::size_t k = 1; k < day_sets.size(); ++k) {
    std::vector<std::string> other(day_sets[k]);
    std::sort(other.begin(), other.end());
    std::vector<std::string> next;
    std::set_intersection(common.begin(), common.end(), other.begin(), other.end(),
                          std::back_inserter(next));
    common = std::move(next);
  }
  require(!common.empty(), "alignment: the series share no common dates");
  return common;
}

VolPanel align_panels(const std::vector<DatedSeries>& raw, double scale) {
  std::vector<std::vector<std::string>> day_sets;
  std::vector<std::string> labels;
  for (const auto& s : raw) {
    require(s.days.size() == s.values.size(), "series '" + s.label + "': date/value length mismatch");
    std::set<std::string> uniq(s.days.begin(), s.days.end());
    require(uniq.size() == s.days.size(), "series '" + s.label + "' has duplicate dates");
    day_sets.push_back(s.days);
    labels.push_back(s.label);
  }
  require_unique_labels(labels);
  const auto days = common_days(day_sets);

  VolPanel out;
  out.labels = labels;
  out.days = days;
  out.scale = scale;
  out.values.resize(static_cast<Eigen::Index>(days.size()), static_cast<Eigen::Index>(raw.size()));
  for (std::size_t k = 0; k < raw.size(); ++k) {
    std::unordered_map<std::string, double> lookup;
    for (std::size_t j = 0; j < raw[k].days.size(); ++j) lookup.emplace(raw[k].days[j], raw[k].values[j]);
    for (std::size_t t = 0; t < days.size(); ++t) {
      out.values(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(k)) = lookup.at(days[t]);
    }
  }
  validate(out);
  return out;
}

ReturnPanel align_returns(const std::vector<IntradaySeries>& raw) {
  std::vector<std::vector<std::string>> day_sets;
  ReturnPanel out;
  for (const auto& s : raw) {
    require(s.days.size() == s.returns.size(), "series '" + s.label + "': day/return length mismatch");
    day_sets.push_back(s.days);
    out.labels.push_back(s.label);
  }
  require_unique_labels(out.labels);
  out.days = common_days(day_sets);
  out.returns.assign(out.days.size(), std::vector<std::vector<double>>(raw.size()));
  for (std::size_t k = 0; k < raw.size(); ++k) {
    std::unordered_map<std::string, std::size_t> lookup;
    for (std::size_t j = 0; j < raw[k].days.size(); ++j) lookup.emplace(raw[k].days[j], j);
    for (std::size_t t = 0; t < out.days.size(); ++t) {
      out.returns[t][k] = raw[k].returns[lookup.at(out.days[t])];
    }
  }
  return out;
}

int adf_default_lag(std::size_t t) {
  return static_cast<int>(std::floor(12.0 * std::pow(static_cast<double>(t) / 100.0, 0.25)));
}

AdfResult adf_test(const std::vector<double>& series) {
  const auto t_count = series.size();
  require(t_count >= 30, "adf_test: need at least 30 observations");
  for (double v : series) require(std::isfinite(v), "adf_test: non-finite observation");

  const int k = adf_default_lag(t_count);
  std::vector<double> dy(t_count - 1);
  for (std::size_t t = 1; t < t_count; ++t) dy[t - 1] = series[t] - series[t - 1];

  // Row r regresses dy[j] (j = k + r) on 1, y[j], dy[j-1..j-k].
  const auto first = static_cast<std::size_t>(k);
  require(dy.size() > first + static_cast<std::size_t>(k) + 2, "adf_test: series too short for lag order");
  const auto n_obs = static_cast<Eigen::Index>(dy.size() - first);
  const Eigen::Index n_reg = 2 + k;
  Matrix x(n_obs, n_reg);
  Vector y(n_obs);
  for (Eigen::Index r = 0; r < n_obs; ++r) {
    const auto j = first + static_cast<std::size_t>(r);
    y(r) = dy[j];
    x(r, 0) = 1.0;
    x(r, 1) = series[j];
    for (int l = 1; l <= k; ++l) x(r, 1 + l) = dy[j - static_cast<std::size_t>(l)];
  }

  Eigen::ColPivHouseholderQR<Matrix> qr(x);
  qr.setThreshold(1e-10);
  require(qr.rank() == n_reg, "adf_test: singular regression matrix (degenerate series)");
  const Vector beta = qr.solve(y);
  const Vector resid = y - x * beta;
  const double sigma2 = resid.squaredNorm() / static_cast<double>(n_obs - n_reg);
  const Matrix xtx_inv = (x.transpose() * x).inverse();
  const double se = std::sqrt(sigma2 * xtx_inv(1, 1));
  require(se > 0.0 && std::isfinite(se), "adf_test: zero residual variance (degenerate series)");

  AdfResult out;
  out.statistic = beta(1) / se;
  out.reject_5pct = out.statistic < kAdfCritical5;
  out.lags = k;
  return out;
}

namespace {

std::string adf_band(double stat) {
  // Asymptotic constant-only critical values.
  if (stat < -3.43) return "<0.01";
  if (stat < -2.86) return "<0.05";
  if (stat < -2.57) return "<0.10";
  return ">0.10";
}

}  // namespace

PanelStats describe(const VolPanel& panel) {
  validate(panel);
  require(panel.rows() >= 30, "describe: need at least 30 observations");
  PanelStats stats;
  const auto n = static_cast<double>(panel.rows());
  for (Eigen::Index i = 0; i < panel.cols(); ++i) {
    const Vector col = panel.values.col(i);
    IndexStats s;
    s.label = panel.labels[static_cast<std::size_t>(i)];
    s.mean = col.mean();
    const Vector c = col.array() - s.mean;
    const double m2 = c.squaredNorm() / n;
    const double m3 = c.array().cube().sum() / n;
    const double m4 = c.array().square().square().sum() / n;
    s.stddev = std::sqrt(c.squaredNorm() / (n - 1.0));
    if (m2 > 0.0) {
      s.skewness = m3 / std::pow(m2, 1.5);
      s.kurtosis = m4 / (m2 * m2);
    }
    try {
      const auto adf = adf_test(std::vector<double>(col.data(), col.data() + col.size()));
      s.adf_stat = adf.statistic;
      s.adf_reject = adf.reject_5pct;
      s.adf_band = adf_band(adf.statistic);
    } catch (const Error&) {
      s.adf_stat = std::numeric_limits<double>::quiet_NaN();
      s.adf_reject = false;
      s.adf_band = "n/a";
    }
    stats.rows.push_back(std::move(s));
  }
  return stats;
}

double spectral_radius(const Matrix& m) {
  if (m.size() == 0) return 0.0;
  Eigen::EigenSolver<Matrix> es(m, false);
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

VolPanel generate_synthetic(const SyntheticSpec& spec) {
  require(spec.n >= 1 && spec.t >= 1, "generate_synthetic: n and t must be positive");
  require(spec.coupling.rows() == spec.n && spec.coupling.cols() == spec.n,
          "generate_synthetic: coupling must be n x n");
  require(spec.noise_scale > 0.0, "generate_synthetic: noise scale must be positive");
  require(spec.burn_in >= 0, "generate_synthetic: burn-in must be non-negative");
  require(spectral_radius(spec.coupling) < 1.0,
          "generate_synthetic: coupling spectral radius must be < 1 (explosive specification)");

  auto rng = make_rng(spec.seed, 0);
  Vector x = Vector::Zero(spec.n);
  Vector next(spec.n);
  VolPanel out;
  out.values.resize(spec.t, spec.n);
  for (int step = -spec.burn_in; step < spec.t; ++step) {
    next.noalias() = spec.coupling * x;
    for (int i = 0; i < spec.n; ++i) next(i) += spec.noise_scale * standard_normal(rng);
    x = next;
    if (step >= 0) {
      for (int i = 0; i < spec.n; ++i) out.values(step, i) = std::max(0.0, std::exp(spec.log_mean + x(i)));
    }
  }
  for (int i = 0; i < spec.n; ++i) out.labels.push_back("S" + std::to_string(i + 1));
  out.days = business_days("2000-01-03", spec.t);
  return out;
}

VolPanel read_panel_csv(const std::string& path) {
  const auto table = csv::read(path);
  require(table.header.size() >= 2 && table.header[0] == "date",
          path + ": expected header 'date,<label1>,...'");
  VolPanel panel;
  panel.labels.assign(table.header.begin() + 1, table.header.end());
  panel.values.resize(static_cast<Eigen::Index>(table.rows.size()),
                      static_cast<Eigen::Index>(panel.labels.size()));
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto& row = table.rows[r];
    panel.days.push_back(row[0]);
    for (std::size_t c = 1; c < row.size(); ++c) {
      panel.values(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c - 1)) =
          csv::parse_double(row[c], path + ":" + std::to_string(table.line_numbers[r]));
    }
  }
  validate(panel);
  return panel;
}

std::string panel_csv(const VolPanel& panel) {
  std::ostringstream os;
  os << "date";
  for (const auto& l : panel.labels) os << ',' << l;
  os << '\n';
  for (Eigen::Index t = 0; t < panel.rows(); ++t) {
    os << panel.days[static_cast<std::size_t>(t)];
    for (Eigen::Index i = 0; i < panel.cols(); ++i) os << ',' << csv::format_machine(panel.values(t, i));
    os << '\n';
  }
  return os.str();
}

void write_panel_csv(const VolPanel& panel, const std::string& path) {
  csv::write_text(path, panel_csv(panel));
}

std::vector<IntradaySeries> read_intraday_csv(const std::string& path) {
  const auto table = csv::read(path);
  require(table.header == std::vector<std::string>{"date", "label", "ret"},
          path + ": expected header 'date,label,ret'");
  std::vector<IntradaySeries> series;
  std::map<std::string, std::size_t> index_of;
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto& row = table.rows[r];
    const std::string where = path + ":" + std::to_string(table.line_numbers[r]);
    require(!row[0].empty(), where + ": empty date");
    require(!row[1].empty(), where + ": empty label");
    auto [it, inserted] = index_of.emplace(row[1], series.size());
    if (inserted) series.push_back(IntradaySeries{row[1], {}, {}});
    auto& s = series[it->second];
    if (s.days.empty() || s.days.back() != row[0]) {
      require(s.days.empty() || s.days.back() < row[0],
              where + ": rows for '" + row[1] + "' must be in increasing date order");
      s.days.push_back(row[0]);
      s.returns.emplace_back();
    }
    const double ret = row[2].empty() ? 0.0 : csv::parse_double(row[2], where);
    require(std::isfinite(ret), where + ": non-finite return");
    s.returns.back().push_back(ret);
  }
  require(!series.empty(), path + ": no data rows");
  return series;
}

std::string stats_csv(const PanelStats& stats) {
  std::ostringstream os;
  os << "label,mean,std,skewness,kurtosis,adf_stat,adf_reject\n";
  for (const auto& s : stats.rows) {
    os << s.label << ',' << csv::format_machine(s.mean) << ',' << csv::format_machine(s.stddev) << ','
       << csv::format_machine(s.skewness) << ',' << csv::format_machine(s.kurtosis) << ','
       << csv::format_machine(s.adf_stat) << ',' << (s.adf_reject ? 1 : 0) << '\n';
  }
  return os.str();
}

}  // namespace gsphar
