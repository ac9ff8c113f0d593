#include "gsphar/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <limits>
#include <map>

#include "gsphar/csv.hpp"
#include "gsphar/kernels.hpp"
#include "gsphar/rng.hpp"

namespace gsphar {

namespace {

void check_set(const ForecastSet& fs) {
  require(fs.forecasts.rows() == fs.truth.rows() && fs.forecasts.cols() == fs.truth.cols(),
          "forecast set '" + fs.model + "': forecast and truth shapes differ");
  require(fs.forecasts.rows() >= 1, "forecast set '" + fs.model + "': no forecasts");
  require(fs.forecasts.allFinite() && fs.truth.allFinite(), "forecast set '" + fs.model + "': non-finite entries");
}

}  // namespace

Vector mae(const ForecastSet& fs) {
  check_set(fs);
  return (fs.forecasts - fs.truth).cwiseAbs().colwise().mean().transpose();
}

double normal_upper_tail(double x) { return 0.5 * std::erfc(x / std::sqrt(2.0)); }

double newey_west_variance(const Vector& d, int lag) {
  const Index t = d.size();
  const Vector c = d.array() - d.mean();
  double lrv = c.squaredNorm() / static_cast<double>(t);
  for (int k = 1; k <= lag && k < t; ++k) {
    const double gamma = c.tail(t - k).dot(c.head(t - k)) / static_cast<double>(t);
    lrv += 2.0 * (1.0 - static_cast<double>(k) / (lag + 1.0)) * gamma;
  }
  return lrv;
}

DmResult dm_test(const Vector& e0, const Vector& e1, int horizon) {
  require(e0.size() == e1.size(), "DM test: error series lengths differ");
  require(e0.size() >= 10, "DM test: need at least 10 observations");
  require(horizon >= 1, "DM test: horizon must be positive");
  DmResult r;
  r.lag = horizon - 1;
  const Vector d = e0.cwiseAbs() - e1.cwiseAbs();
  r.mean = d.mean();
  r.variance = std::max(newey_west_variance(d, r.lag), 0.0) / static_cast<double>(d.size());
  if (r.variance > 0.0) {
    r.statistic = r.mean / std::sqrt(r.variance);
    r.p_value = normal_upper_tail(r.statistic);
  } else if (r.mean == 0.0) {
    r.statistic = 0.0;
    r.p_value = 0.5;
  } else {
    r.statistic = r.mean > 0.0 ? std::numeric_limits<double>::infinity() : -std::numeric_limits<double>::infinity();
    r.p_value = r.mean > 0.0 ? 0.0 : 1.0;
  }
  return r;
}

int default_block_length(Index length) {
  return std::max(2, static_cast<int>(std::floor(std::cbrt(static_cast<double>(length)) + 1e-9)));
}

McsResult mcs_test(const Matrix& losses, const McsConfig& config) {
  const Index m = losses.cols();
  const Index t = losses.rows();
  require(m >= 2, "MCS: need at least two models");
  require(t >= 2, "MCS: need at least two observations");
  require(losses.allFinite(), "MCS: non-finite losses");
  require(config.bootstrap >= 1, "MCS: bootstrap replications must be positive");
  require(config.level > 0.0 && config.level < 1.0, "MCS: level must lie in (0, 1)");

  McsResult r;
  r.replications = config.bootstrap;
  r.block_length = config.block_length > 0 ? config.block_length : default_block_length(t);
  const RowVector mean = losses.colwise().mean();
  const Matrix boot = kernels::bootstrap_means(losses, config.bootstrap, r.block_length, config.seed);
  const double inf = std::numeric_limits<double>::infinity();

  // Bootstrap variance of every pairwise mean differential.
  Matrix var = Matrix::Zero(m, m);
  for (Index i = 0; i < m; ++i) {
    for (Index j = i + 1; j < m; ++j) {
      const Vector dev = (boot.col(i) - boot.col(j)).array() - (mean(i) - mean(j));
      var(i, j) = var(j, i) = dev.squaredNorm() / static_cast<double>(config.bootstrap);
    }
  }
  auto t_stat = [&](Index i, Index j) {
    const double d = mean(i) - mean(j);
    if (var(i, j) > 0.0) return d / std::sqrt(var(i, j));
    if (d == 0.0) return 0.0;
    return d > 0.0 ? inf : -inf;
  };

  std::vector<Index> alive(static_cast<std::size_t>(m));
  for (Index i = 0; i < m; ++i) alive[static_cast<std::size_t>(i)] = i;
  r.p_values.assign(static_cast<std::size_t>(m), 1.0);
  double running = 0.0;
  while (alive.size() > 1) {
    double stat = 0.0;
    Index worst = alive.front();
    double worst_t = -inf;
    for (Index i : alive) {
      double row_max = -inf;
      for (Index j : alive) {
        if (i == j) continue;
        const double tij = t_stat(i, j);
        stat = std::max(stat, std::abs(tij));
        row_max = std::max(row_max, tij);
      }
      if (row_max > worst_t) {
        worst_t = row_max;
        worst = i;
      }
    }
    int exceed = 0;
    for (int b = 0; b < config.bootstrap; ++b) {
      double star = 0.0;
      for (std::size_t a = 0; a < alive.size(); ++a) {
        for (std::size_t c = a + 1; c < alive.size(); ++c) {
          const Index i = alive[a], j = alive[c];
          if (var(i, j) <= 0.0) continue;
          const double dev = (boot(b, i) - boot(b, j)) - (mean(i) - mean(j));
          star = std::max(star, std::abs(dev) / std::sqrt(var(i, j)));
        }
      }
      if (star >= stat) ++exceed;
    }
    const double p = static_cast<double>(exceed) / static_cast<double>(config.bootstrap);
    running = std::max(running, p);
    r.p_values[static_cast<std::size_t>(worst)] = running;
    r.elimination_order.push_back(static_cast<int>(worst));
    alive.erase(std::find(alive.begin(), alive.end(), worst));
  }
  r.p_values[static_cast<std::size_t>(alive.front())] = 1.0;
  r.elimination_order.push_back(static_cast<int>(alive.front()));
  r.included.resize(static_cast<std::size_t>(m));
  for (Index i = 0; i < m; ++i) {
    r.included[static_cast<std::size_t>(i)] = r.p_values[static_cast<std::size_t>(i)] >= config.level;
  }
  return r;
}

EvalReport build_report(const std::vector<ForecastSet>& sets, const std::string& reference, const McsConfig& mcs) {
  require(!sets.empty(), "report: no forecast sets");
  std::map<int, std::vector<const ForecastSet*>> by_horizon;
  for (const auto& fs : sets) {
    check_set(fs);
    by_horizon[fs.horizon].push_back(&fs);
  }
  EvalReport report;
  for (const auto& [h, group] : by_horizon) {
    HorizonReport r;
    r.horizon = h;
    r.labels = group.front()->labels;
    const Matrix& truth = group.front()->truth;
    for (const auto* fs : group) {
      require(fs->labels == r.labels, "report: label mismatch for model '" + fs->model + "'");
      require(fs->truth.rows() == truth.rows() && fs->truth.cols() == truth.cols() && fs->truth == truth,
              "report: truth differs for model '" + fs->model + "'");
      require(std::find(r.models.begin(), r.models.end(), fs->model) == r.models.end(),
              "report: duplicate model '" + fs->model + "' at horizon " + std::to_string(h));
      r.models.push_back(fs->model);
    }
    const auto m = static_cast<Index>(group.size());
    const Index n = truth.cols();
    r.mae.resize(n, m);
    for (Index k = 0; k < m; ++k) r.mae.col(k) = mae(*group[static_cast<std::size_t>(k)]);
    for (Index i = 0; i < n; ++i) {
      Index best = 0;
      for (Index k = 1; k < m; ++k) {
        if (r.mae(i, k) < r.mae(i, best)) best = k;
      }
      r.row_minimum.push_back(static_cast<int>(best));
    }

    if (m >= 2) {
      auto ref_it = std::find(r.models.begin(), r.models.end(), reference);
      const auto ref = static_cast<std::size_t>(ref_it == r.models.end() ? 0 : ref_it - r.models.begin());
      r.reference = r.models[ref];
      const Matrix ref_err = group[ref]->forecasts - truth;
      for (std::size_t k = 0; k < group.size(); ++k) {
        if (k == ref) continue;
        r.competitors.push_back(r.models[k]);
        const Matrix err = group[k]->forecasts - truth;
        std::vector<DmResult> row;
        for (Index i = 0; i < n; ++i) row.push_back(dm_test(err.col(i), ref_err.col(i), h));
        r.dm.push_back(std::move(row));
      }
      for (Index i = 0; i < n; ++i) {
        Matrix losses(truth.rows(), m);
        for (Index k = 0; k < m; ++k) {
          losses.col(k) = (group[static_cast<std::size_t>(k)]->forecasts.col(i) - truth.col(i)).cwiseAbs();
        }
        McsConfig c = mcs;
        c.seed = derive_seed(mcs.seed, static_cast<std::uint64_t>(h) * 1000003ULL + static_cast<std::uint64_t>(i));
        r.mcs.push_back(mcs_test(losses, c));
      }
    }
    report.horizons.push_back(std::move(r));
  }
  return report;
}

std::string mae_csv(const HorizonReport& r) {
  std::string out = "label";
  for (const auto& m : r.models) out += "," + m;
  out += ",min_model\n";
  for (Index i = 0; i < r.mae.rows(); ++i) {
    out += r.labels[static_cast<std::size_t>(i)];
    for (Index k = 0; k < r.mae.cols(); ++k) out += "," + csv::format_machine(r.mae(i, k));
    out += "," + r.models[static_cast<std::size_t>(r.row_minimum[static_cast<std::size_t>(i)])] + "\n";
  }
  return out;
}

std::string dm_csv(const HorizonReport& r) {
  if (r.dm.empty()) return "not_applicable\n";
  std::string out = "label,model,reference,statistic,p_value,mean,variance,lag\n";
  for (std::size_t i = 0; i < r.labels.size(); ++i) {
    for (std::size_t k = 0; k < r.competitors.size(); ++k) {
      const auto& d = r.dm[k][i];
      out += r.labels[i] + "," + r.competitors[k] + "," + r.reference + "," + csv::format_machine(d.statistic) + "," +
             csv::format_machine(d.p_value) + "," + csv::format_machine(d.mean) + "," +
             csv::format_machine(d.variance) + "," + std::to_string(d.lag) + "\n";
    }
  }
  return out;
}

std::string mcs_csv(const HorizonReport& r) {
  if (r.mcs.empty()) return "not_applicable\n";
  std::string out = "label,model,p_value,included,bootstrap,block_length\n";
  for (std::size_t i = 0; i < r.labels.size(); ++i) {
    const auto& res = r.mcs[i];
    for (std::size_t k = 0; k < r.models.size(); ++k) {
      out += r.labels[i] + "," + r.models[k] + "," + csv::format_machine(res.p_values[k]) + "," +
             (res.included[k] ? "1" : "0") + "," + std::to_string(res.replications) + "," +
             std::to_string(res.block_length) + "\n";
    }
  }
  return out;
}

namespace {

std::string pad(const std::string& s, std::size_t width) {
  return s.size() >= width ? s : std::string(width - s.size(), ' ') + s;
}

std::string table(const std::string& title, const std::vector<std::string>& labels,
                  const std::vector<std::string>& columns, const Matrix& values, const std::vector<int>& marks) {
  std::size_t width = 10;
  for (const auto& c : columns) width = std::max(width, c.size() + 2);
  std::size_t label_width = 6;
  for (const auto& l : labels) label_width = std::max(label_width, l.size() + 1);
  std::string out = title + "\n" + std::string(label_width, ' ');
  for (const auto& c : columns) out += pad(c, width);
  out += "\n";
  for (std::size_t i = 0; i < labels.size(); ++i) {
    out += labels[i] + std::string(label_width - labels[i].size(), ' ');
    for (std::size_t k = 0; k < columns.size(); ++k) {
      std::string cell = csv::format_human(values(static_cast<Index>(i), static_cast<Index>(k)));
      if (!marks.empty() && marks[i] == static_cast<int>(k)) cell += "*";
      out += pad(cell, width);
    }
    out += "\n";
  }
  return out + "\n";
}

}  // namespace

std::string human_tables(const HorizonReport& r) {
  std::string out = table("MAE, H = " + std::to_string(r.horizon) + " (* row minimum)", r.labels, r.models, r.mae,
                          r.row_minimum);
  if (r.dm.empty()) return out + "DM and MCS: not applicable (single model)\n";
  Matrix dm(static_cast<Index>(r.labels.size()), static_cast<Index>(r.competitors.size()));
  for (std::size_t k = 0; k < r.competitors.size(); ++k) {
    for (std::size_t i = 0; i < r.labels.size(); ++i) dm(static_cast<Index>(i), static_cast<Index>(k)) = r.dm[k][i].statistic;
  }
  out += table("DM statistic vs " + r.reference + ", H = " + std::to_string(r.horizon), r.labels, r.competitors, dm, {});
  Matrix mcs(static_cast<Index>(r.labels.size()), static_cast<Index>(r.models.size()));
  for (std::size_t i = 0; i < r.labels.size(); ++i) {
    for (std::size_t k = 0; k < r.models.size(); ++k) mcs(static_cast<Index>(i), static_cast<Index>(k)) = r.mcs[i].p_values[k];
  }
  out += table("MCS p-value, H = " + std::to_string(r.horizon), r.labels, r.models, mcs, {});
  return out;
}

void write_report(const EvalReport& report, const std::string& dir) {
  for (const auto& r : report.horizons) {
    const std::filesystem::path sub = std::filesystem::path(dir) / ("h" + std::to_string(r.horizon));
    std::filesystem::create_directories(sub);
    csv::write_text((sub / "mae.csv").string(), mae_csv(r));
    csv::write_text((sub / "dm.csv").string(), dm_csv(r));
    csv::write_text((sub / "mcs.csv").string(), mcs_csv(r));
    csv::write_text((sub / "tables.txt").string(), human_tables(r));
  }
}

}  // namespace gsphar
