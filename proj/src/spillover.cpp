#include "gsphar/spillover.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include <Eigen/Eigenvalues>
#include <json.hpp>

#include "gsphar/csv.hpp"

namespace gsphar {

std::string to_string(SpilloverKind kind) {
  switch (kind) {
    case SpilloverKind::Raw: return "raw";
    case SpilloverKind::Normalized: return "normalized";
    case SpilloverKind::NetPairwise: return "net_pairwise";
  }
  return "raw";
}

SpilloverKind spillover_kind_from_string(const std::string& s) {
  if (s == "raw") return SpilloverKind::Raw;
  if (s == "normalized") return SpilloverKind::Normalized;
  if (s == "net_pairwise") return SpilloverKind::NetPairwise;
  throw Error("unknown spillover kind '" + s + "'");
}

double companion_spectral_radius(const std::vector<Matrix>& coefficients) {
  if (coefficients.empty()) return 0.0;
  const Eigen::Index n = coefficients.front().rows();
  const auto p = static_cast<Eigen::Index>(coefficients.size());
  Matrix companion = Matrix::Zero(n * p, n * p);
  for (Eigen::Index j = 0; j < p; ++j) companion.block(0, j * n, n, n) = coefficients[static_cast<std::size_t>(j)];
  if (p > 1) companion.block(n, 0, n * (p - 1), n * (p - 1)).setIdentity();
  Eigen::EigenSolver<Matrix> es(companion, false);
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

VarFit fit_var(const Matrix& data, int p, double ridge) {
  require(p >= 1, "fit_var: lag order must be positive");
  require(ridge >= 0.0 && std::isfinite(ridge), "fit_var: ridge must be finite and non-negative");
  const Eigen::Index t_count = data.rows();
  const Eigen::Index n = data.cols();
  require(n >= 1, "fit_var: empty panel");
  require(t_count > n * p + 1, "fit_var: need T > N*p + 1 observations (T=" + std::to_string(t_count) +
                                   ", N=" + std::to_string(n) + ", p=" + std::to_string(p) + ")");

  const Eigen::Index rows = t_count - p;
  const Eigen::Index k = 1 + n * p;
  Matrix x(rows, k);
  x.col(0).setOnes();
  for (Eigen::Index r = 0; r < rows; ++r) {
    const Eigen::Index t = r + p;
    for (int lag = 1; lag <= p; ++lag) x.block(r, 1 + (lag - 1) * n, 1, n) = data.row(t - lag);
  }
  const Matrix y = data.bottomRows(rows);

  Matrix gram = x.transpose() * x;
  const Matrix rhs = x.transpose() * y;
  Matrix beta;
  if (ridge > 0.0) {
    const double scale = gram.diagonal().tail(k - 1).sum() / static_cast<double>(k - 1);
    gram.diagonal().tail(k - 1).array() += ridge * scale;
    Eigen::LDLT<Matrix> ldlt(gram);
    require(ldlt.info() == Eigen::Success, "fit_var: penalized normal equations failed");
    beta = ldlt.solve(rhs);
  } else {
    Eigen::ColPivHouseholderQR<Matrix> qr(x);
    qr.setThreshold(1e-12);
    require(qr.rank() == k, "fit_var: singular design matrix; use ridge > 0");
    beta = qr.solve(y);
  }
  require(beta.allFinite(), "fit_var: non-finite coefficients; use ridge > 0");

  VarFit fit;
  fit.p = p;
  fit.intercept = beta.row(0).transpose();
  for (int lag = 1; lag <= p; ++lag) {
    fit.coefficients.push_back(beta.block(1 + (lag - 1) * n, 0, n, n).transpose());
  }
  const Matrix resid = y - x * beta;
  fit.sigma = resid.transpose() * resid / static_cast<double>(rows);
  fit.sigma = 0.5 * (fit.sigma + fit.sigma.transpose());
  fit.companion_radius = companion_spectral_radius(fit.coefficients);
  fit.nonstationary = fit.companion_radius >= 1.0;
  return fit;
}

VarFit fit_var(const VolPanel& panel, int p, double ridge) {
  validate(panel);
  return fit_var(panel.values, p, ridge);
}

std::vector<Matrix> ma_coefficients(const VarFit& fit, int horizon) {
  require(horizon >= 1, "ma_coefficients: horizon must be positive");
  const Eigen::Index n = fit.dim();
  std::vector<Matrix> b;
  b.reserve(static_cast<std::size_t>(horizon));
  b.push_back(Matrix::Identity(n, n));
  for (int h = 1; h < horizon; ++h) {
    Matrix next = Matrix::Zero(n, n);
    for (int j = 1; j <= std::min(h, fit.p); ++j) {
      next.noalias() += fit.coefficients[static_cast<std::size_t>(j - 1)] * b[static_cast<std::size_t>(h - j)];
    }
    b.push_back(std::move(next));
  }
  return b;
}

SpilloverMatrix gfevd(const VarFit& fit, int horizon) {
  const Eigen::Index n = fit.dim();
  for (Eigen::Index j = 0; j < n; ++j) {
    require(fit.sigma(j, j) > 0.0, "gfevd: zero residual variance for index " + std::to_string(j));
  }
  const auto b = ma_coefficients(fit, horizon);
  Matrix numer = Matrix::Zero(n, n);
  Vector denom = Vector::Zero(n);
  for (const auto& bh : b) {
    const Matrix bs = bh * fit.sigma;  // (i, j) = e_i' B_h Sigma e_j
    numer.array() += bs.array().square();
    denom.noalias() += (bs * bh.transpose()).diagonal();
  }
  SpilloverMatrix out;
  out.horizon = horizon;
  out.kind = SpilloverKind::Raw;
  out.values.resize(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) out.values(i, j) = numer(i, j) / (fit.sigma(j, j) * denom(i));
  }
  return out;
}

SpilloverMatrix normalize_rows(const SpilloverMatrix& theta) {
  SpilloverMatrix out = theta;
  out.kind = SpilloverKind::Normalized;
  for (Eigen::Index i = 0; i < theta.values.rows(); ++i) {
    const double s = theta.values.row(i).sum();
    require(s > 0.0 && std::isfinite(s), "normalize_rows: row " + std::to_string(i) + " sums to zero");
    out.values.row(i) /= s;
  }
  return out;
}

SpilloverMatrix net_pairwise(const SpilloverMatrix& normalized) {
  require(normalized.kind == SpilloverKind::Normalized, "net_pairwise: input must be row-normalized");
  const Eigen::Index n = normalized.values.rows();
  SpilloverMatrix out = normalized;
  out.kind = SpilloverKind::NetPairwise;
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      const double diff = normalized.values(i, j) - normalized.values(j, i);
      out.values(i, j) = (i != j && diff > 0.0) ? diff : 0.0;
    }
  }
  return out;
}

SpilloverMatrix spillover_graph(const VolPanel& panel, int p, int horizon, double ridge) {
  return net_pairwise(normalize_rows(gfevd(fit_var(panel, p, ridge), horizon)));
}

Matrix pearson_window(const Eigen::Ref<const Matrix>& slice) {
  require(slice.rows() >= 2, "pearson_window: need at least 2 rows");
  const Eigen::Index n = slice.cols();
  const Matrix centered = slice.rowwise() - slice.colwise().mean();
  const Vector ss = centered.colwise().squaredNorm().transpose();
  const Matrix cross = centered.transpose() * centered;
  Matrix out = Matrix::Identity(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i + 1; j < n; ++j) {
      double r = 0.0;
      if (ss(i) > 0.0 && ss(j) > 0.0) r = std::min(1.0, std::abs(cross(i, j)) / std::sqrt(ss(i) * ss(j)));
      out(i, j) = out(j, i) = r;
    }
  }
  return out;
}

Matrix modulate_adjacency(const Matrix& base, double rho, const Matrix& mid_corr, const Matrix& long_corr) {
  require(rho >= 0.0 && rho <= 1.0, "dynamic adjacency: rho must lie in [0, 1]");
  return (rho * mid_corr.cwiseProduct(base) + (1.0 - rho) * long_corr.cwiseProduct(base)).eval();
}

Matrix dynamic_adjacency(const DynamicAdjacency& dyn, const Eigen::Ref<const Matrix>& lagged) {
  require(lagged.rows() == kLongWindow, "dynamic_adjacency: lagged input must have exactly 22 rows");
  require(lagged.cols() == dyn.base.values.cols(), "dynamic_adjacency: column count mismatch");
  const Matrix mid = pearson_window(lagged.bottomRows(kMidWindow));
  const Matrix lng = pearson_window(lagged);
  return modulate_adjacency(dyn.base.values, dyn.rho, mid, lng);
}

void write_spillover(const SpilloverMatrix& m, const std::vector<std::string>& labels,
                     const std::string& csv_path, const std::string& manifest_path) {
  require(static_cast<Eigen::Index>(labels.size()) == m.values.rows(), "write_spillover: label count mismatch");
  csv::write_text(csv_path, csv::matrix_with_labels(m.values, labels));
  nlohmann::ordered_json j;
  j["kind"] = to_string(m.kind);
  j["horizon"] = m.horizon;
  j["labels"] = labels;
  csv::write_text(manifest_path, j.dump(2) + "\n");
}

SpilloverMatrix read_spillover(const std::string& csv_path, const std::string& manifest_path,
                               std::vector<std::string>* labels) {
  const auto table = csv::read(csv_path);
  const auto n = table.header.size() - 1;
  require(table.rows.size() == n, csv_path + ": spillover matrix must be square");
  SpilloverMatrix m;
  m.values.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) {
    require(table.rows[i][0] == table.header[i + 1], csv_path + ": row/column labels differ");
    for (std::size_t j = 0; j < n; ++j) {
      m.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          csv::parse_double(table.rows[i][j + 1], csv_path + ":" + std::to_string(table.line_numbers[i]));
    }
  }
  std::ifstream in(manifest_path);
  require(static_cast<bool>(in), "cannot open '" + manifest_path + "'");
  const auto j = nlohmann::json::parse(in);
  m.kind = spillover_kind_from_string(j.at("kind").get<std::string>());
  m.horizon = j.at("horizon").get<int>();
  if (labels) labels->assign(table.header.begin() + 1, table.header.end());
  return m;
}

}  // namespace gsphar
