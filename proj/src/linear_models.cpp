#include <cmath>

#include "gsphar/models.hpp"

namespace gsphar {

namespace {

Index resolve_end(Index end, Index rows) { return end < 0 ? rows : std::min(end, rows); }

std::vector<Index> training_origins(Index rows, int horizon, const SampleSplit& split) {
  const Index end = resolve_end(split.train_end, rows);
  require(end - split.train_begin > LagWindows::kLong + horizon,
          "training split too short: need more than " + std::to_string(LagWindows::kLong + horizon) + " rows");
  return forecast_origins(rows, horizon, split.train_begin, end);
}

/// Least squares with an unpenalized intercept in column 0.
Vector solve_ols(const Matrix& x, const Vector& y, double ridge, const std::string& model) {
  require(x.rows() >= x.cols(), model + ": degenerate design (fewer samples than regressors)");
  Matrix gram = x.transpose() * x;
  gram.diagonal().tail(gram.rows() - 1).array() += ridge;
  Eigen::LDLT<Matrix> ldlt(gram);
  require(ldlt.info() == Eigen::Success && ldlt.isPositive(), model + ": degenerate design matrix");
  const double pivot_ratio = ldlt.vectorD().cwiseAbs().minCoeff() / ldlt.vectorD().cwiseAbs().maxCoeff();
  require(pivot_ratio > 1e-14, model + ": degenerate design matrix");
  Vector beta = ldlt.solve(x.transpose() * y);
  require(beta.allFinite(), model + ": degenerate design matrix");
  return beta;
}

ModelFit base_fit(ModelKind kind, const VolPanel& panel, int horizon, TargetMode target) {
  ModelFit fit;
  fit.kind = kind;
  fit.horizon = horizon;
  fit.target = target;
  fit.n = panel.cols();
  fit.labels = panel.labels;
  return fit;
}

Matrix har_design(const HarFeatures& f, Index column) {
  Matrix x(f.daily.rows(), 4);
  x.col(0).setOnes();
  x.col(1) = f.daily.col(column);
  x.col(2) = f.mid.col(column);
  x.col(3) = f.lng.col(column);
  return x;
}

}  // namespace

ModelFit fit_har(const VolPanel& panel, int index, int horizon, const SampleSplit& split, TargetMode target,
                 double ridge) {
  validate(panel);
  require(index >= 0 && index < panel.cols(), "fit_har: index out of range");
  const auto origins = training_origins(panel.rows(), horizon, split);
  const auto f = build_har_features(panel.values, origins, LagWindows{});
  const Matrix y = target_matrix(panel.values, origins, horizon, target);
  ModelFit fit = base_fit(ModelKind::Har, panel, horizon, target);
  fit.n = 1;
  fit.column = index;
  fit.labels = {panel.labels[static_cast<std::size_t>(index)]};
  fit.coefficients = solve_ols(har_design(f, index), y.col(index), ridge, "HAR").transpose();
  return fit;
}

ModelFit fit_har_all(const VolPanel& panel, int horizon, const SampleSplit& split, TargetMode target,
                     double ridge) {
  validate(panel);
  const auto origins = training_origins(panel.rows(), horizon, split);
  const auto f = build_har_features(panel.values, origins, LagWindows{});
  const Matrix y = target_matrix(panel.values, origins, horizon, target);
  ModelFit fit = base_fit(ModelKind::Har, panel, horizon, target);
  fit.coefficients.resize(panel.cols(), 4);
  for (Index i = 0; i < panel.cols(); ++i) {
    fit.coefficients.row(i) = solve_ols(har_design(f, i), y.col(i), ridge, "HAR").transpose();
  }
  return fit;
}

ModelFit fit_vhar(const VolPanel& panel, int horizon, const SampleSplit& split, TargetMode target, double ridge) {
  validate(panel);
  const Index n = panel.cols();
  const auto origins = training_origins(panel.rows(), horizon, split);
  const auto f = build_har_features(panel.values, origins, LagWindows{});
  const Matrix y = target_matrix(panel.values, origins, horizon, target);
  Matrix x(f.daily.rows(), 3 * n + 1);
  x.col(0).setOnes();
  x.middleCols(1, n) = f.daily;
  x.middleCols(1 + n, n) = f.mid;
  x.middleCols(1 + 2 * n, n) = f.lng;
  ModelFit fit = base_fit(ModelKind::Vhar, panel, horizon, target);
  fit.coefficients.resize(n, 3 * n + 1);
  for (Index i = 0; i < n; ++i) fit.coefficients.row(i) = solve_ols(x, y.col(i), ridge, "VHAR").transpose();
  return fit;
}

ModelFit fit_har_ks(const VolPanel& panel, int horizon, const SampleSplit& split, TargetMode target,
                    double ridge) {
  validate(panel);
  const Index n = panel.cols();
  const auto origins = training_origins(panel.rows(), horizon, split);
  const auto f = build_har_features(panel.values, origins, LagWindows{});
  const Matrix y = target_matrix(panel.values, origins, horizon, target);
  Matrix x(f.daily.rows(), n + 3);
  x.col(0).setOnes();
  x.middleCols(1, n) = f.daily;
  ModelFit fit = base_fit(ModelKind::HarKs, panel, horizon, target);
  fit.coefficients.resize(n, n + 3);
  for (Index i = 0; i < n; ++i) {
    x.col(n + 1) = f.mid.col(i);
    x.col(n + 2) = f.lng.col(i);
    fit.coefficients.row(i) = solve_ols(x, y.col(i), ridge, "HAR-KS").transpose();
  }
  return fit;
}

ModelFit fit_v_gsphar(const VolPanel& panel, const SpilloverMatrix& graph, int horizon, const SampleSplit& split,
                      TargetMode target, double ridge) {
  validate(panel);
  const Index n = panel.cols();
  require(graph.values.rows() == n && graph.values.cols() == n, "v-GSPHAR: graph size does not match the panel");
  require(graph.kind == SpilloverKind::NetPairwise, "v-GSPHAR: graph must be a net pairwise spillover matrix");
  ModelFit fit = base_fit(ModelKind::VGsphar, panel, horizon, target);
  fit.adjacency = graph.values;
  fit.q = 0.0;
  fit.basis = magnetic_basis(graph.values, 0.0);
  const Matrix u = fit.basis->u.real();

  const auto origins = training_origins(panel.rows(), horizon, split);
  // Projection is linear, so pooling the projected lags equals projecting the
  // pooled lags; project once here.
  const Matrix spectral = panel.values * u;  // row t = (U' v_t)'
  const auto f = build_har_features(spectral, origins, LagWindows{});
  const Matrix y = target_matrix(spectral, origins, horizon, target);
  fit.coefficients.resize(n, 4);
  for (Index k = 0; k < n; ++k) {
    fit.coefficients.row(k) = solve_ols(har_design(f, k), y.col(k), ridge, "v-GSPHAR").transpose();
  }
  return fit;
}

}  // namespace gsphar
