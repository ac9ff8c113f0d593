#pragma once

#include <string>
#include <vector>

#include "gsphar/data_panel.hpp"
#include "gsphar/types.hpp"

namespace gsphar {

/// Least-squares VAR(p) with intercept.
struct VarFit {
  int p = 0;
  std::vector<Matrix> coefficients;  // Phi_1..Phi_p, each N x N
  Matrix sigma;                      // residual covariance, denominator (T - p)
  Vector intercept;
  double companion_radius = 0.0;
  bool nonstationary = false;  // companion spectral radius >= 1

  Eigen::Index dim() const { return sigma.rows(); }
};

enum class SpilloverKind { Raw, Normalized, NetPairwise };

std::string to_string(SpilloverKind kind);
SpilloverKind spillover_kind_from_string(const std::string& s);

/// theta(i, j): share of i's forecast-error variance due to shocks in j.
struct SpilloverMatrix {
  Matrix values;
  int horizon = 1;
  SpilloverKind kind = SpilloverKind::Raw;
};

inline constexpr int kMidWindow = 5;
inline constexpr int kLongWindow = 22;

struct DynamicAdjacency {
  SpilloverMatrix base;  // net pairwise
  double rho = 0.5;
};

/// `ridge` is relative: the penalty added to the slope block of X'X is
/// ridge * trace(slope block) / (N p).
VarFit fit_var(const VolPanel& panel, int p, double ridge);
VarFit fit_var(const Matrix& data, int p, double ridge);

double companion_spectral_radius(const std::vector<Matrix>& coefficients);

/// B_0..B_{H-1} of the moving-average representation.
std::vector<Matrix> ma_coefficients(const VarFit& fit, int horizon);

SpilloverMatrix gfevd(const VarFit& fit, int horizon);
SpilloverMatrix normalize_rows(const SpilloverMatrix& theta);
SpilloverMatrix net_pairwise(const SpilloverMatrix& normalized);

/// Convenience composition: VAR -> GFEVD -> row normalization -> net pairwise.
SpilloverMatrix spillover_graph(const VolPanel& panel, int p, int horizon, double ridge);

/// |Pearson correlation| between columns of an n x N slice. Zero-variance
/// columns get 0 off the diagonal and 1 on it.
Matrix pearson_window(const Eigen::Ref<const Matrix>& slice);

/// rho * |corr(last 5 rows)| .* A + (1 - rho) * |corr(all 22 rows)| .* A.
Matrix dynamic_adjacency(const DynamicAdjacency& dyn, const Eigen::Ref<const Matrix>& lagged);

/// Same, with the two correlation matrices supplied by the caller.
Matrix modulate_adjacency(const Matrix& base, double rho, const Matrix& mid_corr, const Matrix& long_corr);

// --- serialization ------------------------------------------------------

void write_spillover(const SpilloverMatrix& m, const std::vector<std::string>& labels,
                     const std::string& csv_path, const std::string& manifest_path);
SpilloverMatrix read_spillover(const std::string& csv_path, const std::string& manifest_path,
                               std::vector<std::string>* labels = nullptr);

}  // namespace gsphar
