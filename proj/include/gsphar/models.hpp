#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "gsphar/data_panel.hpp"
#include "gsphar/features.hpp"
#include "gsphar/spectral.hpp"
#include "gsphar/spillover.hpp"

namespace gsphar {

enum class ModelKind { Har, Vhar, HarKs, Gnnhar, VGsphar, Gsphar, DGsphar };

std::string to_string(ModelKind kind);
ModelKind model_kind_from_string(const std::string& name);
const std::vector<ModelKind>& all_model_kinds();

/// Which target rows a fit may use.
struct SampleSplit {
  Index train_begin = 0;
  Index train_end = -1;   // exclusive; -1 = end of panel
  Index valid_end = -1;   // validation target rows are [train_end, valid_end)
};

struct TrainingConfig {
  double learning_rate = 0.01;
  int max_epochs = 500;
  int patience = 25;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  bool monotone = true;  // reject steps that raise the training loss
  int hidden = 16;       // GSPHAR head width
  int gnn_layers = 1;    // l; the network has l + 1 propagation layers
  int gnn_width = 8;
  double binarize_threshold = 0.0;
  double q = 0.25;
  double rho = 0.5;
  WindowMode gsphar_windows = WindowMode::Overlapping;
  std::uint64_t seed = 0;
};

/// Observes the realized convex filter after initialization (epoch 0) and
/// after every training epoch.
using FilterObserver = std::function<void(int epoch, const Matrix& mid_weights, const Matrix& long_weights)>;

struct GspharParams {
  LagWindows windows;
  ConvexFilter filter;
  Vector w_real = Vector::Zero(4);  // intercept, short, mid, long
  Vector w_imag = Vector::Zero(4);
  Matrix w1, b1, w2, b2, w3;  // 2 -> h -> h -> 1
  double b3 = 0.0;

  Index size() const;
  Vector flatten() const;
  void unflatten(const Vector& theta);
  static GspharParams zeros(Index n, int hidden, WindowMode mode);
};

struct GnnharParams {
  std::vector<Matrix> layers;  // W^(1) is 3 x c, the rest c x c
  Vector gamma;                // c
  double alpha = 0.0;
  double beta_d = 0.0, beta_w = 0.0, beta_m = 0.0;
  Matrix propagation;          // D^-1/2 A D^-1/2 of the binarized graph

  Index size() const;
  Vector flatten() const;
  void unflatten(const Vector& theta);
};

struct ModelFit {
  ModelKind kind = ModelKind::Har;
  int horizon = 1;
  TargetMode target = TargetMode::Direct;
  Index n = 0;
  std::vector<std::string> labels;
  Index column = 0;  // panel column of a single-index HAR fit

  // Linear models: one row of coefficients per target index (HAR, VHAR,
  // HAR-KS) or per graph Fourier basis (v-GSPHAR).
  Matrix coefficients;

  std::optional<MagneticBasis> basis;  // v-GSPHAR, GSPHAR
  Matrix adjacency;                    // graph the fit was built from (A^DY for d-GSPHAR)
  double q = 0.0;
  double rho = 0.5;

  std::optional<GspharParams> gsphar;
  std::optional<GnnharParams> gnnhar;

  std::vector<double> train_loss;  // per epoch
  std::vector<double> valid_loss;
  int best_epoch = 0;
  std::uint64_t seed = 0;

  Index parameter_count() const;
};

// --- linear zoo ---------------------------------------------------------

/// OLS of one index on {1, daily, weekly mean, monthly mean}. `ridge` is added
/// to the slope diagonal of X'X for rank safety.
ModelFit fit_har(const VolPanel& panel, int index, int horizon, const SampleSplit& split = {},
                 TargetMode target = TargetMode::Direct, double ridge = 1e-8);

/// Independent univariate HAR for every index.
ModelFit fit_har_all(const VolPanel& panel, int horizon, const SampleSplit& split = {},
                     TargetMode target = TargetMode::Direct, double ridge = 1e-8);

ModelFit fit_vhar(const VolPanel& panel, int horizon, const SampleSplit& split = {},
                  TargetMode target = TargetMode::Direct, double ridge = 1e-8);

ModelFit fit_har_ks(const VolPanel& panel, int horizon, const SampleSplit& split = {},
                    TargetMode target = TargetMode::Direct, double ridge = 1e-8);

/// Per-basis HAR in the graph Fourier domain of the q = 0 Laplacian built
/// from the symmetrized spillover graph.
ModelFit fit_v_gsphar(const VolPanel& panel, const SpilloverMatrix& graph, int horizon,
                      const SampleSplit& split = {}, TargetMode target = TargetMode::Direct,
                      double ridge = 1e-8);

// --- trainable zoo ------------------------------------------------------

/// Binarized symmetric adjacency: edge iff theta(i,j) + theta(j,i) > threshold.
Matrix binarize_graph(const Matrix& net_pairwise, double threshold);

/// D^-1/2 A D^-1/2 with isolated nodes given degree 1.
Matrix propagation_matrix(const Matrix& binary_adjacency);

ModelFit fit_gnnhar(const VolPanel& panel, const SpilloverMatrix& graph, int horizon,
                    const TrainingConfig& config, const SampleSplit& split = {},
                    TargetMode target = TargetMode::Direct);

ModelFit fit_gsphar(const VolPanel& panel, const SpilloverMatrix& graph, int horizon,
                    const TrainingConfig& config, const SampleSplit& split = {},
                    TargetMode target = TargetMode::Direct, const FilterObserver& observer = nullptr);

ModelFit fit_d_gsphar(const VolPanel& panel, const SpilloverMatrix& graph, int horizon,
                      const TrainingConfig& config, const SampleSplit& split = {},
                      TargetMode target = TargetMode::Direct, const FilterObserver& observer = nullptr);

// --- inference ----------------------------------------------------------

/// One row per origin, one column per index.
Matrix forecast(const ModelFit& fit, const Matrix& values, const std::vector<Index>& origins);
Matrix forecast(const ModelFit& fit, const VolPanel& panel, const std::vector<Index>& origins);

struct FilterWeightRow {
  std::string window;  // "mid" or "long"
  int lag = 0;
  double learned = 0.0;
  double har_reference = 0.0;
};

/// Filter weights averaged over the graph Fourier bases.
std::vector<FilterWeightRow> export_filter_weights(const ModelFit& fit);
std::string filter_weights_csv(const std::vector<FilterWeightRow>& rows);

// --- serialization ------------------------------------------------------

std::string to_json(const ModelFit& fit);
ModelFit model_fit_from_json(const std::string& text);

}  // namespace gsphar
