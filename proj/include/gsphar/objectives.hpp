#pragma once

#include <functional>
#include <vector>

#include "gsphar/models.hpp"

namespace gsphar {

/// Full-batch L1 training objective of the spectral network (GSPHAR and
/// d-GSPHAR). The GFT of the input lags does not depend on the parameters,
/// so projections are computed once at construction.
class GspharObjective {
 public:
  GspharObjective(const Matrix& values, const std::vector<Index>& origins, int horizon, TargetMode target,
                  std::vector<MagneticBasis> bases, std::vector<int> basis_of, WindowMode mode, int hidden);

  /// Inference-only variant: no targets are formed.
  static GspharObjective for_inference(const Matrix& values, const std::vector<Index>& origins,
                                       std::vector<MagneticBasis> bases, std::vector<int> basis_of, WindowMode mode,
                                       int hidden);

  double loss(const Vector& theta) const;
  double loss_and_gradient(const Vector& theta, Vector& gradient) const;
  Matrix predict(const GspharParams& params) const;

  /// Smallest |residual| or |hidden pre-activation|: distance to the nearest
  /// kink of the piecewise-smooth loss.
  double kink_margin(const Vector& theta) const;

  /// Uniform filters, HAR coefficients from least squares on the spectral
  /// data, and a head that initially passes the real part through.
  GspharParams initial_params(std::uint64_t seed) const;

  Index samples() const { return static_cast<Index>(basis_of_.size()); }
  Index nodes() const { return n_; }
  const GspharParams& shape() const { return shape_; }

 private:
  GspharObjective() = default;

  Index n_ = 0;
  GspharParams shape_;
  std::vector<MagneticBasis> bases_;
  std::vector<int> basis_of_;
  std::vector<std::vector<Index>> groups_;  // sample rows per basis
  std::vector<Matrix> lags_;                // 22 blocks, S x 2N
  Matrix target_;                           // S x N
};

class GnnharObjective {
 public:
  GnnharObjective(const Matrix& values, const std::vector<Index>& origins, int horizon, TargetMode target,
                  Matrix propagation, int layers, int width);

  static GnnharObjective for_inference(const Matrix& values, const std::vector<Index>& origins, Matrix propagation,
                                       int layers, int width);

  double loss(const Vector& theta) const;
  double loss_and_gradient(const Vector& theta, Vector& gradient) const;
  Matrix predict(const GnnharParams& params) const;

  /// alpha + beta_d v_{t-1} + beta_w v_{t-5:t-2} + beta_m v_{t-22:t-6}.
  Matrix har_component(const GnnharParams& params) const;
  double kink_margin(const Vector& theta) const;
  GnnharParams initial_params(std::uint64_t seed) const;

  const GnnharParams& shape() const { return shape_; }

 private:
  GnnharObjective() = default;

  Index n_ = 0;
  Index samples_ = 0;
  GnnharParams shape_;
  Matrix features_;  // (S N) x 3, row s N + i
  Matrix target_;    // S x N
};

struct TrainOutcome {
  Vector best;
  std::vector<double> train_loss;
  std::vector<double> valid_loss;
  int best_epoch = 0;
};

using LossFn = std::function<double(const Vector&, Vector*)>;

/// Full-batch Adam. With `monotone`, a proposed step that raises the training
/// loss is halved up to 8 times and dropped if it still does, so the
/// recorded training loss never increases. Early stopping keeps the
/// parameters with the best validation loss when `valid` is set.
TrainOutcome train_adam(const LossFn& train, const std::function<double(const Vector&)>& valid, Vector theta,
                        const TrainingConfig& config,
                        const std::function<void(int, const Vector&)>& on_epoch = nullptr);

}  // namespace gsphar
