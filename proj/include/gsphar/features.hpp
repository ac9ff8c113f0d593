#pragma once

#include <vector>

#include "gsphar/spectral.hpp"
#include "gsphar/types.hpp"

namespace gsphar {

using Index = Eigen::Index;

enum class WindowMode {
  Overlapping,  // daily = lag 1, mid = lags 1..5, long = lags 1..22
  Partitioned,  // daily = lag 1, mid = lags 2..5, long = lags 6..22
};

enum class TargetMode {
  Direct,   // v at origin + H - 1
  Average,  // mean of v over origin .. origin + H - 1
};

struct LagWindows {
  static constexpr int kShort = 1;
  static constexpr int kMid = 5;
  static constexpr int kLong = 22;
  WindowMode mode = WindowMode::Overlapping;

  int mid_first() const { return mode == WindowMode::Overlapping ? 1 : 2; }
  int long_first() const { return mode == WindowMode::Overlapping ? 1 : kMid + 1; }
  int mid_count() const { return kMid - mid_first() + 1; }
  int long_count() const { return kLong - long_first() + 1; }
};

/// Per-basis convex lag weights, parametrized by free logits.
struct ConvexFilter {
  Matrix mid_logits;   // N x mid_count
  Matrix long_logits;  // N x long_count

  static ConvexFilter uniform(Index n, const LagWindows& windows);
  Matrix mid_weights() const;
  Matrix long_weights() const;
};

Matrix softmax_rows(const Matrix& logits);

/// Forecast origins t (first forecast day; information through t - 1) whose
/// target days fall in [target_begin, target_end).
std::vector<Index> forecast_origins(Index rows, int horizon, Index target_begin, Index target_end);

Matrix target_matrix(const Matrix& values, const std::vector<Index>& origins, int horizon, TargetMode mode);

/// Pooled HAR features, one row per origin. Without a basis the blocks are
/// N wide; with a basis they are 2N wide, [real | imag] of the projected data.
struct HarFeatures {
  Matrix daily;
  Matrix mid;
  Matrix lng;
};

/// Equal-weight windows, or convex-weighted ones when `filters` is given.
/// `basis` projects each lag by the GFT before pooling.
HarFeatures build_har_features(const Matrix& values, const std::vector<Index>& origins,
                               const LagWindows& windows, const ConvexFilter* filters = nullptr,
                               const MagneticBasis* basis = nullptr);

/// Checks that every origin has 22 lags of history and a target in range.
void require_history(Index rows, const std::vector<Index>& origins, int horizon);

}  // namespace gsphar
