#include "gsphar/features.hpp"

#include <cmath>

namespace gsphar {

Matrix softmax_rows(const Matrix& logits) {
  Matrix w(logits.rows(), logits.cols());
  for (Index r = 0; r < logits.rows(); ++r) {
    const double m = logits.row(r).maxCoeff();
    w.row(r) = (logits.row(r).array() - m).exp();
    w.row(r) /= w.row(r).sum();
  }
  return w;
}

ConvexFilter ConvexFilter::uniform(Index n, const LagWindows& windows) {
  return ConvexFilter{Matrix::Zero(n, windows.mid_count()), Matrix::Zero(n, windows.long_count())};
}

Matrix ConvexFilter::mid_weights() const { return softmax_rows(mid_logits); }
Matrix ConvexFilter::long_weights() const { return softmax_rows(long_logits); }

std::vector<Index> forecast_origins(Index rows, int horizon, Index target_begin, Index target_end) {
  require(horizon >= 1, "horizon must be positive");
  std::vector<Index> origins;
  for (Index t = LagWindows::kLong; t + horizon - 1 < rows; ++t) {
    const Index target = t + horizon - 1;
    if (target >= target_begin && target < target_end) origins.push_back(t);
  }
  return origins;
}

void require_history(Index rows, const std::vector<Index>& origins, int horizon) {
  for (Index t : origins) {
    if (t < LagWindows::kLong) {
      throw Error("insufficient history: origin " + std::to_string(t) + " needs at least " +
                  std::to_string(LagWindows::kLong) + " prior rows");
    }
    require(t + horizon - 1 < rows, "origin " + std::to_string(t) + " has no target within the panel");
  }
}

Matrix target_matrix(const Matrix& values, const std::vector<Index>& origins, int horizon, TargetMode mode) {
  require_history(values.rows(), origins, horizon);
  Matrix y(static_cast<Index>(origins.size()), values.cols());
  for (std::size_t s = 0; s < origins.size(); ++s) {
    const Index t = origins[s];
    if (mode == TargetMode::Direct) {
      y.row(static_cast<Index>(s)) = values.row(t + horizon - 1);
    } else {
      y.row(static_cast<Index>(s)) = values.middleRows(t, horizon).colwise().mean();
    }
  }
  return y;
}

HarFeatures build_har_features(const Matrix& values, const std::vector<Index>& origins,
                               const LagWindows& windows, const ConvexFilter* filters,
                               const MagneticBasis* basis) {
  const Index n = values.cols();
  for (Index t : origins) {
    if (t < LagWindows::kLong || t > values.rows()) {
      throw Error("insufficient history: each origin needs " + std::to_string(LagWindows::kLong) +
                  " prior rows (have " + std::to_string(std::min(t, values.rows())) + ")");
    }
  }
  if (basis) require(basis->u.rows() == n, "build_har_features: basis size does not match the panel");
  Matrix mid_w, long_w;
  if (filters) {
    require(filters->mid_logits.rows() == n && filters->mid_logits.cols() == windows.mid_count() &&
                filters->long_logits.rows() == n && filters->long_logits.cols() == windows.long_count(),
            "build_har_features: filter shape does not match the windows");
    mid_w = filters->mid_weights();
    long_w = filters->long_weights();
  } else {
    mid_w = Matrix::Constant(n, windows.mid_count(), 1.0 / windows.mid_count());
    long_w = Matrix::Constant(n, windows.long_count(), 1.0 / windows.long_count());
  }

  const Index width = basis ? 2 * n : n;
  const auto s_count = static_cast<Index>(origins.size());
  HarFeatures f{Matrix::Zero(s_count, width), Matrix::Zero(s_count, width), Matrix::Zero(s_count, width)};
  RowVector lag(width);
  for (Index s = 0; s < s_count; ++s) {
    const Index t = origins[static_cast<std::size_t>(s)];
    for (int l = 1; l <= LagWindows::kLong; ++l) {
      if (basis) {
        const CVector spec = basis->u.adjoint() * values.row(t - l).transpose().cast<Complex>();
        lag.head(n) = spec.real().transpose();
        lag.tail(n) = spec.imag().transpose();
      } else {
        lag = values.row(t - l);
      }
      if (l == 1) f.daily.row(s) = lag;
      for (int half = 0; half < (basis ? 2 : 1); ++half) {
        for (Index i = 0; i < n; ++i) {
          const Index c = half * n + i;
          if (l >= windows.mid_first() && l <= LagWindows::kMid) {
            f.mid(s, c) += mid_w(i, l - windows.mid_first()) * lag(c);
          }
          if (l >= windows.long_first()) f.lng(s, c) += long_w(i, l - windows.long_first()) * lag(c);
        }
      }
    }
  }
  return f;
}

}  // namespace gsphar
