#include "gsphar/kernels.hpp"

#include <map>

#include <omp.h>

#include "gsphar/rng.hpp"
#include "gsphar/spillover.hpp"

namespace gsphar::kernels {

int max_threads() { return omp_get_max_threads(); }

namespace {

void project_one(const Matrix& values, Index t, const MagneticBasis& basis, std::vector<Matrix>& lags, Index s) {
  const Index n = values.cols();
  for (int l = 1; l <= LagWindows::kLong; ++l) {
    const CVector spec = basis.u.adjoint() * values.row(t - l).transpose().cast<Complex>();
    auto& out = lags[static_cast<std::size_t>(l - 1)];
    out.block(s, 0, 1, n) = spec.real().transpose();
    out.block(s, n, 1, n) = spec.imag().transpose();
  }
}

}  // namespace

std::vector<Matrix> project_lags(const Matrix& values, const std::vector<Index>& origins,
                                 const std::vector<MagneticBasis>& bases, const std::vector<int>& basis_of,
                                 Exec exec) {
  require(basis_of.size() == origins.size(), "project_lags: one basis id per origin required");
  require_history(values.rows() + 1, origins, 1);
  const auto s_count = static_cast<Index>(origins.size());
  std::vector<Matrix> lags(LagWindows::kLong, Matrix(s_count, 2 * values.cols()));
  for (int b : basis_of) require(b >= 0 && static_cast<std::size_t>(b) < bases.size(), "project_lags: bad basis id");
  if (exec == Exec::Serial) {
    for (Index s = 0; s < s_count; ++s) {
      const auto k = static_cast<std::size_t>(s);
      project_one(values, origins[k], bases[static_cast<std::size_t>(basis_of[k])], lags, s);
    }
  } else {
#pragma omp parallel for schedule(static)
    for (Index s = 0; s < s_count; ++s) {
      const auto k = static_cast<std::size_t>(s);
      project_one(values, origins[k], bases[static_cast<std::size_t>(basis_of[k])], lags, s);
    }
  }
  return lags;
}

DynamicBases dynamic_bases(const Matrix& values, const std::vector<Index>& origins, const Matrix& base, double rho,
                           double q, Exec exec) {
  require(rho >= 0.0 && rho <= 1.0, "dynamic_bases: rho must lie in [0, 1]");
  require(base.rows() == values.cols() && base.cols() == values.cols(), "dynamic_bases: graph size mismatch");
  require_history(values.rows() + 1, origins, 1);
  const auto s_count = static_cast<Index>(origins.size());
  std::vector<Matrix> adjacency(origins.size());
  std::vector<std::vector<std::int64_t>> keys(origins.size());

  auto window_graph = [&](Index s) {
    const auto k = static_cast<std::size_t>(s);
    const Index t = origins[k];
    const auto lagged = values.middleRows(t - LagWindows::kLong, LagWindows::kLong);
    const Matrix mid = pearson_window(lagged.bottomRows(LagWindows::kMid));
    const Matrix lng = pearson_window(lagged);
    adjacency[k] = modulate_adjacency(base, rho, mid, lng);
    keys[k] = adjacency_key(adjacency[k]);
  };
  if (exec == Exec::Serial) {
    for (Index s = 0; s < s_count; ++s) window_graph(s);
  } else {
#pragma omp parallel for schedule(static)
    for (Index s = 0; s < s_count; ++s) window_graph(s);
  }

  DynamicBases out;
  out.basis_of.resize(origins.size());
  out.hashes.resize(origins.size());
  std::map<std::vector<std::int64_t>, int> seen;
  std::vector<std::size_t> representative;
  for (std::size_t k = 0; k < origins.size(); ++k) {
    auto [it, inserted] = seen.emplace(keys[k], static_cast<int>(representative.size()));
    if (inserted) representative.push_back(k);
    out.basis_of[k] = it->second;
    out.hashes[k] = adjacency_hash(adjacency[k]);
  }

  out.bases.resize(representative.size());
  const auto u_count = static_cast<Index>(representative.size());
  if (exec == Exec::Serial) {
    for (Index u = 0; u < u_count; ++u) {
      out.bases[static_cast<std::size_t>(u)] = magnetic_basis(adjacency[representative[static_cast<std::size_t>(u)]], q);
    }
  } else {
#pragma omp parallel for schedule(dynamic)
    for (Index u = 0; u < u_count; ++u) {
      out.bases[static_cast<std::size_t>(u)] = magnetic_basis(adjacency[representative[static_cast<std::size_t>(u)]], q);
    }
  }
  return out;
}

std::vector<Index> bootstrap_indices(Index length, int block_length, std::uint64_t seed, int replication) {
  require(length >= 1 && block_length >= 1, "bootstrap: length and block length must be positive");
  auto rng = make_rng(seed, static_cast<std::uint64_t>(replication));
  std::vector<Index> idx;
  idx.reserve(static_cast<std::size_t>(length));
  // Moving blocks with circular wrap so every position is equally likely.
  while (static_cast<Index>(idx.size()) < length) {
    const auto start = static_cast<Index>(uniform_index(rng, static_cast<std::uint64_t>(length)));
    for (int j = 0; j < block_length && static_cast<Index>(idx.size()) < length; ++j) {
      idx.push_back((start + j) % length);
    }
  }
  return idx;
}

Matrix bootstrap_means(const Matrix& losses, int replications, int block_length, std::uint64_t seed, Exec exec) {
  require(replications >= 1, "bootstrap: need at least one replication");
  const Index t = losses.rows();
  Matrix out(replications, losses.cols());
  auto one = [&](int b) {
    const auto idx = bootstrap_indices(t, block_length, seed, b);
    RowVector acc = RowVector::Zero(losses.cols());
    for (Index i : idx) acc += losses.row(i);
    out.row(b) = acc / static_cast<double>(t);
  };
  if (exec == Exec::Serial) {
    for (int b = 0; b < replications; ++b) one(b);
  } else {
#pragma omp parallel for schedule(static)
    for (int b = 0; b < replications; ++b) one(b);
  }
  return out;
}

}  // namespace gsphar::kernels
