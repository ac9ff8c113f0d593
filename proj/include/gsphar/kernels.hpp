#pragma once

#include <cstdint>
#include <vector>

#include "gsphar/features.hpp"
#include "gsphar/spectral.hpp"

namespace gsphar::kernels {

/// Every kernel has a serial reference path and an OpenMP path. Both produce
/// bit-identical results: work items are independent and each writes only
/// its own output slot.
enum class Exec { Serial, Parallel };

/// lags[l - 1] is S x 2N, row s = [Re | Im] of U_b^dagger v_{t_s - l} with
/// b = basis_of[s].
std::vector<Matrix> project_lags(const Matrix& values, const std::vector<Index>& origins,
                                 const std::vector<MagneticBasis>& bases, const std::vector<int>& basis_of,
                                 Exec exec = Exec::Parallel);

struct DynamicBases {
  std::vector<MagneticBasis> bases;   // unique, in order of first use
  std::vector<int> basis_of;          // per origin
  std::vector<std::uint64_t> hashes;  // per origin, adjacency_hash of its window graph
};

/// Per-origin adjacency rho |P_mid| .* A + (1 - rho) |P_long| .* A from the
/// 22 lags before each origin, eigendecomposed once per distinct adjacency
/// (matrices equal after rounding to 1e-12 share a basis).
DynamicBases dynamic_bases(const Matrix& values, const std::vector<Index>& origins, const Matrix& base, double rho,
                           double q, Exec exec = Exec::Parallel);

/// Moving-block bootstrap means: row b holds the resampled column means of
/// `losses` (T x m) for replication b. Replication b draws from its own
/// stream derived from (seed, b), so results do not depend on scheduling.
Matrix bootstrap_means(const Matrix& losses, int replications, int block_length, std::uint64_t seed,
                       Exec exec = Exec::Parallel);

/// Block start positions used by replication b (exposed for tests).
std::vector<Index> bootstrap_indices(Index length, int block_length, std::uint64_t seed, int replication);

int max_threads();

}  // namespace gsphar::kernels
