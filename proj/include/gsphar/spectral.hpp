#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "gsphar/types.hpp"

namespace gsphar {

/// Eigendecomposition of a normalized magnetic Laplacian. Immutable once
/// built; safe to share across threads.
struct MagneticBasis {
  double q = 0.0;
  CMatrix u;           // columns are orthonormal eigenvectors
  Vector eigenvalues;  // ascending
  CMatrix laplacian;
};

struct Symmetrized {
  Matrix adjacency;  // (A + A') / 2
  Vector degree;     // row sums; zero degrees replaced by 1
};

Symmetrized symmetrize(const Matrix& a);

/// 2 pi q (A - A').
Matrix phase_matrix(const Matrix& a, double q);

/// A^s .* exp(i Theta).
CMatrix hermitian_adjacency(const Matrix& a_sym, const Matrix& theta);

/// D^s - H, the unnormalized magnetic Laplacian (with the isolated-node
/// degree convention applied to D^s).
CMatrix magnetic_laplacian(const Matrix& a, double q);

/// I - (D^-1/2 A^s D^-1/2) .* exp(i Theta).
CMatrix normalized_magnetic_laplacian(const Matrix& a, double q);

/// Classical I - D^-1/2 A D^-1/2 for a symmetric adjacency (q = 0 route).
Matrix normalized_laplacian(const Matrix& a_sym);

/// Ascending eigenvalues; each eigenvector's largest-magnitude component is
/// rotated to be real and positive (ties go to the lowest row).
MagneticBasis eigendecompose(const CMatrix& laplacian, double q = 0.0);

/// Full pipeline: adjacency -> normalized magnetic Laplacian -> basis. Uses
/// the real symmetric solver when q == 0.
MagneticBasis magnetic_basis(const Matrix& a, double q);

/// U^dagger X.
CMatrix gft(const MagneticBasis& basis, const CMatrix& x);
CMatrix gft(const MagneticBasis& basis, const Matrix& x);

/// U X~.
CMatrix igft(const MagneticBasis& basis, const CMatrix& x_hat);

/// FNV-1a hash of the matrix entries rounded to 1e-12.
std::uint64_t adjacency_hash(const Matrix& a);

/// Entries rounded to a 1e-12 grid, used as an exact cache key.
std::vector<std::int64_t> adjacency_key(const Matrix& a);

std::uint64_t basis_hash(const MagneticBasis& basis);

/// eigenvalues.csv, u_real.csv and u_imag.csv under `dir`.
void export_basis(const MagneticBasis& basis, const std::vector<std::string>& labels, const std::string& dir);

}  // namespace gsphar
