#include "gsphar/spectral.hpp"

#include <cmath>
#include <cstring>
#include <numbers>
#include <sstream>

#include <Eigen/Eigenvalues>

#include "gsphar/csv.hpp"

namespace gsphar {

namespace {

void require_adjacency(const Matrix& a) {
  require(a.rows() == a.cols(), "adjacency must be square");
  require(a.allFinite() && (a.array() >= 0.0).all(), "adjacency entries must be finite and non-negative");
}

Vector inv_sqrt_degree(const Vector& degree) { return degree.array().rsqrt().matrix(); }

void fix_phases(CMatrix& u) {
  for (Eigen::Index c = 0; c < u.cols(); ++c) {
    const auto mags = u.col(c).cwiseAbs().eval();
    const double top = mags.maxCoeff();
    Eigen::Index pivot = 0;
    for (Eigen::Index r = 0; r < u.rows(); ++r) {
      if (mags(r) >= top * (1.0 - 1e-10)) {
        pivot = r;
        break;
      }
    }
    const Complex z = u(pivot, c);
    if (std::abs(z) == 0.0) continue;
    u.col(c) *= std::conj(z) / std::abs(z);
    u(pivot, c) = Complex(std::abs(u(pivot, c)), 0.0);
  }
}

std::uint64_t fnv1a(const void* data, std::size_t bytes, std::uint64_t h = 1469598103934665603ULL) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < bytes; ++i) {
    h ^= p[i];
    h *= 1099511628211ULL;
  }
  return h;
}

}  // namespace

Symmetrized symmetrize(const Matrix& a) {
  require_adjacency(a);
  Symmetrized s;
  s.adjacency = 0.5 * (a + a.transpose());
  s.degree = s.adjacency.rowwise().sum();
  for (Eigen::Index i = 0; i < s.degree.size(); ++i) {
    if (s.degree(i) == 0.0) s.degree(i) = 1.0;
  }
  return s;
}

Matrix phase_matrix(const Matrix& a, double q) {
  require(q >= 0.0, "phase_matrix: q must be non-negative");
  return 2.0 * std::numbers::pi * q * (a - a.transpose());
}

CMatrix hermitian_adjacency(const Matrix& a_sym, const Matrix& theta) {
  require(a_sym.rows() == theta.rows() && a_sym.cols() == theta.cols(), "hermitian_adjacency: shape mismatch");
  const Eigen::Index n = a_sym.rows();
  CMatrix h(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    h(i, i) = Complex(a_sym(i, i), 0.0);
    for (Eigen::Index j = i + 1; j < n; ++j) {
      // Build the upper triangle and mirror it so H == H^dagger exactly.
      const Complex z = a_sym(i, j) * Complex(std::cos(theta(i, j)), std::sin(theta(i, j)));
      h(i, j) = z;
      h(j, i) = std::conj(z);
    }
  }
  return h;
}

CMatrix magnetic_laplacian(const Matrix& a, double q) {
  const auto s = symmetrize(a);
  CMatrix l = -hermitian_adjacency(s.adjacency, phase_matrix(a, q));
  l.diagonal() += s.degree.cast<Complex>();
  return l;
}

CMatrix normalized_magnetic_laplacian(const Matrix& a, double q) {
  const auto s = symmetrize(a);
  const Vector d = inv_sqrt_degree(s.degree);
  const Matrix scaled = d.asDiagonal() * s.adjacency * d.asDiagonal();
  // scaled is symmetric up to rounding; symmetrize it before the phase.
  const Matrix sym = 0.5 * (scaled + scaled.transpose());
  CMatrix l = -hermitian_adjacency(sym, phase_matrix(a, q));
  l.diagonal().array() += Complex(1.0, 0.0);
  return l;
}

Matrix normalized_laplacian(const Matrix& a_sym) {
  require_adjacency(a_sym);
  Vector degree = a_sym.rowwise().sum();
  for (Eigen::Index i = 0; i < degree.size(); ++i) {
    if (degree(i) == 0.0) degree(i) = 1.0;
  }
  const Vector d = inv_sqrt_degree(degree);
  Matrix l = -(d.asDiagonal() * a_sym * d.asDiagonal());
  l = 0.5 * (l + l.transpose()).eval();
  l.diagonal().array() += 1.0;
  return l;
}

MagneticBasis eigendecompose(const CMatrix& laplacian, double q) {
  require(laplacian.rows() == laplacian.cols(), "eigendecompose: laplacian must be square");
  const double herm_err = laplacian.size() ? (laplacian - laplacian.adjoint()).cwiseAbs().maxCoeff() : 0.0;
  require(herm_err <= 1e-10, "eigendecompose: laplacian is not Hermitian");
  MagneticBasis basis;
  basis.q = q;
  basis.laplacian = laplacian;
  if (laplacian.imag().cwiseAbs().maxCoeff() == 0.0) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(laplacian.real());
    require(es.info() == Eigen::Success, "eigendecompose: eigen solver failed");
    basis.eigenvalues = es.eigenvalues();
    basis.u = es.eigenvectors().cast<Complex>();
  } else {
    Eigen::SelfAdjointEigenSolver<CMatrix> es(laplacian);
    require(es.info() == Eigen::Success, "eigendecompose: eigen solver failed");
    basis.eigenvalues = es.eigenvalues();
    basis.u = es.eigenvectors();
  }
  fix_phases(basis.u);
  return basis;
}

MagneticBasis magnetic_basis(const Matrix& a, double q) {
  return eigendecompose(normalized_magnetic_laplacian(a, q), q);
}

CMatrix gft(const MagneticBasis& basis, const CMatrix& x) {
  require(x.rows() == basis.u.rows(), "gft: signal row count must equal the node count");
  return basis.u.adjoint() * x;
}

CMatrix gft(const MagneticBasis& basis, const Matrix& x) { return gft(basis, CMatrix(x.cast<Complex>())); }

CMatrix igft(const MagneticBasis& basis, const CMatrix& x_hat) {
  require(x_hat.rows() == basis.u.rows(), "igft: spectrum row count must equal the node count");
  return basis.u * x_hat;
}

std::vector<std::int64_t> adjacency_key(const Matrix& a) {
  std::vector<std::int64_t> key;
  key.reserve(static_cast<std::size_t>(a.size()) + 1);
  key.push_back(a.rows());
  for (Eigen::Index j = 0; j < a.cols(); ++j) {
    for (Eigen::Index i = 0; i < a.rows(); ++i) key.push_back(std::llround(a(i, j) * 1e12));
  }
  return key;
}

std::uint64_t adjacency_hash(const Matrix& a) {
  const auto key = adjacency_key(a);
  return fnv1a(key.data(), key.size() * sizeof(std::int64_t));
}

std::uint64_t basis_hash(const MagneticBasis& basis) {
  std::uint64_t h = fnv1a(basis.u.data(), static_cast<std::size_t>(basis.u.size()) * sizeof(Complex));
  return fnv1a(basis.eigenvalues.data(), static_cast<std::size_t>(basis.eigenvalues.size()) * sizeof(double), h);
}

void export_basis(const MagneticBasis& basis, const std::vector<std::string>& labels, const std::string& dir) {
  std::ostringstream ev;
  ev << "k,eigenvalue\n";
  for (Eigen::Index k = 0; k < basis.eigenvalues.size(); ++k) {
    ev << k << ',' << csv::format_machine(basis.eigenvalues(k)) << '\n';
  }
  csv::write_text(dir + "/eigenvalues.csv", ev.str());
  auto write_part = [&](const Matrix& m, const std::string& name) {
    std::ostringstream os;
    os << "label";
    for (Eigen::Index k = 0; k < m.cols(); ++k) os << ",u" << k;
    os << '\n';
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
      os << labels[static_cast<std::size_t>(i)];
      for (Eigen::Index k = 0; k < m.cols(); ++k) os << ',' << csv::format_machine(m(i, k));
      os << '\n';
    }
    csv::write_text(dir + "/" + name, os.str());
  };
  write_part(basis.u.real(), "u_real.csv");
  write_part(basis.u.imag(), "u_imag.csv");
}

}  // namespace gsphar
