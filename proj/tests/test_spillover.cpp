#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>

#include "gsphar/rng.hpp"
#include "gsphar/spillover.hpp"
#include "oracles.hpp"

using namespace gsphar;

namespace {

Matrix simulate_var1(const Matrix& phi, int t, std::uint64_t seed, double noise = 1.0) {
  auto rng = make_rng(seed, 42);
  const Eigen::Index n = phi.rows();
  Matrix out(t, n);
  Vector x = Vector::Zero(n);
  for (int s = -200; s < t; ++s) {
    Vector e(n);
    for (Eigen::Index i = 0; i < n; ++i) e(i) = noise * standard_normal(rng);
    x = phi * x + e;
    if (s >= 0) out.row(s) = x.transpose();
  }
  return out;
}

VarFit make_fit(std::vector<Matrix> phi, Matrix sigma) {
  VarFit f;
  f.p = static_cast<int>(phi.size());
  f.coefficients = std::move(phi);
  f.sigma = std::move(sigma);
  f.intercept = Vector::Zero(f.sigma.rows());
  return f;
}

Matrix random_stable(std::mt19937_64& rng, Eigen::Index n, double radius) {
  Matrix m = oracle::random_matrix(rng, n, n);
  const double r = companion_spectral_radius({m});
  return m * (radius / r);
}

Matrix random_spd(std::mt19937_64& rng, Eigen::Index n) {
  const Matrix a = oracle::random_matrix(rng, n, n);
  return a * a.transpose() + 0.5 * Matrix::Identity(n, n);
}

SpilloverMatrix normalized(const Matrix& v) { return {v, 1, SpilloverKind::Normalized}; }

}  // namespace

TEST_CASE("fit_var equals the normal-equations oracle") {
  std::mt19937_64 rng(3);
  for (int p = 1; p <= 3; ++p) {
    const Matrix data = oracle::random_matrix(rng, 80, 3);
    for (double ridge : {0.0, 0.1}) {
      const VarFit fit = fit_var(data, p, ridge);
      oracle::Mat x;
      for (Eigen::Index t = p; t < data.rows(); ++t) {
        std::vector<double> row{1.0};
        for (int l = 1; l <= p; ++l) {
          for (Eigen::Index j = 0; j < 3; ++j) row.push_back(data(t - l, j));
        }
        x.push_back(row);
      }
      double trace = 0.0;
      for (const auto& row : x) {
        for (std::size_t k = 1; k < row.size(); ++k) trace += row[k] * row[k];
      }
      const double penalty = ridge * trace / (3.0 * p);
      Matrix resid(static_cast<Eigen::Index>(x.size()), 3);
      for (Eigen::Index i = 0; i < 3; ++i) {
        std::vector<double> y;
        for (Eigen::Index t = p; t < data.rows(); ++t) y.push_back(data(t, i));
        const auto beta = oracle::normal_equations(x, y, penalty);
        CHECK(fit.intercept(i) == doctest::Approx(beta[0]).epsilon(1e-8));
        for (int l = 1; l <= p; ++l) {
          for (Eigen::Index j = 0; j < 3; ++j) {
            CHECK(std::abs(fit.coefficients[static_cast<std::size_t>(l - 1)](i, j) -
                           beta[static_cast<std::size_t>(1 + (l - 1) * 3 + j)]) < 1e-8);
          }
        }
        for (std::size_t r = 0; r < x.size(); ++r) {
          double f = 0.0;
          for (std::size_t k = 0; k < beta.size(); ++k) f += x[r][k] * beta[k];
          resid(static_cast<Eigen::Index>(r), i) = y[r] - f;
        }
      }
      const Matrix sigma = resid.transpose() * resid / static_cast<double>(data.rows() - p);
      CHECK(oracle::max_abs(fit.sigma - sigma) < 1e-8);
      CHECK(oracle::max_abs(fit.sigma - fit.sigma.transpose()) < 1e-10);
    }
  }
}

TEST_CASE("fit_var recovers simulated dynamics") {
  const Matrix wn = simulate_var1(Matrix::Zero(3, 3), 5000, 1);
  CHECK(oracle::max_abs(fit_var(wn, 1, 0.0).coefficients[0]) < 0.05);

  const Matrix ar = simulate_var1(0.5 * Matrix::Identity(3, 3), 5000, 2);
  const Matrix phi = fit_var(ar, 1, 0.0).coefficients[0];
  CHECK(oracle::max_abs(phi - 0.5 * Matrix::Identity(3, 3)) < 0.05);

  const VarFit heavy = fit_var(ar, 2, 1e9);
  CHECK(oracle::max_abs(heavy.coefficients[0]) < 1e-6);
  CHECK(oracle::max_abs(heavy.coefficients[1]) < 1e-6);
  const Vector means = ar.bottomRows(ar.rows() - 2).colwise().mean().transpose();
  CHECK(oracle::max_abs(heavy.intercept - means) < 1e-6);
}

TEST_CASE("fit_var preconditions") {
  Matrix data = Matrix::Ones(50, 2);
  try {
    fit_var(data, 1, 0.0);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find("ridge > 0") != std::string::npos);
  }
  CHECK_THROWS_AS(fit_var(Matrix::Ones(4, 2), 2, 0.1), Error);
}

TEST_CASE("companion spectral radius") {
  Matrix a = Matrix::Zero(2, 2);
  a.diagonal() << 0.5, 0.2;
  CHECK(companion_spectral_radius({a}) == doctest::Approx(0.5));
  const Matrix p1 = Matrix::Constant(1, 1, 0.5), p2 = Matrix::Constant(1, 1, 0.3);
  CHECK(companion_spectral_radius({p1, p2}) == doctest::Approx((0.5 + std::sqrt(0.25 + 1.2)) / 2.0).epsilon(1e-12));

  Matrix walk(400, 1);
  auto rng = make_rng(4);
  double s = 0.0;
  for (int t = 0; t < 400; ++t) walk(t, 0) = (s += standard_normal(rng));
  Matrix explosive(60, 1);
  for (int t = 0; t < 60; ++t) explosive(t, 0) = std::pow(1.1, t) + 0.01 * standard_normal(rng);
  CHECK(fit_var(explosive, 1, 0.0).nonstationary);
}

TEST_CASE("ma_coefficients") {
  const auto zero = ma_coefficients(make_fit({Matrix::Zero(2, 2)}, Matrix::Identity(2, 2)), 4);
  CHECK(zero[0] == Matrix::Identity(2, 2));
  for (int h = 1; h < 4; ++h) CHECK(zero[static_cast<std::size_t>(h)] == Matrix::Zero(2, 2));

  const auto geo = ma_coefficients(make_fit({0.5 * Matrix::Identity(3, 3)}, Matrix::Identity(3, 3)), 3);
  CHECK(oracle::max_abs(geo[1] - 0.5 * Matrix::Identity(3, 3)) == 0.0);
  CHECK(oracle::max_abs(geo[2] - 0.25 * Matrix::Identity(3, 3)) == 0.0);
}

TEST_CASE("ma_coefficients match impulse simulation") {
  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 30; ++trial) {
    const Eigen::Index n = 1 + trial % 5;
    const int p = 1 + trial % 3;
    const int horizon = 1 + trial % 10;
    std::vector<Matrix> phi;
    for (int j = 0; j < p; ++j) phi.push_back(oracle::random_matrix(rng, n, n, -0.4, 0.4));
    const auto b = ma_coefficients(make_fit(phi, Matrix::Identity(n, n)), horizon);
    for (Eigen::Index j = 0; j < n; ++j) {
      // x_h = sum_k phi_k x_{h-k}, shock e_j at h = 0, zero noise afterwards.
      std::vector<Vector> x;
      for (int h = 0; h < horizon; ++h) {
        Vector v = Vector::Zero(n);
        if (h == 0) v(j) = 1.0;
        for (int k = 1; k <= p && k <= h; ++k) v += phi[static_cast<std::size_t>(k - 1)] * x[static_cast<std::size_t>(h - k)];
        x.push_back(v);
        CHECK(oracle::max_abs(b[static_cast<std::size_t>(h)].col(j) - v) < 1e-8);
      }
    }
  }
}

TEST_CASE("gfevd hand values and properties") {
  const auto id = gfevd(make_fit({Matrix::Zero(3, 3)}, Vector(Vector::LinSpaced(3, 1.0, 3.0)).asDiagonal()), 5);
  CHECK(oracle::max_abs(id.values - Matrix::Identity(3, 3)) < 1e-15);

  Matrix sigma(2, 2);
  sigma << 1.0, 0.5, 0.5, 1.0;
  const auto th = gfevd(make_fit({Matrix::Zero(2, 2)}, sigma), 1);
  CHECK(std::abs(th.values(0, 1) - 0.25) < 1e-12);
  CHECK(th.kind == SpilloverKind::Raw);

  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    const Eigen::Index n = 2 + trial % 4;
    const Matrix s = random_spd(rng, n);
    const Matrix phi = random_stable(rng, n, 0.8);
    const int horizon = 1 + trial % 8;
    const auto g = gfevd(make_fit({phi}, s), horizon);
    CHECK((g.values.array() >= 0.0).all());

    // Explicit sums with selection vectors.
    const auto b = ma_coefficients(make_fit({phi}, s), horizon);
    for (Eigen::Index i = 0; i < n; ++i) {
      const Vector ei = Vector::Unit(n, i);
      double den = 0.0;
      for (const auto& bh : b) den += ei.dot(bh * s * bh.transpose() * ei);
      for (Eigen::Index j = 0; j < n; ++j) {
        const Vector ej = Vector::Unit(n, j);
        double num = 0.0;
        for (const auto& bh : b) num += std::pow(ei.dot(bh * s * ej), 2);
        CHECK(g.values(i, j) == doctest::Approx(num / (s(j, j) * den)).epsilon(1e-10));
      }
    }

    // At H = 1 only Sigma matters.
    const auto h1 = gfevd(make_fit({phi}, s), 1);
    const auto h1b = gfevd(make_fit({random_stable(rng, n, 0.5)}, s), 1);
    CHECK(oracle::max_abs(h1.values - h1b.values) == 0.0);
  }
  Matrix bad = Matrix::Identity(2, 2);
  bad(1, 1) = 0.0;
  CHECK_THROWS_AS(gfevd(make_fit({Matrix::Zero(2, 2)}, bad), 2), Error);
}

TEST_CASE("normalize_rows") {
  CHECK(normalize_rows({Matrix::Identity(3, 3), 1, SpilloverKind::Raw}).values == Matrix::Identity(3, 3));
  Matrix row(1, 2);
  row << 2.0, 2.0;
  CHECK(normalize_rows({row, 1, SpilloverKind::Raw}).values == Matrix::Constant(1, 2, 0.5));
  std::mt19937_64 rng(8);
  const Matrix r = oracle::random_matrix(rng, 6, 6, 0.0, 3.0);
  const auto nr = normalize_rows({r, 4, SpilloverKind::Raw});
  CHECK(nr.kind == SpilloverKind::Normalized);
  CHECK(nr.horizon == 4);
  for (Eigen::Index i = 0; i < 6; ++i) CHECK(std::abs(nr.values.row(i).sum() - 1.0) < 1e-10);
  Matrix z = Matrix::Identity(2, 2);
  z(1, 1) = 0.0;
  CHECK_THROWS_AS(normalize_rows({z, 1, SpilloverKind::Raw}), Error);
}

TEST_CASE("net_pairwise") {
  std::mt19937_64 rng(9);
  Matrix sym = oracle::random_matrix(rng, 4, 4, 0.0, 1.0);
  sym = (sym + sym.transpose()).eval();
  CHECK(net_pairwise(normalized(sym)).values == Matrix::Zero(4, 4));

  Matrix h(2, 2);
  h << 0.7, 0.3, 0.1, 0.9;
  const auto np = net_pairwise(normalized(h));
  CHECK(np.values(0, 1) == doctest::Approx(0.2).epsilon(1e-14));
  CHECK(np.values(1, 0) == 0.0);
  CHECK(np.kind == SpilloverKind::NetPairwise);

  for (int trial = 0; trial < 10; ++trial) {
    const Matrix r = oracle::random_matrix(rng, 7, 7, 0.0, 1.0);
    const auto v = net_pairwise(normalize_rows({r, 1, SpilloverKind::Raw})).values;
    CHECK((v.array() >= 0.0).all());
    CHECK(v.diagonal().isZero(0.0));
    CHECK(v.cwiseProduct(v.transpose()).isZero(0.0));
  }
  CHECK_THROWS_AS(net_pairwise({h, 1, SpilloverKind::Raw}), Error);
}

TEST_CASE("pearson_window") {
  std::mt19937_64 rng(10);
  Matrix s = oracle::random_matrix(rng, 22, 4);
  s.col(1) = 2.0 * s.col(0).array() + 3.0;
  s.col(2) = -s.col(0);
  s.col(3).setConstant(5.0);
  const Matrix c = pearson_window(s);
  CHECK(c(0, 1) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(c(0, 2) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(c(3, 3) == 1.0);
  for (Eigen::Index j = 0; j < 3; ++j) {
    CHECK(c(3, j) == 0.0);
    CHECK(c(j, 3) == 0.0);
  }

  const Matrix r = oracle::random_matrix(rng, 9, 3);
  const Matrix cr = pearson_window(r);
  for (Eigen::Index i = 0; i < 3; ++i) {
    for (Eigen::Index j = 0; j < 3; ++j) {
      double mi = r.col(i).mean(), mj = r.col(j).mean(), sij = 0, sii = 0, sjj = 0;
      for (Eigen::Index t = 0; t < 9; ++t) {
        sij += (r(t, i) - mi) * (r(t, j) - mj);
        sii += (r(t, i) - mi) * (r(t, i) - mi);
        sjj += (r(t, j) - mj) * (r(t, j) - mj);
      }
      CHECK(cr(i, j) == doctest::Approx(std::abs(sij / std::sqrt(sii * sjj))).epsilon(1e-12));
    }
  }
}

TEST_CASE("dynamic adjacency") {
  Matrix a = Matrix::Zero(2, 2);
  a(0, 1) = 0.4;
  Matrix mid = Matrix::Ones(2, 2), lng = Matrix::Ones(2, 2);
  mid(0, 1) = 0.5;
  lng(0, 1) = 0.25;
  CHECK(modulate_adjacency(a, 0.5, mid, lng)(0, 1) == doctest::Approx(0.15).epsilon(1e-14));
  for (double rho : {0.0, 0.3, 1.0}) {
    CHECK(oracle::max_abs(modulate_adjacency(a, rho, Matrix::Ones(2, 2), Matrix::Ones(2, 2)) - a) < 1e-15);
  }

  std::mt19937_64 rng(12);
  DynamicAdjacency dyn{{oracle::random_graph(rng, 5), 1, SpilloverKind::NetPairwise}, 1.0};
  Matrix lagged = oracle::random_matrix(rng, 22, 5);
  const Matrix base = dynamic_adjacency(dyn, lagged);
  lagged.topRows(17) = oracle::random_matrix(rng, 17, 5);
  CHECK(dynamic_adjacency(dyn, lagged) == base);

  dyn.rho = 0.35;
  for (int trial = 0; trial < 10; ++trial) {
    const Matrix out = dynamic_adjacency(dyn, oracle::random_matrix(rng, 22, 5));
    CHECK((out.array() >= 0.0).all());
    CHECK(out.maxCoeff() <= dyn.base.values.maxCoeff() + 1e-15);
  }
  CHECK_THROWS_AS(dynamic_adjacency(dyn, Matrix::Zero(21, 5)), Error);
}

TEST_CASE("spillover graph on simulated panels") {
  int hits = 0;
  for (int seed = 0; seed < 20; ++seed) {
    Matrix phi = Matrix::Zero(3, 3);
    phi(0, 1) = 0.6;  // index 2 drives index 1
    VolPanel p;
    p.labels = {"A", "B", "C"};
    p.values = simulate_var1(phi, 2000, static_cast<std::uint64_t>(seed)).array() + 10.0;
    for (int t = 0; t < 2000; ++t) p.days.push_back("d" + std::to_string(100000 + t));
    const auto g = spillover_graph(p, 1, 5, 0.0);
    Eigen::Index r, c;
    g.values.maxCoeff(&r, &c);
    hits += (r == 0 && c == 1);
  }
  CHECK(hits >= 19);

  VolPanel wn;
  wn.labels = {"A", "B", "C"};
  wn.values = simulate_var1(Matrix::Zero(3, 3), 5000, 99).array() + 10.0;
  for (int t = 0; t < 5000; ++t) wn.days.push_back("d" + std::to_string(100000 + t));
  CHECK(spillover_graph(wn, 22, 10, 1e-4).values.maxCoeff() < 0.05);
}

TEST_CASE("spillover serialization round-trips") {
  const auto dir = std::filesystem::temp_directory_path() / "gsphar_test_spillover";
  std::filesystem::create_directories(dir);
  std::mt19937_64 rng(13);
  SpilloverMatrix m{oracle::random_graph(rng, 3), 7, SpilloverKind::NetPairwise};
  write_spillover(m, {"X", "Y", "Z"}, (dir / "g.csv").string(), (dir / "g.json").string());
  std::vector<std::string> labels;
  const auto back = read_spillover((dir / "g.csv").string(), (dir / "g.json").string(), &labels);
  CHECK(labels == std::vector<std::string>{"X", "Y", "Z"});
  CHECK(back.values == m.values);
  CHECK(back.horizon == 7);
  CHECK(back.kind == SpilloverKind::NetPairwise);
}
