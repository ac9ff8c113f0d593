// Acceptance suite: one PASS/FAIL line per criterion. Criterion 10 needs
// the full index panel; point GSPHAR_REFERENCE_PANEL at its CSV to run it.
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>

#include <Eigen/Eigenvalues>

#include "gsphar/csv.hpp"
#include "gsphar/evaluation.hpp"
#include "gsphar/kernels.hpp"
#include "gsphar/models.hpp"
#include "gsphar/objectives.hpp"
#include "gsphar/rng.hpp"
#include "gsphar/runner.hpp"
#include "gsphar/spectral.hpp"
#include "gsphar/spillover.hpp"
#include "oracles.hpp"

using namespace gsphar;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;
};

void fail(Outcome& o, const std::string& why) {
  if (o.pass) o.detail = why;
  o.pass = false;
}

int failures = 0;

void criterion(int id, const std::string& name, double budget_s, const std::function<Outcome()>& body) {
  const auto start = std::chrono::steady_clock::now();
  Outcome o;
  try {
    o = body();
  } catch (const std::exception& e) {
    o.pass = false;
    o.detail = std::string("exception: ") + e.what();
  }
  const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  if (s > budget_s) fail(o, "runtime " + std::to_string(s) + " s over budget");
  std::printf("%s criterion %d: %s (%.1f s)%s%s\n", o.pass ? "PASS" : "FAIL", id, name.c_str(), s,
              o.detail.empty() ? "" : " - ", o.detail.c_str());
  std::fflush(stdout);
  if (!o.pass) ++failures;
}

VolPanel make_panel(const Matrix& values) {
  VolPanel p;
  p.values = values;
  for (Index i = 0; i < values.cols(); ++i) p.labels.push_back("I" + std::to_string(i));
  p.days = business_days("2015-01-05", static_cast<int>(values.rows()));
  return p;
}

Matrix random_directed(std::mt19937_64& rng, Index n) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Matrix a = Matrix::Zero(n, n);
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < n; ++j) {
      if (i != j && u(rng) < 0.4) a(i, j) = u(rng);
    }
  }
  return a;
}

// --- 1 --------------------------------------------------------------------

Outcome spectral_suite() {
  Outcome o;
  std::mt19937_64 rng(101);
  std::uniform_int_distribution<int> size(2, 32);
  std::uniform_real_distribution<double> qdist(0.0, 0.5);
  for (int g = 0; g < 200; ++g) {
    const Index n = size(rng);
    const Matrix a = random_directed(rng, n);
    const double q = g % 4 == 0 ? 0.25 : qdist(rng);
    const auto s = symmetrize(a);
    const CMatrix h = hermitian_adjacency(s.adjacency, phase_matrix(a, q));
    if (h != h.adjoint()) fail(o, "H not exactly Hermitian");

    const CMatrix l = normalized_magnetic_laplacian(a, q);
    Eigen::ComplexEigenSolver<CMatrix> ces(l);
    const auto ev = ces.eigenvalues();
    if (ev.imag().cwiseAbs().maxCoeff() >= 1e-9) fail(o, "eigenvalue with imaginary part");
    if (ev.real().minCoeff() <= -1e-9) fail(o, "negative eigenvalue");

    const auto basis = magnetic_basis(a, q);
    Matrix x = oracle::random_matrix(rng, n, 3);
    const CMatrix back = igft(basis, gft(basis, x));
    if ((back - x.cast<Complex>()).cwiseAbs().maxCoeff() >= 1e-10) fail(o, "GFT roundtrip error");

    const CMatrix l0 = normalized_magnetic_laplacian(a, 0.0);
    const Matrix classical = normalized_laplacian(s.adjacency);
    if ((l0 - classical.cast<Complex>()).cwiseAbs().maxCoeff() >= 1e-12) fail(o, "q = 0 differs from classical");
  }
  return o;
}

// --- 2 --------------------------------------------------------------------

Outcome anchor() {
  Outcome o;
  Matrix a(2, 2);
  a << 0, 1, 0, 0;
  const CMatrix l = normalized_magnetic_laplacian(a, 0.25);
  CMatrix expect(2, 2);
  expect << Complex(1, 0), Complex(0, -1), Complex(0, 1), Complex(1, 0);
  if ((l - expect).cwiseAbs().maxCoeff() >= 1e-12) fail(o, "Laplacian differs from [[1,-i],[i,1]]");
  const auto b = magnetic_basis(a, 0.25);
  if (std::abs(b.eigenvalues(0)) >= 1e-12 || std::abs(b.eigenvalues(1) - 2.0) >= 1e-12) fail(o, "eigenvalues not {0, 2}");
  return o;
}

// --- 3 --------------------------------------------------------------------

/// Response of a unit shock in `j` at step 0 traced forward `steps` periods.
std::vector<Vector> impulse(const std::vector<Matrix>& phi, Index n, Index j, int steps) {
  std::vector<Vector> x;
  for (int t = 0; t < steps; ++t) {
    Vector v = Vector::Zero(n);
    if (t == 0) v(j) = 1.0;
    for (std::size_t k = 0; k < phi.size(); ++k) {
      if (t - 1 - static_cast<int>(k) >= 0) {
        const Vector& past = x[static_cast<std::size_t>(t - 1) - k];
        for (Index r = 0; r < n; ++r) {
          for (Index c = 0; c < n; ++c) v(r) += phi[k](r, c) * past(c);
        }
      }
    }
    x.push_back(v);
  }
  return x;
}

Outcome dy_suite() {
  Outcome o;
  std::mt19937_64 rng(303);
  for (int trial = 0; trial < 40; ++trial) {
    const Index n = 2 + trial % 4;
    const int p = 1 + trial % 3;
    const int horizon = 1 + trial % 10;
    VarFit fit;
    fit.p = p;
    for (int k = 0; k < p; ++k) fit.coefficients.push_back(0.6 / p * oracle::random_matrix(rng, n, n, -0.5, 0.5));
    const Matrix m = oracle::random_matrix(rng, n, n);
    fit.sigma = m * m.transpose() + 0.5 * Matrix::Identity(n, n);
    fit.intercept = Vector::Zero(n);

    const auto theta = normalize_rows(gfevd(fit, horizon));
    for (Index i = 0; i < n; ++i) {
      if (std::abs(theta.values.row(i).sum() - 1.0) >= 1e-10) fail(o, "normalized row does not sum to 1");
    }
    const auto net = net_pairwise(theta);
    for (Index i = 0; i < n; ++i) {
      if (net.values(i, i) != 0.0) fail(o, "net diagonal not zero");
      for (Index j = 0; j < n; ++j) {
        if (net.values(i, j) != 0.0 && net.values(j, i) != 0.0) fail(o, "net pair not complementary");
      }
    }

    const auto ma = ma_coefficients(fit, horizon);
    for (Index j = 0; j < n; ++j) {
      const auto path = impulse(fit.coefficients, n, j, horizon);
      for (int h = 0; h < horizon; ++h) {
        if ((ma[static_cast<std::size_t>(h)].col(j) - path[static_cast<std::size_t>(h)]).cwiseAbs().maxCoeff() >= 1e-8) {
          fail(o, "MA coefficients differ from impulse simulation");
        }
      }
    }
  }
  VarFit zero;
  zero.p = 1;
  zero.coefficients = {Matrix::Zero(2, 2)};
  zero.sigma.resize(2, 2);
  zero.sigma << 1.0, 0.5, 0.5, 1.0;
  zero.intercept = Vector::Zero(2);
  const auto g = gfevd(zero, 1);
  if (std::abs(g.values(0, 1) - 0.25) >= 1e-12) fail(o, "theta_12 at the anchor is not 0.25");
  return o;
}

// --- 4 --------------------------------------------------------------------

Outcome linear_oracle() {
  Outcome o;
  std::mt19937_64 rng(404);
  auto close = [&](double a, double b, double tol, const char* what) {
    if (!(std::abs(a - b) < tol)) fail(o, what);
  };
  for (int inst = 0; inst < 50; ++inst) {
    const Index n = 1 + inst % 5;
    const Index t = 100 + (inst * 37) % 400;
    const int h = inst % 3 == 0 ? 1 : (inst % 3 == 1 ? 5 : 22);
    const VolPanel p = make_panel(oracle::random_matrix(rng, t, n, 0.1, 2.5));
    Matrix a = random_directed(rng, n);
    const auto har = fit_har_all(p, h);
    const auto vhar = fit_vhar(p, h);
    const auto ks = fit_har_ks(p, h);
    const auto vg = fit_v_gsphar(p, {a, 1, SpilloverKind::NetPairwise}, h);
    const Matrix u = vg.basis->u.real();
    Matrix spec = p.values * u;

    for (Index i = 0; i < n; ++i) {
      oracle::Mat xh, xv, xk, xs;
      std::vector<double> y, ys;
      for (Index s = 22; s + h - 1 < t; ++s) {
        const std::vector<double> own{1.0, p.values(s - 1, i), oracle::window_mean(p.values, s, i, 1, 5),
                                      oracle::window_mean(p.values, s, i, 1, 22)};
        xh.push_back(own);
        std::vector<double> row{1.0}, krow{1.0};
        for (Index j = 0; j < n; ++j) row.push_back(p.values(s - 1, j));
        krow = row;
        krow.push_back(own[2]);
        krow.push_back(own[3]);
        for (Index j = 0; j < n; ++j) row.push_back(oracle::window_mean(p.values, s, j, 1, 5));
        for (Index j = 0; j < n; ++j) row.push_back(oracle::window_mean(p.values, s, j, 1, 22));
        xv.push_back(row);
        xk.push_back(krow);
        xs.push_back({1.0, spec(s - 1, i), oracle::window_mean(spec, s, i, 1, 5), oracle::window_mean(spec, s, i, 1, 22)});
        y.push_back(p.values(s + h - 1, i));
        ys.push_back(spec(s + h - 1, i));
      }
      const auto bh = oracle::normal_equations(xh, y, 1e-8);
      const auto bv = oracle::normal_equations(xv, y, 1e-8);
      const auto bk = oracle::normal_equations(xk, y, 1e-8);
      const auto bs = oracle::normal_equations(xs, ys, 1e-8);
      for (std::size_t k = 0; k < bh.size(); ++k) close(har.coefficients(i, static_cast<Index>(k)), bh[k], 1e-8, "HAR differs from oracle");
      for (std::size_t k = 0; k < bv.size(); ++k) close(vhar.coefficients(i, static_cast<Index>(k)), bv[k], 1e-8, "VHAR differs from oracle");
      for (std::size_t k = 0; k < bk.size(); ++k) close(ks.coefficients(i, static_cast<Index>(k)), bk[k], 1e-8, "HAR-KS differs from oracle");
      for (std::size_t k = 0; k < bs.size(); ++k) close(vg.coefficients(i, static_cast<Index>(k)), bs[k], 1e-8, "v-GSPHAR differs from oracle");
    }
  }

  // Reduction chain.
  const VolPanel one = make_panel(oracle::random_matrix(rng, 300, 1, 0.1, 2.0));
  const auto h1 = fit_har_all(one, 5);
  if (oracle::max_abs(fit_vhar(one, 5).coefficients - h1.coefficients) >= 1e-8) fail(o, "N = 1 VHAR differs from HAR");
  if (oracle::max_abs(fit_har_ks(one, 5).coefficients - h1.coefficients) >= 1e-8) fail(o, "N = 1 HAR-KS differs from HAR");

  const VolPanel p = make_panel(oracle::random_matrix(rng, 300, 4, 0.1, 2.0));
  const auto origins = forecast_origins(p.rows(), 1, 250, p.rows());
  const auto empty = fit_v_gsphar(p, {Matrix::Zero(4, 4), 1, SpilloverKind::NetPairwise}, 1, {0, 250, 250});
  const auto har = fit_har_all(p, 1, {0, 250, 250});
  if (oracle::max_abs(forecast(empty, p, origins) - forecast(har, p, origins)) >= 1e-8) fail(o, "empty graph v-GSPHAR differs from HAR");

  GnnharObjective gnn(p.values, origins, 1, TargetMode::Direct,
                      propagation_matrix(binarize_graph(random_directed(rng, 4), 0.0)), 1, 8);
  GnnharParams params = gnn.initial_params(1);
  params.gamma.setZero();
  const Matrix pred = gnn.predict(params);
  for (std::size_t s = 0; s < origins.size(); ++s) {
    for (Index i = 0; i < 4; ++i) {
      const Index t = origins[s];
      const double expect = params.alpha + params.beta_d * p.values(t - 1, i) +
                            params.beta_w * oracle::window_mean(p.values, t, i, 2, 5) +
                            params.beta_m * oracle::window_mean(p.values, t, i, 6, 22);
      close(pred(static_cast<Index>(s), i), expect, 1e-8, "gamma = 0 GNNHAR differs from HAR");
    }
  }
  return o;
}

// --- 5 --------------------------------------------------------------------

template <class Objective>
void check_gradients(Outcome& o, const Objective& obj, const Vector& init, std::uint64_t seed, const char* name) {
  auto rng = make_rng(seed);
  int checked = 0;
  for (int attempt = 0; checked < 20 && attempt < 1000; ++attempt) {
    Vector theta = init;
    for (Index k = 0; k < theta.size(); ++k) theta(k) += 0.1 * standard_normal(rng);
    if (obj.kink_margin(theta) < 1e-4) continue;
    Vector g;
    obj.loss_and_gradient(theta, g);
    Vector x = theta;
    for (Index k = 0; k < theta.size(); ++k) {
      x(k) = theta(k) + 1e-6;
      const double up = obj.loss(x);
      x(k) = theta(k) - 1e-6;
      const double down = obj.loss(x);
      x(k) = theta(k);
      const double fd = (up - down) / 2e-6;
      const double rel = std::abs(fd - g(k)) / std::max({std::abs(fd), std::abs(g(k)), 1e-5});
      if (rel >= 1e-4) fail(o, std::string(name) + " gradient mismatch");
    }
    ++checked;
  }
  if (checked < 20) fail(o, std::string(name) + ": too few smooth points");
}

Outcome gradient_check() {
  Outcome o;
  std::mt19937_64 rng(505);
  const VolPanel p = make_panel(oracle::random_matrix(rng, 200, 4, 0.2, 2.0));
  const auto origins = forecast_origins(p.rows(), 1, 0, p.rows());
  const Matrix a = random_directed(rng, 4);
  GspharObjective gs(p.values, origins, 1, TargetMode::Direct, {magnetic_basis(a, 0.25)},
                     std::vector<int>(origins.size(), 0), WindowMode::Overlapping, 16);
  check_gradients(o, gs, gs.initial_params(1).flatten(), 11, "GSPHAR");
  GnnharObjective gn(p.values, origins, 1, TargetMode::Direct, propagation_matrix(binarize_graph(a, 0.0)), 1, 8);
  check_gradients(o, gn, gn.initial_params(1).flatten(), 12, "GNNHAR");
  return o;
}

// --- 6 --------------------------------------------------------------------

Outcome convexity() {
  Outcome o;
  std::mt19937_64 rng(606);
  SyntheticSpec spec;
  spec.n = 5;
  spec.t = 600;
  spec.coupling = planted_coupling(5);
  spec.seed = 6;
  const VolPanel p = generate_synthetic(spec);
  TrainingConfig c;
  c.max_epochs = 50;
  c.seed = 6;
  int epochs = 0;
  auto observe = [&](int, const Matrix& mid, const Matrix& lng) {
    ++epochs;
    for (const Matrix* w : {&mid, &lng}) {
      if (w->minCoeff() < 0.0) fail(o, "negative filter weight");
      for (Index r = 0; r < w->rows(); ++r) {
        if (std::abs(w->row(r).sum() - 1.0) > 1e-12) fail(o, "window weights do not sum to 1");
      }
    }
  };
  const auto graph = spillover_graph(p, 5, 10, 1e-4);
  fit_gsphar(p, graph, 1, c, {}, TargetMode::Direct, observe);
  if (epochs != 51) fail(o, "observer saw " + std::to_string(epochs) + " states, expected 51");
  return o;
}

// --- 7 --------------------------------------------------------------------

Outcome synthetic_benchmark() {
  Outcome o;
  int wins = 0;
  double har_sum = 0.0, gsphar_sum = 0.0;
  const Index rows = 2000, train_end = 1400, valid_end = 1600;
  std::string per_seed;
  SpilloverMatrix first_graph;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    SyntheticSpec spec;
    spec.n = 6;
    spec.t = static_cast<int>(rows);
    spec.coupling = planted_coupling(6);
    spec.noise_scale = 0.4;
    spec.seed = seed;
    const VolPanel p = generate_synthetic(spec);
    VolPanel in_sample = p;
    in_sample.values = p.values.topRows(valid_end);
    in_sample.days.resize(static_cast<std::size_t>(valid_end));
    const auto graph = spillover_graph(in_sample, 22, 10, 1e-4);
    if (seed == 0) first_graph = graph;

    TrainingConfig c;
    c.seed = seed;
    const auto g = fit_gsphar(p, graph, 1, c, {0, train_end, valid_end});
    const auto h = fit_har_all(p, 1, {0, valid_end, valid_end});
    const auto origins = forecast_origins(rows, 1, valid_end, rows);
    const Matrix truth = target_matrix(p.values, origins, 1, TargetMode::Direct);
    const double mg = (forecast(g, p, origins) - truth).cwiseAbs().mean();
    const double mh = (forecast(h, p, origins) - truth).cwiseAbs().mean();
    if (mg <= mh) ++wins;
    har_sum += mh;
    gsphar_sum += mg;
  }
  char buf[160];
  std::snprintf(buf, sizeof buf, "GSPHAR <= HAR in %d/10 seeds, mean MAE %.4f vs %.4f", wins, gsphar_sum / 10, har_sum / 10);
  if (wins < 7) fail(o, buf);
  if (gsphar_sum > har_sum) fail(o, buf);

  // Neutral correlations: every column is an increasing affine map of one
  // series, so both correlation windows are all ones.
  auto rng = make_rng(77);
  Matrix v(rows, 6);
  for (Index r = 0; r < rows; ++r) {
    const double x = std::exp(0.4 * standard_normal(rng));
    for (Index i = 0; i < 6; ++i) v(r, i) = (0.6 + 0.2 * static_cast<double>(i)) * x + 0.05 * static_cast<double>(i);
  }
  const VolPanel neutral = make_panel(v);
  TrainingConfig c;
  c.seed = 1;
  const auto g = fit_gsphar(neutral, first_graph, 1, c, {0, train_end, valid_end});
  const auto d = fit_d_gsphar(neutral, first_graph, 1, c, {0, train_end, valid_end});
  const auto origins = forecast_origins(rows, 1, valid_end, rows);
  const double gap = oracle::max_abs(forecast(d, neutral, origins) - forecast(g, neutral, origins));
  if (gap >= 1e-8) fail(o, "neutral d-GSPHAR differs from GSPHAR by " + std::to_string(gap));
  if (o.pass) {
    char gap_buf[64];
    std::snprintf(gap_buf, sizeof gap_buf, ", neutral gap %.3g", gap);
    o.detail = std::string(buf) + gap_buf;
  }
  return o;
}

// --- 8 --------------------------------------------------------------------

Outcome calibration() {
  Outcome o;
  auto rng = make_rng(808);
  auto normals = [&](Index t) {
    Vector v(t);
    for (Index k = 0; k < t; ++k) v(k) = standard_normal(rng);
    return v;
  };
  int rejected = 0;
  for (int s = 0; s < 5000; ++s) {
    if (dm_test(normals(500), normals(500), 1).p_value < 0.05) ++rejected;
  }
  const double rate = rejected / 5000.0;
  if (rate < 0.03 || rate > 0.07) fail(o, "DM rejection rate " + std::to_string(rate));

  int eliminated = 0;
  for (int rep = 0; rep < 200; ++rep) {
    Matrix losses(500, 3);
    losses.col(0) = normals(500).cwiseAbs();
    losses.col(1) = normals(500).cwiseAbs();
    losses.col(2) = (losses.col(0).array() + 1.0).matrix();
    McsConfig c;
    c.seed = static_cast<std::uint64_t>(rep);
    if (!mcs_test(losses, c).included[2]) ++eliminated;
  }
  if (eliminated < 180) fail(o, "MCS eliminated the shifted model in " + std::to_string(eliminated) + "/200");

  int white = 0, walk = 0;
  for (int s = 0; s < 1000; ++s) {
    const Vector e = normals(500);
    std::vector<double> wn(e.data(), e.data() + e.size());
    std::vector<double> rw(wn.size());
    double acc = 0.0;
    for (std::size_t k = 0; k < wn.size(); ++k) rw[k] = (acc += wn[k]);
    if (adf_test(wn).reject_5pct) ++white;
    if (adf_test(rw).reject_5pct) ++walk;
  }
  if (white < 950) fail(o, "ADF rejects white noise in " + std::to_string(white) + "/1000");
  if (walk > 100) fail(o, "ADF rejects random walks in " + std::to_string(walk) + "/1000");
  if (o.pass) {
    o.detail = "DM size " + std::to_string(rate) + ", MCS " + std::to_string(eliminated) + "/200, ADF " +
               std::to_string(white) + "/" + std::to_string(walk);
  }
  return o;
}

// --- 9 --------------------------------------------------------------------

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Outcome determinism() {
  Outcome o;
  const fs::path root = fs::temp_directory_path() / "gsphar_acceptance_run";
  fs::remove_all(root);
  const auto config = load_run_config((fs::path(GSPHAR_FIXTURE_DIR) / "synthetic_run.json").string());
  const auto a = cmd_run(config, std::nullopt, (root / "a").string());
  cmd_run(config, std::nullopt, (root / "b").string());
  if (slurp(root / "a" / "manifest.json") != slurp(root / "b" / "manifest.json")) fail(o, "manifests differ");
  for (const auto& h : a.report.horizons) {
    for (const char* name : {"mae.csv", "dm.csv", "mcs.csv"}) {
      const fs::path rel = fs::path("h" + std::to_string(h.horizon)) / name;
      const auto ta = csv::read((root / "a" / rel).string());
      const auto tb = csv::read((root / "b" / rel).string());
      if (ta.header != tb.header || ta.rows.size() != tb.rows.size()) {
        fail(o, rel.string() + " differs in shape");
        continue;
      }
      for (std::size_t r = 0; r < ta.rows.size(); ++r) {
        for (std::size_t c = 0; c < ta.rows[r].size(); ++c) {
          const auto& x = ta.rows[r][c];
          const auto& y = tb.rows[r][c];
          char* end = nullptr;
          const double dx = std::strtod(x.c_str(), &end);
          const bool numeric = !x.empty() && end == x.c_str() + x.size();
          if (numeric ? !(std::abs(dx - std::strtod(y.c_str(), nullptr)) <= 1e-12) : x != y) {
            fail(o, rel.string() + " differs");
          }
        }
      }
    }
  }
  fs::remove_all(root);
  return o;
}

// --- 10 -------------------------------------------------------------------

Outcome reference_data(const std::string& panel_path) {
  Outcome o;
  const VolPanel panel = read_panel_csv(panel_path);
  const auto stats = describe(panel);
  const auto ref = csv::read((fs::path(GSPHAR_FIXTURE_DIR) / "reference_descriptive_stats.csv").string());
  int matched = 0;
  for (const auto& row : ref.rows) {
    for (const auto& s : stats.rows) {
      std::string label = s.label;
      if (!label.empty() && label.front() == '.') label.erase(0, 1);
      if (label != row[0]) continue;
      ++matched;
      const double want[4] = {std::stod(row[2]), std::stod(row[3]), std::stod(row[4]), std::stod(row[5])};
      const double got[4] = {s.mean, s.stddev, s.skewness, s.kurtosis};
      for (int k = 0; k < 4; ++k) {
        if (std::abs(want[k] - got[k]) > 0.01) fail(o, row[0] + " statistics differ from the reference table");
      }
    }
  }
  if (matched != static_cast<int>(ref.rows.size())) fail(o, "panel lacks some reference indices");

  const fs::path out = fs::temp_directory_path() / "gsphar_acceptance_reference";
  fs::remove_all(out);
  std::string cfg = R"({"data": {"panel": ")" + fs::absolute(panel_path).string() +
                    R"("}, "models": ["HAR", "VHAR", "HAR-KS", "GNNHAR", "v-GSPHAR", "GSPHAR", "d-GSPHAR"], "seed": 0})";
  const auto summary = cmd_run(parse_run_config(cfg), std::nullopt, out.string());
  if (summary.report.horizons.size() != 3) fail(o, "expected three horizons");
  for (int h : {1, 5, 22}) {
    if (!fs::exists(out / ("h" + std::to_string(h)) / "tables.txt")) fail(o, "missing tables for H=" + std::to_string(h));
  }
  return o;
}

}  // namespace

int main() {
  criterion(1, "spectral suite on 200 random directed graphs", 30, spectral_suite);
  criterion(2, "hand-derived two-node magnetic Laplacian", 1, anchor);
  criterion(3, "spillover suite (row sums, net zeros, anchor, MA oracle)", 30, dy_suite);
  criterion(4, "linear models equal the normal-equations oracle; reduction chain", 60, linear_oracle);
  criterion(5, "GSPHAR and GNNHAR gradients vs central differences", 120, gradient_check);
  criterion(6, "filter convexity through a 50-epoch run", 60, convexity);
  criterion(7, "synthetic planted-spillover benchmark", 300, synthetic_benchmark);
  criterion(8, "DM, MCS and ADF calibration", 600, calibration);
  criterion(9, "end-to-end determinism on the synthetic fixture", 300, determinism);

  const char* panel = std::getenv("GSPHAR_REFERENCE_PANEL");
  if (panel && *panel) {
    criterion(10, "reference dataset: all models and horizons, descriptive statistics", 1e9,
              [&] { return reference_data(panel); });
  } else {
    std::printf("SKIP criterion 10: reference dataset not supplied (set GSPHAR_REFERENCE_PANEL); excluded from CI\n");
  }
  std::printf("%s\n", failures == 0 ? "acceptance: all CI criteria passed" : "acceptance: FAILED");
  return failures == 0 ? 0 : 1;
}
