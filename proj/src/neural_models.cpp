#include <cmath>
#include <limits>

#include "gsphar/kernels.hpp"
#include "gsphar/objectives.hpp"
#include "gsphar/rng.hpp"
#include "gsphar/tape.hpp"

namespace gsphar {

using ad::Tape;
using ad::Var;

// --- parameter packing --------------------------------------------------

namespace {

template <typename F>
void visit_blocks(GspharParams& p, F&& f) {
  f(p.filter.mid_logits);
  f(p.filter.long_logits);
  f(p.w_real);
  f(p.w_imag);
  f(p.w1);
  f(p.b1);
  f(p.w2);
  f(p.b2);
  f(p.w3);
}

template <typename F>
void visit_blocks(GnnharParams& p, F&& f) {
  f(p.gamma);
  for (auto& w : p.layers) f(w);
}

template <typename P>
Vector flatten_params(const P& params, Vector head) {
  auto& mutable_params = const_cast<P&>(params);
  Index total = head.size();
  visit_blocks(mutable_params, [&](auto& m) { total += m.size(); });
  Vector theta(total);
  theta.head(head.size()) = head;
  Index pos = head.size();
  visit_blocks(mutable_params, [&](auto& m) {
    theta.segment(pos, m.size()) = Eigen::Map<const Vector>(m.data(), m.size());
    pos += m.size();
  });
  return theta;
}

template <typename P>
Index unflatten_params(P& params, const Vector& theta, Index head) {
  Index pos = head;
  Index total = head;
  visit_blocks(params, [&](auto& m) { total += m.size(); });
  require(theta.size() == total, "parameter vector has the wrong length");
  visit_blocks(params, [&](auto& m) {
    Eigen::Map<Vector>(m.data(), m.size()) = theta.segment(pos, m.size());
    pos += m.size();
  });
  return pos;
}

}  // namespace

GspharParams GspharParams::zeros(Index n, int hidden, WindowMode mode) {
  require(hidden >= 1, "GSPHAR head width must be positive");
  GspharParams p;
  p.windows.mode = mode;
  p.filter = ConvexFilter::uniform(n, p.windows);
  p.w_real = Vector::Zero(4);
  p.w_imag = Vector::Zero(4);
  p.w1 = Matrix::Zero(2, hidden);
  p.b1 = Matrix::Zero(1, hidden);
  p.w2 = Matrix::Zero(hidden, hidden);
  p.b2 = Matrix::Zero(1, hidden);
  p.w3 = Matrix::Zero(hidden, 1);
  p.b3 = 0.0;
  return p;
}

Index GspharParams::size() const { return flatten().size(); }

Vector GspharParams::flatten() const {
  Vector tail(1);
  tail(0) = b3;
  Vector body = flatten_params(*this, Vector(0));
  Vector theta(body.size() + 1);
  theta << body, tail;
  return theta;
}

void GspharParams::unflatten(const Vector& theta) {
  require(theta.size() >= 1, "parameter vector has the wrong length");
  unflatten_params(*this, theta.head(theta.size() - 1), 0);
  b3 = theta(theta.size() - 1);
}

Index GnnharParams::size() const { return flatten().size(); }

Vector GnnharParams::flatten() const {
  Vector head(4);
  head << alpha, beta_d, beta_w, beta_m;
  return flatten_params(*this, head);
}

void GnnharParams::unflatten(const Vector& theta) {
  require(theta.size() >= 4, "parameter vector has the wrong length");
  alpha = theta(0);
  beta_d = theta(1);
  beta_w = theta(2);
  beta_m = theta(3);
  unflatten_params(*this, theta, 4);
}

// --- tape operations specific to the spectral network -------------------

namespace {

/// out[:, c] = sum_k w(c mod N, k) * lags[first - 1 + k][:, c] over a 2N-wide
/// [real | imag] block.
Var convex_pool(Tape& t, const std::vector<Matrix>& lags, int first_lag, Var weights) {
  const Matrix& w = t.value(weights);
  const Index n = w.rows();
  const Index s = lags.front().rows();
  Matrix out = Matrix::Zero(s, 2 * n);
  for (Index k = 0; k < w.cols(); ++k) {
    const Matrix& x = lags[static_cast<std::size_t>(first_lag - 1 + k)];
    RowVector wk(2 * n);
    wk << w.col(k).transpose(), w.col(k).transpose();
    out.array() += x.array().rowwise() * wk.array();
  }
  const std::vector<Matrix>* data = &lags;
  return t.custom(std::move(out), [data, first_lag, weights, n](Tape& tape, int self) {
    const Matrix& g = tape.grad_of(self);
    const Matrix& w = tape.value(weights);
    Matrix dw(n, w.cols());
    for (Index k = 0; k < w.cols(); ++k) {
      const Matrix& x = (*data)[static_cast<std::size_t>(first_lag - 1 + k)];
      const RowVector col = g.cwiseProduct(x).colwise().sum();
      dw.col(k) = (col.head(n) + col.tail(n)).transpose();
    }
    tape.accumulate(weights, dw);
  });
}

/// Shared HAR regression on the real half with w_real and on the imaginary
/// half with w_imag: w0 + w1 daily + w2 mid + w3 long.
Var spectral_har(Tape& t, const Matrix* daily, Var mid, Var lng, Var w_real, Var w_imag) {
  const Index n = daily->cols() / 2;
  const Matrix& m = t.value(mid);
  const Matrix& l = t.value(lng);
  const Vector& wr = t.value(w_real);
  const Vector& wi = t.value(w_imag);
  Matrix out(daily->rows(), 2 * n);
  out.leftCols(n) = (wr(1) * daily->leftCols(n) + wr(2) * m.leftCols(n) + wr(3) * l.leftCols(n)).array() + wr(0);
  out.rightCols(n) = (wi(1) * daily->rightCols(n) + wi(2) * m.rightCols(n) + wi(3) * l.rightCols(n)).array() + wi(0);
  return t.custom(std::move(out), [daily, mid, lng, w_real, w_imag, n](Tape& tape, int self) {
    const Matrix& g = tape.grad_of(self);
    const Matrix& m = tape.value(mid);
    const Matrix& l = tape.value(lng);
    const Vector wr = tape.value(w_real);
    const Vector wi = tape.value(w_imag);
    const auto gr = g.leftCols(n);
    const auto gi = g.rightCols(n);
    Matrix dwr(4, 1), dwi(4, 1);
    dwr << gr.sum(), gr.cwiseProduct(daily->leftCols(n)).sum(), gr.cwiseProduct(m.leftCols(n)).sum(),
        gr.cwiseProduct(l.leftCols(n)).sum();
    dwi << gi.sum(), gi.cwiseProduct(daily->rightCols(n)).sum(), gi.cwiseProduct(m.rightCols(n)).sum(),
        gi.cwiseProduct(l.rightCols(n)).sum();
    tape.accumulate(w_real, dwr);
    tape.accumulate(w_imag, dwi);
    Matrix dm(g.rows(), 2 * n), dl(g.rows(), 2 * n);
    dm << wr(2) * gr, wi(2) * gi;
    dl << wr(3) * gr, wi(3) * gi;
    tape.accumulate(mid, dm);
    tape.accumulate(lng, dl);
  });
}

/// Row s -> U_b x~_s with b = basis of s, on [real | imag] blocks.
Var inverse_gft(Tape& t, Var spec, const std::vector<MagneticBasis>* bases,
                const std::vector<std::vector<Index>>* groups) {
  const Matrix& x = t.value(spec);
  const Index n = x.cols() / 2;
  Matrix out(x.rows(), 2 * n);
  for (std::size_t b = 0; b < groups->size(); ++b) {
    const auto& rows = (*groups)[b];
    if (rows.empty()) continue;
    const Matrix ur = (*bases)[b].u.real();
    const Matrix ui = (*bases)[b].u.imag();
    Matrix xr(static_cast<Index>(rows.size()), n), xi(static_cast<Index>(rows.size()), n);
    for (std::size_t k = 0; k < rows.size(); ++k) {
      xr.row(static_cast<Index>(k)) = x.block(rows[k], 0, 1, n);
      xi.row(static_cast<Index>(k)) = x.block(rows[k], n, 1, n);
    }
    const Matrix yr = xr * ur.transpose() - xi * ui.transpose();
    const Matrix yi = xr * ui.transpose() + xi * ur.transpose();
    for (std::size_t k = 0; k < rows.size(); ++k) {
      out.block(rows[k], 0, 1, n) = yr.row(static_cast<Index>(k));
      out.block(rows[k], n, 1, n) = yi.row(static_cast<Index>(k));
    }
  }
  return t.custom(std::move(out), [spec, bases, groups, n](Tape& tape, int self) {
    const Matrix& g = tape.grad_of(self);
    Matrix dx(g.rows(), 2 * n);
    for (std::size_t b = 0; b < groups->size(); ++b) {
      const auto& rows = (*groups)[b];
      if (rows.empty()) continue;
      const Matrix ur = (*bases)[b].u.real();
      const Matrix ui = (*bases)[b].u.imag();
      Matrix gr(static_cast<Index>(rows.size()), n), gi(static_cast<Index>(rows.size()), n);
      for (std::size_t k = 0; k < rows.size(); ++k) {
        gr.row(static_cast<Index>(k)) = g.block(rows[k], 0, 1, n);
        gi.row(static_cast<Index>(k)) = g.block(rows[k], n, 1, n);
      }
      const Matrix dr = gr * ur + gi * ui;
      const Matrix di = gi * ur - gr * ui;
      for (std::size_t k = 0; k < rows.size(); ++k) {
        dx.block(rows[k], 0, 1, n) = dr.row(static_cast<Index>(k));
        dx.block(rows[k], n, 1, n) = di.row(static_cast<Index>(k));
      }
    }
    tape.accumulate(spec, dx);
  });
}

/// S x 2N [real | imag] -> (S N) x 2 with row s N + i = (re_i, im_i).
Var pair_nodes(Tape& t, Var x) {
  const Matrix& v = t.value(x);
  const Index n = v.cols() / 2;
  Matrix out(v.rows() * n, 2);
  for (Index s = 0; s < v.rows(); ++s) {
    out.block(s * n, 0, n, 1) = v.block(s, 0, 1, n).transpose();
    out.block(s * n, 1, n, 1) = v.block(s, n, 1, n).transpose();
  }
  return t.custom(std::move(out), [x, n](Tape& tape, int self) {
    const Matrix& g = tape.grad_of(self);
    const Index s_count = g.rows() / n;
    Matrix dx(s_count, 2 * n);
    for (Index s = 0; s < s_count; ++s) {
      dx.block(s, 0, 1, n) = g.block(s * n, 0, n, 1).transpose();
      dx.block(s, n, 1, n) = g.block(s * n, 1, n, 1).transpose();
    }
    tape.accumulate(x, dx);
  });
}

/// (S N) x 1 -> S x N.
Var unstack_nodes(Tape& t, Var x, Index n) {
  const Matrix& v = t.value(x);
  const Index s_count = v.rows() / n;
  Matrix out(s_count, n);
  for (Index s = 0; s < s_count; ++s) out.row(s) = v.block(s * n, 0, n, 1).transpose();
  return t.custom(std::move(out), [x, n](Tape& tape, int self) {
    const Matrix& g = tape.grad_of(self);
    Matrix dx(g.rows() * n, 1);
    for (Index s = 0; s < g.rows(); ++s) dx.block(s * n, 0, n, 1) = g.row(s).transpose();
    tape.accumulate(x, dx);
  });
}

/// Block-diagonal propagation: each N-row block of x is left-multiplied by P.
Var propagate(Tape& t, const Matrix* p, Var x) {
  const Matrix& v = t.value(x);
  const Index n = p->rows();
  Matrix out(v.rows(), v.cols());
  for (Index s = 0; s < v.rows() / n; ++s) out.middleRows(s * n, n).noalias() = *p * v.middleRows(s * n, n);
  return t.custom(std::move(out), [p, x, n](Tape& tape, int self) {
    const Matrix& g = tape.grad_of(self);
    Matrix dx(g.rows(), g.cols());
    for (Index s = 0; s < g.rows() / n; ++s) dx.middleRows(s * n, n).noalias() = p->transpose() * g.middleRows(s * n, n);
    tape.accumulate(x, dx);
  });
}

struct GspharGraph {
  Var pred;
  std::vector<Var> preactivations;
  std::vector<Var> leaves;
};

double min_abs(const Matrix& m) { return m.size() ? m.cwiseAbs().minCoeff() : std::numeric_limits<double>::infinity(); }

}  // namespace

// --- GSPHAR -------------------------------------------------------------

namespace {

std::vector<std::vector<Index>> group_rows(const std::vector<int>& basis_of, std::size_t bases) {
  std::vector<std::vector<Index>> groups(bases);
  for (std::size_t s = 0; s < basis_of.size(); ++s) {
    groups[static_cast<std::size_t>(basis_of[s])].push_back(static_cast<Index>(s));
  }
  return groups;
}

GspharGraph build_gsphar(Tape& t, const GspharParams& p, const std::vector<Matrix>& lags,
                         const std::vector<MagneticBasis>& bases, const std::vector<std::vector<Index>>& groups) {
  GspharGraph g;
  const Index n = p.filter.mid_logits.rows();
  const Var mid_logits = t.leaf(p.filter.mid_logits);
  const Var long_logits = t.leaf(p.filter.long_logits);
  const Var w_real = t.leaf(p.w_real);
  const Var w_imag = t.leaf(p.w_imag);
  const Var w1 = t.leaf(p.w1);
  const Var b1 = t.leaf(p.b1);
  const Var w2 = t.leaf(p.w2);
  const Var b2 = t.leaf(p.b2);
  const Var w3 = t.leaf(p.w3);
  const Var b3 = t.leaf(Matrix::Constant(1, 1, p.b3));
  g.leaves = {mid_logits, long_logits, w_real, w_imag, w1, b1, w2, b2, w3, b3};

  const Var mid = convex_pool(t, lags, p.windows.mid_first(), t.softmax_rows(mid_logits));
  const Var lng = convex_pool(t, lags, p.windows.long_first(), t.softmax_rows(long_logits));
  const Var spec = spectral_har(t, &lags.front(), mid, lng, w_real, w_imag);
  const Var spatial = inverse_gft(t, spec, &bases, &groups);
  const Var pairs = pair_nodes(t, spatial);
  const Var z1 = t.add_row(t.matmul(pairs, w1), b1);
  const Var z2 = t.add_row(t.matmul(t.relu(z1), w2), b2);
  const Var out = t.add_scalar(t.matmul(t.relu(z2), w3), b3);
  g.preactivations = {z1, z2};
  g.pred = unstack_nodes(t, out, n);
  return g;
}

}  // namespace

GspharObjective::GspharObjective(const Matrix& values, const std::vector<Index>& origins, int horizon,
                                 TargetMode target, std::vector<MagneticBasis> bases, std::vector<int> basis_of,
                                 WindowMode mode, int hidden) {
  *this = for_inference(values, origins, std::move(bases), std::move(basis_of), mode, hidden);
  target_ = target_matrix(values, origins, horizon, target);
}

GspharObjective GspharObjective::for_inference(const Matrix& values, const std::vector<Index>& origins,
                                               std::vector<MagneticBasis> bases, std::vector<int> basis_of,
                                               WindowMode mode, int hidden) {
  require(!origins.empty(), "GSPHAR: no samples");
  GspharObjective o;
  o.n_ = values.cols();
  o.shape_ = GspharParams::zeros(o.n_, hidden, mode);
  o.lags_ = kernels::project_lags(values, origins, bases, basis_of);
  o.groups_ = group_rows(basis_of, bases.size());
  o.bases_ = std::move(bases);
  o.basis_of_ = std::move(basis_of);
  return o;
}

Matrix GspharObjective::predict(const GspharParams& params) const {
  Tape t;
  const auto g = build_gsphar(t, params, lags_, bases_, groups_);
  return t.value(g.pred);
}

double GspharObjective::loss(const Vector& theta) const {
  GspharParams p = shape_;
  p.unflatten(theta);
  return (predict(p) - target_).cwiseAbs().mean();
}

double GspharObjective::loss_and_gradient(const Vector& theta, Vector& gradient) const {
  GspharParams p = shape_;
  p.unflatten(theta);
  Tape t;
  const auto g = build_gsphar(t, p, lags_, bases_, groups_);
  const Var loss = t.mean_abs_error(g.pred, target_);
  t.backward(loss);
  gradient.resize(theta.size());
  Index pos = 0;
  for (const Var& leaf : g.leaves) {
    const Matrix& gr = t.grad(leaf);
    gradient.segment(pos, gr.size()) = Eigen::Map<const Vector>(gr.data(), gr.size());
    pos += gr.size();
  }
  return t.value(loss)(0, 0);
}

double GspharObjective::kink_margin(const Vector& theta) const {
  GspharParams p = shape_;
  p.unflatten(theta);
  Tape t;
  const auto g = build_gsphar(t, p, lags_, bases_, groups_);
  double m = min_abs(t.value(g.pred) - target_);
  for (const Var& z : g.preactivations) m = std::min(m, min_abs(t.value(z)));
  return m;
}

GspharParams GspharObjective::initial_params(std::uint64_t seed) const {
  require(target_.size() > 0, "GSPHAR: initialization needs training targets");
  GspharParams p = shape_;
  const Index n = n_;
  const Index s = samples();

  // Shared HAR coefficients from least squares on stacked real/imag rows
  // with uniform pooling and spectral targets.
  const Matrix wm = p.filter.mid_weights();
  const Matrix wl = p.filter.long_weights();
  Matrix x(2 * s * n, 4);
  Vector y(2 * s * n);
  for (Index r = 0; r < s; ++r) {
    const auto& basis = bases_[static_cast<std::size_t>(basis_of_[static_cast<std::size_t>(r)])];
    const CVector spec_target = basis.u.adjoint() * target_.row(r).transpose().cast<Complex>();
    for (int half = 0; half < 2; ++half) {
      for (Index i = 0; i < n; ++i) {
        const Index row = (2 * r + half) * n + i;
        const Index c = half * n + i;
        double mid = 0.0, lng = 0.0;
        for (Index k = 0; k < wm.cols(); ++k) mid += wm(i, k) * lags_[static_cast<std::size_t>(p.windows.mid_first() - 1 + k)](r, c);
        for (Index k = 0; k < wl.cols(); ++k) lng += wl(i, k) * lags_[static_cast<std::size_t>(p.windows.long_first() - 1 + k)](r, c);
        x.row(row) << 1.0, lags_.front()(r, c), mid, lng;
        y(row) = half == 0 ? spec_target(i).real() : spec_target(i).imag();
      }
    }
  }
  Matrix gram = x.transpose() * x;
  gram.diagonal().array() += 1e-8;
  const Vector w = gram.ldlt().solve(x.transpose() * y);
  p.w_real = w;
  p.w_imag = w;

  // Head: unit 0 carries the real part through both hidden layers; the
  // remaining units start random and are unused until w3 moves.
  auto rng = make_rng(seed, 1);
  const Index h = p.w1.cols();
  for (Index j = 1; j < h; ++j) {
    p.w1(0, j) = 0.5 * standard_normal(rng);
    p.w1(1, j) = 0.5 * standard_normal(rng);
  }
  p.w1(0, 0) = 1.0;
  p.w1(1, 0) = 0.0;
  const double scale = std::sqrt(2.0 / static_cast<double>(h));
  for (Index i = 0; i < h; ++i) {
    for (Index j = 0; j < h; ++j) p.w2(i, j) = (j == 0) ? 0.0 : 0.5 * scale * standard_normal(rng);
  }
  p.w2(0, 0) = 1.0;
  p.w3.setZero();
  p.w3(0, 0) = 1.0;
  p.b1.setZero();
  p.b2.setZero();
  p.b3 = 0.0;
  return p;
}

// --- GNNHAR -------------------------------------------------------------

namespace {

struct GnnGraph {
  Var pred;
  Var har;
  std::vector<Var> preactivations;
  std::vector<Var> leaves;  // in flatten() order
};

GnnGraph build_gnnhar(Tape& t, const GnnharParams& p, const Matrix& features, Index n) {
  GnnGraph g;
  const Var alpha = t.leaf(Matrix::Constant(1, 1, p.alpha));
  Matrix betas(3, 1);
  betas << p.beta_d, p.beta_w, p.beta_m;
  const Var beta = t.leaf(betas);
  const Var gamma = t.leaf(p.gamma);
  std::vector<Var> layers;
  for (const auto& w : p.layers) layers.push_back(t.leaf(w));
  g.leaves = {alpha, beta, gamma};
  g.leaves.insert(g.leaves.end(), layers.begin(), layers.end());

  const Var h0 = t.constant(features);
  Var h = h0;
  for (const Var& w : layers) {
    const Var z = t.matmul(propagate(t, &p.propagation, h), w);
    g.preactivations.push_back(z);
    h = t.relu(z);
  }
  const Var gnn = t.matmul(h, gamma);
  const Var har = t.add_scalar(t.matmul(h0, beta), alpha);
  g.har = unstack_nodes(t, har, n);
  g.pred = unstack_nodes(t, t.add(har, gnn), n);
  return g;
}

Matrix partitioned_features(const Matrix& values, const std::vector<Index>& origins) {
  require_history(values.rows() + 1, origins, 1);
  const Index n = values.cols();
  LagWindows w{WindowMode::Partitioned};
  const auto f = build_har_features(values, origins, w);
  Matrix out(static_cast<Index>(origins.size()) * n, 3);
  for (Index s = 0; s < static_cast<Index>(origins.size()); ++s) {
    out.block(s * n, 0, n, 1) = f.daily.row(s).transpose();
    out.block(s * n, 1, n, 1) = f.mid.row(s).transpose();
    out.block(s * n, 2, n, 1) = f.lng.row(s).transpose();
  }
  return out;
}

GnnharParams gnnhar_shape(Matrix propagation, int layers, int width) {
  require(layers >= 1, "GNNHAR needs at least one layer");
  require(width >= 1, "GNNHAR layer width must be positive");
  GnnharParams p;
  p.propagation = std::move(propagation);
  p.layers.push_back(Matrix::Zero(3, width));
  for (int k = 0; k < layers; ++k) p.layers.push_back(Matrix::Zero(width, width));
  p.gamma = Vector::Zero(width);
  return p;
}

}  // namespace

GnnharObjective::GnnharObjective(const Matrix& values, const std::vector<Index>& origins, int horizon,
                                 TargetMode target, Matrix propagation, int layers, int width) {
  *this = for_inference(values, origins, std::move(propagation), layers, width);
  target_ = target_matrix(values, origins, horizon, target);
}

GnnharObjective GnnharObjective::for_inference(const Matrix& values, const std::vector<Index>& origins,
                                               Matrix propagation, int layers, int width) {
  require(!origins.empty(), "GNNHAR: no samples");
  require(propagation.rows() == values.cols() && propagation.cols() == values.cols(),
          "GNNHAR: propagation matrix size does not match the panel");
  GnnharObjective o;
  o.n_ = values.cols();
  o.samples_ = static_cast<Index>(origins.size());
  o.shape_ = gnnhar_shape(std::move(propagation), layers, width);
  o.features_ = partitioned_features(values, origins);
  return o;
}

Matrix GnnharObjective::predict(const GnnharParams& params) const {
  Tape t;
  const auto g = build_gnnhar(t, params, features_, n_);
  return t.value(g.pred);
}

Matrix GnnharObjective::har_component(const GnnharParams& params) const {
  Tape t;
  const auto g = build_gnnhar(t, params, features_, n_);
  return t.value(g.har);
}

double GnnharObjective::loss(const Vector& theta) const {
  GnnharParams p = shape_;
  p.unflatten(theta);
  return (predict(p) - target_).cwiseAbs().mean();
}

double GnnharObjective::loss_and_gradient(const Vector& theta, Vector& gradient) const {
  GnnharParams p = shape_;
  p.unflatten(theta);
  Tape t;
  const auto g = build_gnnhar(t, p, features_, n_);
  const Var loss = t.mean_abs_error(g.pred, target_);
  t.backward(loss);
  gradient.resize(theta.size());
  Index pos = 0;
  for (const Var& leaf : g.leaves) {
    const Matrix& gr = t.grad(leaf);
    gradient.segment(pos, gr.size()) = Eigen::Map<const Vector>(gr.data(), gr.size());
    pos += gr.size();
  }
  return t.value(loss)(0, 0);
}

double GnnharObjective::kink_margin(const Vector& theta) const {
  GnnharParams p = shape_;
  p.unflatten(theta);
  Tape t;
  const auto g = build_gnnhar(t, p, features_, n_);
  double m = min_abs(t.value(g.pred) - target_);
  for (const Var& z : g.preactivations) m = std::min(m, min_abs(t.value(z)));
  return m;
}

GnnharParams GnnharObjective::initial_params(std::uint64_t seed) const {
  require(target_.size() > 0, "GNNHAR: initialization needs training targets");
  GnnharParams p = shape_;
  // HAR scalars from pooled least squares over all indices.
  Matrix x(features_.rows(), 4);
  x.col(0).setOnes();
  x.rightCols(3) = features_;
  Vector y(features_.rows());
  for (Index s = 0; s < samples_; ++s) y.segment(s * n_, n_) = target_.row(s).transpose();
  Matrix gram = x.transpose() * x;
  gram.diagonal().tail(3).array() += 1e-8;
  const Vector beta = gram.ldlt().solve(x.transpose() * y);
  p.alpha = beta(0);
  p.beta_d = beta(1);
  p.beta_w = beta(2);
  p.beta_m = beta(3);

  auto rng = make_rng(seed, 2);
  for (auto& w : p.layers) {
    const double scale = std::sqrt(2.0 / static_cast<double>(w.rows()));
    for (Index i = 0; i < w.rows(); ++i) {
      for (Index j = 0; j < w.cols(); ++j) w(i, j) = scale * standard_normal(rng);
    }
  }
  for (Index j = 0; j < p.gamma.size(); ++j) p.gamma(j) = 0.01 * standard_normal(rng);
  return p;
}

// --- optimizer ----------------------------------------------------------

TrainOutcome train_adam(const LossFn& train, const std::function<double(const Vector&)>& valid, Vector theta,
                        const TrainingConfig& config, const std::function<void(int, const Vector&)>& on_epoch) {
  require(config.learning_rate > 0.0, "training: learning rate must be positive");
  require(config.max_epochs >= 0, "training: max_epochs must be non-negative");
  TrainOutcome out;
  Vector m = Vector::Zero(theta.size());
  Vector v = Vector::Zero(theta.size());
  Vector grad;
  if (on_epoch) on_epoch(0, theta);

  double best_valid = std::numeric_limits<double>::infinity();
  out.best = theta;
  int since_best = 0;
  if (valid) {
    best_valid = valid(theta);
    require(std::isfinite(best_valid), "training diverged: non-finite validation loss at initialization");
  }

  for (int epoch = 1; epoch <= config.max_epochs; ++epoch) {
    const double current = train(theta, &grad);
    if (!std::isfinite(current) || !grad.allFinite()) {
      throw Error("training diverged at epoch " + std::to_string(epoch) + " (non-finite loss); last losses: " +
                  (out.train_loss.empty() ? std::string("none") : std::to_string(out.train_loss.back())));
    }
    m = config.beta1 * m + (1.0 - config.beta1) * grad;
    v = config.beta2 * v + (1.0 - config.beta2) * grad.cwiseProduct(grad);
    const double c1 = 1.0 - std::pow(config.beta1, epoch);
    const double c2 = 1.0 - std::pow(config.beta2, epoch);
    const Vector step = config.learning_rate * (m / c1).cwiseQuotient(((v / c2).cwiseSqrt().array() + config.epsilon).matrix());

    double accepted = current;
    if (config.monotone) {
      double factor = 1.0;
      for (int attempt = 0; attempt < 9; ++attempt, factor *= 0.5) {
        const Vector trial = theta - factor * step;
        const double l = train(trial, nullptr);
        if (std::isfinite(l) && l <= current) {
          theta = trial;
          accepted = l;
          break;
        }
      }
    } else {
      theta -= step;
      accepted = train(theta, nullptr);
    }
    out.train_loss.push_back(accepted);
    if (on_epoch) on_epoch(epoch, theta);

    if (valid) {
      const double vl = valid(theta);
      out.valid_loss.push_back(vl);
      if (vl < best_valid) {
        best_valid = vl;
        out.best = theta;
        out.best_epoch = epoch;
        since_best = 0;
      } else if (++since_best >= config.patience) {
        break;
      }
    } else {
      out.best = theta;
      out.best_epoch = epoch;
    }
  }
  return out;
}

// --- fitting ------------------------------------------------------------

Matrix binarize_graph(const Matrix& net_pairwise, double threshold) {
  const Index n = net_pairwise.rows();
  Matrix a = Matrix::Zero(n, n);
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < n; ++j) {
      if (i != j && net_pairwise(i, j) + net_pairwise(j, i) > threshold) a(i, j) = 1.0;
    }
  }
  return a;
}

Matrix propagation_matrix(const Matrix& binary_adjacency) {
  Vector d = binary_adjacency.rowwise().sum();
  for (Index i = 0; i < d.size(); ++i) d(i) = d(i) > 0.0 ? 1.0 / std::sqrt(d(i)) : 1.0;
  return d.asDiagonal() * binary_adjacency * d.asDiagonal();
}

namespace {

struct SplitOrigins {
  std::vector<Index> train;
  std::vector<Index> valid;
};

SplitOrigins split_origins(Index rows, int horizon, const SampleSplit& split) {
  const Index train_end = split.train_end < 0 ? rows : std::min(split.train_end, rows);
  const Index valid_end = split.valid_end < 0 ? train_end : std::min(split.valid_end, rows);
  require(train_end - split.train_begin > LagWindows::kLong + horizon, "training split too short");
  SplitOrigins o;
  o.train = forecast_origins(rows, horizon, split.train_begin, train_end);
  if (valid_end > train_end) o.valid = forecast_origins(rows, horizon, train_end, valid_end);
  require(!o.train.empty(), "training split has no samples");
  return o;
}

ModelFit spectral_net_fit(ModelKind kind, const VolPanel& panel, const SpilloverMatrix& graph, int horizon,
                          const TrainingConfig& config, const SampleSplit& split, TargetMode target,
                          const FilterObserver& observer) {
  validate(panel);
  const Index n = panel.cols();
  require(graph.values.rows() == n && graph.values.cols() == n, "GSPHAR: graph size does not match the panel");
  require((graph.values.array() >= 0.0).all(), "GSPHAR: graph must be non-negative");
  const auto origins = split_origins(panel.rows(), horizon, split);

  ModelFit fit;
  fit.kind = kind;
  fit.horizon = horizon;
  fit.target = target;
  fit.n = n;
  fit.labels = panel.labels;
  fit.adjacency = graph.values;
  fit.q = config.q;
  fit.rho = config.rho;
  fit.seed = config.seed;

  auto bases_for = [&](const std::vector<Index>& o) {
    if (kind == ModelKind::Gsphar) {
      return kernels::DynamicBases{{*fit.basis}, std::vector<int>(o.size(), 0), {}};
    }
    return kernels::dynamic_bases(panel.values, o, graph.values, config.rho, config.q);
  };
  if (kind == ModelKind::Gsphar) fit.basis = magnetic_basis(graph.values, config.q);

  auto train_bases = bases_for(origins.train);
  GspharObjective objective(panel.values, origins.train, horizon, target, std::move(train_bases.bases),
                            std::move(train_bases.basis_of), config.gsphar_windows, config.hidden);
  std::optional<GspharObjective> validation;
  if (!origins.valid.empty()) {
    auto vb = bases_for(origins.valid);
    validation.emplace(panel.values, origins.valid, horizon, target, std::move(vb.bases), std::move(vb.basis_of),
                       config.gsphar_windows, config.hidden);
  }

  const GspharParams init = objective.initial_params(config.seed);
  const LossFn train = [&](const Vector& th, Vector* g) {
    return g ? objective.loss_and_gradient(th, *g) : objective.loss(th);
  };
  std::function<double(const Vector&)> valid;
  if (validation) valid = [&](const Vector& th) { return validation->loss(th); };
  std::function<void(int, const Vector&)> on_epoch;
  if (observer) {
    on_epoch = [&](int epoch, const Vector& th) {
      GspharParams p = init;
      p.unflatten(th);
      observer(epoch, p.filter.mid_weights(), p.filter.long_weights());
    };
  }
  const auto outcome = train_adam(train, valid, init.flatten(), config, on_epoch);
  GspharParams best = init;
  best.unflatten(outcome.best);
  fit.gsphar = best;
  fit.train_loss = outcome.train_loss;
  fit.valid_loss = outcome.valid_loss;
  fit.best_epoch = outcome.best_epoch;
  return fit;
}

}  // namespace

ModelFit fit_gsphar(const VolPanel& panel, const SpilloverMatrix& graph, int horizon, const TrainingConfig& config,
                    const SampleSplit& split, TargetMode target, const FilterObserver& observer) {
  return spectral_net_fit(ModelKind::Gsphar, panel, graph, horizon, config, split, target, observer);
}

ModelFit fit_d_gsphar(const VolPanel& panel, const SpilloverMatrix& graph, int horizon, const TrainingConfig& config,
                      const SampleSplit& split, TargetMode target, const FilterObserver& observer) {
  require(config.rho >= 0.0 && config.rho <= 1.0, "d-GSPHAR: rho must lie in [0, 1]");
  return spectral_net_fit(ModelKind::DGsphar, panel, graph, horizon, config, split, target, observer);
}

ModelFit fit_gnnhar(const VolPanel& panel, const SpilloverMatrix& graph, int horizon, const TrainingConfig& config,
                    const SampleSplit& split, TargetMode target) {
  validate(panel);
  const Index n = panel.cols();
  require(graph.values.rows() == n && graph.values.cols() == n, "GNNHAR: graph size does not match the panel");
  require(config.gnn_layers >= 1, "GNNHAR: l must be at least 1");
  const auto origins = split_origins(panel.rows(), horizon, split);
  const Matrix prop = propagation_matrix(binarize_graph(graph.values, config.binarize_threshold));

  GnnharObjective objective(panel.values, origins.train, horizon, target, prop, config.gnn_layers, config.gnn_width);
  std::optional<GnnharObjective> validation;
  if (!origins.valid.empty()) {
    validation.emplace(panel.values, origins.valid, horizon, target, prop, config.gnn_layers, config.gnn_width);
  }
  const GnnharParams init = objective.initial_params(config.seed);
  const LossFn train = [&](const Vector& th, Vector* g) {
    return g ? objective.loss_and_gradient(th, *g) : objective.loss(th);
  };
  std::function<double(const Vector&)> valid;
  if (validation) valid = [&](const Vector& th) { return validation->loss(th); };
  const auto outcome = train_adam(train, valid, init.flatten(), config);

  ModelFit fit;
  fit.kind = ModelKind::Gnnhar;
  fit.horizon = horizon;
  fit.target = target;
  fit.n = n;
  fit.labels = panel.labels;
  fit.adjacency = graph.values;
  fit.seed = config.seed;
  GnnharParams best = init;
  best.unflatten(outcome.best);
  fit.gnnhar = best;
  fit.train_loss = outcome.train_loss;
  fit.valid_loss = outcome.valid_loss;
  fit.best_epoch = outcome.best_epoch;
  return fit;
}

}  // namespace gsphar
