#include "gsphar/tape.hpp"

#include <cmath>

namespace gsphar::ad {

Var Tape::push(Matrix value, bool needs_grad, Backward backward) {
  Node node;
  node.value = std::move(value);
  node.needs_grad = needs_grad;
  node.backward = std::move(backward);
  nodes_.push_back(std::move(node));
  return Var{static_cast<int>(nodes_.size()) - 1};
}

Var Tape::leaf(Matrix value) { return push(std::move(value), true, nullptr); }

Var Tape::constant(Matrix value) { return push(std::move(value), false, nullptr); }

Var Tape::custom(Matrix value, Backward backward) { return push(std::move(value), true, std::move(backward)); }

void Tape::accumulate(Var v, const Matrix& g) {
  auto& node = nodes_[static_cast<std::size_t>(v.id)];
  if (!node.needs_grad) return;
  require(g.rows() == node.value.rows() && g.cols() == node.value.cols(), "tape: gradient shape mismatch");
  if (node.grad.size() == 0) {
    node.grad = g;
  } else {
    node.grad += g;
  }
}

void Tape::backward(Var out) {
  require(value(out).size() == 1, "tape: backward needs a scalar output");
  for (auto& n : nodes_) n.grad.resize(0, 0);
  nodes_[static_cast<std::size_t>(out.id)].grad = Matrix::Ones(1, 1);
  for (int id = out.id; id >= 0; --id) {
    auto& node = nodes_[static_cast<std::size_t>(id)];
    if (node.grad.size() == 0) {
      node.grad = Matrix::Zero(node.value.rows(), node.value.cols());
      continue;
    }
    if (node.backward) node.backward(*this, id);
  }
  for (auto& n : nodes_) {
    if (n.grad.size() == 0) n.grad = Matrix::Zero(n.value.rows(), n.value.cols());
  }
}

Var Tape::matmul(Var a, Var b) {
  require(value(a).cols() == value(b).rows(), "tape: matmul shape mismatch");
  Matrix v = value(a) * value(b);
  return push(std::move(v), needs_grad(a) || needs_grad(b), [a, b](Tape& t, int self) {
    const Matrix& g = t.grad_of(self);
    if (t.needs_grad(a)) t.accumulate(a, g * t.value(b).transpose());
    if (t.needs_grad(b)) t.accumulate(b, t.value(a).transpose() * g);
  });
}

Var Tape::add(Var a, Var b) {
  Matrix v = value(a) + value(b);
  return push(std::move(v), needs_grad(a) || needs_grad(b), [a, b](Tape& t, int self) {
    t.accumulate(a, t.grad_of(self));
    t.accumulate(b, t.grad_of(self));
  });
}

Var Tape::sub(Var a, Var b) {
  Matrix v = value(a) - value(b);
  return push(std::move(v), needs_grad(a) || needs_grad(b), [a, b](Tape& t, int self) {
    t.accumulate(a, t.grad_of(self));
    if (t.needs_grad(b)) t.accumulate(b, -t.grad_of(self));
  });
}

Var Tape::hadamard(Var a, Var b) {
  Matrix v = value(a).cwiseProduct(value(b));
  return push(std::move(v), needs_grad(a) || needs_grad(b), [a, b](Tape& t, int self) {
    const Matrix& g = t.grad_of(self);
    if (t.needs_grad(a)) t.accumulate(a, g.cwiseProduct(t.value(b)));
    if (t.needs_grad(b)) t.accumulate(b, g.cwiseProduct(t.value(a)));
  });
}

Var Tape::scale(Var x, double c) {
  Matrix v = c * value(x);
  return push(std::move(v), needs_grad(x), [x, c](Tape& t, int self) { t.accumulate(x, c * t.grad_of(self)); });
}

Var Tape::scale_by(Var s, Var x) {
  require(value(s).size() == 1, "tape: scale_by needs a 1x1 factor");
  Matrix v = value(s)(0, 0) * value(x);
  return push(std::move(v), needs_grad(s) || needs_grad(x), [s, x](Tape& t, int self) {
    const Matrix& g = t.grad_of(self);
    if (t.needs_grad(s)) t.accumulate(s, Matrix::Constant(1, 1, g.cwiseProduct(t.value(x)).sum()));
    if (t.needs_grad(x)) t.accumulate(x, t.value(s)(0, 0) * g);
  });
}

Var Tape::add_scalar(Var x, Var s) {
  require(value(s).size() == 1, "tape: add_scalar needs a 1x1 term");
  Matrix v = value(x).array() + value(s)(0, 0);
  return push(std::move(v), needs_grad(s) || needs_grad(x), [s, x](Tape& t, int self) {
    const Matrix& g = t.grad_of(self);
    if (t.needs_grad(s)) t.accumulate(s, Matrix::Constant(1, 1, g.sum()));
    t.accumulate(x, g);
  });
}

Var Tape::add_row(Var x, Var row) {
  require(value(row).rows() == 1 && value(row).cols() == value(x).cols(), "tape: add_row shape mismatch");
  Matrix v = value(x).rowwise() + value(row).row(0);
  return push(std::move(v), needs_grad(x) || needs_grad(row), [x, row](Tape& t, int self) {
    const Matrix& g = t.grad_of(self);
    t.accumulate(x, g);
    if (t.needs_grad(row)) t.accumulate(row, g.colwise().sum());
  });
}

Var Tape::relu(Var x) {
  Matrix v = value(x).cwiseMax(0.0);
  return push(std::move(v), needs_grad(x), [x](Tape& t, int self) {
    const Matrix mask = (t.value(x).array() > 0.0).cast<double>();
    t.accumulate(x, t.grad_of(self).cwiseProduct(mask));
  });
}

Var Tape::softmax_rows(Var logits) {
  const Matrix& z = value(logits);
  Matrix w(z.rows(), z.cols());
  for (Eigen::Index r = 0; r < z.rows(); ++r) {
    const double m = z.row(r).maxCoeff();
    w.row(r) = (z.row(r).array() - m).exp();
    w.row(r) /= w.row(r).sum();
  }
  return push(std::move(w), needs_grad(logits), [logits](Tape& t, int self) {
    const Matrix& g = t.grad_of(self);
    const Matrix& w = t.value_of(self);
    // dz = w .* (g - <g, w>) per row
    const Vector dots = g.cwiseProduct(w).rowwise().sum();
    Matrix dz = w.cwiseProduct(g.colwise() - dots);
    t.accumulate(logits, dz);
  });
}

Var Tape::mean_abs_error(Var pred, const Matrix& target) {
  require(value(pred).rows() == target.rows() && value(pred).cols() == target.cols(),
          "tape: mean_abs_error shape mismatch");
  const double count = static_cast<double>(target.size());
  Matrix v = Matrix::Constant(1, 1, (value(pred) - target).cwiseAbs().sum() / count);
  return push(std::move(v), needs_grad(pred), [pred, target, count](Tape& t, int self) {
    const double g = t.grad_of(self)(0, 0);
    // Subgradient convention sign(0) = 0.
    const Matrix sgn = (t.value(pred) - target).unaryExpr([](double d) {
      return d > 0.0 ? 1.0 : (d < 0.0 ? -1.0 : 0.0);
    });
    t.accumulate(pred, (g / count) * sgn);
  });
}

}  // namespace gsphar::ad
