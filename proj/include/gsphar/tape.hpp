#pragma once

#include <functional>
#include <vector>

#include "gsphar/types.hpp"

namespace gsphar::ad {

/// Handle to a node on a Tape.
struct Var {
  int id = -1;
};

/// Minimal reverse-mode tape. Nodes hold dense real matrices; scalars are
/// 1x1 matrices. Complex quantities are carried as stacked [real | imag]
/// column blocks so every node stays real-valued.
///
/// A tape is built for one forward evaluation and discarded afterwards.
class Tape {
 public:
  using Backward = std::function<void(Tape&, int self)>;

  Var leaf(Matrix value);
  Var constant(Matrix value);

  /// Node with caller-supplied adjoint propagation. `backward` reads
  /// grad(self) and accumulates into the parents via accumulate().
  Var custom(Matrix value, Backward backward);

  const Matrix& value(Var v) const { return nodes_[static_cast<std::size_t>(v.id)].value; }
  const Matrix& grad(Var v) const { return nodes_[static_cast<std::size_t>(v.id)].grad; }
  const Matrix& grad_of(int id) const { return nodes_[static_cast<std::size_t>(id)].grad; }
  const Matrix& value_of(int id) const { return nodes_[static_cast<std::size_t>(id)].value; }
  bool needs_grad(Var v) const { return nodes_[static_cast<std::size_t>(v.id)].needs_grad; }

  void accumulate(Var v, const Matrix& g);

  /// Seeds d(out)/d(out) = 1 for a 1x1 output and sweeps the tape backwards.
  void backward(Var out);

  std::size_t size() const { return nodes_.size(); }

  // Elementary operations.
  Var matmul(Var a, Var b);
  Var add(Var a, Var b);
  Var sub(Var a, Var b);
  Var hadamard(Var a, Var b);
  Var scale(Var x, double c);
  Var scale_by(Var s, Var x);       // 1x1 s times matrix x
  Var add_scalar(Var x, Var s);     // x + s (1x1) broadcast
  Var add_row(Var x, Var row);      // x + row (1 x cols) broadcast over rows
  Var relu(Var x);
  Var softmax_rows(Var logits);     // row-wise normalized exponentials
  Var mean_abs_error(Var pred, const Matrix& target);

 private:
  struct Node {
    Matrix value;
    Matrix grad;
    Backward backward;
    bool needs_grad = false;
  };

  Var push(Matrix value, bool needs_grad, Backward backward);

  std::vector<Node> nodes_;
};

}  // namespace gsphar::ad
