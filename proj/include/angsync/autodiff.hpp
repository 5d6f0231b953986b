#pragma once

#include <array>
#include <cstddef>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

// Reverse-mode automatic differentiation over dense real matrices.
//
// A Tape records one forward pass as an append-only list of nodes, so creation
// order is a topological order and backward is a single reverse sweep. Scalars
// are 1x1 matrices and vectors are n x 1. Binary elementwise ops accept a 1x1
// operand against any shape; every other shape combination must match exactly.
//
// Subgradient conventions at non-differentiable points:
//   mod2pi       derivative 1 everywhere
//   minimum      gradient goes to the first argument on ties
//   relu         derivative 0 at 0
//   frobenius    zero gradient at the zero matrix
namespace angsync::ad {

using Matrix = Eigen::MatrixXd;

class Tape;

/// Handle to a node on a tape.
class Var {
 public:
  Var() = default;
  Var(Tape* tape, std::size_t id) : tape_(tape), id_(id) {}

  const Matrix& value() const;
  const Matrix& grad() const;
  double scalar() const;
  Eigen::Index rows() const { return value().rows(); }
  Eigen::Index cols() const { return value().cols(); }
  Tape* tape() const { return tape_; }
  std::size_t id() const { return id_; }

 private:
  Tape* tape_ = nullptr;
  std::size_t id_ = 0;
};

class Tape {
 public:
  using Backward = std::function<void(Tape&, std::size_t self)>;

  /// Differentiable input (a parameter or anything whose gradient is wanted).
  Var leaf(Matrix value);
  Var leaf(double value) { return leaf(Matrix::Constant(1, 1, value)); }
  /// Input that never receives a gradient.
  Var constant(Matrix value);
  Var constant(double value) { return constant(Matrix::Constant(1, 1, value)); }

  /// Records an op. `parents` lists node ids whose gradients `fn` accumulates into.
  Var push(Matrix value, std::vector<std::size_t> parents, Backward fn);

  /// Accumulates d(loss)/d(node) for every node that depends on a leaf.
  /// Throws std::invalid_argument if `loss` is not 1x1.
  void backward(Var loss);

  const Matrix& value(std::size_t id) const { return nodes_[id].value; }
  const Matrix& grad(std::size_t id) const { return nodes_[id].grad; }
  Matrix& grad_mut(std::size_t id) { return nodes_[id].grad; }
  bool requires_grad(std::size_t id) const { return nodes_[id].requires_grad; }
  std::size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    Matrix value;
    Matrix grad;
    std::vector<std::size_t> parents;
    Backward backward;
    bool requires_grad = false;
  };
  std::vector<Node> nodes_;
};

Var add(Var a, Var b);
Var sub(Var a, Var b);
Var neg(Var a);
Var scale(Var a, double s);
Var add_scalar(Var a, double s);
/// Elementwise (Hadamard) product; a 1x1 operand scales the other.
Var mul(Var a, Var b);
Var div(Var a, Var b);
Var matmul(Var a, Var b);
Var transpose(Var a);
Var relu(Var a);
Var sigmoid(Var a);
Var sin(Var a);
Var cos(Var a);
/// Elementwise atan2(y, x). Throws std::domain_error at (0, 0).
Var atan2(Var y, Var x);
Var mod2pi(Var a);
Var minimum(Var a, Var b);
Var frobenius_norm(Var a);
Var sum(Var a);
Var mean(Var a);
Var concat_cols(const std::vector<Var>& parts);
Var slice_cols(Var a, Eigen::Index start, Eigen::Index count);
/// Column vector of the entries a(i, j) at the given positions.
Var gather(Var a, const std::vector<std::array<int, 2>>& positions);

inline Var operator+(Var a, Var b) { return add(a, b); }
inline Var operator-(Var a, Var b) { return sub(a, b); }
inline Var operator-(Var a) { return neg(a); }
inline Var operator*(double s, Var a) { return scale(a, s); }

/// A named trainable tensor that persists across tapes.
struct Parameter {
  std::string name;
  Matrix value;
  Matrix grad;
};

/// p <- p - lr * (grad + weight_decay * p)
void sgd_step(Matrix& value, const Matrix& grad, double lr, double weight_decay);
void sgd_step(std::vector<Parameter*>& params, double lr, double weight_decay);

}  // namespace angsync::ad
