#include "angsync/autodiff.hpp"

#include <cmath>
#include <stdexcept>

#include "angsync/angles.hpp"

namespace angsync::ad {

const Matrix& Var::value() const { return tape_->value(id_); }
const Matrix& Var::grad() const { return tape_->grad(id_); }
double Var::scalar() const {
  const Matrix& v = value();
  if (v.rows() != 1 || v.cols() != 1) throw std::invalid_argument("Var::scalar: not a 1x1 value");
  return v(0, 0);
}

Var Tape::leaf(Matrix value) {
  nodes_.push_back({std::move(value), {}, {}, {}, true});
  return {this, nodes_.size() - 1};
}

Var Tape::constant(Matrix value) {
  nodes_.push_back({std::move(value), {}, {}, {}, false});
  return {this, nodes_.size() - 1};
}

Var Tape::push(Matrix value, std::vector<std::size_t> parents, Backward fn) {
  bool rg = false;
  for (std::size_t p : parents) rg = rg || nodes_[p].requires_grad;
  nodes_.push_back({std::move(value), {}, std::move(parents), rg ? std::move(fn) : Backward{}, rg});
  return {this, nodes_.size() - 1};
}

void Tape::backward(Var loss) {
  if (loss.tape() != this) throw std::invalid_argument("backward: loss belongs to another tape");
  const std::size_t root = loss.id();
  if (nodes_[root].value.rows() != 1 || nodes_[root].value.cols() != 1)
    throw std::invalid_argument("backward: loss must be a scalar");
  for (std::size_t i = 0; i <= root; ++i)
    nodes_[i].grad = Matrix::Zero(nodes_[i].value.rows(), nodes_[i].value.cols());
  nodes_[root].grad(0, 0) = 1.0;
  for (std::size_t i = root + 1; i-- > 0;) {
    Node& node = nodes_[i];
    if (node.requires_grad && node.backward) node.backward(*this, i);
  }
}

namespace {

void check_same(const Var& a, const Var& b, const char* op) {
  if (a.tape() != b.tape()) throw std::invalid_argument(std::string(op) + ": operands on different tapes");
}

bool is_scalar(const Matrix& m) { return m.rows() == 1 && m.cols() == 1; }

// Shape of an elementwise binary result, honoring 1x1 broadcasting.
std::pair<Eigen::Index, Eigen::Index> broadcast_shape(const Matrix& a, const Matrix& b, const char* op) {
  if (a.rows() == b.rows() && a.cols() == b.cols()) return {a.rows(), a.cols()};
  if (is_scalar(a)) return {b.rows(), b.cols()};
  if (is_scalar(b)) return {a.rows(), a.cols()};
  throw std::invalid_argument(std::string(op) + ": shape mismatch");
}

Matrix expand(const Matrix& m, Eigen::Index r, Eigen::Index c) {
  if (m.rows() == r && m.cols() == c) return m;
  return Matrix::Constant(r, c, m(0, 0));
}

// Adds an upstream gradient of the broadcast shape into a possibly-1x1 operand.
void accumulate(Tape& t, std::size_t id, const Matrix& g) {
  if (!t.requires_grad(id)) return;
  Matrix& dst = t.grad_mut(id);
  if (dst.rows() == g.rows() && dst.cols() == g.cols())
    dst += g;
  else
    dst(0, 0) += g.sum();
}

template <class F, class D>
Var unary(Var a, F forward, D derivative) {
  Tape& t = *a.tape();
  Matrix out = a.value().unaryExpr(forward);
  const std::size_t ia = a.id();
  return t.push(std::move(out), {ia}, [ia, derivative](Tape& tp, std::size_t self) {
    if (!tp.requires_grad(ia)) return;
    tp.grad_mut(ia).array() +=
        tp.grad(self).array() * tp.value(ia).unaryExpr(derivative).array();
  });
}

}  // namespace

Var add(Var a, Var b) {
  check_same(a, b, "add");
  Tape& t = *a.tape();
  auto [r, c] = broadcast_shape(a.value(), b.value(), "add");
  Matrix out = expand(a.value(), r, c) + expand(b.value(), r, c);
  const std::size_t ia = a.id(), ib = b.id();
  return t.push(std::move(out), {ia, ib}, [ia, ib](Tape& tp, std::size_t self) {
    accumulate(tp, ia, tp.grad(self));
    accumulate(tp, ib, tp.grad(self));
  });
}

Var sub(Var a, Var b) {
  check_same(a, b, "sub");
  Tape& t = *a.tape();
  auto [r, c] = broadcast_shape(a.value(), b.value(), "sub");
  Matrix out = expand(a.value(), r, c) - expand(b.value(), r, c);
  const std::size_t ia = a.id(), ib = b.id();
  return t.push(std::move(out), {ia, ib}, [ia, ib](Tape& tp, std::size_t self) {
    accumulate(tp, ia, tp.grad(self));
    accumulate(tp, ib, -tp.grad(self));
  });
}

Var neg(Var a) { return scale(a, -1.0); }

Var scale(Var a, double s) {
  Tape& t = *a.tape();
  const std::size_t ia = a.id();
  return t.push(a.value() * s, {ia}, [ia, s](Tape& tp, std::size_t self) {
    accumulate(tp, ia, s * tp.grad(self));
  });
}

Var add_scalar(Var a, double s) {
  Tape& t = *a.tape();
  const std::size_t ia = a.id();
  return t.push((a.value().array() + s).matrix(), {ia}, [ia](Tape& tp, std::size_t self) {
    accumulate(tp, ia, tp.grad(self));
  });
}

Var mul(Var a, Var b) {
  check_same(a, b, "mul");
  Tape& t = *a.tape();
  auto [r, c] = broadcast_shape(a.value(), b.value(), "mul");
  Matrix out = expand(a.value(), r, c).cwiseProduct(expand(b.value(), r, c));
  const std::size_t ia = a.id(), ib = b.id();
  return t.push(std::move(out), {ia, ib}, [ia, ib, r = r, c = c](Tape& tp, std::size_t self) {
    const Matrix& g = tp.grad(self);
    if (tp.requires_grad(ia)) accumulate(tp, ia, g.cwiseProduct(expand(tp.value(ib), r, c)));
    if (tp.requires_grad(ib)) accumulate(tp, ib, g.cwiseProduct(expand(tp.value(ia), r, c)));
  });
}

Var div(Var a, Var b) {
  check_same(a, b, "div");
  Tape& t = *a.tape();
  auto [r, c] = broadcast_shape(a.value(), b.value(), "div");
  Matrix out = expand(a.value(), r, c).cwiseQuotient(expand(b.value(), r, c));
  const std::size_t ia = a.id(), ib = b.id();
  return t.push(std::move(out), {ia, ib}, [ia, ib, r = r, c = c](Tape& tp, std::size_t self) {
    const Matrix& g = tp.grad(self);
    const Matrix bv = expand(tp.value(ib), r, c);
    if (tp.requires_grad(ia)) accumulate(tp, ia, g.cwiseQuotient(bv));
    if (tp.requires_grad(ib)) {
      const Matrix av = expand(tp.value(ia), r, c);
      accumulate(tp, ib, -g.cwiseProduct(av).cwiseQuotient(bv.cwiseProduct(bv)));
    }
  });
}

Var matmul(Var a, Var b) {
  check_same(a, b, "matmul");
  if (a.cols() != b.rows()) throw std::invalid_argument("matmul: inner dimensions differ");
  Tape& t = *a.tape();
  const std::size_t ia = a.id(), ib = b.id();
  return t.push(a.value() * b.value(), {ia, ib}, [ia, ib](Tape& tp, std::size_t self) {
    const Matrix& g = tp.grad(self);
    if (tp.requires_grad(ia)) tp.grad_mut(ia).noalias() += g * tp.value(ib).transpose();
    if (tp.requires_grad(ib)) tp.grad_mut(ib).noalias() += tp.value(ia).transpose() * g;
  });
}

Var transpose(Var a) {
  Tape& t = *a.tape();
  const std::size_t ia = a.id();
  return t.push(a.value().transpose(), {ia}, [ia](Tape& tp, std::size_t self) {
    if (tp.requires_grad(ia)) tp.grad_mut(ia) += tp.grad(self).transpose();
  });
}

Var relu(Var a) {
  return unary(a, [](double x) { return x > 0.0 || std::isnan(x) ? x : 0.0; },
               [](double x) { return x > 0.0 ? 1.0 : 0.0; });
}

Var sigmoid(Var a) {
  auto sig = [](double x) { return 1.0 / (1.0 + std::exp(-x)); };
  return unary(a, sig, [sig](double x) {
    const double s = sig(x);
    return s * (1.0 - s);
  });
}

Var sin(Var a) {
  return unary(a, [](double x) { return std::sin(x); }, [](double x) { return std::cos(x); });
}

Var cos(Var a) {
  return unary(a, [](double x) { return std::cos(x); }, [](double x) { return -std::sin(x); });
}

Var mod2pi(Var a) {
  // Non-finite values pass through so divergence surfaces as a non-finite loss.
  return unary(a, [](double x) { return std::isfinite(x) ? angsync::mod2pi(x) : x; }, [](double) { return 1.0; });
}

Var atan2(Var y, Var x) {
  check_same(y, x, "atan2");
  if (y.rows() != x.rows() || y.cols() != x.cols()) throw std::invalid_argument("atan2: shape mismatch");
  Tape& t = *y.tape();
  Matrix out(y.rows(), y.cols());
  for (Eigen::Index i = 0; i < out.size(); ++i) {
    const double yv = y.value().data()[i], xv = x.value().data()[i];
    if (yv == 0.0 && xv == 0.0) throw std::domain_error("atan2: undefined at (0, 0)");
    out.data()[i] = std::atan2(yv, xv);
  }
  const std::size_t iy = y.id(), ix = x.id();
  return t.push(std::move(out), {iy, ix}, [iy, ix](Tape& tp, std::size_t self) {
    const auto yv = tp.value(iy).array(), xv = tp.value(ix).array();
    const auto g = tp.grad(self).array();
    const Eigen::ArrayXXd r2 = xv * xv + yv * yv;
    if (tp.requires_grad(iy)) tp.grad_mut(iy).array() += g * xv / r2;
    if (tp.requires_grad(ix)) tp.grad_mut(ix).array() -= g * yv / r2;
  });
}

Var minimum(Var a, Var b) {
  check_same(a, b, "minimum");
  if (a.rows() != b.rows() || a.cols() != b.cols()) throw std::invalid_argument("minimum: shape mismatch");
  Tape& t = *a.tape();
  Matrix out = a.value().cwiseMin(b.value());
  const std::size_t ia = a.id(), ib = b.id();
  return t.push(std::move(out), {ia, ib}, [ia, ib](Tape& tp, std::size_t self) {
    const Matrix& av = tp.value(ia);
    const Matrix& bv = tp.value(ib);
    const Matrix& g = tp.grad(self);
    for (Eigen::Index i = 0; i < g.size(); ++i) {
      const bool first = av.data()[i] <= bv.data()[i];
      if (first) {
        if (tp.requires_grad(ia)) tp.grad_mut(ia).data()[i] += g.data()[i];
      } else if (tp.requires_grad(ib)) {
        tp.grad_mut(ib).data()[i] += g.data()[i];
      }
    }
  });
}

Var frobenius_norm(Var a) {
  Tape& t = *a.tape();
  const double nrm = a.value().norm();
  const std::size_t ia = a.id();
  return t.push(Matrix::Constant(1, 1, nrm), {ia}, [ia, nrm](Tape& tp, std::size_t self) {
    if (!tp.requires_grad(ia) || nrm == 0.0) return;
    tp.grad_mut(ia) += (tp.grad(self)(0, 0) / nrm) * tp.value(ia);
  });
}

Var sum(Var a) {
  Tape& t = *a.tape();
  const std::size_t ia = a.id();
  return t.push(Matrix::Constant(1, 1, a.value().sum()), {ia}, [ia](Tape& tp, std::size_t self) {
    if (tp.requires_grad(ia)) tp.grad_mut(ia).array() += tp.grad(self)(0, 0);
  });
}

Var mean(Var a) {
  if (a.value().size() == 0) throw std::invalid_argument("mean: empty tensor");
  return scale(sum(a), 1.0 / static_cast<double>(a.value().size()));
}

Var concat_cols(const std::vector<Var>& parts) {
  if (parts.empty()) throw std::invalid_argument("concat_cols: no inputs");
  Tape& t = *parts.front().tape();
  const Eigen::Index rows = parts.front().rows();
  Eigen::Index cols = 0;
  std::vector<std::size_t> ids;
  for (const Var& p : parts) {
    if (p.tape() != &t) throw std::invalid_argument("concat_cols: operands on different tapes");
    if (p.rows() != rows) throw std::invalid_argument("concat_cols: row counts differ");
    cols += p.cols();
    ids.push_back(p.id());
  }
  Matrix out(rows, cols);
  std::vector<Eigen::Index> offsets;
  Eigen::Index c = 0;
  for (const Var& p : parts) {
    offsets.push_back(c);
    out.middleCols(c, p.cols()) = p.value();
    c += p.cols();
  }
  return t.push(std::move(out), ids, [ids, offsets](Tape& tp, std::size_t self) {
    for (std::size_t k = 0; k < ids.size(); ++k)
      if (tp.requires_grad(ids[k]))
        tp.grad_mut(ids[k]) += tp.grad(self).middleCols(offsets[k], tp.value(ids[k]).cols());
  });
}

Var slice_cols(Var a, Eigen::Index start, Eigen::Index count) {
  if (start < 0 || count < 0 || start + count > a.cols()) throw std::invalid_argument("slice_cols: out of range");
  Tape& t = *a.tape();
  const std::size_t ia = a.id();
  return t.push(a.value().middleCols(start, count), {ia}, [ia, start, count](Tape& tp, std::size_t self) {
    if (tp.requires_grad(ia)) tp.grad_mut(ia).middleCols(start, count) += tp.grad(self);
  });
}

Var gather(Var a, const std::vector<std::array<int, 2>>& positions) {
  Tape& t = *a.tape();
  Matrix out(static_cast<Eigen::Index>(positions.size()), 1);
  for (std::size_t k = 0; k < positions.size(); ++k) {
    const auto [i, j] = positions[k];
    if (i < 0 || j < 0 || i >= a.rows() || j >= a.cols()) throw std::invalid_argument("gather: out of range");
    out(static_cast<Eigen::Index>(k), 0) = a.value()(i, j);
  }
  const std::size_t ia = a.id();
  return t.push(std::move(out), {ia}, [ia, positions](Tape& tp, std::size_t self) {
    if (!tp.requires_grad(ia)) return;
    Matrix& g = tp.grad_mut(ia);
    const Matrix& up = tp.grad(self);
    for (std::size_t k = 0; k < positions.size(); ++k)
      g(positions[k][0], positions[k][1]) += up(static_cast<Eigen::Index>(k), 0);
  });
}

void sgd_step(Matrix& value, const Matrix& grad, double lr, double weight_decay) {
  if (value.rows() != grad.rows() || value.cols() != grad.cols())
    throw std::invalid_argument("sgd_step: gradient shape differs from parameter shape");
  value -= lr * (grad + weight_decay * value);
}

void sgd_step(std::vector<Parameter*>& params, double lr, double weight_decay) {
  for (Parameter* p : params) sgd_step(p->value, p->grad, lr, weight_decay);
}

}  // namespace angsync::ad
