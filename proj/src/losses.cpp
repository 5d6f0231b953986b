#include "angsync/losses.hpp"

#include <sstream>
#include <stdexcept>

namespace angsync {

LossContext::LossContext(const OffsetGraph& g) : n_(g.n()), a_(g.dense()) {
  mask_ = (a_.array() != 0.0).cast<double>().matrix();
  edge_count_ = g.nonzero_count();
  weight_sum_ = a_.sum();
}

namespace ad {

std::vector<Var> residual_layers(Tape& tape, const LossContext& ctx, Var r) {
  const int n = ctx.n();
  if (r.rows() != n) throw std::invalid_argument("residual: angle matrix has the wrong number of rows");
  const Var ones_row = tape.constant(Matrix::Ones(1, n));
  const Var ones_col = tape.constant(Matrix::Ones(n, 1));
  const Var a = tape.constant(ctx.adjacency());
  const Var mask = tape.constant(ctx.mask());
  std::vector<Var> layers;
  for (Eigen::Index l = 0; l < r.cols(); ++l) {
    const Var col = slice_cols(r, l, 1);
    const Var diff = matmul(col, ones_row) - matmul(ones_col, transpose(col));
    const Var t = mod2pi(diff);
    const Var m = minimum(mod2pi(t - a), mod2pi(a - t));
    layers.push_back(mul(m, mask));
  }
  return layers;
}

Var combined_residual(const std::vector<Var>& layers) {
  if (layers.empty()) throw std::invalid_argument("combined_residual: no layers");
  Var m = layers.front();
  for (std::size_t l = 1; l < layers.size(); ++l) m = minimum(m, layers[l]);
  return m;
}

Var upset_loss(Tape& tape, const LossContext& ctx, Var r) {
  if (ctx.edge_count() == 0) throw std::invalid_argument("upset_loss: graph has no edges");
  const Var m = combined_residual(residual_layers(tape, ctx, r));
  return scale(frobenius_norm(m), 1.0 / ctx.edge_count());
}

Var confidence(Tape& tape, const LossContext& ctx, Var combined) {
  const Var a = tape.constant(ctx.adjacency());
  const Var mask = tape.constant(ctx.mask());
  const Var c = mul(div(tape.constant(1.0), add_scalar(combined, 1.0)), mask);
  const Var weighted = sum(mul(a, c));
  if (weighted.scalar() == 0.0) throw std::invalid_argument("confidence: zero weighted degree");
  return mul(c, div(tape.constant(ctx.weight_sum()), weighted));
}

Var reweighted_skew(Tape& tape, const LossContext& ctx, Var conf) {
  const Var w = mul(tape.constant(ctx.adjacency()), conf);
  return mod2pi(w - transpose(w));
}

Var cycle_loss(Tape& tape, const LossContext& ctx, Var r) {
  const std::vector<Var> layers = residual_layers(tape, ctx, r);
  const Var m = combined_residual(layers);
  const Var skew = reweighted_skew(tape, ctx, confidence(tape, ctx, m));

  std::vector<Matrix> layer_values;
  for (const Var& v : layers) layer_values.push_back(v.value());
  const GraphAssignment g = assign_edges(layer_values, ctx.mask());

  const int k = static_cast<int>(layers.size());
  Var total = tape.constant(0.0);
  for (int l = 1; l <= k; ++l) {
    const Matrix layer_mask = (g.layer.array() == l).cast<double>().matrix();
    const Var skew_l = mul(skew, tape.constant(layer_mask));
    const auto tri = triangles(skew_l.value());
    if (tri.empty()) continue;
    std::vector<std::array<int, 2>> e1, e2, e3;
    e1.reserve(tri.size());
    e2.reserve(tri.size());
    e3.reserve(tri.size());
    for (const auto& t : tri) {
      e1.push_back({t[0], t[1]});
      e2.push_back({t[1], t[2]});
      e3.push_back({t[2], t[0]});
    }
    const Var s = gather(skew_l, e1) + gather(skew_l, e2) + gather(skew_l, e3);
    total = total + mean(minimum(mod2pi(s), mod2pi(-s)));
  }
  return scale(total, 1.0 / k);
}

}  // namespace ad

GraphAssignment assign_edges(const std::vector<Eigen::MatrixXd>& layers, const Eigen::MatrixXd& mask) {
  if (layers.empty()) throw std::invalid_argument("assign_edges: no layers");
  const Eigen::Index n = mask.rows();
  GraphAssignment out;
  out.layer = Eigen::MatrixXi::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) {
      if (mask(i, j) == 0.0) continue;
      int best = 0;
      for (std::size_t l = 1; l < layers.size(); ++l)
        if (layers[l](i, j) < layers[best](i, j)) best = static_cast<int>(l);
      out.layer(i, j) = best + 1;
      out.layer(j, i) = best + 1;
    }
  return out;
}

GraphAssignment assign_edges(const ResidualSet& res) { return assign_edges(res.layers, res.edge_mask); }

ResidualSet residual(const OffsetGraph& g, const AngleMatrix& r) {
  const LossContext ctx(g);
  ad::Tape tape;
  const auto layers = ad::residual_layers(tape, ctx, tape.constant(r));
  ResidualSet out;
  for (const auto& v : layers) out.layers.push_back(v.value());
  out.combined = ad::combined_residual(layers).value();
  out.edge_mask = ctx.mask();
  out.edge_count = ctx.edge_count();
  return out;
}

double upset_loss(const ResidualSet& res) {
  if (res.edge_count == 0) throw std::invalid_argument("upset_loss: graph has no edges");
  return res.combined.norm() / res.edge_count;
}

double upset_loss(const OffsetGraph& g, const AngleMatrix& r) {
  const LossContext ctx(g);
  ad::Tape tape;
  return ad::upset_loss(tape, ctx, tape.constant(r)).scalar();
}

ConfidenceMatrix confidence(const ResidualSet& res, const OffsetGraph& g) {
  const LossContext ctx(g);
  ad::Tape tape;
  return {ad::confidence(tape, ctx, tape.constant(res.combined)).value()};
}

Eigen::MatrixXd reweighted_skew(const OffsetGraph& g, const ConfidenceMatrix& c) {
  const LossContext ctx(g);
  if (c.values.rows() != ctx.n() || c.values.cols() != ctx.n())
    throw std::invalid_argument("reweighted_skew: confidence matrix has the wrong shape");
  ad::Tape tape;
  return ad::reweighted_skew(tape, ctx, tape.constant(c.values)).value();
}

double cycle_loss(const OffsetGraph& g, const AngleMatrix& r) {
  const LossContext ctx(g);
  ad::Tape tape;
  return ad::cycle_loss(tape, ctx, tape.constant(r)).scalar();
}

std::string LossSpec::name() const {
  switch (kind) {
    case Kind::Upset: return "upset";
    case Kind::Cycle: return "cycle";
    case Kind::Sum: return "sum";
    case Kind::Weighted: {
      std::ostringstream os;
      os << "weighted:" << tau;
      return os.str();
    }
  }
  return "?";
}

LossSpec LossSpec::parse(const std::string& s) {
  if (s == "upset") return {Kind::Upset, 0.0};
  if (s == "cycle") return {Kind::Cycle, 0.0};
  if (s == "sum") return {Kind::Sum, 0.0};
  if (s.rfind("weighted:", 0) == 0) {
    const double tau = std::stod(s.substr(9));
    if (!(tau >= 0.0)) throw std::invalid_argument("weighted loss needs tau >= 0");
    return {Kind::Weighted, tau};
  }
  throw std::invalid_argument("unknown loss variant: " + s);
}

ad::Var training_loss(ad::Tape& tape, const LossContext& ctx, ad::Var r, const LossSpec& spec) {
  switch (spec.kind) {
    case LossSpec::Kind::Upset: return ad::upset_loss(tape, ctx, r);
    case LossSpec::Kind::Cycle: return ad::cycle_loss(tape, ctx, r);
    case LossSpec::Kind::Sum: return ad::upset_loss(tape, ctx, r) + ad::cycle_loss(tape, ctx, r);
    case LossSpec::Kind::Weighted:
      return ad::cycle_loss(tape, ctx, r) + spec.tau * ad::upset_loss(tape, ctx, r);
  }
  throw std::logic_error("training_loss: unhandled loss kind");
}

}  // namespace angsync
