#pragma once

// Finite-difference check of the full GNNSync forward pass, shared by the
// unit tests and the acceptance binary.

#include <algorithm>
#include <cstdint>

#include "angsync/gnnsync.hpp"
#include "angsync/synth.hpp"
#include "oracles.hpp"

namespace fdcheck {

struct ForwardCheck {
  bool skipped = false;   // too close to a non-differentiable point
  double worst = 0.0;     // largest relative error over parameter tensors
  double kink = 0.0;      // distance to the nearest kink
};

inline double forward_loss(const angsync::GraphInputs& in, const angsync::GnnSyncModel& m,
                           const angsync::PGDConfig& pcfg, const angsync::LossSpec& loss) {
  angsync::ad::Tape tape;
  return angsync::forward(tape, in, m, pcfg, loss).loss.scalar();
}

/// Gradients of every parameter against central differences with step h.
/// Draws closer than `margin` to a relu, residual, layer or triangle switch are skipped.
inline ForwardCheck check_forward(const angsync::GraphInputs& in, const angsync::GnnSyncModel& model,
                                  const angsync::PGDConfig& pcfg, const angsync::LossSpec& loss, double h,
                                  double margin) {
  using namespace angsync;
  ForwardCheck out;
  ad::Tape tape;
  const ForwardPass fp = forward(tape, in, model, pcfg, loss);
  const Eigen::MatrixXd pre_s = in.features * model.dimpa.w_s0.value;
  const Eigen::MatrixXd pre_t = in.features * model.dimpa.w_t0.value;
  const bool with_cycle = loss.kind != LossSpec::Kind::Upset;
  out.kink = std::min({pre_s.cwiseAbs().minCoeff(), pre_t.cwiseAbs().minCoeff(),
                       oracle::kink_distance(in.ctx.adjacency(), fp.r.value(), with_cycle)});
  if (out.kink < margin) {
    out.skipped = true;
    return out;
  }
  tape.backward(fp.loss);
  const BoundModel& b = fp.bound;
  std::vector<ad::Var> vars{b.w_s0, b.w_s1, b.w_t0, b.w_t1, b.a_s1, b.a_s2, b.a_t1, b.a_t2};
  vars.insert(vars.end(), b.head_a.begin(), b.head_a.end());
  vars.insert(vars.end(), b.head_b.begin(), b.head_b.end());
  vars.insert(vars.end(), b.alphas.begin(), b.alphas.end());
  const auto params = model.parameters();
  for (std::size_t p = 0; p < params.size(); ++p) {
    const Eigen::MatrixXd fd = oracle::fd_gradient(
        [&](const Eigen::MatrixXd& x) {
          GnnSyncModel moved = model;
          moved.parameters()[p]->value = x;
          return forward_loss(in, moved, pcfg, loss);
        },
        params[p]->value, h);
    out.worst = std::max(out.worst, oracle::rel_error(vars[p].grad(), fd));
  }
  return out;
}

/// Random n-node instance with random angle features.
struct Instance {
  angsync::OffsetGraph graph;
  Eigen::MatrixXd features;
};

inline Instance random_instance(int n, int k, double eta, std::uint64_t seed) {
  angsync::SyntheticConfig cfg;
  cfg.n = n;
  cfg.p = 0.5;
  cfg.k = k;
  cfg.eta = eta;
  cfg.seed = seed;
  Instance out;
  out.graph = angsync::gen_offset_graph(cfg).graph.without_layers();
  std::mt19937_64 rng(seed);
  out.features = oracle::random_angles(n, k, rng);
  return out;
}

}  // namespace fdcheck
