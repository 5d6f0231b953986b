#include <doctest.h>

#include "angsync/losses.hpp"
#include "angsync/synth.hpp"
#include "oracles.hpp"

using namespace angsync;

namespace {

SyntheticInstance instance(int n, double p, int k, double eta, std::uint64_t seed) {
  SyntheticConfig cfg;
  cfg.n = n;
  cfg.p = p;
  cfg.k = k;
  cfg.eta = eta;
  cfg.seed = seed;
  return gen_offset_graph(cfg);
}

double tape_loss(const OffsetGraph& g, const Eigen::MatrixXd& r, const LossSpec& spec) {
  const LossContext ctx(g);
  ad::Tape tape;
  return training_loss(tape, ctx, tape.constant(r), spec).scalar();
}

Eigen::MatrixXd tape_grad(const OffsetGraph& g, const Eigen::MatrixXd& r, const LossSpec& spec) {
  const LossContext ctx(g);
  ad::Tape tape;
  const ad::Var x = tape.leaf(r);
  tape.backward(training_loss(tape, ctx, x, spec));
  return x.grad();
}

}  // namespace

TEST_CASE("ground truth on a noiseless graph has zero residual and zero losses") {
  for (int k : {1, 3}) {
    const auto inst = instance(40, 0.4, k, 0.0, 2);
    const OffsetGraph g = inst.graph.without_layers();
    const ResidualSet res = residual(g, inst.truth.theta);
    CHECK(res.combined.cwiseAbs().maxCoeff() < 1e-12);
    CHECK(upset_loss(g, inst.truth.theta) < 1e-12);
    CHECK(cycle_loss(g, inst.truth.theta) < 1e-9);
  }
}

TEST_CASE("residual matches the scalar loop oracle") {
  std::mt19937_64 rng(3);
  const OffsetGraph g = oracle::random_graph(15, 0.5, rng);
  const Eigen::MatrixXd r = oracle::random_angles(15, 3, rng);
  const ResidualSet res = residual(g, r);
  const Eigen::MatrixXd a = g.dense();
  for (int l = 0; l < 3; ++l) CHECK((res.layers[l] - oracle::residual_layer(a, r.col(l))).cwiseAbs().maxCoeff() < 1e-12);
  CHECK((res.combined - oracle::combined(a, r)).cwiseAbs().maxCoeff() < 1e-12);
  CHECK(res.edge_count == g.nonzero_count());
  CHECK(res.combined.maxCoeff() <= oracle::kPi + 1e-12);
}

TEST_CASE("upset on a single edge with residual pi") {
  const OffsetGraph g(2, {{0, 1, oracle::kPi}});
  Eigen::MatrixXd r(2, 1);
  r << 0.0, 0.0;
  CHECK(upset_loss(g, r) == doctest::Approx(oracle::kPi));
}

TEST_CASE("upset matches the oracle on random instances") {
  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 10; ++trial) {
    const OffsetGraph g = oracle::random_graph(12, 0.5, rng);
    if (g.nonzero_count() == 0) continue;
    const Eigen::MatrixXd r = oracle::random_angles(12, 2, rng);
    CHECK(upset_loss(g, r) == doctest::Approx(oracle::upset(g.dense(), r)).epsilon(1e-12));
  }
}

TEST_CASE("confidence is 1 at zero residual and preserves the weighted sum") {
  const auto inst = instance(30, 0.4, 1, 0.0, 5);
  const OffsetGraph g = inst.graph.without_layers();
  const ResidualSet res = residual(g, inst.truth.theta);
  const ConfidenceMatrix c = confidence(res, g);
  const Eigen::MatrixXd a = g.dense();
  for (int i = 0; i < 30; ++i)
    for (int j = 0; j < 30; ++j)
      if (a(i, j) != 0.0) CHECK(c.values(i, j) == doctest::Approx(1.0).epsilon(1e-12));

  std::mt19937_64 rng(6);
  const Eigen::MatrixXd r = oracle::random_angles(30, 1, rng);
  const ConfidenceMatrix c2 = confidence(residual(g, r), g);
  CHECK(a.cwiseProduct(c2.values).sum() == doctest::Approx(a.sum()).epsilon(1e-12));
  CHECK((c2.values - oracle::confidence(a, oracle::combined(a, r))).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("edge assignment") {
  const OffsetGraph g(3, {{0, 1, 1.0}, {1, 2, 2.0}});
  std::mt19937_64 rng(7);
  const ResidualSet one = residual(g, oracle::random_angles(3, 1, rng));
  const GraphAssignment a1 = assign_edges(one);
  CHECK(a1.layer(0, 1) == 1);
  CHECK(a1.layer(1, 0) == 1);
  CHECK(a1.layer(2, 1) == 1);
  CHECK(a1.layer(0, 2) == 0);

  Eigen::MatrixXd l1 = Eigen::MatrixXd::Zero(2, 2), l2 = Eigen::MatrixXd::Zero(2, 2), mask = Eigen::MatrixXd::Zero(2, 2);
  mask(0, 1) = 1.0;
  l1(0, 1) = 0.1;
  l2(0, 1) = 0.9;
  CHECK(assign_edges({l1, l2}, mask).layer(0, 1) == 1);
  CHECK(assign_edges({l2, l1}, mask).layer(0, 1) == 2);
  CHECK(assign_edges({l1, l1}, mask).layer(0, 1) == 1);  // tie goes to the smaller layer

  const auto inst = instance(14, 0.6, 3, 0.2, 8);
  const Eigen::MatrixXd r = oracle::random_angles(14, 3, rng);
  const GraphAssignment ga = assign_edges(residual(inst.graph.without_layers(), r));
  CHECK(ga.layer == oracle::assignment(inst.graph.dense(), r));
}

TEST_CASE("reweighted skew: zero confidence removes the edge in both orientations") {
  const OffsetGraph g(3, {{0, 1, 1.0}, {1, 2, 2.0}});
  ConfidenceMatrix c{Eigen::MatrixXd::Ones(3, 3)};
  c.values(0, 1) = 0.0;
  const Eigen::MatrixXd s = reweighted_skew(g, c);
  CHECK(s(0, 1) == 0.0);
  CHECK(s(1, 0) == 0.0);
  CHECK(s(1, 2) == doctest::Approx(2.0));
  CHECK(s(2, 1) == doctest::Approx(kTwoPi - 2.0));
}

TEST_CASE("cycle loss of a single triangle summing to pi") {
  // Edges 0->1, 1->2, 2->0 with weights summing to pi.
  const double w = oracle::kPi / 3.0;
  const OffsetGraph g(3, {{0, 1, w}, {1, 2, w}, {2, 0, w}});
  // At r = 0 every residual is w, so confidence is uniform and normalizes to 1.
  const Eigen::MatrixXd r = Eigen::MatrixXd::Zero(3, 1);
  // Two orientations, each with sum pi or -pi, both contribute pi.
  CHECK(cycle_loss(g, r) == doctest::Approx(oracle::kPi).epsilon(1e-12));
}

TEST_CASE("cycle loss matches the full-chain oracle") {
  std::mt19937_64 rng(9);
  for (int trial = 0; trial < 10; ++trial) {
    const int k = 1 + trial % 3;
    const OffsetGraph g = oracle::random_graph(12, 0.6, rng);
    const Eigen::MatrixXd r = oracle::random_angles(12, k, rng);
    CHECK(cycle_loss(g, r) == doctest::Approx(oracle::cycle(g.dense(), r)).epsilon(1e-10));
  }
}

TEST_CASE("cycle loss with no triangles is 0") {
  const OffsetGraph g(4, {{0, 1, 1.0}, {1, 2, 1.0}, {2, 3, 1.0}});
  CHECK(cycle_loss(g, Eigen::MatrixXd::Zero(4, 2)) == 0.0);
}

TEST_CASE("loss variants") {
  std::mt19937_64 rng(10);
  const OffsetGraph g = oracle::random_graph(12, 0.6, rng);
  const Eigen::MatrixXd r = oracle::random_angles(12, 2, rng);
  const double u = upset_loss(g, r), c = cycle_loss(g, r);
  CHECK(tape_loss(g, r, LossSpec::parse("upset")) == doctest::Approx(u).epsilon(1e-14));
  CHECK(tape_loss(g, r, LossSpec::parse("cycle")) == doctest::Approx(c).epsilon(1e-14));
  CHECK(tape_loss(g, r, LossSpec::parse("sum")) == doctest::Approx(u + c).epsilon(1e-12));
  CHECK(tape_loss(g, r, LossSpec::parse("weighted:0.3")) == doctest::Approx(c + 0.3 * u).epsilon(1e-12));
  CHECK(LossSpec::parse("weighted:0.3").name() == "weighted:0.3");
  CHECK_THROWS(LossSpec::parse("l2"));
}

TEST_CASE("loss gradients match central finite differences away from kinks") {
  std::mt19937_64 rng(11);
  const double h = 1e-6;
  int checked = 0;
  for (int trial = 0; trial < 40 && checked < 12; ++trial) {
    const int k = 1 + trial % 2;
    const OffsetGraph g = oracle::random_graph(10, 0.6, rng);
    if (g.nonzero_count() == 0) continue;
    const Eigen::MatrixXd r = oracle::random_angles(10, k, rng);
    if (oracle::kink_distance(g.dense(), r, true) < 1e-4) continue;
    for (const char* name : {"upset", "cycle", "sum"}) {
      const LossSpec spec = LossSpec::parse(name);
      const Eigen::MatrixXd fd = oracle::fd_gradient([&](const Eigen::MatrixXd& x) { return tape_loss(g, x, spec); }, r, h);
      CHECK(oracle::rel_error(tape_grad(g, r, spec), fd) <= 1e-4);
    }
    ++checked;
  }
  CHECK(checked >= 8);
}
