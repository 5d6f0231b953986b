#include <doctest.h>

#include <numeric>
#include <sstream>

#include "angsync/evaluation.hpp"
#include "angsync/gnnsync.hpp"
#include "angsync/losses.hpp"
#include "angsync/spectral.hpp"
#include "angsync/synth.hpp"
#include "oracles.hpp"

// Randomized invariants. Every case draws its inputs from a fixed seed so a
// failure reproduces; CAPTURE records the draw index.

using namespace angsync;

namespace {

constexpr int kDraws = 50;

}  // namespace

TEST_CASE("mod2pi lands in [0, 2pi) and preserves the angle") {
  std::mt19937_64 rng(100);
  std::uniform_real_distribution<double> u(-1e4, 1e4);
  for (int t = 0; t < 10000; ++t) {
    const double x = u(rng);
    const double y = mod2pi(x);
    REQUIRE(y >= 0.0);
    REQUIRE(y < kTwoPi);
    REQUIRE(std::abs(std::sin(y) - std::sin(x)) < 1e-9);
    REQUIRE(std::abs(std::cos(y) - std::cos(x)) < 1e-9);
  }
}

TEST_CASE("H is Hermitian with unit-modulus entries on edges") {
  std::mt19937_64 rng(101);
  for (int t = 0; t < kDraws; ++t) {
    CAPTURE(t);
    const int n = 2 + static_cast<int>(rng() % 20);
    const OffsetGraph g = oracle::random_graph(n, 0.4, rng);
    const Eigen::MatrixXcd h = build_hermitian(g);
    REQUIRE(h == h.adjoint());
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) REQUIRE((h(i, j) == 0.0 || std::abs(std::abs(h(i, j)) - 1.0) < 1e-12));
  }
}

TEST_CASE("mse: symmetric, shift invariant, bounded, matches the rotation grid") {
  std::mt19937_64 rng(102);
  std::uniform_real_distribution<double> u(0.0, kTwoPi);
  for (int t = 0; t < kDraws; ++t) {
    CAPTURE(t);
    const int n = 2 + static_cast<int>(rng() % 30);
    const Eigen::VectorXd a = oracle::random_angles(n, 1, rng), b = oracle::random_angles(n, 1, rng);
    const double m = mse(a, b);
    CHECK(m >= 0.0);
    CHECK(m <= 4.0);
    CHECK(std::abs(m - mse(b, a)) < 1e-12);
    const double s = u(rng);
    const Eigen::VectorXd shifted = a.unaryExpr([s](double x) { return mod2pi(x + s); });
    CHECK(std::abs(m - mse(shifted, b)) < 1e-10);
    CHECK(mse(a, a) < 1e-12);
    if (t < 10) CHECK(std::abs(m - rotation_mse_grid(a, b, 20000)) < 1e-6);
  }
}

TEST_CASE("mse_k is the minimum over column permutations") {
  std::mt19937_64 rng(103);
  for (int t = 0; t < 20; ++t) {
    CAPTURE(t);
    const int k = 1 + static_cast<int>(rng() % 4);
    const AngleMatrix r = oracle::random_angles(15, k, rng), truth = oracle::random_angles(15, k, rng);
    const PermutationMse best = mse_k(r, truth);
    std::vector<int> perm(k);
    std::iota(perm.begin(), perm.end(), 0);
    double brute = std::numeric_limits<double>::infinity();
    do {
      double s = 0.0;
      for (int l = 0; l < k; ++l) s += mse(r.col(perm[l]), truth.col(l));
      brute = std::min(brute, s / k);
    } while (std::next_permutation(perm.begin(), perm.end()));
    CHECK(std::abs(best.value - brute) < 1e-12);
    // Reordering the estimate's columns does not change the value.
    AngleMatrix rev = r.rowwise().reverse();
    CHECK(std::abs(mse_k(rev, truth).value - best.value) < 1e-12);
  }
}

TEST_CASE("ane is invariant to scaling both clouds") {
  std::mt19937_64 rng(104);
  std::uniform_real_distribution<double> u(0.1, 10.0);
  for (int t = 0; t < kDraws; ++t) {
    CAPTURE(t);
    const Eigen::MatrixX2d p = oracle::random_angles(20, 2, rng), q = oracle::random_angles(20, 2, rng);
    const double s = u(rng);
    CHECK(ane(p, q) >= 0.0);
    CHECK(std::abs(ane(s * p, s * q) - ane(p, q)) < 1e-10);
    CHECK(ane(q, q) == 0.0);
  }
}

TEST_CASE("losses are nonnegative and vanish on consistent graphs") {
  std::mt19937_64 rng(105);
  for (int t = 0; t < kDraws; ++t) {
    CAPTURE(t);
    const int n = 4 + static_cast<int>(rng() % 15);
    const int k = 1 + static_cast<int>(rng() % 3);
    const OffsetGraph g = oracle::random_graph(n, 0.5, rng);
    if (g.nonzero_count() == 0) continue;
    const AngleMatrix r = oracle::random_angles(n, k, rng);
    const double up = upset_loss(g, r), cy = cycle_loss(g, r);
    CHECK(up >= 0.0);
    CHECK(cy >= 0.0);
    CHECK(cy <= oracle::kPi + 1e-12);
    CHECK(std::abs(up - oracle::upset(g.dense(), r)) < 1e-10);

    const Eigen::VectorXd theta = oracle::random_angles(n, 1, rng);
    const OffsetGraph clean = oracle::consistent_graph(theta, 0.6, rng);
    if (clean.nonzero_count() == 0) continue;
    CHECK(upset_loss(clean, theta) < 1e-10);
    CHECK(cycle_loss(clean, theta) < 1e-10);
  }
}

TEST_CASE("spectral outputs stay in [0, 2pi) with the requested shape") {
  std::mt19937_64 rng(106);
  for (int t = 0; t < 20; ++t) {
    CAPTURE(t);
    const int n = 3 + static_cast<int>(rng() % 25);
    const int k = 1 + static_cast<int>(rng() % 2);
    const OffsetGraph g = oracle::random_graph(n, 0.5, rng);
    for (const AngleMatrix& r : {spectral_sync(g, k), spectral_rn_sync(g, k), gpm_sync(g, k, 20)}) {
      CHECK(r.rows() == n);
      CHECK(r.cols() == k);
      CHECK(r.minCoeff() >= 0.0);
      CHECK(r.maxCoeff() < kTwoPi);
    }
  }
}

TEST_CASE("initial and projected angles stay in range for random models") {
  std::mt19937_64 rng(107);
  for (int t = 0; t < 20; ++t) {
    CAPTURE(t);
    const int n = 3 + static_cast<int>(rng() % 20);
    const int k = 1 + static_cast<int>(rng() % 3);
    const OffsetGraph g = oracle::random_graph(n, 0.4, rng);
    ModelShape s;
    s.d_in = k;
    s.k = k;
    const GnnSyncModel m = parameter_init(rng(), s);
    const Eigen::MatrixXd x = oracle::random_angles(n, k, rng);
    const AngleMatrix r0 = initial_angles(dimpa_embed(row_normalize(g), x, m), m);
    CHECK(r0.minCoeff() > 0.0);
    CHECK(r0.maxCoeff() < kTwoPi);
    PGDConfig p;
    p.alphas.assign(p.steps, 0.5);
    const AngleMatrix r = projected_gradient(r0, build_hermitian(g), p);
    CHECK(r.minCoeff() >= 0.0);
    CHECK(r.maxCoeff() < kTwoPi);
  }
}

TEST_CASE("row normalization gives stochastic rows on nonempty rows") {
  std::mt19937_64 rng(108);
  for (int t = 0; t < kDraws; ++t) {
    CAPTURE(t);
    const int n = 2 + static_cast<int>(rng() % 20);
    const OffsetGraph g = oracle::random_graph(n, 0.4, rng);
    const NormalizedPair p = row_normalize(g);
    for (const Eigen::MatrixXd* m : {&p.source, &p.target}) {
      CHECK(m->minCoeff() >= 0.0);
      for (int i = 0; i < n; ++i) {
        const double s = m->row(i).sum();
        CHECK((s == 0.0 || std::abs(s - 1.0) < 1e-12));
      }
    }
  }
}

TEST_CASE("generator is deterministic for random configurations") {
  std::mt19937_64 rng(109);
  const MeasurementModel models[3] = {MeasurementModel::ERO, MeasurementModel::BAO, MeasurementModel::RGGO};
  for (int t = 0; t < 15; ++t) {
    CAPTURE(t);
    SyntheticConfig cfg;
    cfg.model = models[rng() % 3];
    cfg.n = 10 + static_cast<int>(rng() % 60);
    cfg.p = 0.1 + 0.5 * oracle::random_angles(1, 1, rng)(0, 0) / kTwoPi;
    cfg.k = 1 + static_cast<int>(rng() % 3);
    cfg.eta = 0.9 * oracle::random_angles(1, 1, rng)(0, 0) / kTwoPi;
    cfg.option = 1 + static_cast<int>(rng() % 4);
    cfg.seed = rng();
    std::ostringstream a, b;
    const auto x = gen_offset_graph(cfg), y = gen_offset_graph(cfg);
    write_edge_list(a, x.graph, cfg.k, true);
    write_edge_list(b, y.graph, cfg.k, true);
    CHECK(a.str() == b.str());
    CHECK(x.truth.theta == y.truth.theta);
    for (const Edge& e : x.graph.edges()) {
      CHECK(e.w >= 0.0);
      CHECK(e.w < kTwoPi);
      CHECK(e.i != e.j);
    }
  }
}
