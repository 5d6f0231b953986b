#include <doctest.h>

#include <set>
#include <sstream>

#include "angsync/rng.hpp"
#include "angsync/synth.hpp"
#include "oracles.hpp"

using namespace angsync;

TEST_CASE("substreams are deterministic and distinct") {
  CHECK(substream_seed(1, "noise") == substream_seed(1, "noise"));
  CHECK(substream_seed(1, "noise") != substream_seed(1, "selection"));
  CHECK(substream_seed(1, "graph", 0) != substream_seed(1, "graph", 1));
  CHECK(substream_seed(1, "noise") != substream_seed(2, "noise"));
  Rng a = substream(7, "x"), b = substream(7, "x");
  for (int i = 0; i < 5; ++i) CHECK(uniform01(a) == uniform01(b));
}

TEST_CASE("ground truth options stay in range") {
  for (int option = 1; option <= 4; ++option) {
    const AngleMatrix t = gen_ground_truth(option, 200, 3, 42);
    CHECK(t.rows() == 200);
    CHECK(t.cols() == 3);
    CHECK(t.minCoeff() >= 0.0);
    CHECK(t.maxCoeff() < kTwoPi);
  }
  CHECK_THROWS_AS(gen_ground_truth(5, 10, 1, 0), std::invalid_argument);
  CHECK_THROWS_AS(gen_ground_truth(0, 10, 1, 0), std::invalid_argument);
}

TEST_CASE("option 3 mean before reduction is near pi") {
  // Reconstruct the unreduced draws from the same stream.
  const int n = 4000;
  Rng rng = substream(3, "ground_truth");
  std::normal_distribution<double> normal(0.0, 1.0);
  double mean = 0.0;
  Eigen::VectorXd raw(n);
  for (int i = 0; i < n; ++i) mean += (raw[i] = oracle::kPi + normal(rng));
  mean /= n;
  CHECK(std::abs(mean - oracle::kPi) <= 3.0 / std::sqrt(n));
  const AngleMatrix t = gen_ground_truth(3, n, 1, 3);
  for (int i = 0; i < n; ++i) REQUIRE(t(i, 0) == doctest::Approx(oracle::wrap(raw[i])).epsilon(1e-14));
}

TEST_CASE("option 2 equals an independent pi + w z generator on the same stream") {
  const int n = 4;
  Rng rng = substream(11, "ground_truth");
  std::normal_distribution<double> normal(0.0, 1.0);
  double w[n];
  for (double& v : w) v = normal(rng);
  const double z = normal(rng);
  const AngleMatrix t = gen_ground_truth(2, n, 1, 11);
  for (int i = 0; i < n; ++i) CHECK(t(i, 0) == doctest::Approx(oracle::wrap(oracle::kPi + w[i] * z)).epsilon(1e-14));
}

TEST_CASE("option 4 uses six near-equal blocks") {
  // Within a block every entry is pi + w_i z with one shared z, so the
  // centered values of two blocks come from different z draws.
  const int n = 13;  // blocks of 3,2,2,2,2,2
  Rng rng = substream(5, "ground_truth");
  const int sizes[6] = {3, 2, 2, 2, 2, 2};
  Eigen::VectorXd expect(n);
  int at = 0;
  for (int size : sizes) {
    // A fresh distribution per block: cached normal pairs do not carry across blocks.
    std::normal_distribution<double> normal(0.0, 1.0);
    std::vector<double> w(size);
    for (double& v : w) v = normal(rng);
    const double z = normal(rng);
    for (int i = 0; i < size; ++i) expect[at + i] = oracle::wrap(oracle::kPi + w[i] * z);
    at += size;
  }
  const AngleMatrix t = gen_ground_truth(4, n, 1, 5);
  for (int i = 0; i < n; ++i) CHECK(t(i, 0) == doctest::Approx(expect[i]).epsilon(1e-14));
}

TEST_CASE("measurement graph limits") {
  const UndirectedGraph er = measurement_graph(MeasurementModel::ERO, 12, 1.0, 1);
  CHECK(er.edges.size() == 66u);
  const UndirectedGraph rgg = measurement_graph(MeasurementModel::RGGO, 12, 0.75, 1);  // radius 1.5 > sqrt 2
  CHECK(rgg.edges.size() == 66u);
  CHECK(ba_attach_count(10, 0.4) == 2);
  CHECK(ba_attach_count(360, 0.15) == 27);
}

namespace {

// Reference preferential attachment: clique on the first m nodes, then each new
// node picks m distinct targets with probability proportional to degree.
std::set<std::pair<int, int>> reference_ba(int n, int m, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::set<std::pair<int, int>> edges;
  std::vector<int> degree_tickets;
  for (int i = 0; i < m; ++i)
    for (int j = i + 1; j < m; ++j) {
      edges.insert({i, j});
      degree_tickets.push_back(i);
      degree_tickets.push_back(j);
    }
  for (int v = m; v < n; ++v) {
    std::set<int> chosen;
    std::vector<int> order;
    while (static_cast<int>(chosen.size()) < m) {
      const int t = degree_tickets.empty() ? static_cast<int>(rng() % static_cast<std::uint64_t>(v))
                                           : degree_tickets[rng() % degree_tickets.size()];
      if (chosen.insert(t).second) order.push_back(t);
    }
    for (int t : chosen) {
      edges.insert({t, v});
      degree_tickets.push_back(t);
      degree_tickets.push_back(v);
    }
  }
  return edges;
}

}  // namespace

TEST_CASE("BA matches a reference preferential-attachment run with the same seed") {
  const int n = 10, m = 2;
  for (std::uint64_t seed : {1ULL, 2ULL, 99ULL}) {
    const UndirectedGraph g = measurement_graph(MeasurementModel::BAO, n, 0.4, seed);
    const auto ref = reference_ba(n, m, seed);
    CHECK(g.edges.size() == static_cast<std::size_t>(m * (n - m) + m * (m - 1) / 2));
    CHECK(std::set<std::pair<int, int>>(g.edges.begin(), g.edges.end()) == ref);
  }
}

TEST_CASE("noiseless k=1 edges carry the exact offsets") {
  SyntheticConfig cfg;
  cfg.n = 80;
  cfg.p = 0.2;
  cfg.seed = 4;
  for (auto model : {MeasurementModel::ERO, MeasurementModel::BAO, MeasurementModel::RGGO}) {
    cfg.model = model;
    const SyntheticInstance inst = gen_offset_graph(cfg);
    CHECK(inst.graph.weakly_connected());
    for (const Edge& e : inst.graph.edges())
      REQUIRE(e.w == oracle::wrap(inst.truth.theta(e.i, 0) - inst.truth.theta(e.j, 0)));
    for (int l : inst.truth.edge_layer) CHECK(l == 1);
  }
}

TEST_CASE("noisy-edge fraction and ER edge count within 3 sigma") {
  SyntheticConfig cfg;
  cfg.n = 360;
  cfg.p = 0.15;
  cfg.eta = 0.9;
  cfg.seed = 8;
  const SyntheticInstance inst = gen_offset_graph(cfg);
  const double m = static_cast<double>(inst.truth.edge_layer.size());
  const double noisy = static_cast<double>(std::count(inst.truth.edge_layer.begin(), inst.truth.edge_layer.end(), 0));
  CHECK(std::abs(noisy / m - 0.9) <= 3.0 * std::sqrt(0.9 * 0.1 / m));
  const double pairs = 360.0 * 359.0 / 2.0;
  CHECK(std::abs(m - 0.15 * pairs) <= 3.0 * std::sqrt(pairs * 0.15 * 0.85));
}

TEST_CASE("k layers partition the clean edges with the right offsets") {
  SyntheticConfig cfg;
  cfg.n = 60;
  cfg.p = 0.3;
  cfg.k = 3;
  cfg.eta = 0.2;
  cfg.seed = 21;
  const SyntheticInstance inst = gen_offset_graph(cfg);
  std::vector<int> counts(4, 0);
  for (std::size_t e = 0; e < inst.graph.edges().size(); ++e) {
    const int l = inst.truth.edge_layer[e];
    REQUIRE(l >= 0);
    REQUIRE(l <= 3);
    ++counts[l];
    const Edge& ed = inst.graph.edges()[e];
    if (l > 0) REQUIRE(ed.w == oracle::wrap(inst.truth.theta(ed.i, l - 1) - inst.truth.theta(ed.j, l - 1)));
  }
  for (int l = 1; l <= 3; ++l) CHECK(counts[l] > 0);
}

TEST_CASE("generation is bit-identical per seed") {
  SyntheticConfig cfg;
  cfg.model = MeasurementModel::RGGO;
  cfg.n = 50;
  cfg.p = 0.2;
  cfg.eta = 0.3;
  cfg.seed = 17;
  std::ostringstream a, b, ta, tb;
  const auto x = gen_offset_graph(cfg), y = gen_offset_graph(cfg);
  write_edge_list(a, x.graph, 1, true);
  write_edge_list(b, y.graph, 1, true);
  write_ground_truth(ta, x.graph, x.truth);
  write_ground_truth(tb, y.graph, y.truth);
  CHECK(a.str() == b.str());
  CHECK(ta.str() == tb.str());
}

TEST_CASE("ground-truth file round trip") {
  SyntheticConfig cfg;
  cfg.n = 30;
  cfg.k = 2;
  cfg.p = 0.4;
  cfg.eta = 0.3;
  const auto inst = gen_offset_graph(cfg);
  std::stringstream ss;
  write_ground_truth(ss, inst.graph, inst.truth);
  const GroundTruth back = read_ground_truth(ss);
  CHECK(back.theta == inst.truth.theta);
  CHECK(back.edge_layer == inst.truth.edge_layer);
}

TEST_CASE("config validation") {
  SyntheticConfig cfg;
  cfg.eta = 1.0;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg.eta = 0.0;
  cfg.p = 0.0;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  CHECK(parse_model("BA") == MeasurementModel::BAO);
  CHECK_THROWS(parse_model("XYZ"));
}
