#include "angsync/graph.hpp"

#include <algorithm>
#include <charconv>
#include <istream>
#include <numeric>
#include <ostream>
#include <set>
#include <sstream>
#include <stdexcept>
#include <utility>

namespace angsync {

OffsetGraph::OffsetGraph(int n, std::vector<Edge> edges, std::optional<std::vector<int>> layers)
    : n_(n), edges_(std::move(edges)), layers_(std::move(layers)) {
  if (n_ < 0) throw std::invalid_argument("OffsetGraph: negative node count");
  if (layers_ && layers_->size() != edges_.size())
    throw std::invalid_argument("OffsetGraph: layer label count does not match edge count");
  std::set<std::pair<int, int>> seen;
  for (const Edge& e : edges_) {
    if (e.i < 0 || e.j < 0 || e.i >= n_ || e.j >= n_)
      throw std::invalid_argument("OffsetGraph: node index out of range");
    if (e.i == e.j) throw std::invalid_argument("OffsetGraph: self-loop");
    if (!(e.w >= 0.0 && e.w < kTwoPi))
      throw std::invalid_argument("OffsetGraph: weight outside [0, 2pi)");
    if (!seen.emplace(std::min(e.i, e.j), std::max(e.i, e.j)).second)
      throw std::invalid_argument("OffsetGraph: more than one stored entry for a node pair");
  }
}

const std::vector<int>& OffsetGraph::layers() const {
  if (!layers_) throw std::logic_error("OffsetGraph: no layer labels attached");
  return *layers_;
}

int OffsetGraph::nonzero_count() const {
  return static_cast<int>(
      std::count_if(edges_.begin(), edges_.end(), [](const Edge& e) { return e.w != 0.0; }));
}

Eigen::MatrixXd OffsetGraph::dense() const {
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n_, n_);
  for (const Edge& e : edges_) a(e.i, e.j) = e.w;
  return a;
}

Eigen::MatrixXd OffsetGraph::skew() const {
  Eigen::MatrixXd t = Eigen::MatrixXd::Zero(n_, n_);
  for (const Edge& e : edges_) {
    t(e.i, e.j) = e.w;
    t(e.j, e.i) = -e.w;
  }
  return t;
}

bool OffsetGraph::weakly_connected() const {
  if (n_ <= 1) return true;
  std::vector<int> parent(n_);
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](int x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  int components = n_;
  for (const Edge& e : edges_) {
    if (e.w == 0.0) continue;
    const int a = find(e.i), b = find(e.j);
    if (a != b) {
      parent[a] = b;
      --components;
    }
  }
  return components == 1;
}

Eigen::MatrixXcd build_hermitian(const OffsetGraph& g) {
  Eigen::MatrixXcd h = Eigen::MatrixXcd::Zero(g.n(), g.n());
  for (const Edge& e : g.edges()) {
    if (e.w == 0.0) continue;
    const std::complex<double> z = std::polar(1.0, e.w);
    h(e.i, e.j) = z;
    h(e.j, e.i) = std::conj(z);
  }
  return h;
}

NormalizedPair row_normalize(const OffsetGraph& g, double tau) {
  if (!(tau > 0.0)) throw std::invalid_argument("row_normalize: tau must be positive");
  Eigen::MatrixXd a = g.dense();
  auto normalize = [&](Eigen::MatrixXd m) {
    m.diagonal().array() += tau;
    const Eigen::VectorXd deg = m.rowwise().sum();
    return Eigen::MatrixXd(deg.cwiseInverse().asDiagonal() * m);
  };
  NormalizedPair out;
  out.tau = tau;
  out.source = normalize(a);
  out.target = normalize(a.transpose());
  return out;
}

std::vector<std::array<int, 3>> triangles(const Eigen::MatrixXd& a) {
  const int n = static_cast<int>(a.rows());
  std::vector<std::vector<int>> out(n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      if (a(i, j) > 0.0) out[i].push_back(j);
  std::vector<std::array<int, 3>> tri;
  // Canonical rotation: the first node is the smallest index of the cycle.
  for (int i = 0; i < n; ++i)
    for (int j : out[i]) {
      if (j < i) continue;
      for (int q : out[j])
        if (q > i && a(q, i) > 0.0) tri.push_back({i, j, q});
    }
  return tri;
}

std::vector<std::array<int, 3>> triangles(const OffsetGraph& g) { return triangles(g.dense()); }

std::string format_real(double d) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), d);
  return std::string(buf, res.ptr);
}

void write_edge_list(std::ostream& os, const OffsetGraph& g, int k, bool with_layers) {
  os << "# n=" << g.n() << " k=" << k << '\n';
  for (std::size_t e = 0; e < g.edges().size(); ++e) {
    const Edge& edge = g.edges()[e];
    os << edge.i << ' ' << edge.j << ' ' << format_real(edge.w);
    if (with_layers && g.has_layers()) os << ' ' << g.layers()[e];
    os << '\n';
  }
}

EdgeListFile read_edge_list(std::istream& is) {
  std::string line;
  int n = -1, k = 1;
  std::vector<Edge> edges;
  std::vector<int> layers;
  bool any_layer = false, all_layer = true;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    if (line[0] == '#') {
      if (n < 0) {
        std::istringstream hs(line.substr(1));
        std::string tok;
        while (hs >> tok) {
          if (tok.rfind("n=", 0) == 0) n = std::stoi(tok.substr(2));
          else if (tok.rfind("k=", 0) == 0) k = std::stoi(tok.substr(2));
        }
      }
      continue;
    }
    std::istringstream ls(line);
    Edge e;
    if (!(ls >> e.i >> e.j >> e.w)) throw std::runtime_error("edge list: malformed line: " + line);
    int layer;
    if (ls >> layer) {
      any_layer = true;
      layers.push_back(layer);
    } else {
      all_layer = false;
    }
    edges.push_back(e);
  }
  if (n < 0) throw std::runtime_error("edge list: missing '# n=<N> k=<K>' header");
  if (any_layer && !all_layer) throw std::runtime_error("edge list: layer column present on some lines only");
  std::optional<std::vector<int>> lab;
  if (any_layer) lab = std::move(layers);
  return {OffsetGraph(n, std::move(edges), std::move(lab)), k};
}

}  // namespace angsync
