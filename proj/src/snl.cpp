#include "angsync/snl.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <istream>
#include <map>
#include <numeric>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "angsync/evaluation.hpp"
#include "angsync/rng.hpp"
#include "angsync/synth.hpp"

namespace angsync {

std::string to_string(CloudShape s) {
  return s == CloudShape::UniformSquare ? "uniform" : "mixture";
}

CloudShape parse_cloud_shape(const std::string& s) {
  if (s == "uniform" || s == "uniform-square") return CloudShape::UniformSquare;
  if (s == "mixture" || s == "gaussian-mixture") return CloudShape::GaussianMixture;
  throw std::invalid_argument("unknown cloud shape: " + s);
}

PointCloud synth_cloud(CloudShape shape, int n, std::uint64_t seed) {
  if (n < 1) throw std::invalid_argument("synth_cloud: n must be positive");
  PointCloud out;
  out.points.resize(n, 2);
  Rng rng = substream(seed, "cloud");
  if (shape == CloudShape::UniformSquare) {
    for (int i = 0; i < n; ++i) {
      out.points(i, 0) = uniform01(rng);
      out.points(i, 1) = uniform01(rng);
    }
    return out;
  }

  // Component spreads differ so the cloud has dense and sparse regions.
  constexpr std::array<double, 6> spread{0.03, 0.05, 0.07, 0.09, 0.11, 0.13};
  std::array<Eigen::Vector2d, 6> centers;
  for (auto& c : centers) c = {0.2 + 0.6 * uniform01(rng), 0.2 + 0.6 * uniform01(rng)};
  std::normal_distribution<double> normal(0.0, 1.0);
  out.component.resize(n);
  for (int i = 0; i < n; ++i) {
    const double u = uniform01(rng);
    int c = 0;
    double acc = kMixtureWeights[0];
    while (c + 1 < 6 && u >= acc) acc += kMixtureWeights[++c];
    out.component[i] = c;
    out.points(i, 0) = centers[c].x() + spread[c] * normal(rng);
    out.points(i, 1) = centers[c].y() + spread[c] * normal(rng);
  }
  return out;
}

std::vector<Patch> build_patches(const Eigen::MatrixX2d& points, int k_patch) {
  const int n = static_cast<int>(points.rows());
  if (k_patch < 1) throw std::invalid_argument("build_patches: k_patch must be positive");
  if (n <= k_patch) throw std::invalid_argument("build_patches: need more points than k_patch");
  std::vector<Patch> patches(n);
  std::vector<std::pair<double, int>> order(n - 1);
  for (int c = 0; c < n; ++c) {
    int t = 0;
    for (int j = 0; j < n; ++j)
      if (j != c) order[t++] = {(points.row(j) - points.row(c)).squaredNorm(), j};
    std::partial_sort(order.begin(), order.begin() + k_patch, order.end());
    Patch& p = patches[c];
    p.center = c;
    p.members.push_back(c);
    for (int q = 0; q < k_patch; ++q) p.members.push_back(order[q].second);
    p.local.resize(k_patch + 1, 2);
    for (int q = 0; q <= k_patch; ++q) p.local.row(q) = points.row(p.members[q]);
  }
  return patches;
}

namespace {

Eigen::Matrix2d rot(double t) {
  Eigen::Matrix2d m;
  m << std::cos(t), -std::sin(t), std::sin(t), std::cos(t);
  return m;
}

}  // namespace

void perturb_and_rotate(std::vector<Patch>& patches, const Eigen::MatrixX2d& points, double eta,
                        const Eigen::VectorXd& angles, std::uint64_t seed) {
  if (static_cast<Eigen::Index>(patches.size()) != angles.size())
    throw std::invalid_argument("perturb_and_rotate: one angle per patch required");
  if (!(eta >= 0.0)) throw std::invalid_argument("perturb_and_rotate: eta must be nonnegative");
  const Eigen::RowVector2d mean = points.colwise().mean();
  const Eigen::RowVector2d sd = ((points.rowwise() - mean).array().square().colwise().mean()).sqrt();
  for (std::size_t p = 0; p < patches.size(); ++p) {
    Patch& patch = patches[p];
    if (eta > 0.0) {
      Rng rng = substream(seed, "snl_noise", p);
      std::normal_distribution<double> normal(0.0, 1.0);
      for (Eigen::Index i = 0; i < patch.local.rows(); ++i)
        for (int a = 0; a < 2; ++a) patch.local(i, a) += eta * sd[a] * normal(rng);
    }
    const Eigen::RowVector2d c = patch.local.colwise().mean();
    const Eigen::Matrix2d r = rot(angles[p]);
    patch.local = ((patch.local.rowwise() - c) * r.transpose()).rowwise() + c;
    patch.rotation = angles[p];
  }
}

double procrustes_angle(const Eigen::MatrixX2d& p, const Eigen::MatrixX2d& q) {
  if (p.rows() != q.rows()) throw std::invalid_argument("procrustes_angle: point counts differ");
  if (p.rows() < 2) throw std::invalid_argument("procrustes_angle: need at least two points");
  const Eigen::MatrixX2d pc = p.rowwise() - p.colwise().mean();
  const Eigen::MatrixX2d qc = q.rowwise() - q.colwise().mean();
  double cross = 0.0, dot = 0.0;
  for (Eigen::Index i = 0; i < pc.rows(); ++i) {
    cross += pc(i, 0) * qc(i, 1) - pc(i, 1) * qc(i, 0);
    dot += pc(i, 0) * qc(i, 0) + pc(i, 1) * qc(i, 1);
  }
  if (cross == 0.0 && dot == 0.0) throw std::invalid_argument("procrustes_angle: degenerate point sets");
  return mod2pi(std::atan2(cross, dot));
}

namespace {

struct UnionFind {
  explicit UnionFind(int n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
  int find(int x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  }
  bool unite(int a, int b) {
    a = find(a);
    b = find(b);
    if (a == b) return false;
    parent[a] = b;
    return true;
  }
  std::vector<int> parent;
};

}  // namespace

PatchGraph patch_measurement_graph(const std::vector<Patch>& patches, int k_thres, std::uint64_t seed) {
  const int m = static_cast<int>(patches.size());
  if (k_thres < 2) throw std::invalid_argument("patch_measurement_graph: k_thres must be at least 2");
  // (member, row) lists sorted by member for linear-time overlap.
  std::vector<std::vector<std::pair<int, int>>> sorted(m);
  for (int p = 0; p < m; ++p) {
    for (int r = 0; r < static_cast<int>(patches[p].members.size()); ++r)
      sorted[p].push_back({patches[p].members[r], r});
    std::sort(sorted[p].begin(), sorted[p].end());
  }

  Rng rng = substream(seed, "snl_direction");
  std::vector<Edge> edges;
  UnionFind uf(m);
  int components = m;
  std::vector<std::pair<int, int>> rows_i, rows_j;
  for (int i = 0; i < m; ++i)
    for (int j = i + 1; j < m; ++j) {
      const bool flip = uniform01(rng) < 0.5;
      rows_i.clear();
      rows_j.clear();
      auto a = sorted[i].begin(), b = sorted[j].begin();
      while (a != sorted[i].end() && b != sorted[j].end()) {
        if (a->first < b->first) {
          ++a;
        } else if (b->first < a->first) {
          ++b;
        } else {
          rows_i.push_back(*a++);
          rows_j.push_back(*b++);
        }
      }
      const int overlap = static_cast<int>(rows_i.size());
      if (overlap < k_thres) continue;
      Eigen::MatrixX2d pj(overlap, 2), qi(overlap, 2);
      for (int t = 0; t < overlap; ++t) {
        pj.row(t) = patches[j].local.row(rows_j[t].second);
        qi.row(t) = patches[i].local.row(rows_i[t].second);
      }
      const double w = procrustes_angle(pj, qi);
      if (uf.unite(i, j)) --components;
      if (!flip) {
        if (w != 0.0) edges.push_back({i, j, w});
      } else {
        const double back = mod2pi(-w);
        if (back != 0.0) edges.push_back({j, i, back});
      }
    }
  return {OffsetGraph(m, std::move(edges)), components};
}

Eigen::VectorXd global_shift(const Eigen::VectorXd& r0, const Eigen::VectorXd& theta, bool circular) {
  if (r0.size() != theta.size()) throw std::invalid_argument("global_shift: length mismatch");
  if (r0.size() == 0) return r0;
  double delta = 0.0;
  if (circular) {
    std::complex<double> s = 0.0;
    for (Eigen::Index i = 0; i < r0.size(); ++i) s += std::polar(1.0, r0[i] - theta[i]);
    delta = std::arg(s);
  } else {
    for (Eigen::Index i = 0; i < r0.size(); ++i) delta += mod2pi(r0[i] - theta[i]);
    delta /= static_cast<double>(r0.size());
  }
  Eigen::VectorXd out(r0.size());
  for (Eigen::Index i = 0; i < r0.size(); ++i) out[i] = mod2pi(r0[i] - delta);
  return out;
}

Eigen::MatrixX2d recover_coordinates(const std::vector<Patch>& patches, const Eigen::VectorXd& r,
                                     const Eigen::MatrixX2d& truth) {
  if (static_cast<Eigen::Index>(patches.size()) != r.size())
    throw std::invalid_argument("recover_coordinates: one angle per patch required");
  const Eigen::Index n = truth.rows();
  Eigen::MatrixX2d acc = Eigen::MatrixX2d::Zero(n, 2);
  std::vector<int> hits(n, 0);
  for (std::size_t p = 0; p < patches.size(); ++p) {
    const Patch& patch = patches[p];
    const Eigen::RowVector2d c = patch.local.colwise().mean();
    Eigen::RowVector2d anchor = Eigen::RowVector2d::Zero();
    for (int v : patch.members) anchor += truth.row(v);
    anchor /= static_cast<double>(patch.members.size());
    const Eigen::MatrixX2d back = ((patch.local.rowwise() - c) * rot(-r[p]).transpose()).rowwise() + anchor;
    for (std::size_t q = 0; q < patch.members.size(); ++q) {
      acc.row(patch.members[q]) += back.row(q);
      ++hits[patch.members[q]];
    }
  }
  for (Eigen::Index i = 0; i < n; ++i) {
    if (hits[i] == 0) throw std::logic_error("recover_coordinates: point not covered by any patch");
    acc.row(i) /= static_cast<double>(hits[i]);
  }
  return acc;
}

void SnlConfig::validate() const {
  if (k_patch < 1) throw std::invalid_argument("snl: k_patch must be positive");
  if (n < k_patch + 1) throw std::invalid_argument("snl: n must exceed k_patch");
  if (k_thres < 2) throw std::invalid_argument("snl: k_thres must be at least 2");
  if (!(eta >= 0.0)) throw std::invalid_argument("snl: eta must be nonnegative");
  if (option < 1 || option > 4) throw std::invalid_argument("snl: option must be 1..4");
}

SnlResult run_snl(const SnlConfig& cfg, const Synchronizer& sync) {
  cfg.validate();
  SnlResult out;
  out.cloud = synth_cloud(cfg.shape, cfg.n, cfg.seed);
  out.patches = build_patches(out.cloud.points, cfg.k_patch);
  out.theta = gen_ground_truth(cfg.option, cfg.n, 1, cfg.seed).col(0);
  perturb_and_rotate(out.patches, out.cloud.points, cfg.eta, out.theta, cfg.seed);
  out.patch_graph = patch_measurement_graph(out.patches, cfg.k_thres, cfg.seed);

  const OffsetGraph& g = out.patch_graph.graph;
  const int m = g.n();
  out.r0.resize(m);
  out.r.resize(m);
  if (out.patch_graph.components == 1) {
    out.r0 = sync(g).col(0);
    out.r = global_shift(out.r0, out.theta, cfg.circular_shift);
  } else {
    UnionFind uf(m);
    for (const Edge& e : g.edges()) uf.unite(e.i, e.j);
    std::map<int, std::vector<int>> groups;
    for (int v = 0; v < m; ++v) groups[uf.find(v)].push_back(v);
    for (const auto& [root, nodes] : groups) {
      const int s = static_cast<int>(nodes.size());
      std::vector<int> local(m, -1);
      for (int t = 0; t < s; ++t) local[nodes[t]] = t;
      Eigen::VectorXd theta(s), r0(s);
      for (int t = 0; t < s; ++t) theta[t] = out.theta[nodes[t]];
      if (s == 1) {
        r0[0] = 0.0;
      } else {
        std::vector<Edge> sub;
        for (const Edge& e : g.edges())
          if (local[e.i] >= 0) sub.push_back({local[e.i], local[e.j], e.w});
        r0 = sync(OffsetGraph(s, std::move(sub))).col(0);
      }
      const Eigen::VectorXd r = global_shift(r0, theta, cfg.circular_shift);
      for (int t = 0; t < s; ++t) {
        out.r0[nodes[t]] = r0[t];
        out.r[nodes[t]] = r[t];
      }
    }
  }
  out.recovered = recover_coordinates(out.patches, out.r, out.cloud.points);
  out.ane = ane(out.recovered, out.cloud.points);
  return out;
}

void write_cloud(std::ostream& os, const Eigen::MatrixX2d& points, std::optional<double> ane_value) {
  for (Eigen::Index i = 0; i < points.rows(); ++i)
    os << format_real(points(i, 0)) << ' ' << format_real(points(i, 1)) << '\n';
  if (ane_value) os << "# ane=" << format_real(*ane_value) << '\n';
}

Eigen::MatrixX2d read_cloud(std::istream& is) {
  std::vector<Eigen::RowVector2d> rows;
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    std::istringstream ss(line);
    double x, y;
    if (!(ss >> x >> y)) throw std::runtime_error("cloud line " + std::to_string(lineno) + ": expected `x y`");
    rows.emplace_back(x, y);
  }
  Eigen::MatrixX2d out(rows.size(), 2);
  for (std::size_t i = 0; i < rows.size(); ++i) out.row(i) = rows[i];
  return out;
}

}  // namespace angsync
