#include "angsync/synth.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <random>
#include <sstream>
#include <stdexcept>

#include "angsync/rng.hpp"

namespace angsync {

std::string to_string(MeasurementModel m) {
  switch (m) {
    case MeasurementModel::ERO: return "ERO";
    case MeasurementModel::BAO: return "BAO";
    case MeasurementModel::RGGO: return "RGGO";
  }
  return "?";
}

MeasurementModel parse_model(const std::string& s) {
  if (s == "ERO" || s == "ER") return MeasurementModel::ERO;
  if (s == "BAO" || s == "BA") return MeasurementModel::BAO;
  if (s == "RGGO" || s == "RGG") return MeasurementModel::RGGO;
  throw std::invalid_argument("unknown measurement model: " + s);
}

void SyntheticConfig::validate() const {
  if (n < 3) throw std::invalid_argument("SyntheticConfig: n must be at least 3");
  if (!(p > 0.0 && p <= 1.0)) throw std::invalid_argument("SyntheticConfig: p must lie in (0, 1]");
  if (k < 1) throw std::invalid_argument("SyntheticConfig: k must be at least 1");
  if (!(eta >= 0.0 && eta < 1.0)) throw std::invalid_argument("SyntheticConfig: eta must lie in [0, 1)");
  if (option < 1 || option > 4) throw std::invalid_argument("SyntheticConfig: option must be 1..4");
}

namespace {

// Draws pi + w z for the rows [begin, end) of one column.
void fill_rank_one_normal(Rng& rng, Eigen::Ref<Eigen::VectorXd> col, int begin, int end) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::VectorXd w(end - begin);
  for (int i = 0; i < w.size(); ++i) w[i] = normal(rng);
  const double z = normal(rng);
  for (int i = begin; i < end; ++i) col[i] = std::numbers::pi + w[i - begin] * z;
}

}  // namespace

AngleMatrix gen_ground_truth(int option, int n, int k, std::uint64_t seed) {
  if (n < 1 || k < 1) throw std::invalid_argument("gen_ground_truth: n and k must be positive");
  Rng rng = substream(seed, "ground_truth");
  AngleMatrix theta(n, k);
  switch (option) {
    case 1: {
      std::gamma_distribution<double> gamma(0.5, kTwoPi);
      for (int l = 0; l < k; ++l)
        for (int i = 0; i < n; ++i) theta(i, l) = gamma(rng);
      break;
    }
    case 2:
      for (int l = 0; l < k; ++l) fill_rank_one_normal(rng, theta.col(l), 0, n);
      break;
    case 3: {
      std::normal_distribution<double> normal(0.0, 1.0);
      for (int l = 0; l < k; ++l)
        for (int i = 0; i < n; ++i) theta(i, l) = std::numbers::pi + normal(rng);
      break;
    }
    case 4: {
      constexpr int kBlocks = 6;
      for (int l = 0; l < k; ++l) {
        int begin = 0;
        for (int b = 0; b < kBlocks; ++b) {
          const int size = n / kBlocks + (b < n % kBlocks ? 1 : 0);
          fill_rank_one_normal(rng, theta.col(l), begin, begin + size);
          begin += size;
        }
      }
      break;
    }
    default:
      throw std::invalid_argument("gen_ground_truth: unknown option " + std::to_string(option));
  }
  return mod2pi(theta);
}

int ba_attach_count(int n, double p) {
  const int m = static_cast<int>(std::ceil(n * p / 2.0));
  return std::clamp(m, 1, std::max(1, n - 1));
}

UndirectedGraph measurement_graph(MeasurementModel model, int n, double p, std::uint64_t seed) {
  UndirectedGraph g;
  g.n = n;
  Rng rng(seed);
  switch (model) {
    case MeasurementModel::ERO:
      for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j)
          if (uniform01(rng) < p) g.edges.emplace_back(i, j);
      break;
    case MeasurementModel::BAO: {
      const int m = ba_attach_count(n, p);
      // Every endpoint occurrence is one ticket in the preferential-attachment urn.
      std::vector<int> urn;
      for (int i = 0; i < m; ++i)
        for (int j = i + 1; j < m; ++j) {
          g.edges.emplace_back(i, j);
          urn.push_back(i);
          urn.push_back(j);
        }
      for (int v = m; v < n; ++v) {
        std::vector<int> targets;
        while (static_cast<int>(targets.size()) < m) {
          int t;
          if (urn.empty()) {
            t = static_cast<int>(rng() % static_cast<std::uint64_t>(v));
          } else {
            t = urn[rng() % urn.size()];
          }
          if (std::find(targets.begin(), targets.end(), t) == targets.end()) targets.push_back(t);
        }
        std::sort(targets.begin(), targets.end());
        for (int t : targets) {
          g.edges.emplace_back(t, v);
          urn.push_back(t);
          urn.push_back(v);
        }
      }
      break;
    }
    case MeasurementModel::RGGO: {
      std::vector<double> x(n), y(n);
      for (int i = 0; i < n; ++i) {
        x[i] = uniform01(rng);
        y[i] = uniform01(rng);
      }
      const double r2 = 4.0 * p * p;
      for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j) {
          const double dx = x[i] - x[j], dy = y[i] - y[j];
          if (dx * dx + dy * dy <= r2) g.edges.emplace_back(i, j);
        }
      break;
    }
  }
  std::sort(g.edges.begin(), g.edges.end());
  return g;
}

SyntheticInstance gen_offset_graph(const SyntheticConfig& cfg) {
  cfg.validate();
  const int n = cfg.n, k = cfg.k;
  SyntheticInstance out;
  out.truth.theta = gen_ground_truth(cfg.option, n, k, cfg.seed);
  const AngleMatrix& theta = out.truth.theta;

  // Background noise and selection values, drawn for the upper triangle in row-major order.
  Eigen::MatrixXd noise = Eigen::MatrixXd::Zero(n, n);
  Eigen::MatrixXd sel = Eigen::MatrixXd::Zero(n, n);
  {
    Rng noise_rng = substream(cfg.seed, "noise");
    Rng sel_rng = substream(cfg.seed, "selection");
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j) {
        noise(i, j) = kTwoPi * uniform01(noise_rng);
        sel(i, j) = uniform01(sel_rng);
      }
  }

  auto layer_of = [&](double s) {
    for (int l = 1; l <= k; ++l)
      if ((1.0 - cfg.eta) * (l - 1) / k <= s && s < (1.0 - cfg.eta) * l / k) return l;
    return kNoiseLayer;
  };

  constexpr int kMaxAttempts = 100;
  for (int attempt = 0; attempt < kMaxAttempts; ++attempt) {
    const UndirectedGraph mask =
        measurement_graph(cfg.model, n, cfg.p, substream_seed(cfg.seed, "graph", attempt));
    std::vector<Edge> edges;
    std::vector<int> labels;
    edges.reserve(mask.edges.size());
    labels.reserve(mask.edges.size());
    for (auto [i, j] : mask.edges) {
      // The skew-symmetrized matrix is non-negative on the upper triangle only,
      // so the retained direction is always i < j.
      const int layer = layer_of(sel(i, j));
      const double w =
          layer == kNoiseLayer ? noise(i, j) : mod2pi(theta(i, layer - 1) - theta(j, layer - 1));
      if (w == 0.0) continue;
      edges.push_back({i, j, w});
      labels.push_back(layer);
    }
    OffsetGraph g(n, std::move(edges), labels);
    if (g.weakly_connected()) {
      out.graph = std::move(g);
      out.truth.edge_layer = std::move(labels);
      out.attempts = attempt + 1;
      return out;
    }
  }
  throw std::runtime_error("gen_offset_graph: no weakly connected measurement graph within 100 attempts");
}

void write_ground_truth(std::ostream& os, const OffsetGraph& g, const GroundTruth& gt) {
  os << "# n=" << gt.theta.rows() << " k=" << gt.theta.cols() << '\n';
  os << "# angles\n";
  for (int i = 0; i < gt.theta.rows(); ++i)
    for (int l = 0; l < gt.theta.cols(); ++l)
      os << i << ' ' << (l + 1) << ' ' << format_real(gt.theta(i, l)) << '\n';
  os << "# edges\n";
  for (std::size_t e = 0; e < g.edges().size(); ++e) {
    os << g.edges()[e].i << ' ' << g.edges()[e].j << ' ';
    if (e < gt.edge_layer.size() && gt.edge_layer[e] != kNoiseLayer)
      os << gt.edge_layer[e];
    else
      os << "noise";
    os << '\n';
  }
}

GroundTruth read_ground_truth(std::istream& is) {
  std::string line;
  int n = -1, k = 1;
  enum { kNone, kAngles, kEdges } section = kNone;
  GroundTruth gt;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    if (line[0] == '#') {
      if (line.find("angles") != std::string::npos) {
        section = kAngles;
      } else if (line.find("edges") != std::string::npos) {
        section = kEdges;
      } else if (n < 0) {
        std::istringstream hs(line.substr(1));
        std::string tok;
        while (hs >> tok) {
          if (tok.rfind("n=", 0) == 0) n = std::stoi(tok.substr(2));
          else if (tok.rfind("k=", 0) == 0) k = std::stoi(tok.substr(2));
        }
        gt.theta = AngleMatrix::Zero(std::max(n, 0), k);
      }
      continue;
    }
    if (n < 0) throw std::runtime_error("ground truth: missing header");
    std::istringstream ls(line);
    if (section == kAngles) {
      int i, l;
      double v;
      if (!(ls >> i >> l >> v) || i < 0 || i >= n || l < 1 || l > k)
        throw std::runtime_error("ground truth: malformed angle row: " + line);
      gt.theta(i, l - 1) = v;
    } else if (section == kEdges) {
      int i, j;
      std::string lab;
      if (!(ls >> i >> j >> lab)) throw std::runtime_error("ground truth: malformed edge row: " + line);
      gt.edge_layer.push_back(lab == "noise" ? kNoiseLayer : std::stoi(lab));
    } else {
      throw std::runtime_error("ground truth: data outside a section");
    }
  }
  if (n < 0) throw std::runtime_error("ground truth: missing header");
  return gt;
}

}  // namespace angsync
