#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "angsync/angles.hpp"
#include "angsync/graph.hpp"

namespace angsync {

enum class MeasurementModel { ERO, BAO, RGGO };

std::string to_string(MeasurementModel m);
MeasurementModel parse_model(const std::string& s);

/// Parameters of one synthetic outlier-model instance.
struct SyntheticConfig {
  MeasurementModel model = MeasurementModel::ERO;
  int n = 360;
  double p = 0.15;
  int k = 1;
  double eta = 0.0;
  int option = 1;
  std::uint64_t seed = 0;

  void validate() const;
};

struct UndirectedGraph {
  int n = 0;
  std::vector<std::pair<int, int>> edges;  // i < j, sorted
};

/// Ground-truth angles (n x k), reduced mod 2pi.
///  option 1: Gamma(shape 0.5, scale 2pi) per entry
///  option 2: pi + w z per layer, w ~ N(0, I_n), z ~ N(0, 1)  (covariance w w^T)
///  option 3: pi + N(0, I_n)
///  option 4: option 2 drawn independently on six near-equal contiguous blocks
AngleMatrix gen_ground_truth(int option, int n, int k, std::uint64_t seed);

/// Number of edges a new node attaches with in the BA model: ceil(n p / 2), clamped to [1, n-1].
int ba_attach_count(int n, double p);

/// ER: pair present with probability p. BA: preferential attachment seeded by
/// a clique on the first m nodes. RGG: uniform points on the unit square,
/// edge iff Euclidean distance <= 2p.
UndirectedGraph measurement_graph(MeasurementModel model, int n, double p, std::uint64_t seed);

struct GroundTruth {
  AngleMatrix theta;
  /// Per stored edge (same order as the graph): layer in 1..k, or kNoiseLayer.
  std::vector<int> edge_layer;
};

struct SyntheticInstance {
  OffsetGraph graph;  // carries layer labels; use graph.without_layers() for solvers
  GroundTruth truth;
  int attempts = 1;
};

/// Full outlier-model generator. Regenerates the measurement graph with a fresh
/// sub-seed until the stored graph is weakly connected (at most 100 attempts).
SyntheticInstance gen_offset_graph(const SyntheticConfig& cfg);

/// Ground-truth file: header, `# angles` section of `i l theta` rows (l in 1..k),
/// then `# edges` section of `i j layer|noise` rows.
void write_ground_truth(std::ostream& os, const OffsetGraph& g, const GroundTruth& gt);
GroundTruth read_ground_truth(std::istream& is);

}  // namespace angsync
