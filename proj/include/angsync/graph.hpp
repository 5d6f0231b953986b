#pragma once

#include <array>
#include <complex>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "angsync/angles.hpp"

namespace angsync {

/// One stored direction of a pairwise offset: w estimates (theta_i - theta_j) mod 2pi.
struct Edge {
  int i = 0;
  int j = 0;
  double w = 0.0;
};

/// Layer label used for generated data. 0 marks an outlier (noise) edge.
inline constexpr int kNoiseLayer = 0;

/// Directed offset graph with at most one stored direction per node pair.
///
/// Zero-weight edges are representable but are treated as absent by every
/// dense view (the observation indicator is A_ij != 0).
class OffsetGraph {
 public:
  OffsetGraph() = default;

  /// Validates and takes ownership. Throws std::invalid_argument on
  /// self-loops, out-of-range indices, duplicate pairs or weights outside [0, 2pi).
  OffsetGraph(int n, std::vector<Edge> edges, std::optional<std::vector<int>> layers = std::nullopt);

  int n() const { return n_; }
  const std::vector<Edge>& edges() const { return edges_; }
  bool has_layers() const { return layers_.has_value(); }
  const std::vector<int>& layers() const;

  /// Number of nonzero stored entries of A.
  int nonzero_count() const;

  /// Dense adjacency A with A(i,j) = w for stored edges, 0 elsewhere.
  Eigen::MatrixXd dense() const;

  /// Dense skew view: +w at (i,j), -w at (j,i).
  Eigen::MatrixXd skew() const;

  bool weakly_connected() const;

  /// Copy without layer labels (what solvers are allowed to see).
  OffsetGraph without_layers() const { return OffsetGraph(n_, edges_); }

 private:
  int n_ = 0;
  std::vector<Edge> edges_;
  std::optional<std::vector<int>> layers_;
};

/// H_ij = exp(i w), H_ji = exp(-i w) on stored nonzero edges; zero elsewhere.
Eigen::MatrixXcd build_hermitian(const OffsetGraph& g);

/// Row-normalized source/target propagation matrices with weighted self-loops.
struct NormalizedPair {
  Eigen::MatrixXd source;
  Eigen::MatrixXd target;
  double tau = 0.5;
};

NormalizedPair row_normalize(const OffsetGraph& g, double tau = 0.5);

/// Directed 3-cycles (i, j, q) with A_ij * A_jq * A_qi > 0 over the stored
/// entries of `a`, reported once per orientation with i the smallest index.
std::vector<std::array<int, 3>> triangles(const Eigen::MatrixXd& a);
std::vector<std::array<int, 3>> triangles(const OffsetGraph& g);

/// Edge-list text format: header `# n=<N> k=<K>`, then `i j w [layer]` per line.
void write_edge_list(std::ostream& os, const OffsetGraph& g, int k = 1, bool with_layers = false);
struct EdgeListFile {
  OffsetGraph graph;
  int k = 1;
};
EdgeListFile read_edge_list(std::istream& is);

/// Writes `d` so that parsing it back yields the identical double.
std::string format_real(double d);

}  // namespace angsync
