#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "angsync/angles.hpp"
#include "angsync/autodiff.hpp"
#include "angsync/graph.hpp"

namespace angsync {

/// Wrapped residuals between estimated offsets (r_i - r_j) and observations A_ij,
/// evaluated on stored edges only.
struct ResidualSet {
  std::vector<Eigen::MatrixXd> layers;  // M^(l), entries in [0, pi], zero off-edge
  Eigen::MatrixXd combined;             // elementwise min over layers
  Eigen::MatrixXd edge_mask;            // 1 where A_ij != 0
  int edge_count = 0;                   // t, number of nonzero entries of A
};

/// Edge weights after residual-based confidence reweighting; sum(A .* C) == sum(A).
struct ConfidenceMatrix {
  Eigen::MatrixXd values;
};

/// Estimated layer (1..k) of every stored edge, mirrored to both orientations; 0 off-edge.
struct GraphAssignment {
  Eigen::MatrixXi layer;
};

/// Dense views of one observed graph shared by all loss evaluations on it.
class LossContext {
 public:
  explicit LossContext(const OffsetGraph& g);

  int n() const { return n_; }
  const Eigen::MatrixXd& adjacency() const { return a_; }
  const Eigen::MatrixXd& mask() const { return mask_; }
  int edge_count() const { return edge_count_; }
  double weight_sum() const { return weight_sum_; }

 private:
  int n_ = 0;
  Eigen::MatrixXd a_;
  Eigen::MatrixXd mask_;
  int edge_count_ = 0;
  double weight_sum_ = 0.0;
};

// Differentiable forms, recorded on a tape. `r` is an n x k angle node.
namespace ad {

/// M^(1..k) as n x n nodes.
std::vector<Var> residual_layers(Tape& tape, const LossContext& ctx, Var r);
/// Elementwise minimum over the per-layer residuals.
Var combined_residual(const std::vector<Var>& layers);
/// ||M||_F / t.
Var upset_loss(Tape& tape, const LossContext& ctx, Var r);
/// Normalized confidence C~ from the combined residual node.
Var confidence(Tape& tape, const LossContext& ctx, Var combined);
/// (A .* C~ - (A .* C~)^T) mod 2pi.
Var reweighted_skew(Tape& tape, const LossContext& ctx, Var conf);
/// Mean 3-cycle inconsistency over confidence-reweighted, per-layer graphs,
/// averaged over layers. The layer assignment is recomputed from the residual
/// values each call and carries no gradient.
Var cycle_loss(Tape& tape, const LossContext& ctx, Var r);

}  // namespace ad

/// argmin over layers of M^(l)_ij on every stored edge; ties go to the smallest layer.
GraphAssignment assign_edges(const ResidualSet& res);
GraphAssignment assign_edges(const std::vector<Eigen::MatrixXd>& layers, const Eigen::MatrixXd& mask);

ResidualSet residual(const OffsetGraph& g, const AngleMatrix& r);
double upset_loss(const ResidualSet& res);
double upset_loss(const OffsetGraph& g, const AngleMatrix& r);
ConfidenceMatrix confidence(const ResidualSet& res, const OffsetGraph& g);
Eigen::MatrixXd reweighted_skew(const OffsetGraph& g, const ConfidenceMatrix& c);
double cycle_loss(const OffsetGraph& g, const AngleMatrix& r);

/// Training objective selector.
struct LossSpec {
  enum class Kind { Upset, Cycle, Sum, Weighted };
  Kind kind = Kind::Upset;
  double tau = 0.0;  // Weighted: cycle + tau * upset

  std::string name() const;
  static LossSpec parse(const std::string& s);  // upset | cycle | sum | weighted:<tau>
};

ad::Var training_loss(ad::Tape& tape, const LossContext& ctx, ad::Var r, const LossSpec& spec);

}  // namespace angsync
