#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "angsync/angles.hpp"
#include "angsync/autodiff.hpp"
#include "angsync/graph.hpp"
#include "angsync/losses.hpp"

namespace angsync {

/// Widths of the network. The embedding is k*d wide: a source half and a
/// target half of k*d/2 columns each; layer l of the head reads columns
/// [(l-1)d, l*d) of the concatenated embedding.
struct ModelShape {
  int d_in = 1;
  int k = 1;
  int d = 8;
  int hidden = 0;  // MLP hidden width; 0 means the half-embedding width

  int embed_width() const { return k * d; }
  int half_width() const { return k * d / 2; }
  int hidden_width() const { return hidden > 0 ? hidden : half_width(); }
  void validate() const;
};

/// Directed mixed-path aggregation with two hops:
///   Z_s = (I + a_s1 A_s + a_s2 A_s^2) ReLU(X W_s0) W_s1, likewise for the target side.
struct DimpaParams {
  ad::Parameter w_s0, w_s1, w_t0, w_t1;
  ad::Parameter a_s1, a_s2, a_t1, a_t2;  // 1x1
};

/// r0_{i,l} = 2 pi sigmoid(Z_{i, slice l} . a_l + b_l)
struct HeadParams {
  std::vector<ad::Parameter> a;  // k vectors, d x 1
  std::vector<ad::Parameter> b;  // k scalars
};

struct PGDConfig {
  int steps = 5;
  std::vector<double> alphas;  // per step; empty means all 1
  bool trainable = false;
  /// Ablation: layer-specific H^(l) built from the edge assignment of r0.
  bool per_layer_h = false;

  double alpha(int step) const { return alphas.empty() ? 1.0 : alphas.at(step); }
  void validate() const;
};

enum class PgdMode {
  EndToEnd,     // projected steps inside every training forward pass
  PostProcess,  // train without them, apply once to the final r0
};

struct TrainConfig {
  double lr = 0.005;
  double weight_decay = 5e-4;
  int max_epochs = 1000;
  int patience = 200;
  LossSpec loss;
  std::uint64_t seed = 0;
  int d = 8;
  int hidden = 0;
  PgdMode mode = PgdMode::EndToEnd;

  void validate() const;
};

struct GnnSyncModel {
  ModelShape shape;
  DimpaParams dimpa;
  HeadParams head;
  std::vector<ad::Parameter> alphas;  // present only when PGD step sizes are trained

  std::vector<ad::Parameter*> parameters();
  std::vector<const ad::Parameter*> parameters() const;
};

/// Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) weights, hop coefficients 1.
GnnSyncModel parameter_init(std::uint64_t seed, const ModelShape& shape);

/// Parameters placed on a tape as leaves.
struct BoundModel {
  ad::Var w_s0, w_s1, w_t0, w_t1, a_s1, a_s2, a_t1, a_t2;
  std::vector<ad::Var> head_a, head_b, alphas;
};
BoundModel bind(ad::Tape& tape, const GnnSyncModel& model);

ad::Var dimpa_embed(ad::Tape& tape, const NormalizedPair& norm, ad::Var x, const BoundModel& m);
ad::Var initial_angles(ad::Tape& tape, ad::Var z, const BoundModel& m, int k);
/// Projected gradient steps with a single H (or per-layer H when `layer_h` is non-empty),
/// expressed through real cos/sin/atan2 so the tape stays real. Output in [0, 2pi).
ad::Var projected_gradient(ad::Tape& tape, ad::Var r0, const Eigen::MatrixXcd& h, const PGDConfig& cfg,
                           const std::vector<ad::Var>& alphas = {},
                           const std::vector<Eigen::MatrixXcd>& layer_h = {});

Eigen::MatrixXd dimpa_embed(const NormalizedPair& norm, const Eigen::MatrixXd& x, const GnnSyncModel& m);
AngleMatrix initial_angles(const Eigen::MatrixXd& z, const GnnSyncModel& m);
AngleMatrix projected_gradient(const AngleMatrix& r0, const Eigen::MatrixXcd& h, const PGDConfig& cfg);

/// Per-layer Hermitian matrices from the edge assignment of `r0`.
std::vector<Eigen::MatrixXcd> layer_hermitians(const OffsetGraph& g, const AngleMatrix& r0);

/// Everything derived once from the observed graph.
struct GraphInputs {
  GraphInputs(const OffsetGraph& g, Eigen::MatrixXd features, double tau = 0.5);
  const OffsetGraph* graph;
  NormalizedPair norm;
  Eigen::MatrixXcd h;
  LossContext ctx;
  Eigen::MatrixXd features;
};

struct ForwardPass {
  ad::Var r0;
  ad::Var r;
  ad::Var loss;
  BoundModel bound;
};

/// One full forward pass recorded on `tape`.
ForwardPass forward(ad::Tape& tape, const GraphInputs& in, const GnnSyncModel& model, const PGDConfig& pcfg,
                    const LossSpec& loss, bool apply_pgd = true);

struct TrainResult {
  GnnSyncModel model;              // best-loss parameters
  AngleMatrix r0;                  // initial angles of the best model
  AngleMatrix r;                   // final angles of the best model
  std::vector<double> loss_trace;  // loss at every epoch
  std::vector<double> best_trace;  // running minimum of loss_trace
  int best_epoch = 0;
  int epochs_run = 0;
};

/// Raised when training produces a non-finite loss or gradient.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Full-graph training. `features` defaults to the row-normalized spectral angles (d_in = k).
TrainResult train(const OffsetGraph& g, int k, const TrainConfig& tcfg, const PGDConfig& pcfg,
                  std::optional<Eigen::MatrixXd> features = std::nullopt);

struct StabilityBound {
  double eps_s = 0.0, eps_t = 0.0, eps_f = 0.0;
  double b_s = 0.0, b_t = 0.0, b_f = 0.0;
  double bound = 0.0;  // b_s eps_s + b_t eps_t + b_f eps_f
  double lhs = 0.0;    // realized ||r0 - r0_hat||_F
};

/// Perturbation bound on the initial angles for two graphs/feature sets.
StabilityBound stability_bound(const GnnSyncModel& m, const NormalizedPair& norm, const NormalizedPair& norm_hat,
                               const Eigen::MatrixXd& x, const Eigen::MatrixXd& x_hat);

/// Checkpoint: text header naming every tensor and its shape, then raw
/// little-endian float64 payload in header order.
void save_checkpoint(std::ostream& os, const GnnSyncModel& m);
GnnSyncModel load_checkpoint(std::istream& is);

}  // namespace angsync
