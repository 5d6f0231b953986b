#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "angsync/angles.hpp"
#include "angsync/graph.hpp"

namespace angsync {

enum class CloudShape { UniformSquare, GaussianMixture };

std::string to_string(CloudShape s);
CloudShape parse_cloud_shape(const std::string& s);  // uniform | mixture

struct PointCloud {
  Eigen::MatrixX2d points;
  std::vector<int> component;  // mixture component of every point; empty for the uniform square
};

/// Mixture weights of the six-component cloud.
inline constexpr std::array<double, 6> kMixtureWeights{0.3, 0.2, 0.15, 0.15, 0.1, 0.1};

PointCloud synth_cloud(CloudShape shape, int n, std::uint64_t seed);

struct Patch {
  int center = 0;
  std::vector<int> members;  // center first, then neighbors by increasing distance
  Eigen::MatrixX2d local;    // coordinates of the members, row-aligned with `members`
  double rotation = 0.0;     // angle applied by perturb_and_rotate
};

/// One patch per point: the point and its k_patch nearest neighbors (ties by index).
std::vector<Patch> build_patches(const Eigen::MatrixX2d& points, int k_patch = 50);

/// Adds N(0, (eta * std_axis)^2) noise to every patch copy independently, then
/// rotates each patch about its centroid by angles[p].
void perturb_and_rotate(std::vector<Patch>& patches, const Eigen::MatrixX2d& points, double eta,
                        const Eigen::VectorXd& angles, std::uint64_t seed);

/// Angle t in [0, 2pi) with Q ~ rot(t) P after centering both sets (rotation only).
double procrustes_angle(const Eigen::MatrixX2d& p, const Eigen::MatrixX2d& q);

struct PatchGraph {
  OffsetGraph graph;
  int components = 0;
};

/// Edge for every pair of patches sharing at least k_thres members. The weight
/// estimates rotation(i) - rotation(j); the stored direction is drawn per pair.
PatchGraph patch_measurement_graph(const std::vector<Patch>& patches, int k_thres, std::uint64_t seed);

/// r_i = (r0_i - delta) mod 2pi with delta = mean_i((r0_i - theta_i) mod 2pi).
/// With `circular`, delta is the argument of mean_i exp(i (r0_i - theta_i)).
Eigen::VectorXd global_shift(const Eigen::VectorXd& r0, const Eigen::VectorXd& theta, bool circular = false);

/// Un-rotates every patch by its estimated angle about its centroid, moves the
/// centroid onto the centroid of its members' true positions, and averages per point.
Eigen::MatrixX2d recover_coordinates(const std::vector<Patch>& patches, const Eigen::VectorXd& r,
                                     const Eigen::MatrixX2d& truth);

struct SnlConfig {
  CloudShape shape = CloudShape::UniformSquare;
  int n = 400;
  int k_patch = 50;
  int k_thres = 6;
  double eta = 0.0;
  int option = 1;  // ground-truth rotation generator
  std::uint64_t seed = 0;
  bool circular_shift = false;

  void validate() const;
};

using Synchronizer = std::function<AngleMatrix(const OffsetGraph&)>;

struct SnlResult {
  PointCloud cloud;
  std::vector<Patch> patches;
  PatchGraph patch_graph;
  Eigen::VectorXd theta;  // ground-truth patch rotations
  Eigen::VectorXd r0;     // synchronizer output
  Eigen::VectorXd r;      // after the global shift
  Eigen::MatrixX2d recovered;
  double ane = 0.0;
};

/// Full pipeline. A disconnected patch graph is synchronized and shifted per component.
SnlResult run_snl(const SnlConfig& cfg, const Synchronizer& sync);

/// `x y` per line; `#` lines are comments. The writer appends `# ane=<v>` when given.
void write_cloud(std::ostream& os, const Eigen::MatrixX2d& points, std::optional<double> ane = std::nullopt);
Eigen::MatrixX2d read_cloud(std::istream& is);

}  // namespace angsync
