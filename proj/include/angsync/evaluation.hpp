#pragma once

#include <vector>

#include <Eigen/Dense>

#include "angsync/angles.hpp"

namespace angsync {

/// Singular values (descending) of a 2x2 matrix, closed form.
Eigen::Vector2d singular_values_2x2(const Eigen::Matrix2d& m);

/// Rotation-corrected MSE: 4 - 2 (s1 + s2), s the singular values of
/// Q = (1/n) sum_i rot(R_i)^T rot(r_i). Range [0, 4]; tiny negative rounding is clamped.
double mse(const Eigen::VectorXd& r, const Eigen::VectorXd& truth);

/// Brute-force minimum over a uniform grid of global shifts theta0 of
/// sum_i wrapped(r_i + theta0 - R_i)^2 (sum of squared geodesic residuals).
double mse_oracle(const Eigen::VectorXd& r, const Eigen::VectorXd& truth, int grid_points = 200000);

/// Brute-force minimum over a uniform grid of global shifts theta0 of
/// (1/n) sum_i ||rot(r_i + theta0) - rot(R_i)||_F^2, the quantity `mse` evaluates in closed form.
double rotation_mse_grid(const Eigen::VectorXd& r, const Eigen::VectorXd& truth, int grid_points = 200000);

struct PermutationMse {
  double value = 0.0;             // (1/k) min over permutations of the summed per-layer mse
  std::vector<int> permutation;   // estimated column used for truth column l
  std::vector<double> per_layer;  // mse of each truth column under that permutation
};

/// k-synchronization MSE, minimized over column permutations. k <= 8.
PermutationMse mse_k(const AngleMatrix& r, const AngleMatrix& truth);

/// Average normalized error of recovered 2-D coordinates (n x 2 matrices).
double ane(const Eigen::MatrixX2d& predicted, const Eigen::MatrixX2d& truth);

}  // namespace angsync
