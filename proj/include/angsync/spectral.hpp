#pragma once

#include <Eigen/Dense>

#include "angsync/angles.hpp"
#include "angsync/graph.hpp"

namespace angsync {

/// Leading eigenpairs of a Hermitian matrix, eigenvalues in descending order.
struct EigenBasis {
  Eigen::MatrixXcd vectors;  // n x k, orthonormal columns
  Eigen::VectorXd values;    // k
  Eigen::VectorXd residuals; // ||H v - lambda v|| per pair
  double norm_bound = 0.0;   // the ||H|| estimate residuals are measured against
  int iterations = 0;
  bool converged = false;
};

/// All eigenpairs of a small dense Hermitian matrix by cyclic complex Jacobi
/// rotations, eigenvalues descending.
EigenBasis hermitian_jacobi(const Eigen::MatrixXcd& a, double tol = 1e-15, int max_sweeps = 100);

/// Top-k eigenpairs of a Hermitian matrix by shifted block subspace iteration
/// with Rayleigh-Ritz projection. Start vectors come from a fixed seed. On
/// non-convergence the last iterate is returned with `converged == false`.
EigenBasis top_k_eigenvectors(const Eigen::MatrixXcd& h, int k, double tol = 1e-10, int max_iter = 5000);

/// Angle of every eigenvector component, reduced to [0, 2pi). Zero components map to 0.
AngleMatrix angles_of(const Eigen::MatrixXcd& vectors);

/// Eigenvector relaxation: column l holds the arguments of the l-th leading eigenvector of H.
AngleMatrix spectral_sync(const OffsetGraph& g, int k, EigenBasis* diagnostics = nullptr);

/// Row-normalized variant: eigenvectors of D^{-1} H computed through the
/// similar Hermitian matrix D^{-1/2} H D^{-1/2}, D_ii = sum_j |H_ij|.
AngleMatrix spectral_rn_sync(const OffsetGraph& g, int k, EigenBasis* diagnostics = nullptr);

/// Generalized power method: per column, y <- angle(alpha e^{iy} + H e^{iy}), `iters` times.
AngleMatrix gpm(const OffsetGraph& g, const AngleMatrix& init, int iters = 100, double alpha = 1.0);
AngleMatrix gpm(const Eigen::MatrixXcd& h, const AngleMatrix& init, int iters = 100, double alpha = 1.0);

/// GPM from the spectral initialization.
AngleMatrix gpm_sync(const OffsetGraph& g, int k, int iters = 100, double alpha = 1.0);

/// Every angle equal to 1.
AngleMatrix trivial_solution(int n, int k);

}  // namespace angsync
