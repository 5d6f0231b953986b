#include "angsync/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace angsync {

Eigen::Vector2d singular_values_2x2(const Eigen::Matrix2d& m) {
  const double a = m(0, 0), b = m(0, 1), c = m(1, 0), d = m(1, 1);
  const double p = std::hypot(a + d, c - b);
  const double q = std::hypot(a - d, c + b);
  return {0.5 * (p + q), 0.5 * std::abs(p - q)};
}

namespace {

Eigen::Matrix2d rot(double t) {
  Eigen::Matrix2d m;
  m << std::cos(t), -std::sin(t), std::sin(t), std::cos(t);
  return m;
}

void check_lengths(const Eigen::VectorXd& r, const Eigen::VectorXd& truth, const char* who) {
  if (r.size() != truth.size()) throw std::invalid_argument(std::string(who) + ": length mismatch");
  if (r.size() == 0) throw std::invalid_argument(std::string(who) + ": empty input");
}

}  // namespace

double mse(const Eigen::VectorXd& r, const Eigen::VectorXd& truth) {
  check_lengths(r, truth, "mse");
  Eigen::Matrix2d q = Eigen::Matrix2d::Zero();
  for (Eigen::Index i = 0; i < r.size(); ++i) q += rot(truth[i]).transpose() * rot(r[i]);
  q /= static_cast<double>(r.size());
  const double v = 4.0 - 2.0 * singular_values_2x2(q).sum();
  if (v < 0.0 && v > -1e-12) return 0.0;
  return v;
}

double mse_oracle(const Eigen::VectorXd& r, const Eigen::VectorXd& truth, int grid_points) {
  check_lengths(r, truth, "mse_oracle");
  if (grid_points < 1) throw std::invalid_argument("mse_oracle: need at least one grid point");
  double best = std::numeric_limits<double>::infinity();
  for (int g = 0; g < grid_points; ++g) {
    const double theta0 = kTwoPi * g / grid_points;
    double s = 0.0;
    for (Eigen::Index i = 0; i < r.size(); ++i) {
      const double w = wrapped_distance(r[i] + theta0, truth[i]);
      s += w * w;
    }
    best = std::min(best, s);
  }
  return best;
}

double rotation_mse_grid(const Eigen::VectorXd& r, const Eigen::VectorXd& truth, int grid_points) {
  check_lengths(r, truth, "rotation_mse_grid");
  if (grid_points < 1) throw std::invalid_argument("rotation_mse_grid: need at least one grid point");
  double best = std::numeric_limits<double>::infinity();
  for (int g = 0; g < grid_points; ++g) {
    const double theta0 = kTwoPi * g / grid_points;
    double s = 0.0;
    for (Eigen::Index i = 0; i < r.size(); ++i) s += (rot(r[i] + theta0) - rot(truth[i])).squaredNorm();
    best = std::min(best, s / static_cast<double>(r.size()));
  }
  return best;
}

PermutationMse mse_k(const AngleMatrix& r, const AngleMatrix& truth) {
  const int k = static_cast<int>(truth.cols());
  if (r.rows() != truth.rows() || r.cols() != truth.cols()) throw std::invalid_argument("mse_k: shape mismatch");
  if (k < 1) throw std::invalid_argument("mse_k: need at least one column");
  if (k > 8) throw std::invalid_argument("mse_k: k > 8 would enumerate too many permutations");

  Eigen::MatrixXd pair(k, k);  // pair(e, l) = mse(estimated column e, truth column l)
  for (int e = 0; e < k; ++e)
    for (int l = 0; l < k; ++l) pair(e, l) = mse(r.col(e), truth.col(l));

  std::vector<int> perm(k);
  std::iota(perm.begin(), perm.end(), 0);
  PermutationMse best;
  best.value = std::numeric_limits<double>::infinity();
  do {
    double s = 0.0;
    for (int l = 0; l < k; ++l) s += pair(perm[l], l);
    if (s < best.value) {
      best.value = s;
      best.permutation = perm;
    }
  } while (std::next_permutation(perm.begin(), perm.end()));
  best.value /= k;
  for (int l = 0; l < k; ++l) best.per_layer.push_back(pair(best.permutation[l], l));
  return best;
}

double ane(const Eigen::MatrixX2d& predicted, const Eigen::MatrixX2d& truth) {
  if (predicted.rows() != truth.rows()) throw std::invalid_argument("ane: point counts differ");
  const Eigen::RowVector2d center = truth.colwise().mean();
  const double denom = (truth.rowwise() - center).squaredNorm();
  if (!(denom > 0.0)) throw std::invalid_argument("ane: ground-truth points are all identical");
  return std::sqrt((predicted - truth).squaredNorm()) / std::sqrt(denom);
}

}  // namespace angsync
