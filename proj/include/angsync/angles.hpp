#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include <Eigen/Dense>

namespace angsync {

inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

/// n x k matrix of angles; column l holds the l-th angle set.
using AngleMatrix = Eigen::MatrixXd;

/// Canonical residue of x in [0, 2pi). Results that round up to 2pi wrap to 0.
inline double mod2pi(double x) {
  if (!std::isfinite(x)) throw std::invalid_argument("mod2pi: non-finite input");
  double r = std::fmod(x, kTwoPi);
  if (r < 0.0) r += kTwoPi;
  if (r >= kTwoPi) r = 0.0;
  return r;
}

/// Shortest arc length between two angles, in [0, pi].
inline double wrapped_distance(double a, double b) {
  const double d = mod2pi(a - b);
  return std::min(d, mod2pi(-d));
}

inline AngleMatrix mod2pi(const AngleMatrix& m) {
  return m.unaryExpr([](double v) { return mod2pi(v); });
}

}  // namespace angsync
