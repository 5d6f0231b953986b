#include <doctest.h>

#include <algorithm>
#include <numeric>

#include "angsync/evaluation.hpp"
#include "oracles.hpp"

using namespace angsync;

TEST_CASE("closed-form 2x2 singular values match Eigen") {
  std::mt19937_64 rng(1);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (int t = 0; t < 100; ++t) {
    Eigen::Matrix2d m;
    m << normal(rng), normal(rng), normal(rng), normal(rng);
    const Eigen::Vector2d s = singular_values_2x2(m);
    const Eigen::Vector2d ref = Eigen::JacobiSVD<Eigen::Matrix2d>(m).singularValues();
    CHECK((s - ref).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("mse basics") {
  std::mt19937_64 rng(2);
  const Eigen::VectorXd truth = oracle::random_angles(30, 1, rng).col(0);
  CHECK(mse(truth, truth) == 0.0);
  const Eigen::VectorXd shifted = truth.unaryExpr([](double v) { return oracle::wrap(v + 2.5); });
  CHECK(mse(shifted, truth) < 1e-12);
  CHECK_THROWS_AS(mse(truth, truth.head(5)), std::invalid_argument);
}

TEST_CASE("mse equals the rotation-matrix grid minimum") {
  std::mt19937_64 rng(3);
  for (int t = 0; t < 10; ++t) {
    const Eigen::VectorXd a = oracle::random_angles(20, 1, rng).col(0);
    const Eigen::VectorXd b = oracle::random_angles(20, 1, rng).col(0);
    // The grid can only overshoot the true minimum, by O((2pi/grid)^2).
    const double grid = oracle::rotation_grid_mse(a, b, 200000);
    CHECK(std::abs(mse(a, b) - grid) <= 1e-8);
    CHECK(std::abs(rotation_mse_grid(a, b) - grid) <= 1e-12);
  }
}

TEST_CASE("mse properties: symmetry, shift invariance, range") {
  std::mt19937_64 rng(4);
  for (int t = 0; t < 50; ++t) {
    const Eigen::VectorXd a = oracle::random_angles(15, 1, rng).col(0);
    const Eigen::VectorXd b = oracle::random_angles(15, 1, rng).col(0);
    const double v = mse(a, b);
    CHECK(v >= 0.0);
    CHECK(v <= 4.0);
    CHECK(v == doctest::Approx(mse(b, a)).epsilon(1e-12));
    const double c = 6.0 * std::uniform_real_distribution<double>(0, 1)(rng);
    const Eigen::VectorXd a2 = a.unaryExpr([c](double x) { return oracle::wrap(x + c); });
    const Eigen::VectorXd b2 = b.unaryExpr([c](double x) { return oracle::wrap(x + c); });
    CHECK(mse(a2, b2) == doctest::Approx(v).epsilon(1e-10));
  }
}

TEST_CASE("geodesic grid oracle fixtures") {
  Eigen::VectorXd r(1), t(1);
  r << 1.0;
  t << 4.0;
  CHECK(mse_oracle(r, t, 1000) < 1e-4);
  Eigen::VectorXd r2(2), t2(2);
  r2 << 0.0, oracle::kPi;
  t2 << 0.0, 0.0;
  // best shift splits the pi gap evenly: 2 (pi/2)^2
  CHECK(mse_oracle(r2, t2, 200000) == doctest::Approx(oracle::kPi * oracle::kPi / 2.0).epsilon(1e-9));
  CHECK(mse_oracle(t2, t2, 100) == 0.0);
}

TEST_CASE("mse_k") {
  std::mt19937_64 rng(5);
  const AngleMatrix truth = oracle::random_angles(25, 2, rng);
  AngleMatrix swapped(25, 2);
  swapped.col(0) = truth.col(1);
  swapped.col(1) = truth.col(0);
  const PermutationMse pm = mse_k(swapped, truth);
  CHECK(pm.value < 1e-12);
  CHECK(pm.permutation == std::vector<int>{1, 0});

  const Eigen::VectorXd a = oracle::random_angles(25, 1, rng).col(0);
  CHECK(mse_k(a, truth.col(0)).value == doctest::Approx(mse(a, truth.col(0))).epsilon(1e-14));

  const AngleMatrix t3 = oracle::random_angles(25, 3, rng), r3 = oracle::random_angles(25, 3, rng);
  std::array<int, 3> perm{0, 1, 2};
  double best = 1e9;
  do {
    double s = 0.0;
    for (int l = 0; l < 3; ++l) s += mse(r3.col(perm[l]), t3.col(l));
    best = std::min(best, s / 3.0);
    // any fixed permutation is an upper bound
    CHECK(mse_k(r3, t3).value <= s / 3.0 + 1e-15);
  } while (std::next_permutation(perm.begin(), perm.end()));
  CHECK(mse_k(r3, t3).value == doctest::Approx(best).epsilon(1e-14));

  CHECK_THROWS(mse_k(AngleMatrix::Zero(3, 9), AngleMatrix::Zero(3, 9)));
}

TEST_CASE("ane") {
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Eigen::MatrixX2d truth(40, 2), pred(40, 2);
  for (int i = 0; i < 40; ++i) {
    truth.row(i) << u(rng), u(rng);
    pred.row(i) << u(rng), u(rng);
  }
  CHECK(ane(truth, truth) == 0.0);
  const Eigen::RowVector2d c = truth.colwise().mean();
  const Eigen::MatrixX2d reflected = (-(truth.rowwise() - c)).rowwise() + c;
  CHECK(ane(reflected, truth) == doctest::Approx(2.0).epsilon(1e-12));

  double num = 0.0, den = 0.0;
  for (int i = 0; i < 40; ++i) {
    num += std::pow(pred(i, 0) - truth(i, 0), 2) + std::pow(pred(i, 1) - truth(i, 1), 2);
    den += std::pow(truth(i, 0) - c[0], 2) + std::pow(truth(i, 1) - c[1], 2);
  }
  CHECK(std::abs(ane(pred, truth) - std::sqrt(num) / std::sqrt(den)) < 1e-12);
  CHECK(ane(pred * 3.0, truth * 3.0) == doctest::Approx(ane(pred, truth)).epsilon(1e-12));

  Eigen::MatrixX2d same = Eigen::MatrixX2d::Ones(5, 2);
  CHECK_THROWS(ane(same, same));
}
