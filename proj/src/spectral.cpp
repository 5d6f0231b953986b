#include "angsync/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numeric>
#include <stdexcept>

#include "angsync/rng.hpp"

namespace angsync {

using cd = std::complex<double>;

EigenBasis hermitian_jacobi(const Eigen::MatrixXcd& input, double tol, int max_sweeps) {
  const int n = static_cast<int>(input.rows());
  if (input.cols() != n) throw std::invalid_argument("hermitian_jacobi: matrix must be square");
  Eigen::MatrixXcd a = 0.5 * (input + input.adjoint());
  Eigen::MatrixXcd v = Eigen::MatrixXcd::Identity(n, n);
  const double scale = std::max(a.norm(), 1e-300);

  auto off_norm = [&] {
    double s = 0.0;
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j) s += std::norm(a(i, j));
    return std::sqrt(2.0 * s);
  };

  int sweep = 0;
  for (; sweep < max_sweeps && off_norm() > tol * scale; ++sweep) {
    for (int p = 0; p < n; ++p)
      for (int q = p + 1; q < n; ++q) {
        const double b = std::abs(a(p, q));
        if (b == 0.0) continue;
        // Phase on q makes a(p,q) real and positive, then a real plane rotation zeroes it.
        const cd phase = std::polar(1.0, -std::arg(a(p, q)));
        a.col(q) *= phase;
        a.row(q) *= std::conj(phase);
        v.col(q) *= phase;
        const double theta = 0.5 * std::atan2(2.0 * b, a(q, q).real() - a(p, p).real());
        const double c = std::cos(theta), s = std::sin(theta);
        for (int i = 0; i < n; ++i) {
          const cd ap = a(i, p), aq = a(i, q);
          a(i, p) = c * ap - s * aq;
          a(i, q) = s * ap + c * aq;
        }
        for (int j = 0; j < n; ++j) {
          const cd ap = a(p, j), aq = a(q, j);
          a(p, j) = c * ap - s * aq;
          a(q, j) = s * ap + c * aq;
        }
        for (int i = 0; i < n; ++i) {
          const cd vp = v(i, p), vq = v(i, q);
          v(i, p) = c * vp - s * vq;
          v(i, q) = s * vp + c * vq;
        }
      }
  }

  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](int x, int y) { return a(x, x).real() > a(y, y).real(); });
  EigenBasis out;
  out.vectors.resize(n, n);
  out.values.resize(n);
  for (int c = 0; c < n; ++c) {
    out.vectors.col(c) = v.col(order[c]);
    out.values[c] = a(order[c], order[c]).real();
  }
  out.residuals = (input * out.vectors - out.vectors * out.values.asDiagonal()).colwise().norm().transpose();
  out.norm_bound = scale;
  out.iterations = sweep;
  out.converged = off_norm() <= tol * scale;
  return out;
}

namespace {

Eigen::MatrixXcd orthonormalize(const Eigen::MatrixXcd& w) {
  Eigen::HouseholderQR<Eigen::MatrixXcd> qr(w);
  return qr.householderQ() * Eigen::MatrixXcd::Identity(w.rows(), w.cols());
}

}  // namespace

EigenBasis top_k_eigenvectors(const Eigen::MatrixXcd& h, int k, double tol, int max_iter) {
  const int n = static_cast<int>(h.rows());
  if (h.cols() != n) throw std::invalid_argument("top_k_eigenvectors: matrix must be square");
  if (k < 1 || k > n) throw std::invalid_argument("top_k_eigenvectors: need 1 <= k <= n");

  // Small problems go straight to the dense Jacobi solver.
  if (n <= 16) {
    EigenBasis full = hermitian_jacobi(h);
    EigenBasis out;
    out.vectors = full.vectors.leftCols(k);
    out.values = full.values.head(k);
    out.residuals = full.residuals.head(k);
    out.norm_bound = full.norm_bound;
    out.iterations = full.iterations;
    out.converged = full.converged;
    return out;
  }

  // Gershgorin bound on the spectral radius; H + shift*I is positive semidefinite.
  const double shift = h.cwiseAbs().rowwise().sum().maxCoeff();
  const int block = std::min(n, std::max(2 * k, k + 8));

  EigenBasis out;
  out.norm_bound = shift;
  if (shift == 0.0) {
    out.vectors = Eigen::MatrixXcd::Identity(n, k);
    out.values = Eigen::VectorXd::Zero(k);
    out.residuals = Eigen::VectorXd::Zero(k);
    out.converged = true;
    return out;
  }

  Rng rng = substream(0x5eedULL, "eigensolver");
  Eigen::MatrixXcd v(n, block);
  for (int j = 0; j < block; ++j)
    for (int i = 0; i < n; ++i) v(i, j) = cd(2.0 * uniform01(rng) - 1.0, 2.0 * uniform01(rng) - 1.0);
  v = orthonormalize(v);

  Eigen::MatrixXcd hv;
  Eigen::VectorXd ritz;
  for (int it = 1; it <= max_iter; ++it) {
    hv = h * v;
    const Eigen::MatrixXcd t = v.adjoint() * hv;
    const EigenBasis small = hermitian_jacobi(t);
    v = v * small.vectors;
    hv = hv * small.vectors;
    ritz = small.values;

    Eigen::VectorXd res(k);
    for (int c = 0; c < k; ++c) res[c] = (hv.col(c) - ritz[c] * v.col(c)).norm();
    out.iterations = it;
    out.residuals = res;
    if (res.maxCoeff() <= tol * shift) {
      out.converged = true;
      break;
    }
    v = orthonormalize(hv + shift * v);
  }
  out.vectors = v.leftCols(k);
  out.values = ritz.head(k);
  return out;
}

AngleMatrix angles_of(const Eigen::MatrixXcd& vectors) {
  AngleMatrix r(vectors.rows(), vectors.cols());
  for (int l = 0; l < vectors.cols(); ++l)
    for (int i = 0; i < vectors.rows(); ++i) {
      const cd z = vectors(i, l);
      r(i, l) = (z == cd(0.0, 0.0)) ? 0.0 : mod2pi(std::arg(z));
    }
  return r;
}

AngleMatrix spectral_sync(const OffsetGraph& g, int k, EigenBasis* diagnostics) {
  EigenBasis basis = top_k_eigenvectors(build_hermitian(g), k);
  AngleMatrix r = angles_of(basis.vectors);
  if (diagnostics) *diagnostics = std::move(basis);
  return r;
}

AngleMatrix spectral_rn_sync(const OffsetGraph& g, int k, EigenBasis* diagnostics) {
  const Eigen::MatrixXcd h = build_hermitian(g);
  Eigen::VectorXd inv_sqrt_deg = h.cwiseAbs().rowwise().sum();
  for (int i = 0; i < inv_sqrt_deg.size(); ++i)
    inv_sqrt_deg[i] = inv_sqrt_deg[i] > 0.0 ? 1.0 / std::sqrt(inv_sqrt_deg[i]) : 1.0;
  const Eigen::MatrixXcd sym = inv_sqrt_deg.asDiagonal() * h * inv_sqrt_deg.asDiagonal();
  EigenBasis basis = top_k_eigenvectors(sym, k);
  // Eigenvectors of D^{-1} H are D^{-1/2} u: a positive rescaling, same arguments.
  Eigen::MatrixXcd mapped = inv_sqrt_deg.asDiagonal() * basis.vectors;
  AngleMatrix r = angles_of(mapped);
  if (diagnostics) *diagnostics = std::move(basis);
  return r;
}

AngleMatrix gpm(const Eigen::MatrixXcd& h, const AngleMatrix& init, int iters, double alpha) {
  if (init.rows() != h.rows()) throw std::invalid_argument("gpm: init has the wrong number of rows");
  if (iters <= 0) return init;
  AngleMatrix r(init.rows(), init.cols());
  for (int l = 0; l < init.cols(); ++l) {
    Eigen::VectorXd y = init.col(l);
    for (int it = 0; it < iters; ++it) {
      Eigen::VectorXcd z = y.unaryExpr([](double a) { return std::polar(1.0, a); });
      z = alpha * z + h * z;
      for (int i = 0; i < y.size(); ++i) y[i] = std::arg(z[i]);
    }
    r.col(l) = mod2pi(AngleMatrix(y));
  }
  return r;
}

AngleMatrix gpm(const OffsetGraph& g, const AngleMatrix& init, int iters, double alpha) {
  return gpm(build_hermitian(g), init, iters, alpha);
}

AngleMatrix gpm_sync(const OffsetGraph& g, int k, int iters, double alpha) {
  return gpm(g, spectral_sync(g, k), iters, alpha);
}

AngleMatrix trivial_solution(int n, int k) { return AngleMatrix::Constant(n, k, 1.0); }

}  // namespace angsync
