// Shared test fixtures and independent oracles. Everything here recomputes
// expected values from first principles (finite differences, dense linear
// algebra, exhaustive grids) without touching the implementation paths under
// test.
#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <functional>
#include <vector>

#include "normsmooth/normsmooth.hpp"

namespace testsupport {

using normsmooth::Index;
using normsmooth::Matrix;
using normsmooth::SparseRowMatrix;
using normsmooth::Vector;

inline SparseRowMatrix dense_to_sparse(const Matrix& m) {
  SparseRowMatrix out(m.rows(), m.cols());
  std::vector<Eigen::Triplet<double>> entries;
  for (Index i = 0; i < m.rows(); ++i)
    for (Index j = 0; j < m.cols(); ++j)
      if (m(i, j) != 0.0) entries.emplace_back(static_cast<int>(i), static_cast<int>(j), m(i, j));
  out.setFromTriplets(entries.begin(), entries.end());
  return out;
}

inline SparseRowMatrix random_sparse(normsmooth::Rng& rng, Index rows, Index cols,
                                     double fill = 1.0) {
  Matrix m(rows, cols);
  for (Index i = 0; i < rows; ++i)
    for (Index j = 0; j < cols; ++j) {
      const double keep = rng.uniform();
      const double value = rng.normal();
      m(i, j) = (fill >= 1.0 || keep < fill) ? value : 0.0;
    }
  return dense_to_sparse(m);
}

/// Central finite difference of a scalar function.
inline Vector fd_gradient(const std::function<double(const Vector&)>& f, const Vector& x,
                          double h = 1e-6) {
  Vector g(x.size());
  for (Index i = 0; i < x.size(); ++i) {
    Vector xp = x, xm = x;
    xp[i] += h;
    xm[i] -= h;
    g[i] = (f(xp) - f(xm)) / (2.0 * h);
  }
  return g;
}

/// Central finite difference of a vector field (column j = d field / d x_j).
inline Matrix fd_jacobian(const std::function<Vector(const Vector&)>& field, const Vector& x,
                          double h = 1e-6) {
  const Vector base = field(x);
  Matrix j(base.size(), x.size());
  for (Index i = 0; i < x.size(); ++i) {
    Vector xp = x, xm = x;
    xp[i] += h;
    xm[i] -= h;
    j.col(i) = (field(xp) - field(xm)) / (2.0 * h);
  }
  return j;
}

/// Dense recursive BFGS accumulation: start from gamma*I and apply the
/// standard rank-two update for every pair, oldest first.
inline Matrix dense_bfgs(double gamma, const std::vector<std::pair<Vector, Vector>>& pairs,
                         Index n) {
  Matrix b = gamma * Matrix::Identity(n, n);
  for (const auto& [s, y] : pairs) {
    const Vector bs = b * s;
    b += (y * y.transpose()) / y.dot(s) - (bs * bs.transpose()) / s.dot(bs);
  }
  return b;
}

/// Random symmetric positive definite matrix with spectrum in [lo, hi].
inline Matrix random_spd(normsmooth::Rng& rng, Index n, double lo = 0.5, double hi = 5.0) {
  Matrix a(n, n);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < n; ++j) a(i, j) = rng.normal();
  const Eigen::HouseholderQR<Matrix> qr(a);
  const Matrix q = qr.householderQ();
  Vector d(n);
  for (Index i = 0; i < n; ++i) d[i] = rng.uniform(lo, hi);
  return q * d.asDiagonal() * q.transpose();
}

/// Small logistic instance shared by several suites.
struct LogisticFixture {
  normsmooth::Dataset data;
  normsmooth::SmoothObjective smooth;
  normsmooth::ProxOperator prox;

  LogisticFixture(Index N, Index n, double mu, std::uint64_t seed)
      : data(normsmooth::synth_problem("logistic", N, n, 1.0, seed)),
        smooth(normsmooth::SmoothObjective::logistic(data.A, data.b)),
        prox(normsmooth::ProxOperator::l1(mu)) {}

  normsmooth::ProblemHandle handle(double lambda) const {
    return normsmooth::ProblemHandle(smooth, prox, lambda);
  }
};

}  // namespace testsupport
