#pragma once

#include <cmath>
#include <stdexcept>
#include <utility>

#include "normsmooth/types.hpp"

namespace normsmooth {

/// Spectral norm via power iteration on A^T A. Deterministic start vector,
/// relative tolerance 1e-8, capped at 1000 sweeps.
inline double spectral_norm(const SparseRowMatrix& a, double tol = 1e-8, int max_iter = 1000) {
  const Index n = a.cols();
  Vector v(n);
  for (Index i = 0; i < n; ++i) v[i] = 1.0 + 0.01 * std::sin(static_cast<double>(i) + 1.0);
  v.normalize();
  double sigma = 0.0;
  for (int it = 0; it < max_iter; ++it) {
    Vector av = a * v;
    const double next = av.norm();
    if (next == 0.0) return 0.0;
    Vector w = a.transpose() * av;
    v = w / w.norm();
    if (std::abs(next - sigma) <= tol * std::max(1.0, next)) return next;
    sigma = next;
  }
  return sigma;
}

/// Smooth part f of a composite objective: value, gradient, Hessian-vector
/// products, and the closed-form Lipschitz bound of the gradient when one
/// exists. Immutable after construction; all evaluations are pure.
class SmoothObjective {
 public:
  enum class Kind { Logistic, SigmoidLeastSquares, Quadratic };

  /// (1/N) sum_i log(1 + exp(-b_i <a_i, x>)), labels b_i in {-1, +1}.
  static SmoothObjective logistic(const SparseRowMatrix& a, Vector b) {
    if (a.rows() != b.size()) throw std::invalid_argument("logistic: label count mismatch");
    for (Index i = 0; i < b.size(); ++i)
      if (b[i] != 1.0 && b[i] != -1.0)
        throw std::invalid_argument("logistic: labels must be -1 or +1");
    SmoothObjective f(Kind::Logistic);
    f.a_ = a;
    f.b_ = std::move(b);
    return f;
  }

  /// (1/2N) sum_i (sigmoid(<a_i, x>) - b_i)^2.
  static SmoothObjective sigmoid_least_squares(const SparseRowMatrix& a, Vector b) {
    if (a.rows() != b.size())
      throw std::invalid_argument("sigmoid_least_squares: label count mismatch");
    if (!b.allFinite()) throw std::invalid_argument("sigmoid_least_squares: non-finite labels");
    SmoothObjective f(Kind::SigmoidLeastSquares);
    f.a_ = a;
    f.b_ = std::move(b);
    return f;
  }

  /// (curvature/2) ||x - center||^2.
  static SmoothObjective quadratic(Vector center, double curvature = 1.0) {
    SmoothObjective f(Kind::Quadratic);
    f.center_ = std::move(center);
    f.curvature_ = curvature;
    return f;
  }

  Kind kind() const { return kind_; }
  Index dim() const { return kind_ == Kind::Quadratic ? center_.size() : a_.cols(); }
  Index samples() const { return kind_ == Kind::Quadratic ? 0 : a_.rows(); }
  const SparseRowMatrix& data() const { return a_; }
  const Vector& labels() const { return b_; }

  double value(const Vector& x) const {
    check(x);
    switch (kind_) {
      case Kind::Quadratic:
        return 0.5 * curvature_ * (x - center_).squaredNorm();
      case Kind::Logistic: {
        const Vector m = margins(x);
        double sum = 0.0;
        for (Index i = 0; i < m.size(); ++i) sum += logistic_loss(m[i]);
        return sum / static_cast<double>(a_.rows());
      }
      case Kind::SigmoidLeastSquares: {
        const Vector m = a_ * x;
        double sum = 0.0;
        for (Index i = 0; i < m.size(); ++i) {
          const double r = sigmoid(m[i]) - b_[i];
          sum += r * r;
        }
        return 0.5 * sum / static_cast<double>(a_.rows());
      }
    }
    return 0.0;
  }

  Vector gradient(const Vector& x) const { return value_grad(x).second; }

  std::pair<double, Vector> value_grad(const Vector& x) const {
    check(x);
    switch (kind_) {
      case Kind::Quadratic:
        return {0.5 * curvature_ * (x - center_).squaredNorm(), curvature_ * (x - center_)};
      case Kind::Logistic: {
        const double invn = 1.0 / static_cast<double>(a_.rows());
        const Vector m = margins(x);
        double sum = 0.0;
        Vector w(m.size());
        for (Index i = 0; i < m.size(); ++i) {
          sum += logistic_loss(m[i]);
          w[i] = -b_[i] * sigmoid(-m[i]);
        }
        return {sum * invn, Vector(invn * (a_.transpose() * w))};
      }
      case Kind::SigmoidLeastSquares: {
        const double invn = 1.0 / static_cast<double>(a_.rows());
        const Vector m = a_ * x;
        double sum = 0.0;
        Vector w(m.size());
        for (Index i = 0; i < m.size(); ++i) {
          const double s = sigmoid(m[i]);
          const double r = s - b_[i];
          sum += r * r;
          w[i] = r * s * (1.0 - s);
        }
        return {0.5 * sum * invn, Vector(invn * (a_.transpose() * w))};
      }
    }
    return {0.0, Vector()};
  }

  Vector hess_vec(const Vector& x, const Vector& v) const {
    check(x);
    if (v.size() != dim()) throw std::invalid_argument("hess_vec: direction size mismatch");
    switch (kind_) {
      case Kind::Quadratic:
        return curvature_ * v;
      case Kind::Logistic: {
        const double invn = 1.0 / static_cast<double>(a_.rows());
        const Vector m = margins(x);
        Vector av = a_ * v;
        for (Index i = 0; i < m.size(); ++i) {
          const double s = sigmoid(-std::abs(m[i]));
          av[i] *= s * (1.0 - s);
        }
        return invn * (a_.transpose() * av);
      }
      case Kind::SigmoidLeastSquares: {
        const double invn = 1.0 / static_cast<double>(a_.rows());
        const Vector m = a_ * x;
        Vector av = a_ * v;
        for (Index i = 0; i < m.size(); ++i) {
          const double s = sigmoid(m[i]);
          const double sp = s * (1.0 - s);
          av[i] *= sp * sp + (s - b_[i]) * sp * (1.0 - 2.0 * s);
        }
        return invn * (a_.transpose() * av);
      }
    }
    return v;
  }

  /// Closed-form Lipschitz bound of the gradient.
  double lipschitz_bound() const {
    switch (kind_) {
      case Kind::Quadratic:
        return curvature_;
      case Kind::Logistic: {
        const double s = spectral_norm(a_);
        return s * s / (4.0 * static_cast<double>(a_.rows()));
      }
      case Kind::SigmoidLeastSquares: {
        const double s = spectral_norm(a_);
        return s * s / (12.0 * static_cast<double>(a_.rows()));
      }
    }
    throw NotAvailableError("lipschitz_bound: no closed form for this objective");
  }

 private:
  explicit SmoothObjective(Kind kind) : kind_(kind) {}

  void check(const Vector& x) const {
    if (x.size() != dim()) throw std::invalid_argument("SmoothObjective: point size mismatch");
  }

  Vector margins(const Vector& x) const { return b_.cwiseProduct(a_ * x); }

  // log(1 + exp(-m)) without overflow on either tail.
  static double logistic_loss(double m) {
    return m >= 0.0 ? std::log1p(std::exp(-m)) : -m + std::log1p(std::exp(m));
  }

  static double sigmoid(double m) {
    if (m >= 0.0) return 1.0 / (1.0 + std::exp(-m));
    const double e = std::exp(m);
    return e / (1.0 + e);
  }

  Kind kind_;
  SparseRowMatrix a_;
  Vector b_;
  Vector center_;
  double curvature_ = 1.0;
};

}  // namespace normsmooth
