#pragma once

#include <Eigen/Dense>

#include <stdexcept>
#include <utility>

#include "normsmooth/smooth.hpp"
#include "normsmooth/types.hpp"

namespace normsmooth {

/// Curvature model B approximating the Hessian of the smooth part. Either an
/// exact Hessian-vector adapter registered at a point, or a limited-memory
/// BFGS approximation in compact form,
///
///   B = gamma*I - [S Y] [ S'S/gamma  L/gamma ]^{-1} [S']
///                       [ L'/gamma   -diag(d)]      [Y']
///
/// with L the strictly lower part and d the diagonal of S'Y. Pairs with
/// non-positive curvature are skipped; the 2m x 2m middle matrix is
/// refactored from scratch on every accepted update.
class HessianModel {
 public:
  enum class Mode { Exact, LBFGS };

  static HessianModel exact(const SmoothObjective& f) {
    HessianModel m(Mode::Exact, f.dim());
    m.objective_ = &f;
    return m;
  }

  static HessianModel lbfgs(Index dim, int memory = 10) {
    if (memory < 0) throw std::invalid_argument("lbfgs: negative memory");
    HessianModel m(Mode::LBFGS, dim);
    m.memory_ = memory;
    return m;
  }

  Mode mode() const { return mode_; }
  Index dim() const { return dim_; }
  int pair_count() const { return static_cast<int>(s_.cols()); }
  double gamma() const { return gamma_; }
  int rejected_updates() const { return rejected_; }
  bool middle_matrix_singular() const { return !middle_ok_; }

  /// Registers the evaluation point for exact Hessian-vector products.
  void set_point(const Vector& x) {
    if (mode_ != Mode::Exact) throw std::logic_error("set_point: exact mode only");
    point_ = x;
  }

  /// Appends a difference pair (s, y); rejects pairs failing the curvature
  /// floor <s,y> > 1e-12 ||s|| ||y|| and leaves the model unchanged then.
  /// Returns whether the pair was accepted.
  bool update(const Vector& s, const Vector& y) {
    if (mode_ == Mode::Exact) throw std::logic_error("update: limited-memory mode only");
    if (s.size() != dim_ || y.size() != dim_)
      throw std::invalid_argument("update: pair size mismatch");
    if (memory_ == 0) return false;
    const double sy = s.dot(y);
    if (!(sy > kCurvatureFloor * s.norm() * y.norm())) {
      ++rejected_;
      return false;
    }
    const Index kept = std::min<Index>(s_.cols(), memory_ - 1);
    Matrix snew(dim_, kept + 1), ynew(dim_, kept + 1);
    if (kept > 0) {
      snew.leftCols(kept) = s_.rightCols(kept);
      ynew.leftCols(kept) = y_.rightCols(kept);
    }
    snew.col(kept) = s;
    ynew.col(kept) = y;
    s_ = std::move(snew);
    y_ = std::move(ynew);
    gamma_ = y.dot(y) / sy;
    refactor();
    return true;
  }

  /// B*v. Empty limited-memory model applies gamma0 = 1; a singular middle
  /// matrix falls back to gamma*I and raises the diagnostic flag.
  Vector apply(const Vector& v) const {
    if (v.size() != dim_) throw std::invalid_argument("apply: size mismatch");
    if (mode_ == Mode::Exact) {
      if (point_.size() != dim_) throw std::logic_error("apply: no registered point");
      return objective_->hess_vec(point_, v);
    }
    const Index m = s_.cols();
    if (m == 0 || !middle_ok_) return gamma_ * v;
    Vector rhs(2 * m);
    rhs.head(m) = s_.transpose() * v;
    rhs.tail(m) = y_.transpose() * v;
    const Vector w = middle_lu_.solve(rhs);
    return gamma_ * v - s_ * w.head(m) - y_ * w.tail(m);
  }

 private:
  static constexpr double kCurvatureFloor = 1e-12;

  HessianModel(Mode mode, Index dim) : mode_(mode), dim_(dim) {}

  void refactor() {
    const Index m = s_.cols();
    const Matrix sty = s_.transpose() * y_;
    Matrix middle(2 * m, 2 * m);
    middle.topLeftCorner(m, m) = (s_.transpose() * s_) / gamma_;
    Matrix lower = sty.template triangularView<Eigen::StrictlyLower>();
    middle.topRightCorner(m, m) = lower / gamma_;
    middle.bottomLeftCorner(m, m) = lower.transpose() / gamma_;
    middle.bottomRightCorner(m, m) = -Matrix(sty.diagonal().asDiagonal());
    middle_lu_.compute(middle);
    middle_ok_ = middle_lu_.isInvertible();
  }

  Mode mode_;
  Index dim_;
  int memory_ = 10;
  const SmoothObjective* objective_ = nullptr;
  Vector point_;
  Matrix s_{0, 0}, y_{0, 0};  // columns ordered oldest to newest
  double gamma_ = 1.0;
  Eigen::FullPivLU<Matrix> middle_lu_;
  bool middle_ok_ = true;
  int rejected_ = 0;
};

}  // namespace normsmooth
