#pragma once

#include <cmath>
#include <functional>
#include <limits>
#include <utility>

#include "normsmooth/hessian.hpp"
#include "normsmooth/prox.hpp"
#include "normsmooth/types.hpp"

namespace normsmooth {

/// Generalized derivative of the normal map at the current iterate,
///   M v = B(D v) + (v - D v)/lambda,
/// together with the symmetric reduction S v = D(M v) solved by CG.
class NewtonOperator {
 public:
  NewtonOperator(const HessianModel& hess, const ProxDerivative& deriv, double lambda)
      : hess_(&hess), deriv_(&deriv), lambda_(lambda) {}

  double lambda() const { return lambda_; }
  Index dim() const { return deriv_->dim(); }
  const ProxDerivative& derivative() const { return *deriv_; }

  Vector apply_derivative(const Vector& v) const { return deriv_->apply(v); }

  Vector apply_newton_matrix(const Vector& v) const {
    const Vector dv = deriv_->apply(v);
    return hess_->apply(dv) + (v - dv) / lambda_;
  }

  Vector apply_reduced(const Vector& v) const { return deriv_->apply(apply_newton_matrix(v)); }

 private:
  const HessianModel* hess_;
  const ProxDerivative* deriv_;
  double lambda_;
};

enum class CGStatus { TolConverged, ZeroResidualStart, NegativeCurvature, IterationCap };

struct CGOutcome {
  Vector q;
  CGStatus status = CGStatus::ZeroResidualStart;
  int iterations = 0;
  double residual_norm = 0.0;
  double epsilon_used = 0.0;
};

/// Per-iteration observer, test hook: receives (i, r_i, p_i) before step i.
using CgObserver = std::function<void(int, const Vector&, const Vector&)>;

/// Conjugate gradient on the reduced system S q = -g with g = D F(z):
/// starts from q0 = 0, r0 = g, p0 = -g; exits on the residual test
/// ||r|| <= eps, on non-positive curvature <p, Sp> <= 0 (returning p0 at
/// i = 0 and the previous iterate otherwise), or after min(cap, n) steps.
/// An exact tolerance eps = 0 is realized through a relative machine floor,
/// reported in CGOutcome::epsilon_used.
inline CGOutcome cg_solve(const NewtonOperator& op, const Vector& g, double epsilon, int cap,
                          const CgObserver& observer = nullptr) {
  constexpr double kResidualFloor = 256.0 * std::numeric_limits<double>::epsilon();
  CGOutcome out;
  out.q = Vector::Zero(g.size());
  const double eps_eff = std::max(epsilon, kResidualFloor * g.norm());
  out.epsilon_used = eps_eff;

  Vector r = g;
  double rnorm = r.norm();
  if (rnorm <= eps_eff) {
    out.status = CGStatus::ZeroResidualStart;
    out.residual_norm = rnorm;
    return out;
  }
  Vector p = -g;
  const int max_steps = std::min<int>(cap, static_cast<int>(g.size()));
  for (int i = 0; i < max_steps; ++i) {
    if (observer) observer(i, r, p);
    const Vector sp = op.apply_reduced(p);
    const double curvature = p.dot(sp);
    if (!std::isfinite(curvature))
      throw NumericalBreakdownError("cg_solve: non-finite curvature", i);
    if (curvature <= 0.0) {
      out.status = CGStatus::NegativeCurvature;
      if (i == 0) out.q = -g;
      out.residual_norm = rnorm;
      out.iterations = i;
      return out;
    }
    const double alpha = r.squaredNorm() / curvature;
    out.q += alpha * p;
    const double rnorm_prev2 = r.squaredNorm();
    r += alpha * sp;
    rnorm = r.norm();
    if (!std::isfinite(rnorm)) throw NumericalBreakdownError("cg_solve: non-finite residual", i);
    out.iterations = i + 1;
    if (rnorm <= eps_eff) {
      out.status = CGStatus::TolConverged;
      out.residual_norm = rnorm;
      return out;
    }
    const double beta = r.squaredNorm() / rnorm_prev2;
    p = -r + beta * p;
  }
  out.status = CGStatus::IterationCap;
  out.residual_norm = rnorm;
  return out;
}

/// First-order direction d = -F(z) and curvature correction e = q/lambda - Mq.
/// The implied full step lambda(d + e) equals q - lambda(Mq + F(z)).
inline std::pair<Vector, Vector> recover_directions(const NewtonOperator& op, const Vector& q,
                                                    const Vector& fnor) {
  Vector d = -fnor;
  const Vector mq = op.apply_newton_matrix(q);
  Vector e = q / op.lambda() - mq;
#ifndef NDEBUG
  {
    const Vector lhs = op.lambda() * (d + e);
    const Vector rhs = q - op.lambda() * (mq + fnor);
    const double scale = std::max(1.0, rhs.norm());
    if ((lhs - rhs).norm() > 1e-10 * scale)
      throw std::logic_error("recover_directions: step identity violated");
  }
#endif
  return {std::move(d), std::move(e)};
}

struct GradTestConfig {
  double eta = 1e-8;      // cap of eta_k
  double exponent = 0.2;  // q
  double scale = 1e-3;    // c in b_k = c k^q ln^{2q}(k)
};

/// c * k^e * ln^{2e}(k); zero for k <= 1 where ln(k) degenerates.
inline double growth_coefficient(int k, double scale, double exponent) {
  if (k <= 1) return 0.0;
  const double kd = static_cast<double>(k);
  return scale * std::pow(kd, exponent) * std::pow(std::log(kd), 2.0 * exponent);
}

enum class StepFlag { FO, SO };

/// Gradient-related test ||e|| <= chi / eta_k with
/// eta_k = min{b_k chi^q, eta}. Evaluated multiplicatively; a degenerate
/// eta_k = 0 (k <= 1 or chi = 0) counts as passing.
inline StepFlag gradient_related_test(const Vector& e, double chi, int k, const GradTestConfig& cfg) {
  const double bk = growth_coefficient(k, cfg.scale, cfg.exponent);
  const double eta_k = std::min(bk * std::pow(chi, cfg.exponent), cfg.eta);
  if (eta_k <= 0.0) return StepFlag::SO;
  return e.norm() * eta_k <= chi ? StepFlag::SO : StepFlag::FO;
}

}  // namespace normsmooth
