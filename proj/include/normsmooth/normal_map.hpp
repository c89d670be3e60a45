#pragma once

#include <cmath>
#include <stdexcept>

#include "normsmooth/prox.hpp"
#include "normsmooth/smooth.hpp"
#include "normsmooth/types.hpp"

namespace normsmooth {

/// A composite problem min f(x) + phi(x) with a fixed prox stepsize lambda.
/// Non-owning view over the two immutable parts.
struct ProblemHandle {
  const SmoothObjective* smooth = nullptr;
  const ProxOperator* prox = nullptr;
  double lambda = 1.0;

  ProblemHandle(const SmoothObjective& f, const ProxOperator& p, double stepsize)
      : smooth(&f), prox(&p), lambda(stepsize) {
    if (!(stepsize > 0.0)) throw std::invalid_argument("ProblemHandle: lambda must be positive");
  }
};

/// A point z together with every quantity the algorithms derive from it:
/// x = prox(z), the gradient and value of f at x, phi(x), the normal map
/// F = grad + (z - x)/lambda, and the criticality measure chi = ||F||.
struct NormalPoint {
  Vector z, x, grad, fnor;
  double fval = 0.0;
  double phival = 0.0;
  double chi = 0.0;

  double psi() const { return fval + phival; }
};

/// One prox evaluation plus one value/gradient evaluation.
inline NormalPoint eval_point(const ProblemHandle& p, const Vector& z, EvalCounters* counters = nullptr) {
  NormalPoint pt;
  pt.z = z;
  pt.x = p.prox->prox(z, p.lambda);
  auto [fval, grad] = p.smooth->value_grad(pt.x);
  pt.fval = fval;
  pt.grad = std::move(grad);
  pt.phival = p.prox->phi(pt.x);
  pt.fnor = pt.grad + (pt.z - pt.x) / p.lambda;
  pt.chi = pt.fnor.norm();
  if (counters) {
    ++counters->prox;
    ++counters->f;
    ++counters->grad;
  }
  return pt;
}

/// ||x - prox_{lambda_nat * phi}(x - lambda_nat * grad)|| with a precomputed
/// gradient; costs a single prox evaluation.
inline double natural_residual(const ProblemHandle& p, const Vector& x, const Vector& grad,
                               double lambda_nat = 1.0, EvalCounters* counters = nullptr) {
  if (counters) ++counters->prox;
  return (x - p.prox->prox(x - lambda_nat * grad, lambda_nat)).norm();
}

inline double natural_residual(const ProblemHandle& p, const Vector& x, double lambda_nat = 1.0,
                               EvalCounters* counters = nullptr) {
  if (counters) ++counters->grad;
  return natural_residual(p, x, p.smooth->gradient(x), lambda_nat, counters);
}

/// H(tau, z) = psi(prox(z)) + (tau*lambda/2) chi(z)^2, from cached fields only.
inline double merit(const ProblemHandle& p, double tau, const NormalPoint& pt) {
  return pt.psi() + 0.5 * tau * p.lambda * pt.chi * pt.chi;
}

/// Initial z0 with prox(z0) = x0 minimizing ||F(z0)|| over the prox preimage
/// of x0, computed blockwise for the separable/group regularizers; falls back
/// to z0 = x0 - lambda*grad(x0) otherwise.
inline Vector init_z0(const ProblemHandle& p, const Vector& x0, bool* used_fallback = nullptr,
                      EvalCounters* counters = nullptr) {
  if (!std::isfinite(p.prox->phi(x0)))
    throw std::invalid_argument("init_z0: x0 outside the domain of the regularizer");
  if (counters) ++counters->grad;
  const Vector g0 = p.smooth->gradient(x0);
  Vector target = x0 - p.lambda * g0;
  Vector z;
  if (p.prox->preimage_projection(x0, target, p.lambda, z)) {
    if (used_fallback) *used_fallback = false;
    return z;
  }
  if (used_fallback) *used_fallback = true;
  return target;
}

}  // namespace normsmooth
