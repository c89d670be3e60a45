#pragma once

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <utility>

#include "normsmooth/newton_cg.hpp"
#include "normsmooth/normal_map.hpp"
#include "normsmooth/types.hpp"

namespace normsmooth {

struct LineSearchConfig {
  double sigma = 1e-4;               // sufficient decrease factor
  double rho = 0.5;                  // backtracking ratio
  double gamma = 0.9;                // safety factor in the tau update
  double nu = 1e-3;                  // cap of nu_k
  double p_exponent = 0.2;           // p in a_k = c k^p ln^{2p}(k)
  double scale_c = 1e-3;             // c in a_k
  double lipschitz_fallback = 1.0;   // used when the trial does not move the prox image
  double tau_init = 1e-3;            // tau_{-1}
  int max_backtracks = 50;
};

/// One fully evaluated trial point of the backtracking search.
struct TrialEvaluation {
  double alpha = 1.0;
  NormalPoint point;        // at z_k + s
  double u = 0.0;           // f(p) - f(x) - <grad f(x), p - x>
  double v = 0.0;           // ||p - x||
  double w = 0.0;           // ||grad f(p) - grad f(x)||
  double lip_estimate = 0.0;
  double tau = 0.0;
  double nu = 0.0;
  double lhs = 0.0;         // merit difference
  double rhs = 0.0;         // sufficient-decrease threshold
  bool accepted() const { return lhs <= rhs; }
};

/// Trial step s(alpha): alpha*lambda*d for first-order steps,
/// alpha*lambda*(d + alpha*e) for damped second-order steps.
inline Vector trial_step(StepFlag flag, const Vector& d, const Vector& e, double alpha, double lambda) {
  if (flag == StepFlag::FO) return alpha * lambda * d;
  return alpha * lambda * (d + alpha * e);
}

namespace detail {

/// prox + value + phi at z_trial; the gradient half is deferred.
struct PartialTrial {
  Vector z, x;
  double fval = std::numeric_limits<double>::infinity();
  double phival = std::numeric_limits<double>::infinity();
  bool finite = false;
};

inline PartialTrial partial_trial(const ProblemHandle& p, Vector z_trial, EvalCounters* counters) {
  PartialTrial t;
  t.z = std::move(z_trial);
  if (!t.z.allFinite()) return t;
  t.x = p.prox->prox(t.z, p.lambda);
  t.fval = p.smooth->value(t.x);
  t.phival = p.prox->phi(t.x);
  if (counters) {
    ++counters->prox;
    ++counters->f;
  }
  t.finite = std::isfinite(t.fval) && std::isfinite(t.phival);
  return t;
}

inline TrialEvaluation complete_trial(const ProblemHandle& p, const NormalPoint& base,
                                      PartialTrial&& partial, double alpha, int k,
                                      const LineSearchConfig& cfg, double tau_prev,
                                      EvalCounters* counters) {
  TrialEvaluation trial;
  trial.alpha = alpha;
  if (!partial.finite) {
    trial.lhs = std::numeric_limits<double>::infinity();
    trial.rhs = -1.0;
    trial.tau = tau_prev;
    trial.lip_estimate = cfg.lipschitz_fallback;
    return trial;
  }
  NormalPoint& pt = trial.point;
  pt.z = std::move(partial.z);
  pt.x = std::move(partial.x);
  pt.fval = partial.fval;
  pt.phival = partial.phival;
  pt.grad = p.smooth->gradient(pt.x);
  if (counters) ++counters->grad;
  pt.fnor = pt.grad + (pt.z - pt.x) / p.lambda;
  pt.chi = pt.fnor.norm();

  trial.u = pt.fval - base.fval - base.grad.dot(pt.x - base.x);
  trial.v = (pt.x - base.x).norm();
  trial.w = (pt.grad - base.grad).norm();
  trial.lip_estimate = trial.v != 0.0
                           ? std::max(2.0 * trial.u / (trial.v * trial.v), trial.w / trial.v)
                           : cfg.lipschitz_fallback;
  const double ak = growth_coefficient(k, cfg.scale_c, cfg.p_exponent);
  trial.nu = std::min(cfg.nu, ak * ak * std::pow(trial.v, 2.0 * cfg.p_exponent));
  const double lt = trial.lip_estimate;
  trial.tau = std::min(2.0 * cfg.gamma * (1.0 - trial.nu) / (lt * lt * p.lambda * p.lambda + 2.0),
                       tau_prev);
  trial.lhs = merit(p, trial.tau, pt) - merit(p, trial.tau, base);
  trial.rhs = -0.5 * cfg.sigma * p.lambda * trial.tau * alpha * base.chi * base.chi -
              trial.nu / (p.lambda * alpha) * trial.v * trial.v;
  if (!std::isfinite(trial.lhs)) {
    trial.lhs = std::numeric_limits<double>::infinity();
    trial.rhs = std::min(trial.rhs, -1.0);
  }
  return trial;
}

}  // namespace detail

/// Full evaluation of one trial step: one prox, one value, one gradient.
inline TrialEvaluation evaluate_trial(const ProblemHandle& p, const NormalPoint& base,
                                      const Vector& s, double alpha, int k,
                                      const LineSearchConfig& cfg, double tau_prev,
                                      EvalCounters* counters = nullptr) {
  return detail::complete_trial(p, base, detail::partial_trial(p, base.z + s, counters), alpha, k,
                                cfg, tau_prev, counters);
}

/// Cheap acceptance test psi(prox(z + s)) < H(tau_prev, z): one prox and one
/// value, no gradient. A false answer guarantees the full condition fails.
inline bool prescreen(const ProblemHandle& p, double tau_prev, const NormalPoint& base,
                      const Vector& s, EvalCounters* counters = nullptr) {
  const detail::PartialTrial t = detail::partial_trial(p, base.z + s, counters);
  if (!t.finite) return false;
  return t.fval + t.phival < merit(p, tau_prev, base);
}

class LinesearchError : public std::runtime_error {
 public:
  LinesearchError(const std::string& what, int backtracks, double alpha, double lhs, double rhs)
      : std::runtime_error(what), backtracks_(backtracks), alpha_(alpha), lhs_(lhs), rhs_(rhs) {}
  int backtracks() const { return backtracks_; }
  double alpha() const { return alpha_; }
  double lhs() const { return lhs_; }
  double rhs() const { return rhs_; }

 private:
  int backtracks_;
  double alpha_, lhs_, rhs_;
};

struct BacktrackResult {
  TrialEvaluation trial;
  int backtracks = 0;  // inner iterations spent, accepted trial included
};

/// Backtracking over alpha = rho^t. Gradient work is skipped until the
/// prescreen passes; from that stepsize on, trials are evaluated in full
/// until the sufficient-decrease condition holds.
inline BacktrackResult backtrack(const ProblemHandle& p, const NormalPoint& base, StepFlag flag,
                                 const Vector& d, const Vector& e, const LineSearchConfig& cfg,
                                 double tau_prev, int k, EvalCounters* counters = nullptr) {
  if (!(base.chi > 0.0)) throw std::logic_error("backtrack: base point is already stationary");
  const double base_merit_prev = merit(p, tau_prev, base);

  int t = 0;
  double alpha = 1.0;
  detail::PartialTrial partial;
  // Phase 1: prescreen only.
  for (;; ++t, alpha *= cfg.rho) {
    if (t > cfg.max_backtracks)
      throw LinesearchError("linesearch failure: prescreen never passed", t, alpha,
                            std::numeric_limits<double>::infinity(), 0.0);
    partial = detail::partial_trial(p, base.z + trial_step(flag, d, e, alpha, p.lambda), counters);
    if (partial.finite && partial.fval + partial.phival < base_merit_prev) break;
  }
  // Phase 2: full condition from the passing stepsize on.
  for (;;) {
    TrialEvaluation trial =
        detail::complete_trial(p, base, std::move(partial), alpha, k, cfg, tau_prev, counters);
    if (trial.accepted()) return {std::move(trial), t};
    ++t;
    alpha *= cfg.rho;
    if (t > cfg.max_backtracks)
      throw LinesearchError("linesearch failure: sufficient decrease never reached", t, trial.alpha,
                            trial.lhs, trial.rhs);
    partial = detail::partial_trial(p, base.z + trial_step(flag, d, e, alpha, p.lambda), counters);
  }
}

}  // namespace normsmooth
