#pragma once

#include <chrono>
#include <cmath>
#include <utility>
#include <vector>

#include "normsmooth/normal_map.hpp"
#include "normsmooth/solver.hpp"
#include "normsmooth/types.hpp"

namespace normsmooth {

/// Proximal gradient and FISTA reference methods. FISTA assumes a convex
/// smooth part; this is documented, not checked.
struct FirstOrderConfig {
  enum class Method { Fista, ProxGrad };
  Method method = Method::Fista;
  double fixed_step = 0.0;  // 0 selects 1/L from the closed-form bound
  int max_iter = 50000;
  double stop_tol = 1e-8;
  double natural_residual_stepsize = 1.0;
  bool adaptive_restart = false;  // off by default: plain accelerated method
  bool collect_trace = true;
};

struct FirstOrderResult {
  Vector x;
  SolveStatus status = SolveStatus::MaxIterations;
  std::vector<TraceRecord> trace;
  EvalCounters evals;
  int iterations = 0;
  double final_psi = 0.0;
  double final_nat_res = 0.0;
  double step = 0.0;
};

inline FirstOrderResult run_first_order(const ProblemHandle& p, const FirstOrderConfig& cfg,
                                        const Vector& x0) {
  using clock = std::chrono::steady_clock;
  const auto t0 = clock::now();
  auto elapsed = [&t0] { return std::chrono::duration<double>(clock::now() - t0).count(); };

  if (!std::isfinite(p.prox->phi(x0)))
    throw std::invalid_argument("run_first_order: x0 outside the domain of the regularizer");

  FirstOrderResult out;
  out.step = cfg.fixed_step > 0.0 ? cfg.fixed_step : 1.0 / p.smooth->lipschitz_bound();
  const double step = out.step;

  Vector x = x0;
  Vector y = x0;
  double t_momentum = 1.0;

  int k = 0;
  for (; k <= cfg.max_iter; ++k) {
    auto [fx, gx] = p.smooth->value_grad(x);
    ++out.evals.f;
    ++out.evals.grad;
    const double psi = fx + p.prox->phi(x);
    const double nat =
        natural_residual(p, x, gx, cfg.natural_residual_stepsize, &out.evals);
    if (cfg.collect_trace) {
      TraceRecord row;
      row.iter = k;
      row.chi = nat;  // criticality proxy: first-order methods carry no normal map
      row.nat_res = nat;
      row.psi = psi;
      row.merit = psi;
      row.alpha = step;
      row.f_evals = out.evals.f;
      row.grad_evals = out.evals.grad;
      row.prox_evals = out.evals.prox;
      row.time_sec = elapsed();
      out.trace.push_back(row);
    }
    out.final_psi = psi;
    out.final_nat_res = nat;
    if (nat < cfg.stop_tol) {
      out.status = SolveStatus::Converged;
      break;
    }
    if (k == cfg.max_iter) break;

    if (cfg.method == FirstOrderConfig::Method::ProxGrad) {
      x = p.prox->prox(x - step * gx, step);
      ++out.evals.prox;
    } else {
      Vector gy = std::move(gx);
      if ((y - x).norm() != 0.0) {
        gy = p.smooth->gradient(y);
        ++out.evals.grad;
      }
      Vector xn = p.prox->prox(y - step * gy, step);
      ++out.evals.prox;
      const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t_momentum * t_momentum));
      if (cfg.adaptive_restart && (y - xn).dot(xn - x) > 0.0) {
        y = xn;
        t_momentum = 1.0;
      } else {
        y = xn + ((t_momentum - 1.0) / t_next) * (xn - x);
        t_momentum = t_next;
      }
      x = std::move(xn);
    }
  }
  out.iterations = k;
  out.x = std::move(x);
  return out;
}

}  // namespace normsmooth
