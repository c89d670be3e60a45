#pragma once

#include <chrono>
#include <cmath>
#include <cstdio>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "normsmooth/hessian.hpp"
#include "normsmooth/linesearch.hpp"
#include "normsmooth/newton_cg.hpp"
#include "normsmooth/normal_map.hpp"
#include "normsmooth/types.hpp"

namespace normsmooth {

enum class HessianMode { LBFGS, Exact };

/// CG tolerance rule eps_k = min{chi^exponent, bound} plus iteration caps.
/// Negative exponent/bound select the per-mode defaults: (2.5, 0.01) for the
/// limited-memory model and (1.4, 0.1) for the exact Hessian.
struct CgConfig {
  double tol_exponent = -1.0;
  double tol_bound = -1.0;
  int cap_coarse = 10;
  int cap_fine = 100;            // exact-Hessian cap once chi is small
  double cap_switch_chi = 1e-4;  // chi threshold between the two caps
};

struct SolverConfig {
  LineSearchConfig linesearch;
  GradTestConfig grad_test;
  CgConfig cg;
  HessianMode hessian = HessianMode::LBFGS;
  int lbfgs_memory = 10;
  double stop_tol = 1e-8;
  int max_iter = 500;
  double natural_residual_stepsize = 1.0;  // stepsize of the stopping residual
  bool collect_trace = true;
  int print_every = 0;

  double cg_exponent() const {
    if (cg.tol_exponent >= 0.0) return cg.tol_exponent;
    return hessian == HessianMode::Exact ? 1.4 : 2.5;
  }
  double cg_bound() const {
    if (cg.tol_bound >= 0.0) return cg.tol_bound;
    return hessian == HessianMode::Exact ? 0.1 : 0.01;
  }
};

enum class TraceFlag { FO, SO, None };
enum class TraceCg { Tol, ZeroStart, NegCurv, Cap, None };

inline const char* to_string(TraceFlag f) {
  switch (f) {
    case TraceFlag::FO: return "FO";
    case TraceFlag::SO: return "SO";
    case TraceFlag::None: return "none";
  }
  return "none";
}

inline const char* to_string(TraceCg s) {
  switch (s) {
    case TraceCg::Tol: return "tol";
    case TraceCg::ZeroStart: return "zero-start";
    case TraceCg::NegCurv: return "neg-curv";
    case TraceCg::Cap: return "cap";
    case TraceCg::None: return "none";
  }
  return "none";
}

inline TraceCg to_trace(CGStatus s) {
  switch (s) {
    case CGStatus::TolConverged: return TraceCg::Tol;
    case CGStatus::ZeroResidualStart: return TraceCg::ZeroStart;
    case CGStatus::NegativeCurvature: return TraceCg::NegCurv;
    case CGStatus::IterationCap: return TraceCg::Cap;
  }
  return TraceCg::None;
}

/// One diagnostics row per outer iteration: the state at iterate k plus the
/// step taken from it. A terminal row carries the final state with no step
/// (flag "none", alpha 0).
struct TraceRecord {
  int iter = 0;
  double chi = 0.0;
  double nat_res = 0.0;
  double psi = 0.0;
  double merit = 0.0;
  double alpha = 0.0;
  double tau = 0.0;
  double lip_est = 0.0;
  double nu = 0.0;
  TraceFlag flag = TraceFlag::None;
  int cg_iterations = 0;
  TraceCg cg_status = TraceCg::None;
  int backtracks = 0;
  long f_evals = 0;
  long grad_evals = 0;
  long prox_evals = 0;
  double time_sec = 0.0;
};

enum class SolveStatus { Converged, MaxIterations, LinesearchFailure, NumericalBreakdown };

inline const char* to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::Converged: return "converged";
    case SolveStatus::MaxIterations: return "max-iter";
    case SolveStatus::LinesearchFailure: return "linesearch-failure";
    case SolveStatus::NumericalBreakdown: return "numerical-breakdown";
  }
  return "unknown";
}

struct SolveResult {
  Vector x;
  NormalPoint final_point;
  SolveStatus status = SolveStatus::MaxIterations;
  std::vector<TraceRecord> trace;
  EvalCounters evals;
  int iterations = 0;
  bool init_fallback = false;
  double nu_weighted_step_sum = 0.0;  // running sum of nu_k ||x_{k+1} - x_k||^2
  std::string message;
};

/// Linesearch normal-map semismooth Newton driver: per iteration builds the
/// generalized derivative and Newton operator, solves the reduced system by
/// CG, classifies the curvature correction through the gradient-related
/// test, backtracks on the merit function, and refreshes the Hessian model.
/// Stops when the natural residual at unit stepsize falls below stop_tol.
inline SolveResult solve(const ProblemHandle& p, const SolverConfig& cfg, const Vector& x0) {
  using clock = std::chrono::steady_clock;
  const auto t0 = clock::now();
  auto elapsed = [&t0] {
    return std::chrono::duration<double>(clock::now() - t0).count();
  };

  SolveResult out;
  Vector z0 = init_z0(p, x0, &out.init_fallback, &out.evals);
  NormalPoint pt = eval_point(p, z0, &out.evals);

  HessianModel model = cfg.hessian == HessianMode::Exact
                           ? HessianModel::exact(*p.smooth)
                           : HessianModel::lbfgs(pt.x.size(), cfg.lbfgs_memory);
  if (cfg.hessian == HessianMode::Exact) model.set_point(pt.x);

  double tau_prev = cfg.linesearch.tau_init;
  out.status = SolveStatus::MaxIterations;

  auto push_final_row = [&](int k, double nat) {
    if (!cfg.collect_trace) return;
    TraceRecord row;
    row.iter = k;
    row.chi = pt.chi;
    row.nat_res = nat;
    row.psi = pt.psi();
    row.merit = merit(p, tau_prev, pt);
    row.tau = tau_prev;
    row.f_evals = out.evals.f;
    row.grad_evals = out.evals.grad;
    row.prox_evals = out.evals.prox;
    row.time_sec = elapsed();
    out.trace.push_back(row);
  };

  int k = 0;
  for (; k < cfg.max_iter; ++k) {
    if (!std::isfinite(pt.chi)) {
      out.status = SolveStatus::NumericalBreakdown;
      out.message = "non-finite criticality measure at iteration " + std::to_string(k);
      push_final_row(k, -1.0);  // residual unknown at a non-finite iterate
      break;
    }
    const double nat =
        natural_residual(p, pt.x, pt.grad, cfg.natural_residual_stepsize, &out.evals);
    if (nat < cfg.stop_tol) {
      out.status = SolveStatus::Converged;
      push_final_row(k, nat);
      break;
    }

    const ProxDerivative deriv = p.prox->derivative(pt.z, p.lambda);
    const NewtonOperator op(model, deriv, p.lambda);
    const Vector g = deriv.apply(pt.fnor);
    const double eps_k = std::min(std::pow(pt.chi, cfg.cg_exponent()), cfg.cg_bound());
    const int cap = cfg.hessian == HessianMode::Exact
                        ? (pt.chi > cfg.cg.cap_switch_chi ? cfg.cg.cap_coarse : cfg.cg.cap_fine)
                        : cfg.cg.cap_coarse;

    CGOutcome cgout;
    BacktrackResult bt;
    StepFlag flag = StepFlag::FO;
    try {
      cgout = cg_solve(op, g, eps_k, cap);
      auto [d, e] = recover_directions(op, cgout.q, pt.fnor);
      flag = gradient_related_test(e, pt.chi, k, cfg.grad_test);
      bt = backtrack(p, pt, flag, d, e, cfg.linesearch, tau_prev, k, &out.evals);
    } catch (const NumericalBreakdownError& err) {
      out.status = SolveStatus::NumericalBreakdown;
      out.message = std::string(err.what()) + " at outer iteration " + std::to_string(k);
      push_final_row(k, nat);
      break;
    } catch (const LinesearchError& err) {
      out.status = SolveStatus::LinesearchFailure;
      out.message = std::string(err.what()) + " at outer iteration " + std::to_string(k) +
                    " (alpha=" + std::to_string(err.alpha()) + ")";
      push_final_row(k, nat);
      break;
    }

    if (cfg.collect_trace) {
      TraceRecord row;
      row.iter = k;
      row.chi = pt.chi;
      row.nat_res = nat;
      row.psi = pt.psi();
      row.merit = merit(p, bt.trial.tau, pt);
      row.alpha = bt.trial.alpha;
      row.tau = bt.trial.tau;
      row.lip_est = bt.trial.lip_estimate;
      row.nu = bt.trial.nu;
      row.flag = flag == StepFlag::SO ? TraceFlag::SO : TraceFlag::FO;
      row.cg_iterations = cgout.iterations;
      row.cg_status = to_trace(cgout.status);
      row.backtracks = bt.backtracks;
      row.f_evals = out.evals.f;
      row.grad_evals = out.evals.grad;
      row.prox_evals = out.evals.prox;
      row.time_sec = elapsed();
      out.trace.push_back(row);
    }
    if (cfg.print_every > 0 && k % cfg.print_every == 0) {
      std::printf("iter %4d  chi %.3e  nat %.3e  psi %.9e  alpha %.3g  %s\n", k, pt.chi, nat,
                  pt.psi(), bt.trial.alpha, flag == StepFlag::SO ? "SO" : "FO");
    }

    if (cfg.hessian == HessianMode::Exact) {
      model.set_point(bt.trial.point.x);
    } else {
      model.update(bt.trial.point.x - pt.x, bt.trial.point.grad - pt.grad);
    }
    out.nu_weighted_step_sum += bt.trial.nu * bt.trial.v * bt.trial.v;
    tau_prev = bt.trial.tau;
    pt = std::move(bt.trial.point);
  }

  if (k == cfg.max_iter && out.status == SolveStatus::MaxIterations) {
    const double nat =
        natural_residual(p, pt.x, pt.grad, cfg.natural_residual_stepsize, &out.evals);
    push_final_row(k, nat);
  }
  out.iterations = k;
  out.x = pt.x;
  out.final_point = std::move(pt);
  return out;
}

}  // namespace normsmooth
