#pragma once

#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <memory>
#include <numeric>
#include <sstream>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include <json.hpp>

#include "normsmooth/data.hpp"
#include "normsmooth/first_order.hpp"
#include "normsmooth/solver.hpp"

namespace normsmooth {

/// Everything one benchmark run needs, resolved from flags.
struct RunSpec {
  // data source (exactly one)
  std::string synth_kind;  // "logistic" | "sigmoid-ls"; empty when loading a file
  std::string data_path;
  std::string problem = "logistic";  // objective for file-backed data
  Index samples = 200;
  Index features = 50;
  double sparsity = 1.0;
  std::uint64_t seed = 1;
  Index dim_override = 0;

  // regularizer
  std::string reg = "auto";  // l1 | group | box | zero | auto
  Index group_size = 16;
  double mu = 0.002;

  // prox stepsize
  std::string lambda_rule = "absolute";  // absolute | 10overL
  double lambda = 10.0;

  // solver settings
  std::string hessian = "lbfgs";  // lbfgs | exact
  int lbfgs_memory = 10;
  double stop_tol = 1e-8;
  int max_iter = 500;
  int fo_max_iter = 50000;
  double cg_tol_exponent = -1.0;
  double cg_tol_bound = -1.0;
  double nat_res_stepsize = 1.0;

  // output
  std::string out_dir = ".";
  std::string format = "csv";
};

/// Owning bundle of the assembled problem.
struct BuiltProblem {
  Dataset dataset;
  std::unique_ptr<SmoothObjective> smooth;
  std::unique_ptr<ProxOperator> prox;
  double lambda = 1.0;
  Vector x0;

  ProblemHandle handle() const { return ProblemHandle(*smooth, *prox, lambda); }
};

inline std::string resolve_reg(const RunSpec& spec) {
  if (spec.reg != "auto") return spec.reg;
  const std::string kind = spec.synth_kind.empty() ? spec.problem : spec.synth_kind;
  return kind == "sigmoid-ls" ? "group" : "l1";
}

/// Random disjoint groups of the requested size covering all coordinates.
inline std::vector<std::vector<Index>> random_groups(Index n, Index group_size,
                                                     std::uint64_t seed) {
  std::vector<Index> order(n);
  std::iota(order.begin(), order.end(), Index{0});
  Rng rng(seed ^ 0x9e3779b97f4a7c15ull);
  rng.shuffle(order);
  std::vector<std::vector<Index>> groups;
  for (Index start = 0; start < n; start += group_size) {
    const Index stop = std::min(n, start + group_size);
    groups.emplace_back(order.begin() + start, order.begin() + stop);
  }
  return groups;
}

inline BuiltProblem build_problem(const RunSpec& spec) {
  if (spec.synth_kind.empty() == spec.data_path.empty())
    throw std::invalid_argument("exactly one data source (--synth or --data) is required");

  BuiltProblem built;
  std::string objective_kind;
  if (!spec.synth_kind.empty()) {
    built.dataset = synth_problem(spec.synth_kind, spec.samples, spec.features, spec.sparsity,
                                  spec.seed);
    objective_kind = spec.synth_kind;
  } else {
    built.dataset = load_libsvm(spec.data_path, spec.dim_override);
    objective_kind = spec.problem;
  }

  if (objective_kind == "logistic")
    built.smooth = std::make_unique<SmoothObjective>(
        SmoothObjective::logistic(built.dataset.A, built.dataset.b));
  else if (objective_kind == "sigmoid-ls")
    built.smooth = std::make_unique<SmoothObjective>(
        SmoothObjective::sigmoid_least_squares(built.dataset.A, built.dataset.b));
  else
    throw std::invalid_argument("unknown problem kind " + objective_kind);

  const Index n = built.dataset.features();
  const std::string reg = resolve_reg(spec);
  if (reg == "l1")
    built.prox = std::make_unique<ProxOperator>(ProxOperator::l1(spec.mu));
  else if (reg == "box")
    built.prox = std::make_unique<ProxOperator>(ProxOperator::box_plus_l1(spec.mu));
  else if (reg == "zero")
    built.prox = std::make_unique<ProxOperator>(ProxOperator::zero());
  else if (reg == "group")
    built.prox = std::make_unique<ProxOperator>(
        ProxOperator::group_l2(spec.mu, random_groups(n, spec.group_size, spec.seed)));
  else
    throw std::invalid_argument("unknown regularizer " + reg);

  if (spec.lambda_rule == "absolute") {
    built.lambda = spec.lambda;
  } else if (spec.lambda_rule == "10overL") {
    built.lambda = 10.0 / built.smooth->lipschitz_bound();
  } else {
    throw std::invalid_argument("unknown lambda rule " + spec.lambda_rule);
  }
  built.x0 = Vector::Zero(n);
  return built;
}

inline SolverConfig solver_config(const RunSpec& spec, const std::string& hessian) {
  SolverConfig cfg;
  cfg.hessian = hessian == "exact" ? HessianMode::Exact : HessianMode::LBFGS;
  cfg.lbfgs_memory = spec.lbfgs_memory;
  cfg.stop_tol = spec.stop_tol;
  cfg.max_iter = spec.max_iter;
  cfg.cg.tol_exponent = spec.cg_tol_exponent;
  cfg.cg.tol_bound = spec.cg_tol_bound;
  cfg.natural_residual_stepsize = spec.nat_res_stepsize;
  return cfg;
}

/// One finished run, trace still in memory (rel_err needs the shared psi*).
struct RunOutcome {
  std::string method;
  SolveStatus status = SolveStatus::MaxIterations;
  int iterations = 0;
  double final_psi = 0.0;
  double final_nat_res = 0.0;
  EvalCounters evals;
  double time_sec = 0.0;
  std::vector<TraceRecord> trace;
};

inline RunOutcome run_method(const BuiltProblem& built, const RunSpec& spec,
                             const std::string& method) {
  const ProblemHandle p = built.handle();
  RunOutcome out;
  out.method = method;
  const auto t0 = std::chrono::steady_clock::now();
  if (method == "lsssn-lbfgs" || method == "lsssn-exact") {
    SolveResult res =
        solve(p, solver_config(spec, method == "lsssn-exact" ? "exact" : "lbfgs"), built.x0);
    out.status = res.status;
    out.iterations = res.iterations;
    out.final_psi = res.final_point.psi();
    out.final_nat_res = res.trace.empty() ? -1.0 : res.trace.back().nat_res;
    out.evals = res.evals;
    out.trace = std::move(res.trace);
  } else if (method == "fista" || method == "prox-grad") {
    FirstOrderConfig cfg;
    cfg.method = method == "fista" ? FirstOrderConfig::Method::Fista
                                   : FirstOrderConfig::Method::ProxGrad;
    cfg.max_iter = spec.fo_max_iter;
    cfg.stop_tol = spec.stop_tol;
    cfg.natural_residual_stepsize = spec.nat_res_stepsize;
    FirstOrderResult res = run_first_order(p, cfg, built.x0);
    out.status = res.status;
    out.iterations = res.iterations;
    out.final_psi = res.final_psi;
    out.final_nat_res = res.final_nat_res;
    out.evals = res.evals;
    out.trace = std::move(res.trace);
  } else {
    throw std::invalid_argument("unknown method " + method);
  }
  out.time_sec = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return out;
}

/// Worker-slot cap: NORMSMOOTH_THREADS when set, hardware concurrency otherwise.
inline int worker_slots(int tasks) {
  int slots = static_cast<int>(std::thread::hardware_concurrency());
  if (const char* env = std::getenv("NORMSMOOTH_THREADS")) {
    const int requested = std::atoi(env);
    if (requested > 0) slots = requested;
  }
  return std::max(1, std::min(slots, tasks));
}

inline void run_parallel(std::vector<std::function<void()>> tasks) {
  const int slots = worker_slots(static_cast<int>(tasks.size()));
  if (slots <= 1) {
    for (auto& task : tasks) task();
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> workers;
  workers.reserve(slots);
  for (int w = 0; w < slots; ++w) {
    workers.emplace_back([&] {
      for (;;) {
        const std::size_t i = next.fetch_add(1);
        if (i >= tasks.size()) return;
        tasks[i]();
      }
    });
  }
  for (auto& worker : workers) worker.join();
}

inline void write_summary_csv(const std::vector<RunOutcome>& runs, const RunSpec& spec,
                              double psi_star, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("write_summary_csv: cannot open " + path);
  out << "method,status,iterations,final_psi,final_rel_err,final_nat_res,f_evals,grad_evals,"
         "prox_evals,rng,time_sec\n";
  const std::string rng =
      spec.synth_kind.empty() ? std::string("-") : std::string(Rng::algorithm());
  for (const RunOutcome& r : runs) {
    out << r.method << ',' << to_string(r.status) << ',' << r.iterations << ','
        << detail::fmt_double(r.final_psi) << ','
        << detail::fmt_double(detail::rel_err(r.final_psi, psi_star)) << ','
        << detail::fmt_double(r.final_nat_res) << ',' << r.evals.f << ',' << r.evals.grad << ','
        << r.evals.prox << ',' << rng << ',' << detail::fmt_double(r.time_sec) << '\n';
  }
}

struct BatchResult {
  std::vector<RunOutcome> runs;
  double psi_star = 0.0;
  std::vector<std::string> trace_paths;
  std::string summary_path;
};

inline std::string trace_extension(const RunSpec& spec) {
  return trace_format_from_string(spec.format) == TraceFormat::Csv ? "csv" : "jsonl";
}

/// Runs one method and writes its trace; rel_err is measured against the
/// run's own final value.
inline BatchResult run_solve(const RunSpec& spec, const std::string& method) {
  const BuiltProblem built = build_problem(spec);
  BatchResult batch;
  batch.runs.push_back(run_method(built, spec, method));
  batch.psi_star = batch.runs[0].final_psi;
  std::filesystem::create_directories(spec.out_dir);
  const std::string path = spec.out_dir + "/" + method + "." + trace_extension(spec);
  write_trace(batch.runs[0].trace, path, trace_format_from_string(spec.format), batch.psi_star);
  batch.trace_paths.push_back(path);
  batch.summary_path = spec.out_dir + "/summary.csv";
  write_summary_csv(batch.runs, spec, batch.psi_star, batch.summary_path);
  return batch;
}

/// Runs the four reference methods on one problem; psi* is the lowest final
/// objective value across them and feeds every rel_err column.
inline BatchResult run_compare(const RunSpec& spec) {
  const BuiltProblem built = build_problem(spec);
  const std::vector<std::string> methods = {"lsssn-lbfgs", "lsssn-exact", "fista", "prox-grad"};
  BatchResult batch;
  batch.runs.resize(methods.size());
  std::vector<std::function<void()>> tasks;
  for (std::size_t i = 0; i < methods.size(); ++i)
    tasks.push_back([&, i] { batch.runs[i] = run_method(built, spec, methods[i]); });
  run_parallel(std::move(tasks));

  batch.psi_star = batch.runs[0].final_psi;
  for (const RunOutcome& r : batch.runs) batch.psi_star = std::min(batch.psi_star, r.final_psi);

  std::filesystem::create_directories(spec.out_dir);
  for (const RunOutcome& r : batch.runs) {
    const std::string path = spec.out_dir + "/" + r.method + "." + trace_extension(spec);
    write_trace(r.trace, path, trace_format_from_string(spec.format), batch.psi_star);
    batch.trace_paths.push_back(path);
  }
  batch.summary_path = spec.out_dir + "/summary.csv";
  write_summary_csv(batch.runs, spec, batch.psi_star, batch.summary_path);
  return batch;
}

/// Sweeps the CG tolerance rule eps_k = min{chi^a, b} over the standard grid.
inline BatchResult run_ablate(const RunSpec& spec) {
  const BuiltProblem built = build_problem(spec);
  const std::vector<std::pair<double, double>> grid = {
      {1.5, 0.1}, {2.0, 0.05}, {2.5, 0.01}, {3.0, 0.001}};
  const std::string method = spec.hessian == "exact" ? "lsssn-exact" : "lsssn-lbfgs";

  BatchResult batch;
  batch.runs.resize(grid.size());
  std::vector<std::function<void()>> tasks;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    tasks.push_back([&, i] {
      RunSpec local = spec;
      local.cg_tol_exponent = grid[i].first;
      local.cg_tol_bound = grid[i].second;
      batch.runs[i] = run_method(built, local, method);
      std::ostringstream name;
      name << "ablate-a" << grid[i].first << "-b" << grid[i].second;
      batch.runs[i].method = name.str();
    });
  }
  run_parallel(std::move(tasks));

  batch.psi_star = batch.runs[0].final_psi;
  for (const RunOutcome& r : batch.runs) batch.psi_star = std::min(batch.psi_star, r.final_psi);

  std::filesystem::create_directories(spec.out_dir);
  for (const RunOutcome& r : batch.runs) {
    const std::string path = spec.out_dir + "/" + r.method + "." + trace_extension(spec);
    write_trace(r.trace, path, trace_format_from_string(spec.format), batch.psi_star);
    batch.trace_paths.push_back(path);
  }
  batch.summary_path = spec.out_dir + "/ablate-summary.csv";
  write_summary_csv(batch.runs, spec, batch.psi_star, batch.summary_path);
  return batch;
}

/// Fully resolved configuration for audit.
inline nlohmann::ordered_json resolved_config(const RunSpec& spec, const std::string& subcommand) {
  const SolverConfig cfg = solver_config(spec, spec.hessian);
  nlohmann::ordered_json j;
  j["subcommand"] = subcommand;
  j["source"] = spec.synth_kind.empty()
                    ? nlohmann::ordered_json{{"data", spec.data_path}, {"problem", spec.problem}}
                    : nlohmann::ordered_json{{"synth", spec.synth_kind},
                                             {"N", spec.samples},
                                             {"n", spec.features},
                                             {"sparsity", spec.sparsity},
                                             {"seed", spec.seed},
                                             {"rng", Rng::algorithm()}};
  j["regularizer"] = {{"kind", resolve_reg(spec)}, {"mu", spec.mu}, {"group_size", spec.group_size}};
  j["lambda"] = {{"rule", spec.lambda_rule}, {"value", spec.lambda}};
  j["solver"] = {{"hessian", spec.hessian},
                 {"lbfgs_memory", spec.lbfgs_memory},
                 {"stop_tol", cfg.stop_tol},
                 {"max_iter", cfg.max_iter},
                 {"natural_residual_stepsize", cfg.natural_residual_stepsize},
                 {"cg",
                  {{"tol_exponent", cfg.cg_exponent()},
                   {"tol_bound", cfg.cg_bound()},
                   {"cap_coarse", cfg.cg.cap_coarse},
                   {"cap_fine", cfg.cg.cap_fine},
                   {"cap_switch_chi", cfg.cg.cap_switch_chi}}},
                 {"grad_test",
                  {{"eta", cfg.grad_test.eta},
                   {"q", cfg.grad_test.exponent},
                   {"c", cfg.grad_test.scale}}},
                 {"linesearch",
                  {{"sigma", cfg.linesearch.sigma},
                   {"rho", cfg.linesearch.rho},
                   {"gamma", cfg.linesearch.gamma},
                   {"nu", cfg.linesearch.nu},
                   {"p", cfg.linesearch.p_exponent},
                   {"c", cfg.linesearch.scale_c},
                   {"lipschitz_fallback", cfg.linesearch.lipschitz_fallback},
                   {"tau_init", cfg.linesearch.tau_init},
                   {"max_backtracks", cfg.linesearch.max_backtracks}}}};
  j["first_order"] = {{"max_iter", spec.fo_max_iter}};
  j["output"] = {{"dir", spec.out_dir}, {"format", spec.format}};
  return j;
}

}  // namespace normsmooth
