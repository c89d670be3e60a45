// Benchmark harness: solve one problem with one method, compare the Newton
// solver against first-order baselines, or sweep the CG tolerance rule.
// Traces are written per run as <method>.<format> under --out.

#include <cstdio>
#include <exception>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "normsmooth/bench.hpp"

namespace {

void add_common_options(CLI::App* cmd, normsmooth::RunSpec& spec) {
  cmd->add_option("--synth", spec.synth_kind, "synthetic problem kind (logistic | sigmoid-ls)");
  cmd->add_option("--data", spec.data_path, "libsvm text file");
  cmd->add_option("--problem", spec.problem,
                  "objective for file-backed data (logistic | sigmoid-ls)");
  cmd->add_option("--N", spec.samples, "synthetic sample count");
  cmd->add_option("--n", spec.features, "synthetic feature count");
  cmd->add_option("--sparsity", spec.sparsity, "synthetic fill-in, (0,1]");
  cmd->add_option("--seed", spec.seed, "synthesis seed");
  cmd->add_option("--dims", spec.dim_override, "feature-count override for libsvm files");
  cmd->add_option("--reg", spec.reg, "regularizer (l1 | group | box | zero | auto)");
  cmd->add_option("--group-size", spec.group_size, "group size for the group regularizer");
  cmd->add_option("--mu", spec.mu, "regularization weight");
  cmd->add_option("--lambda", spec.lambda, "prox stepsize (absolute rule)");
  cmd->add_option("--lambda-rule", spec.lambda_rule, "absolute | 10overL");
  cmd->add_option("--memory", spec.lbfgs_memory, "limited-memory pair count");
  cmd->add_option("--tol", spec.stop_tol, "stopping tolerance on the natural residual");
  cmd->add_option("--nat-stepsize", spec.nat_res_stepsize,
                  "stepsize of the stopping residual (default 1)");
  cmd->add_option("--max-iter", spec.max_iter, "outer iteration budget");
  cmd->add_option("--fo-max-iter", spec.fo_max_iter, "first-order iteration budget");
  cmd->add_option("--cg-exponent", spec.cg_tol_exponent, "CG tolerance exponent a");
  cmd->add_option("--cg-bound", spec.cg_tol_bound, "CG tolerance bound b");
  cmd->add_option("--out", spec.out_dir, "output directory");
  cmd->add_option("--format", spec.format, "trace format (csv | jsonl)");
}

void print_summary(const normsmooth::BatchResult& batch) {
  std::printf("%-18s %-12s %8s %16s %12s %12s\n", "method", "status", "iters", "final_psi",
              "rel_err", "nat_res");
  for (const auto& r : batch.runs) {
    std::printf("%-18s %-12s %8d %16.9e %12.3e %12.3e\n", r.method.c_str(),
                normsmooth::to_string(r.status), r.iterations, r.final_psi,
                normsmooth::detail::rel_err(r.final_psi, batch.psi_star), r.final_nat_res);
  }
}

int exit_code(const normsmooth::BatchResult& batch) {
  for (const auto& r : batch.runs)
    if (r.status != normsmooth::SolveStatus::Converged) return 2;
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"composite-optimization benchmark harness (normal-map semismooth Newton)"};
  app.require_subcommand(1);

  normsmooth::RunSpec spec;
  bool print_config = false;
  std::string method = "lsssn-lbfgs";
  std::string hessian;

  CLI::App* solve_cmd = app.add_subcommand("solve", "run one method and write a trace");
  add_common_options(solve_cmd, spec);
  solve_cmd->add_option("--method", method,
                        "lsssn-lbfgs | lsssn-exact | fista | prox-grad (default lsssn-lbfgs)");
  solve_cmd->add_option("--hessian", hessian, "lbfgs | exact (shorthand for --method lsssn-*)");
  solve_cmd->add_flag("--print-config", print_config, "dump the resolved configuration and exit");

  CLI::App* compare_cmd =
      app.add_subcommand("compare", "run lsssn-lbfgs, lsssn-exact, fista, prox-grad");
  add_common_options(compare_cmd, spec);
  compare_cmd->add_flag("--print-config", print_config, "dump the resolved configuration and exit");

  CLI::App* ablate_cmd = app.add_subcommand("ablate", "sweep the CG tolerance rule");
  add_common_options(ablate_cmd, spec);
  ablate_cmd->add_option("--hessian", spec.hessian, "lbfgs | exact");
  ablate_cmd->add_flag("--print-config", print_config, "dump the resolved configuration and exit");

  if (argc <= 1) {
    std::cout << app.help() << std::endl;
    return 1;
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  try {
    if (solve_cmd->parsed()) {
      if (!hessian.empty()) method = hessian == "exact" ? "lsssn-exact" : "lsssn-lbfgs";
      spec.hessian = method == "lsssn-exact" ? "exact" : "lbfgs";
      if (print_config) {
        std::cout << normsmooth::resolved_config(spec, "solve").dump(2) << std::endl;
        return 0;
      }
      const auto batch = normsmooth::run_solve(spec, method);
      print_summary(batch);
      return exit_code(batch);
    }
    if (compare_cmd->parsed()) {
      if (print_config) {
        std::cout << normsmooth::resolved_config(spec, "compare").dump(2) << std::endl;
        return 0;
      }
      const auto batch = normsmooth::run_compare(spec);
      print_summary(batch);
      return exit_code(batch);
    }
    if (ablate_cmd->parsed()) {
      if (print_config) {
        std::cout << normsmooth::resolved_config(spec, "ablate").dump(2) << std::endl;
        return 0;
      }
      const auto batch = normsmooth::run_ablate(spec);
      print_summary(batch);
      return exit_code(batch);
    }
  } catch (const std::invalid_argument& e) {
    std::cerr << "usage error: " << e.what() << std::endl;
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << std::endl;
    return 2;
  }
  return 1;
}
