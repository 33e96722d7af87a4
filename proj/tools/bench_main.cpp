// Benchmark harness: build a problem instance, run the configured
// solvers from x0 = 0, and export convergence traces as CSV or JSON.
//
//   bench run --problem lasso-gaussian --m 150 --n 300 --lambda 0.1
//             --seed 42 --solvers 0sr1,ista,fista,spg --tol 1e-8
//             --max-iters 2000 --format csv --out traces.csv
//   bench reference --problem nnls --m 40 --n 20 --budget 20000
//
// Exit codes: 0 success, 1 usage error, 2 solver failure.

#include <exception>
#include <iostream>

#include <CLI11.hpp>

#include "proxqn/bench.hpp"

namespace {

void add_problem_flags(CLI::App* cmd, proxqn::bench::BenchConfig& cfg) {
  cmd->add_option("--problem", cfg.problem,
                  "Problem kind: lasso-gaussian|lasso-pde|nnls|svm")
      ->check(CLI::IsMember({"lasso-gaussian", "lasso-pde", "nnls", "svm"}));
  cmd->add_option("--m", cfg.m, "Number of rows / samples");
  cmd->add_option("--n", cfg.n, "Number of columns (grid side for lasso-pde)");
  cmd->add_option("--lambda", cfg.lambda, "Regularization weight");
  cmd->add_option("--seed", cfg.seed, "Instance seed");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Composite-optimization benchmark harness"};
  app.require_subcommand(1);
  app.set_config("--config", "", "Read options from a key=value file");
  app.allow_config_extras(false);

  proxqn::bench::BenchConfig cfg;
  std::string solvers_csv = "0sr1,ista,fista,spg";

  CLI::App* run = app.add_subcommand("run", "Run solvers and export traces");
  add_problem_flags(run, cfg);
  run->add_option("--solvers", solvers_csv, "Comma-separated solver list");
  run->add_option("--tol", cfg.tol, "Stopping tolerance on the step norm");
  run->add_option("--max-iters", cfg.max_iters, "Iteration cap per solver");
  run->add_option("--format", cfg.format, "Output format: csv|json")
      ->check(CLI::IsMember({"csv", "json"}));
  run->add_option("--out", cfg.out, "Output path (default stdout)");
  run->add_flag("--parallel", cfg.parallel,
                "Run solvers concurrently (timings not comparable)");
  run->add_option("--reference-budget", cfg.reference_budget,
                  "Iteration budget for the reference optimum");

  CLI::App* ref = app.add_subcommand(
      "reference", "Print the reference optimum for a problem");
  add_problem_flags(ref, cfg);
  long budget = 20000;
  ref->add_option("--budget", budget, "Iteration budget (>= 10000)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (ref->parsed()) {
      const auto problem = proxqn::bench::build_problem(cfg);
      std::cout << proxqn::bench::format_double(
                       proxqn::bench::reference_optimum(problem, budget))
                << '\n';
      return 0;
    }

    cfg.solvers.clear();
    for (std::size_t pos = 0; pos <= solvers_csv.size();) {
      const std::size_t next = solvers_csv.find(',', pos);
      const std::string item = solvers_csv.substr(
          pos, next == std::string::npos ? std::string::npos : next - pos);
      if (!item.empty()) cfg.solvers.push_back(item);
      if (next == std::string::npos) break;
      pos = next + 1;
    }

    const auto traces = proxqn::bench::run(cfg);
    proxqn::bench::export_trace(traces, cfg.format, cfg.out, &cfg);
    for (const auto& t : traces) {
      if (t.status == proxqn::SolveStatus::Failed) {
        std::cerr << "bench: solver '" << t.solver << "' failed\n";
        return 2;
      }
    }
    return 0;
  } catch (const std::invalid_argument& e) {
    std::cerr << "bench: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "bench: " << e.what() << '\n';
    return 2;
  }
}
