#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

#include "proxqn/problems.hpp"
#include "proxqn/solvers.hpp"

namespace proxqn::bench {

struct BenchConfig {
  std::string problem = "lasso-gaussian";  // lasso-pde | nnls | svm
  int m = 150;
  int n = 300;  // grid side for lasso-pde
  double lambda = 0.1;
  std::uint64_t seed = 42;
  std::vector<std::string> solvers = {"0sr1", "ista", "fista", "spg"};
  double tol = 1e-8;
  int max_iters = 2000;
  std::string format = "csv";  // csv | json
  std::string out;             // empty -> stdout
  bool parallel = false;       // timing columns then not comparable
  long reference_budget = 20000;
};

// Problem instance described by the config.  Throws
// std::invalid_argument for an unknown problem kind.
CompositeProblem build_problem(const BenchConfig& cfg);

// Short hex digest identifying the instance (kind, shape, lambda, seed,
// data checksum); stamped into every trace of a run.
std::string problem_hash(const CompositeProblem& problem,
                         const BenchConfig& cfg);

// Best objective seen across a long FISTA run and a long 0SR1 run
// (budget iterations each, budget >= 10000), minus a margin of
// 1e-12*(1+|F|).
double reference_optimum(const CompositeProblem& problem, long budget);

// Runs every configured solver from x0 = 0 on the same instance and
// stamps each trace with the shared problem hash and the reference
// optimum for the obj_err column.  Solver failures are recorded in the
// trace; the run continues.  Throws std::invalid_argument on an invalid
// config (no solvers, bad names, nonpositive dimensions/tol).
std::vector<ConvergenceTrace> run(const BenchConfig& cfg);

// CSV with the exact header
//   solver,iter,elapsed_s,objective,obj_err,step_norm,step_t,n_grad,n_prox
// and shortest round-trip decimal formatting.  obj_err is objective
// minus the trace's reference (the trace's own minimum when no
// reference was stamped).
void export_csv(const std::vector<ConvergenceTrace>& traces,
                std::ostream& os);
void export_trace(const std::vector<ConvergenceTrace>& traces,
                  const std::string& format, const std::string& path,
                  const BenchConfig* cfg = nullptr);

nlohmann::json to_json(const std::vector<ConvergenceTrace>& traces,
                       const BenchConfig* cfg = nullptr);
std::vector<ConvergenceTrace> traces_from_json(const nlohmann::json& j);

// Shortest decimal representation that round-trips to the same double.
std::string format_double(double v);

}  // namespace proxqn::bench
