#pragma once

#include <Eigen/Dense>

#include <functional>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "proxqn/metric_prox.hpp"
#include "proxqn/problems.hpp"

namespace proxqn {

// ---------------------------------------------------------------------------
// Traces shared by every solver.
// ---------------------------------------------------------------------------

enum class SolveStatus { Converged, MaxIters, Failed };

std::string to_string(SolveStatus s);

struct TraceRecord {
  int iter = 0;
  double objective = 0.0;
  double step_norm = 0.0;  // ||p_k|| before any line search
  double step_t = 1.0;     // accepted line-search step
  double elapsed_seconds = 0.0;
  long long n_grad = 0;  // cumulative gradient evaluations
  long long n_prox = 0;  // cumulative prox evaluations
};

struct ConvergenceTrace {
  std::string solver;
  std::vector<std::pair<std::string, std::string>> config;
  std::vector<TraceRecord> records;
  SolveStatus status = SolveStatus::MaxIters;
  bool monotone = false;  // objective guaranteed nonincreasing
  std::string problem_hash;
  // Reference optimum used for the obj_err column; NaN until a benchmark
  // run stamps it.
  double reference_objective = std::numeric_limits<double>::quiet_NaN();
};

struct SolveResult {
  Eigen::VectorXd x;
  ConvergenceTrace trace;
};

// ---------------------------------------------------------------------------
// Zero-memory SR1 quasi-Newton pieces.
// ---------------------------------------------------------------------------

struct QuasiNewtonPair {
  Eigen::VectorXd s;  // x_k - x_{k-1}
  Eigen::VectorXd y;  // grad f(x_k) - grad f(x_{k-1})
};

// Inverse-Hessian model H = h0*I + u u^T (u may be zero when the rank-1
// update is skipped).
struct InverseHessianModel {
  double h0 = 1.0;
  Eigen::VectorXd u;
};

enum class LineSearchMode { FixedT1, Backtracking };

struct SR1Config {
  double gamma = 0.8;  // scales the BB diagonal, keeps the update defined
  double tau_min = 1e-8;
  double tau_max = 1e8;
  double skip_rel_tol = 1e-8;
  double epsilon = 1e-8;  // stop when ||p_k|| < epsilon
  int max_iters = 1000;
  LineSearchMode line_search = LineSearchMode::Backtracking;
  // Test hook: called with every (k, pair, model) the solver produces.
  std::function<void(int, const QuasiNewtonPair&, const InverseHessianModel&)>
      on_update;
};

// One zero-memory SR1 model from the latest pair.  k = 1 returns the
// identity-scaled model (h0 = 1, u = 0).  For k >= 2:
//   tau = clamp(<s,y>/||y||^2, [tau_min, tau_max]),  h0 = gamma * tau,
//   u = (s - h0 y)/sqrt(<s - h0 y, y>)  unless the skip test
//   <s - h0 y, y> <= skip_rel_tol * ||y|| * ||s - h0 y||  fires (u = 0).
// Throws numerical_error when y = 0 while s != 0 (caller treats as skip).
InverseHessianModel sr1_update(int k, const QuasiNewtonPair& pair,
                               const SR1Config& cfg);

// Backtracking line search on the full objective: halve t from 1 until
//   F(x + t p) <= F(x) - 1e-4 * t * ||p||^2
// (at most 30 halvings; returns t = 0 when no decrease was found).
struct LineSearchResult {
  double t = 1.0;
  Eigen::VectorXd x_next;
  double f_next = 0.0;
};
LineSearchResult line_search(
    const std::function<double(const Eigen::VectorXd&)>& objective,
    const Eigen::VectorXd& x, const Eigen::VectorXd& p);

// ---------------------------------------------------------------------------
// Solvers.  Each runs from x0, owns its state exclusively, and emits a
// ConvergenceTrace.  x0 must be feasible (h(x0) finite).
// ---------------------------------------------------------------------------

// Proximal quasi-Newton with the diagonal+rank-1 inverse-Hessian model:
//   x^ = prox^{H^{-1}}_h(x - H grad f(x)),  p = x^ - x,
// stop on ||p|| < epsilon, then line-search along x + t p.  The first
// iterate is produced by one proximal-gradient step at t = 1/L.
SolveResult solve_0sr1(const CompositeProblem& problem,
                       const Eigen::VectorXd& x0, const SR1Config& cfg);

// Proximal gradient with a fixed step (step in (0, 2/L); monotone for
// step <= 1/L).
SolveResult solve_ista(const CompositeProblem& problem,
                       const Eigen::VectorXd& x0, double step, double tol,
                       int max_iters);

struct FistaConfig {
  double tau_min = 1e-8;
  double tau_max = 1e8;
  double tol = 1e-8;
  int max_iters = 1000;
  // Test hook: called with the iteration index whenever the momentum is
  // reset by the restart test.
  std::function<void(int)> on_restart;
};

// Accelerated proximal gradient with a Barzilai-Borwein step, a
// backtracking safeguard on the quadratic upper bound, and gradient-test
// adaptive restart.
SolveResult solve_fista(const CompositeProblem& problem,
                        const Eigen::VectorXd& x0, const FistaConfig& cfg);

struct SpgConfig {
  double tau_min = 1e-8;
  double tau_max = 1e8;
  double tol = 1e-8;
  int max_iters = 1000;
  int memory = 10;  // nonmonotone window
  // Test hook: (iter, tau_bb1, tau_bb2) whenever a pair with <s,y> > 0
  // is available.
  std::function<void(int, double, double)> on_bb;
};

// Spectral proximal gradient: BB step lengths (tau_BB1 on odd
// iterations, tau_BB2 on even), nonmonotone acceptance over a sliding
// window.
SolveResult solve_spg(const CompositeProblem& problem,
                      const Eigen::VectorXd& x0, const SpgConfig& cfg);

}  // namespace proxqn
