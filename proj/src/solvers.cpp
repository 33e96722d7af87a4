#include "proxqn/solvers.hpp"

#include <chrono>
#include <cmath>
#include <deque>
#include <stdexcept>

namespace proxqn {

std::string to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::Converged:
      return "converged";
    case SolveStatus::MaxIters:
      return "max_iters";
    case SolveStatus::Failed:
      return "failed";
  }
  return "unknown";
}

namespace {

constexpr double kSufficientDecrease = 1e-4;

class Stopwatch {
 public:
  Stopwatch() : start_(std::chrono::steady_clock::now()) {}
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                         start_)
        .count();
  }

 private:
  std::chrono::steady_clock::time_point start_;
};

void check_start_point(const CompositeProblem& problem,
                       const Eigen::VectorXd& x0) {
  if (x0.size() != problem.dimension) {
    throw std::invalid_argument("solver: x0 dimension mismatch");
  }
  if (!std::isfinite(objective_value(problem, x0))) {
    throw std::invalid_argument("solver: x0 is infeasible (F(x0) not finite)");
  }
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%g", v);
  return buf;
}

}  // namespace

// ---------------------------------------------------------------------------
// Zero-memory SR1 update.
// ---------------------------------------------------------------------------

InverseHessianModel sr1_update(int k, const QuasiNewtonPair& pair,
                               const SR1Config& cfg) {
  if (cfg.gamma <= 0 || cfg.gamma >= 1) {
    throw std::invalid_argument("sr1_update: gamma must lie in (0, 1)");
  }
  if (cfg.tau_min <= 0 || cfg.tau_min >= cfg.tau_max) {
    throw std::invalid_argument("sr1_update: need 0 < tau_min < tau_max");
  }
  InverseHessianModel model;
  if (k <= 1) {
    model.h0 = 1.0;
    model.u = Eigen::VectorXd::Zero(pair.s.size());
    return model;
  }
  const double yy = pair.y.squaredNorm();
  if (yy == 0.0) {
    if (!pair.s.isZero(0.0)) {
      throw numerical_error("sr1_update: degenerate curvature (y = 0, s != 0)");
    }
    model.h0 = 1.0;
    model.u = Eigen::VectorXd::Zero(pair.s.size());
    return model;
  }
  const double tau_bb2 = pair.s.dot(pair.y) / yy;
  const double tau = std::min(std::max(tau_bb2, cfg.tau_min), cfg.tau_max);
  model.h0 = cfg.gamma * tau;
  const Eigen::VectorXd r = pair.s - model.h0 * pair.y;
  const double ry = r.dot(pair.y);
  if (ry <= cfg.skip_rel_tol * pair.y.norm() * r.norm()) {
    model.u = Eigen::VectorXd::Zero(pair.s.size());  // skip the update
    return model;
  }
  model.u = r / std::sqrt(ry);
  return model;
}

// ---------------------------------------------------------------------------
// Line search.
// ---------------------------------------------------------------------------

LineSearchResult line_search(
    const std::function<double(const Eigen::VectorXd&)>& objective,
    const Eigen::VectorXd& x, const Eigen::VectorXd& p) {
  LineSearchResult r;
  const double f_x = objective(x);
  if (!std::isfinite(f_x)) {
    throw std::invalid_argument("line_search: F(x) must be finite");
  }
  const double p2 = p.squaredNorm();
  if (p2 == 0.0) {
    r.t = 1.0;
    r.x_next = x;
    r.f_next = f_x;
    return r;
  }
  double t = 1.0;
  for (int halvings = 0; halvings <= 30; ++halvings) {
    Eigen::VectorXd cand = x + t * p;
    const double f_cand = objective(cand);
    if (f_cand <= f_x - kSufficientDecrease * t * p2) {
      r.t = t;
      r.x_next = std::move(cand);
      r.f_next = f_cand;
      return r;
    }
    t *= 0.5;
  }
  r.t = 0.0;  // no decrease found; caller terminates with Failed
  r.x_next = x;
  r.f_next = f_x;
  return r;
}

// ---------------------------------------------------------------------------
// 0SR1 proximal quasi-Newton.
// ---------------------------------------------------------------------------

SolveResult solve_0sr1(const CompositeProblem& problem,
                       const Eigen::VectorXd& x0, const SR1Config& cfg) {
  check_start_point(problem, x0);
  if (problem.smooth.lipschitz <= 0) {
    throw std::invalid_argument("solve_0sr1: problem needs a Lipschitz bound");
  }
  Stopwatch clock;
  ConvergenceTrace trace;
  trace.solver = "0sr1";
  trace.monotone = cfg.line_search == LineSearchMode::Backtracking;
  trace.config = {{"gamma", fmt(cfg.gamma)},
                  {"tau_min", fmt(cfg.tau_min)},
                  {"tau_max", fmt(cfg.tau_max)},
                  {"epsilon", fmt(cfg.epsilon)},
                  {"max_iters", std::to_string(cfg.max_iters)},
                  {"line_search",
                   cfg.line_search == LineSearchMode::Backtracking
                       ? "backtracking"
                       : "fixed_t1"}};
  long long n_grad = 0, n_prox = 0;
  const auto F = [&problem](const Eigen::VectorXd& v) {
    return objective_value(problem, v);
  };

  // Bootstrap: one proximal-gradient step at t = 1/L generates the first
  // quasi-Newton pair.
  const double t0 = 1.0 / problem.smooth.lipschitz;
  Eigen::VectorXd x_prev = x0;
  Eigen::VectorXd g_prev = problem.smooth.grad(x_prev);
  ++n_grad;
  Eigen::VectorXd x = prox_separable(problem.nonsmooth, t0, x_prev - t0 * g_prev);
  ++n_prox;
  Eigen::VectorXd g = problem.smooth.grad(x);
  ++n_grad;
  double f_curr = F(x);
  trace.records.push_back({1, f_curr, (x - x_prev).norm(), 1.0,
                           clock.seconds(), n_grad, n_prox});

  double last_h0 = t0;
  for (int k = 2; k <= cfg.max_iters; ++k) {
    QuasiNewtonPair pair{x - x_prev, g - g_prev};
    InverseHessianModel model;
    try {
      model = sr1_update(k, pair, cfg);
      last_h0 = model.h0;
    } catch (const numerical_error&) {
      // Degenerate curvature: keep the last diagonal, skip the rank-1 term.
      model.h0 = last_h0;
      model.u = Eigen::VectorXd::Zero(x.size());
    }
    if (cfg.on_update) cfg.on_update(k, pair, model);

    const DiagRank1Metric H{Eigen::VectorXd::Constant(x.size(), model.h0),
                            model.u};
    MetricProxResult step;
    try {
      step = prox_inverse_metric_separable(problem.nonsmooth, H,
                                           x - apply(H, g));
      ++n_prox;
    } catch (const numerical_error&) {
      trace.status = SolveStatus::Failed;
      return {x, std::move(trace)};
    }
    const Eigen::VectorXd p = step.z - x;
    const double p_norm = p.norm();
    if (p_norm < cfg.epsilon) {
      trace.records.push_back({k, f_curr, p_norm, 0.0, clock.seconds(),
                               n_grad, n_prox});
      trace.status = SolveStatus::Converged;
      return {x, std::move(trace)};
    }

    double t = 1.0;
    Eigen::VectorXd x_next;
    if (cfg.line_search == LineSearchMode::Backtracking) {
      LineSearchResult ls = line_search(F, x, p);
      if (ls.t == 0.0) {
        trace.records.push_back({k, f_curr, p_norm, 0.0, clock.seconds(),
                                 n_grad, n_prox});
        trace.status = SolveStatus::Failed;
        return {x, std::move(trace)};
      }
      t = ls.t;
      x_next = std::move(ls.x_next);
      f_curr = ls.f_next;
    } else {
      x_next = step.z;
      f_curr = F(x_next);
    }
    x_prev = std::move(x);
    g_prev = std::move(g);
    x = std::move(x_next);
    g = problem.smooth.grad(x);
    ++n_grad;
    trace.records.push_back({k, f_curr, p_norm, t, clock.seconds(), n_grad,
                             n_prox});
  }
  trace.status = SolveStatus::MaxIters;
  return {x, std::move(trace)};
}

// ---------------------------------------------------------------------------
// ISTA.
// ---------------------------------------------------------------------------

SolveResult solve_ista(const CompositeProblem& problem,
                       const Eigen::VectorXd& x0, double step, double tol,
                       int max_iters) {
  check_start_point(problem, x0);
  if (step <= 0 ||
      (problem.smooth.lipschitz > 0 && step >= 2.0 / problem.smooth.lipschitz)) {
    throw std::invalid_argument("solve_ista: step must lie in (0, 2/L)");
  }
  Stopwatch clock;
  ConvergenceTrace trace;
  trace.solver = "ista";
  trace.monotone = problem.smooth.lipschitz <= 0 ||
                   step <= 1.0 / problem.smooth.lipschitz;
  trace.config = {{"step", fmt(step)},
                  {"tol", fmt(tol)},
                  {"max_iters", std::to_string(max_iters)}};
  long long n_grad = 0, n_prox = 0;
  Eigen::VectorXd x = x0;
  for (int k = 1; k <= max_iters; ++k) {
    const Eigen::VectorXd g = problem.smooth.grad(x);
    ++n_grad;
    Eigen::VectorXd x_next = prox_separable(problem.nonsmooth, step,
                                            x - step * g);
    ++n_prox;
    const double step_norm = (x_next - x).norm();
    x = std::move(x_next);
    trace.records.push_back({k, objective_value(problem, x), step_norm, 1.0,
                             clock.seconds(), n_grad, n_prox});
    if (step_norm < tol) {
      trace.status = SolveStatus::Converged;
      return {x, std::move(trace)};
    }
  }
  trace.status = SolveStatus::MaxIters;
  return {x, std::move(trace)};
}

// ---------------------------------------------------------------------------
// FISTA with BB step, backtracking safeguard, and adaptive restart.
// ---------------------------------------------------------------------------

SolveResult solve_fista(const CompositeProblem& problem,
                        const Eigen::VectorXd& x0, const FistaConfig& cfg) {
  check_start_point(problem, x0);
  if (problem.smooth.lipschitz <= 0) {
    throw std::invalid_argument("solve_fista: problem needs a Lipschitz bound");
  }
  Stopwatch clock;
  ConvergenceTrace trace;
  trace.solver = "fista";
  trace.monotone = false;
  trace.config = {{"tau_min", fmt(cfg.tau_min)},
                  {"tau_max", fmt(cfg.tau_max)},
                  {"tol", fmt(cfg.tol)},
                  {"max_iters", std::to_string(cfg.max_iters)}};
  long long n_grad = 0, n_prox = 0;

  const double t_safe = 1.0 / problem.smooth.lipschitz;
  Eigen::VectorXd x = x0;
  Eigen::VectorXd y = x0;
  Eigen::VectorXd y_prev, g_prev;
  double theta = 1.0;
  double t = t_safe;

  for (int k = 1; k <= cfg.max_iters; ++k) {
    const Eigen::VectorXd g = problem.smooth.grad(y);
    ++n_grad;
    if (k > 1) {
      const Eigen::VectorXd s = y - y_prev;
      const Eigen::VectorXd dy = g - g_prev;
      const double sy = s.dot(dy);
      if (sy > 0) {
        t = std::min(std::max(sy / dy.squaredNorm(), cfg.tau_min),
                     cfg.tau_max);
      }
    }
    y_prev = y;
    g_prev = g;

    // Backtrack on the quadratic upper bound; t <= 1/L always satisfies
    // it, so the loop is finite.
    const double f_y = problem.smooth.eval(y);
    Eigen::VectorXd x_next;
    while (true) {
      x_next = prox_separable(problem.nonsmooth, t, y - t * g);
      ++n_prox;
      const Eigen::VectorXd diff = x_next - y;
      const double bound =
          f_y + g.dot(diff) + diff.squaredNorm() / (2.0 * t);
      if (problem.smooth.eval(x_next) <= bound + 1e-12 * (1 + std::abs(bound)))
        break;
      if (t <= t_safe) break;
      t = std::max(0.5 * t, t_safe);
    }

    const Eigen::VectorXd dx = x_next - x;
    const double step_norm = dx.norm();

    // Gradient-test restart: momentum is discarded when the implicit
    // gradient direction y - x_next forms an acute angle with the step.
    if ((y - x_next).dot(dx) > 0) {
      theta = 1.0;
      y = x_next;
      if (cfg.on_restart) cfg.on_restart(k);
    } else {
      const double theta_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * theta * theta));
      y = x_next + ((theta - 1.0) / theta_next) * dx;
      theta = theta_next;
    }
    x = std::move(x_next);
    trace.records.push_back({k, objective_value(problem, x), step_norm, t,
                             clock.seconds(), n_grad, n_prox});
    if (step_norm < cfg.tol) {
      trace.status = SolveStatus::Converged;
      return {x, std::move(trace)};
    }
  }
  trace.status = SolveStatus::MaxIters;
  return {x, std::move(trace)};
}

// ---------------------------------------------------------------------------
// SPG with alternating BB steps and nonmonotone acceptance.
// ---------------------------------------------------------------------------

SolveResult solve_spg(const CompositeProblem& problem,
                      const Eigen::VectorXd& x0, const SpgConfig& cfg) {
  check_start_point(problem, x0);
  if (problem.smooth.lipschitz <= 0) {
    throw std::invalid_argument("solve_spg: problem needs a Lipschitz bound");
  }
  Stopwatch clock;
  ConvergenceTrace trace;
  trace.solver = "spg";
  trace.monotone = false;
  trace.config = {{"tau_min", fmt(cfg.tau_min)},
                  {"tau_max", fmt(cfg.tau_max)},
                  {"tol", fmt(cfg.tol)},
                  {"max_iters", std::to_string(cfg.max_iters)},
                  {"memory", std::to_string(cfg.memory)}};
  long long n_grad = 0, n_prox = 0;

  Eigen::VectorXd x = x0;
  Eigen::VectorXd g = problem.smooth.grad(x);
  ++n_grad;
  double t = 1.0 / problem.smooth.lipschitz;
  std::deque<double> recent{objective_value(problem, x)};

  for (int k = 1; k <= cfg.max_iters; ++k) {
    double f_max = recent.front();
    for (double v : recent) f_max = std::max(f_max, v);

    Eigen::VectorXd x_next;
    double f_next = 0.0, step_norm = 0.0;
    bool accepted = false;
    for (int halvings = 0; halvings <= 60; ++halvings) {
      x_next = prox_separable(problem.nonsmooth, t, x - t * g);
      ++n_prox;
      const double d2 = (x_next - x).squaredNorm();
      f_next = objective_value(problem, x_next);
      if (f_next <= f_max - kSufficientDecrease * d2 / t) {
        step_norm = std::sqrt(d2);
        accepted = true;
        break;
      }
      t *= 0.5;
    }
    if (!accepted) {
      trace.status = SolveStatus::Failed;
      return {x, std::move(trace)};
    }

    const double accepted_t = t;
    Eigen::VectorXd g_next = problem.smooth.grad(x_next);
    ++n_grad;
    const Eigen::VectorXd s = x_next - x;
    const Eigen::VectorXd dy = g_next - g;
    const double sy = s.dot(dy);
    if (sy > 0) {
      const double tau_bb1 = s.squaredNorm() / sy;
      const double tau_bb2 = sy / dy.squaredNorm();
      if (cfg.on_bb) cfg.on_bb(k, tau_bb1, tau_bb2);
      const double tau = (k % 2 == 1) ? tau_bb1 : tau_bb2;
      t = std::min(std::max(tau, cfg.tau_min), cfg.tau_max);
    }
    x = std::move(x_next);
    g = std::move(g_next);
    recent.push_back(f_next);
    if (static_cast<int>(recent.size()) > cfg.memory) recent.pop_front();

    trace.records.push_back({k, f_next, step_norm, accepted_t,
                             clock.seconds(), n_grad, n_prox});
    if (step_norm < cfg.tol) {
      trace.status = SolveStatus::Converged;
      return {x, std::move(trace)};
    }
  }
  trace.status = SolveStatus::MaxIters;
  return {x, std::move(trace)};
}

}  // namespace proxqn
