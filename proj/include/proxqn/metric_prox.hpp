#pragma once

#include <Eigen/Dense>

#include <functional>
#include <stdexcept>
#include <vector>

#include "proxqn/prox.hpp"

namespace proxqn {

// Raised when a root finder cannot make progress (non-bracketable root,
// NaN from a malformed evaluator).  Carries diagnostics in what().
class numerical_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// The metric V = D + u u^T, D diagonal with d_i > 0.  Symmetric positive
// definite for any u.
// ---------------------------------------------------------------------------

struct DiagRank1Metric {
  Eigen::VectorXd d;
  Eigen::VectorXd u;

  Eigen::Index size() const { return d.size(); }
  void validate() const;  // throws std::invalid_argument
};

// (D + uu^T) x.
Eigen::VectorXd apply(const DiagRank1Metric& m, const Eigen::VectorXd& x);

// (D + uu^T)^{-1} x by Sherman-Morrison:
//   D^{-1}x - D^{-1}u <u, D^{-1}x> / (1 + <u, D^{-1}u>).
Eigen::VectorXd apply_inverse(const DiagRank1Metric& m,
                              const Eigen::VectorXd& x);

Eigen::MatrixXd to_dense(const DiagRank1Metric& m);

// ---------------------------------------------------------------------------
// Scalar root problems.  Both dual root functions (p for the forward
// metric, hh for the inverse metric) are strictly increasing with slope
// in [1, 1 + sum_i u_i^2/d_i].
// ---------------------------------------------------------------------------

struct RootProblem {
  std::function<double(double)> value;
  // Generalized derivative (right-segment slope at breakpoints).  May be
  // empty; the semismooth Newton solver then falls back to a
  // finite-difference slant.
  std::function<double(double)> slope;
  // Sorted, deduplicated transition values where the evaluator changes
  // slope; meaningful only when piecewise_affine is true.
  std::vector<double> transitions;
  bool piecewise_affine = false;
  double lipschitz_bound = 1.0;
  double slope_lower_bound = 1.0;
};

// Exact root for a piecewise-affine evaluator: binary search over the
// sorted transitions for the sign change, then one linear solve on the
// bracketed segment.
double root_by_sorting(const RootProblem& problem);

struct RootTrace {
  std::vector<double> iterates;  // alpha after each Newton/bisection step
  int bisection_steps = 0;
};

// Safeguarded semismooth Newton: bracket from alpha = 0 (geometric
// expansion, at most 100 doublings), Newton steps with bisection
// fallback, stop at |p(alpha)| <= tol.
double root_by_ssn(const RootProblem& problem, double tol,
                   RootTrace* trace = nullptr);

// ---------------------------------------------------------------------------
// Proximity operators under the metric and its inverse.
// ---------------------------------------------------------------------------

enum class RootMethod { Auto, Sorting, Ssn };

struct MetricProxResult {
  Eigen::VectorXd z;
  double alpha = 0.0;  // dual root
};

// Root problem behind prox^V_h for separable h:
//   p(a) = a + sum_i u_i * (x_i - prox_{h_i/d_i}(x_i - a u_i/d_i)).
RootProblem forward_root_problem(const SeparableFunction& h,
                                 const DiagRank1Metric& V,
                                 const Eigen::VectorXd& x);

// Root problem behind prox^{H^{-1}}_h for separable h:
//   hh(b) = b - sum_i u_i * (x_i - b u_i - prox_{d_i h_i}(x_i - b u_i)) / d_i.
RootProblem inverse_root_problem(const SeparableFunction& h,
                                 const DiagRank1Metric& H,
                                 const Eigen::VectorXd& x);

// z = argmin_z 0.5*||x-z||_V^2 + h(z) with V = D + uu^T, plus the dual
// scalar.  Coordinates are recovered as prox_{h_i/d_i}(x_i - a* u_i/d_i).
MetricProxResult prox_forward_metric_separable(
    const SeparableFunction& h, const DiagRank1Metric& V,
    const Eigen::VectorXd& x, RootMethod method = RootMethod::Auto,
    double ssn_tol = 1e-12);

// y = argmin_y 0.5*||x-y||^2_{H^{-1}} + h(y) with H = D + uu^T, plus the
// dual scalar.  Coordinates are prox_{d_i h_i}(x_i - b* u_i).  This is
// the prox used by the quasi-Newton solver (metric B = H^{-1}).
MetricProxResult prox_inverse_metric_separable(
    const SeparableFunction& h, const DiagRank1Metric& H,
    const Eigen::VectorXd& x, RootMethod method = RootMethod::Auto,
    double ssn_tol = 1e-12);

// General (possibly nonseparable) h given through
// prox_scaled = prox_{h o D^{-1/2}}:
//   prox^V_h(x) = D^{-1/2} prox_scaled(D^{1/2}x - a* D^{-1/2}u),
// a* found by semismooth Newton with a finite-difference slant.
Eigen::VectorXd prox_forward_metric_general(
    const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& prox_scaled,
    const DiagRank1Metric& V, const Eigen::VectorXd& x, double ssn_tol = 1e-10);

// Inverse-metric prox obtained from the forward-metric prox of the
// conjugate:  prox^{V^{-1}}_h(x) = x - V prox^V_{h*}(V^{-1} x).
// Supported only when every piece has a catalog conjugate; throws
// std::invalid_argument otherwise.  Kept as an independent cross-check
// of prox_inverse_metric_separable.
Eigen::VectorXd prox_inverse_metric_via_conjugate(const SeparableFunction& h,
                                                  const DiagRank1Metric& V,
                                                  const Eigen::VectorXd& x);

}  // namespace proxqn
