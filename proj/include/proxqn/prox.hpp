#pragma once

#include <Eigen/Dense>

#include <functional>
#include <optional>
#include <vector>

namespace proxqn {

// ---------------------------------------------------------------------------
// Scalar pieces of a separable nonsmooth term h(x) = sum_i h_i(x_i).
// ---------------------------------------------------------------------------

enum class PieceKind {
  Abs,     // w * |x|
  Hinge,   // w * max(0, x)
  Box,     // indicator of [lower, upper] (bounds may be +-inf)
  NonNeg,  // indicator of x >= 0
  Zero,    // identically 0
};

struct ScalarPiece {
  PieceKind kind = PieceKind::Zero;
  double weight = 1.0;  // multiplies Abs/Hinge; ignored for indicators
  double lower = 0.0;   // Box only
  double upper = 0.0;   // Box only

  static ScalarPiece abs(double w) { return {PieceKind::Abs, w, 0, 0}; }
  static ScalarPiece hinge(double w) { return {PieceKind::Hinge, w, 0, 0}; }
  static ScalarPiece box(double lo, double hi) {
    return {PieceKind::Box, 1.0, lo, hi};
  }
  static ScalarPiece nonneg() { return {PieceKind::NonNeg, 1.0, 0, 0}; }
  static ScalarPiece zero() { return {PieceKind::Zero, 1.0, 0, 0}; }
};

// h_i value at x (+inf outside an indicator's domain).
double piece_value(const ScalarPiece& piece, double x);

// prox_{t * h_i}(x) for t > 0.
double piece_prox(const ScalarPiece& piece, double t, double x);

// Convex conjugate of a piece when it stays inside the catalog:
//   abs(w) <-> box[-w, w],  hinge(w) <-> box[0, w],
//   nonneg <-> box(-inf, 0],  zero <-> box[0, 0].
// Symmetric/one-sided boxes map back the same way; general boxes do not.
std::optional<ScalarPiece> conjugate_piece(const ScalarPiece& piece);

// ---------------------------------------------------------------------------
// Piecewise-affine description of a scalar prox:
//   prox(x) = slopes[j] * x + intercepts[j]  for
//   breakpoints[j] <= x <= breakpoints[j+1],
// with breakpoints[0] = -inf and breakpoints[k] = +inf sentinels.
// Ties go to the left segment (continuity makes the value identical).
// ---------------------------------------------------------------------------

struct PiecewiseAffineProx {
  std::vector<double> breakpoints;  // k+1 entries incl. sentinels
  std::vector<double> slopes;       // k entries, each in [0, 1]
  std::vector<double> intercepts;   // k entries

  int segments() const { return static_cast<int>(slopes.size()); }

  double eval(double x) const;      // left segment at shared breakpoints
  double slope_at(double x) const;  // right segment at shared breakpoints

  // Breakpoints without the sentinels.
  std::vector<double> interior_breakpoints() const;
};

// Exact descriptor of prox_{t * h_i}; throws std::invalid_argument for
// t <= 0 or an unknown kind.
PiecewiseAffineProx pw_affine_descriptor(const ScalarPiece& piece, double t);

// ---------------------------------------------------------------------------
// Separable function and vector proximal maps.
// ---------------------------------------------------------------------------

struct SeparableFunction {
  std::vector<ScalarPiece> pieces;

  Eigen::Index size() const {
    return static_cast<Eigen::Index>(pieces.size());
  }

  static SeparableFunction l1(Eigen::Index n, double w);
  static SeparableFunction hinge(Eigen::Index n, double w);
  static SeparableFunction box(Eigen::Index n, double lo, double hi);
  static SeparableFunction nonneg(Eigen::Index n);
  static SeparableFunction zero(Eigen::Index n);
};

// sum_i h_i(x_i); +inf as soon as a coordinate is infeasible.
double value(const SeparableFunction& h, const Eigen::VectorXd& x);

// argmin_z 0.5*||x-z||^2 + t*h(z), coordinate-wise.  t must be > 0.
Eigen::VectorXd prox_separable(const SeparableFunction& h, double t,
                               const Eigen::VectorXd& x);

// Euclidean projection onto {z : ||z||_1 <= radius}, by sorting.
Eigen::VectorXd project_l1_ball(const Eigen::VectorXd& x, double radius);

// Euclidean projection onto {z >= 0, sum z = 1}, by sorting.
Eigen::VectorXd project_simplex(const Eigen::VectorXd& x);

// prox of rho*h^* via the Moreau identity:
//   prox_{rho h*}(x) = x - rho * prox_{h/rho}(x/rho).
// `prox_h` must evaluate (t, y) -> prox_{t h}(y) for any t > 0.
using ScaledProx =
    std::function<Eigen::VectorXd(double, const Eigen::VectorXd&)>;
Eigen::VectorXd prox_via_moreau(const ScaledProx& prox_h, double rho,
                                const Eigen::VectorXd& x);

}  // namespace proxqn
