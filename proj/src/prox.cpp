#include "proxqn/prox.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace proxqn {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();

double soft_threshold(double x, double lambda) {
  if (x > lambda) return x - lambda;
  if (x < -lambda) return x + lambda;
  return 0.0;
}

void check_weight(const ScalarPiece& piece) {
  if ((piece.kind == PieceKind::Abs || piece.kind == PieceKind::Hinge) &&
      piece.weight < 0) {
    throw std::invalid_argument("piece weight must be nonnegative");
  }
  if (piece.kind == PieceKind::Box && piece.lower > piece.upper) {
    throw std::invalid_argument("box piece requires lower <= upper");
  }
}
}  // namespace

double piece_value(const ScalarPiece& piece, double x) {
  switch (piece.kind) {
    case PieceKind::Abs:
      return piece.weight * std::abs(x);
    case PieceKind::Hinge:
      return piece.weight * std::max(0.0, x);
    case PieceKind::Box:
      return (x >= piece.lower && x <= piece.upper) ? 0.0 : kInf;
    case PieceKind::NonNeg:
      return x >= 0.0 ? 0.0 : kInf;
    case PieceKind::Zero:
      return 0.0;
  }
  throw std::invalid_argument("unknown piece kind");
}

double piece_prox(const ScalarPiece& piece, double t, double x) {
  if (t <= 0) throw std::invalid_argument("piece_prox: t must be positive");
  check_weight(piece);
  const double lam = t * piece.weight;
  switch (piece.kind) {
    case PieceKind::Abs:
      return soft_threshold(x, lam);
    case PieceKind::Hinge:
      // Segments x <= 0 | 0 <= x <= lam | x >= lam.
      if (x <= 0) return x;
      if (x >= lam) return x - lam;
      return 0.0;
    case PieceKind::Box:
      return std::min(std::max(x, piece.lower), piece.upper);
    case PieceKind::NonNeg:
      return std::max(0.0, x);
    case PieceKind::Zero:
      return x;
  }
  throw std::invalid_argument("unknown piece kind");
}

std::optional<ScalarPiece> conjugate_piece(const ScalarPiece& piece) {
  check_weight(piece);
  switch (piece.kind) {
    case PieceKind::Abs:
      return ScalarPiece::box(-piece.weight, piece.weight);
    case PieceKind::Hinge:
      return ScalarPiece::box(0.0, piece.weight);
    case PieceKind::NonNeg:
      return ScalarPiece::box(-kInf, 0.0);
    case PieceKind::Zero:
      return ScalarPiece::box(0.0, 0.0);
    case PieceKind::Box: {
      const double lo = piece.lower, hi = piece.upper;
      if (lo == -hi && std::isfinite(hi)) return ScalarPiece::abs(hi);
      if (lo == 0.0 && std::isfinite(hi)) return ScalarPiece::hinge(hi);
      if (lo == -kInf && hi == 0.0) return std::optional(ScalarPiece::nonneg());
      if (lo == 0.0 && hi == kInf) return ScalarPiece::box(-kInf, 0.0);
      if (lo == 0.0 && hi == 0.0) return std::optional(ScalarPiece::zero());
      return std::nullopt;  // general box: conjugate is a support function
    }
  }
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// Piecewise-affine descriptors.
// ---------------------------------------------------------------------------

double PiecewiseAffineProx::eval(double x) const {
  // Left segment at shared breakpoints: j = #(interior breakpoints < x).
  const auto first = breakpoints.begin() + 1;
  const auto last = breakpoints.end() - 1;
  const auto j = std::lower_bound(first, last, x) - first;
  return slopes[j] * x + intercepts[j];
}

double PiecewiseAffineProx::slope_at(double x) const {
  // Right segment at shared breakpoints.
  const auto first = breakpoints.begin() + 1;
  const auto last = breakpoints.end() - 1;
  const auto j = std::upper_bound(first, last, x) - first;
  return slopes[j];
}

std::vector<double> PiecewiseAffineProx::interior_breakpoints() const {
  return {breakpoints.begin() + 1, breakpoints.end() - 1};
}

PiecewiseAffineProx pw_affine_descriptor(const ScalarPiece& piece, double t) {
  if (t <= 0) {
    throw std::invalid_argument("pw_affine_descriptor: t must be positive");
  }
  check_weight(piece);
  const double lam = t * piece.weight;
  PiecewiseAffineProx d;
  switch (piece.kind) {
    case PieceKind::Abs:
      if (lam == 0.0) break;  // degenerates to the identity
      d.breakpoints = {-kInf, -lam, lam, kInf};
      d.slopes = {1, 0, 1};
      d.intercepts = {lam, 0, -lam};
      return d;
    case PieceKind::Hinge:
      if (lam == 0.0) break;
      d.breakpoints = {-kInf, 0, lam, kInf};
      d.slopes = {1, 0, 1};
      d.intercepts = {0, 0, -lam};
      return d;
    case PieceKind::Box: {
      const bool lo = std::isfinite(piece.lower);
      const bool hi = std::isfinite(piece.upper);
      if (lo && hi) {
        d.breakpoints = {-kInf, piece.lower, piece.upper, kInf};
        d.slopes = {0, 1, 0};
        d.intercepts = {piece.lower, 0, piece.upper};
      } else if (lo) {
        d.breakpoints = {-kInf, piece.lower, kInf};
        d.slopes = {0, 1};
        d.intercepts = {piece.lower, 0};
      } else if (hi) {
        d.breakpoints = {-kInf, piece.upper, kInf};
        d.slopes = {1, 0};
        d.intercepts = {0, piece.upper};
      } else {
        break;
      }
      return d;
    }
    case PieceKind::NonNeg:
      d.breakpoints = {-kInf, 0, kInf};
      d.slopes = {0, 1};
      d.intercepts = {0, 0};
      return d;
    case PieceKind::Zero:
      break;
  }
  d.breakpoints = {-kInf, kInf};
  d.slopes = {1};
  d.intercepts = {0};
  return d;
}

// ---------------------------------------------------------------------------
// Separable functions.
// ---------------------------------------------------------------------------

SeparableFunction SeparableFunction::l1(Eigen::Index n, double w) {
  SeparableFunction h;
  h.pieces.assign(static_cast<std::size_t>(n), ScalarPiece::abs(w));
  return h;
}

SeparableFunction SeparableFunction::hinge(Eigen::Index n, double w) {
  SeparableFunction h;
  h.pieces.assign(static_cast<std::size_t>(n), ScalarPiece::hinge(w));
  return h;
}

SeparableFunction SeparableFunction::box(Eigen::Index n, double lo, double hi) {
  SeparableFunction h;
  h.pieces.assign(static_cast<std::size_t>(n), ScalarPiece::box(lo, hi));
  return h;
}

SeparableFunction SeparableFunction::nonneg(Eigen::Index n) {
  SeparableFunction h;
  h.pieces.assign(static_cast<std::size_t>(n), ScalarPiece::nonneg());
  return h;
}

SeparableFunction SeparableFunction::zero(Eigen::Index n) {
  SeparableFunction h;
  h.pieces.assign(static_cast<std::size_t>(n), ScalarPiece::zero());
  return h;
}

double value(const SeparableFunction& h, const Eigen::VectorXd& x) {
  if (x.size() != h.size()) {
    throw std::invalid_argument("value: dimension mismatch");
  }
  double total = 0.0;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double v = piece_value(h.pieces[i], x[i]);
    if (v == kInf) return kInf;
    total += v;
  }
  return total;
}

Eigen::VectorXd prox_separable(const SeparableFunction& h, double t,
                               const Eigen::VectorXd& x) {
  if (t <= 0) throw std::invalid_argument("prox_separable: t must be positive");
  if (x.size() != h.size()) {
    throw std::invalid_argument("prox_separable: dimension mismatch");
  }
  Eigen::VectorXd z(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    z[i] = piece_prox(h.pieces[i], t, x[i]);
  }
  return z;
}

// ---------------------------------------------------------------------------
// Sort-based projections.
// ---------------------------------------------------------------------------

Eigen::VectorXd project_l1_ball(const Eigen::VectorXd& x, double radius) {
  if (radius <= 0) {
    throw std::invalid_argument("project_l1_ball: radius must be positive");
  }
  if (x.lpNorm<1>() <= radius) return x;

  std::vector<double> a(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) a[i] = std::abs(x[i]);
  std::sort(a.begin(), a.end(), std::greater<>());

  // Largest k with a_(k) > (sum_{i<=k} a_(i) - radius) / k.
  double cumsum = 0.0;
  double theta = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    cumsum += a[k];
    const double cand = (cumsum - radius) / static_cast<double>(k + 1);
    if (a[k] > cand) {
      theta = cand;
    } else {
      break;
    }
  }
  Eigen::VectorXd z(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    z[i] = std::copysign(std::max(std::abs(x[i]) - theta, 0.0), x[i]);
  }
  return z;
}

Eigen::VectorXd project_simplex(const Eigen::VectorXd& x) {
  std::vector<double> a(x.data(), x.data() + x.size());
  std::sort(a.begin(), a.end(), std::greater<>());
  double cumsum = 0.0;
  double theta = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    cumsum += a[k];
    const double cand = (cumsum - 1.0) / static_cast<double>(k + 1);
    if (a[k] > cand) {
      theta = cand;
    } else {
      break;
    }
  }
  return x.unaryExpr([theta](double v) { return std::max(v - theta, 0.0); });
}

Eigen::VectorXd prox_via_moreau(const ScaledProx& prox_h, double rho,
                                const Eigen::VectorXd& x) {
  if (rho <= 0) {
    throw std::invalid_argument("prox_via_moreau: rho must be positive");
  }
  return x - rho * prox_h(1.0 / rho, x / rho);
}

}  // namespace proxqn
