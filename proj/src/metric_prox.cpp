#include "proxqn/metric_prox.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <memory>
#include <sstream>

namespace proxqn {

void DiagRank1Metric::validate() const {
  if (d.size() != u.size()) {
    throw std::invalid_argument("DiagRank1Metric: d and u sizes differ");
  }
  if (d.size() == 0 || (d.array() <= 0).any()) {
    throw std::invalid_argument("DiagRank1Metric: diagonal must be positive");
  }
}

Eigen::VectorXd apply(const DiagRank1Metric& m, const Eigen::VectorXd& x) {
  return m.d.cwiseProduct(x) + m.u * m.u.dot(x);
}

Eigen::VectorXd apply_inverse(const DiagRank1Metric& m,
                              const Eigen::VectorXd& x) {
  const Eigen::VectorXd dinv_x = x.cwiseQuotient(m.d);
  const Eigen::VectorXd dinv_u = m.u.cwiseQuotient(m.d);
  const double denom = 1.0 + m.u.dot(dinv_u);  // >= 1
  return dinv_x - dinv_u * (m.u.dot(dinv_x) / denom);
}

Eigen::MatrixXd to_dense(const DiagRank1Metric& m) {
  Eigen::MatrixXd V = m.d.asDiagonal();
  V += m.u * m.u.transpose();
  return V;
}

// ---------------------------------------------------------------------------
// Root problem construction.
// ---------------------------------------------------------------------------

namespace {

// Per-coordinate data for the coordinates that actually couple to the
// scalar root (u_i != 0).
struct ActiveCoords {
  std::vector<int> index;
  std::vector<double> u, d, x;
  std::vector<ScalarPiece> piece;
  std::vector<PiecewiseAffineProx> desc;
};

void sort_dedup(std::vector<double>& t) {
  std::sort(t.begin(), t.end());
  t.erase(std::unique(t.begin(), t.end(),
                      [](double a, double b) {
                        const double scale =
                            std::max({1.0, std::abs(a), std::abs(b)});
                        return std::abs(a - b) <= 1e-14 * scale;
                      }),
          t.end());
}

void check_prox_args(const SeparableFunction& h, const DiagRank1Metric& m,
                     const Eigen::VectorXd& x) {
  m.validate();
  if (h.size() != m.size() || x.size() != m.size()) {
    throw std::invalid_argument("metric prox: dimension mismatch");
  }
}

}  // namespace

RootProblem forward_root_problem(const SeparableFunction& h,
                                 const DiagRank1Metric& V,
                                 const Eigen::VectorXd& x) {
  check_prox_args(h, V, x);
  auto act = std::make_shared<ActiveCoords>();
  double lip = 1.0;
  std::vector<double> transitions;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double ui = V.u[i];
    if (ui == 0.0) continue;  // constant contribution, no transitions
    const double di = V.d[i];
    lip += ui * ui / di;
    act->index.push_back(static_cast<int>(i));
    act->u.push_back(ui);
    act->d.push_back(di);
    act->x.push_back(x[i]);
    act->piece.push_back(h.pieces[i]);
    act->desc.push_back(pw_affine_descriptor(h.pieces[i], 1.0 / di));
    for (double t : act->desc.back().interior_breakpoints()) {
      transitions.push_back(di * (x[i] - t) / ui);
    }
  }
  sort_dedup(transitions);

  RootProblem rp;
  rp.piecewise_affine = true;
  rp.lipschitz_bound = lip;
  rp.transitions = std::move(transitions);
  rp.value = [act](double alpha) {
    double p = alpha;
    for (std::size_t j = 0; j < act->u.size(); ++j) {
      const double c = act->x[j] - alpha * act->u[j] / act->d[j];
      p += act->u[j] * (act->x[j] - act->desc[j].eval(c));
    }
    return p;
  };
  rp.slope = [act](double alpha) {
    double g = 1.0;
    for (std::size_t j = 0; j < act->u.size(); ++j) {
      const double c = act->x[j] - alpha * act->u[j] / act->d[j];
      g += act->u[j] * act->u[j] / act->d[j] * act->desc[j].slope_at(c);
    }
    return g;
  };
  return rp;
}

RootProblem inverse_root_problem(const SeparableFunction& h,
                                 const DiagRank1Metric& H,
                                 const Eigen::VectorXd& x) {
  check_prox_args(h, H, x);
  auto act = std::make_shared<ActiveCoords>();
  double lip = 1.0;
  std::vector<double> transitions;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double ui = H.u[i];
    if (ui == 0.0) continue;
    const double di = H.d[i];
    lip += ui * ui / di;
    act->index.push_back(static_cast<int>(i));
    act->u.push_back(ui);
    act->d.push_back(di);
    act->x.push_back(x[i]);
    act->piece.push_back(h.pieces[i]);
    act->desc.push_back(pw_affine_descriptor(h.pieces[i], di));
    for (double t : act->desc.back().interior_breakpoints()) {
      transitions.push_back((x[i] - t) / ui);
    }
  }
  sort_dedup(transitions);

  RootProblem rp;
  rp.piecewise_affine = true;
  rp.lipschitz_bound = lip;
  rp.transitions = std::move(transitions);
  rp.value = [act](double beta) {
    double p = beta;
    for (std::size_t j = 0; j < act->u.size(); ++j) {
      const double c = act->x[j] - beta * act->u[j];
      p -= act->u[j] * (c - act->desc[j].eval(c)) / act->d[j];
    }
    return p;
  };
  rp.slope = [act](double beta) {
    double g = 1.0;
    for (std::size_t j = 0; j < act->u.size(); ++j) {
      const double c = act->x[j] - beta * act->u[j];
      g += act->u[j] * act->u[j] / act->d[j] *
           (1.0 - act->desc[j].slope_at(c));
    }
    return g;
  };
  return rp;
}

// ---------------------------------------------------------------------------
// Root finders.
// ---------------------------------------------------------------------------

namespace {

double eval_checked(const RootProblem& rp, double alpha) {
  const double v = rp.value(alpha);
  if (std::isnan(v)) {
    std::ostringstream oss;
    oss << "root evaluator returned NaN at " << alpha;
    throw numerical_error(oss.str());
  }
  return v;
}

// Exact root of the affine piece through (a, pa) with the given slope.
double affine_root(double a, double pa, double slope) {
  assert(slope > 0);
  return a - pa / slope;
}

double probe_offset(double t) { return std::max(1.0, 1e-9 * std::abs(t)); }

}  // namespace

double root_by_sorting(const RootProblem& rp) {
  if (!rp.piecewise_affine) {
    throw std::invalid_argument(
        "root_by_sorting requires a piecewise-affine evaluator");
  }
  const auto& T = rp.transitions;
  const auto slope_at = [&rp](double a) {
    if (rp.slope) return rp.slope(a);
    // Affine between transitions, so a two-point secant is exact.
    return rp.value(a + 0.5) - rp.value(a - 0.5);
  };

  if (T.empty()) {
    const double p0 = eval_checked(rp, 0.0);
    return affine_root(0.0, p0, slope_at(0.0));
  }

  const double p_first = eval_checked(rp, T.front());
  if (p_first == 0.0) return T.front();
  if (p_first > 0.0) {
    // Root lies on the unbounded segment left of the first transition.
    const double probe = T.front() - probe_offset(T.front());
    return affine_root(probe, eval_checked(rp, probe), slope_at(probe));
  }
  const double p_last = eval_checked(rp, T.back());
  if (p_last < 0.0) {
    const double probe = T.back() + probe_offset(T.back());
    return affine_root(probe, eval_checked(rp, probe), slope_at(probe));
  }

  // Binary search for the first transition with p >= 0; the root lives
  // between it and its predecessor.
  std::size_t lo = 0, hi = T.size() - 1;  // p(T[lo]) < 0 <= p(T[hi])
  while (hi - lo > 1) {
    const std::size_t mid = lo + (hi - lo) / 2;
    const double pm = eval_checked(rp, T[mid]);
    if (pm < 0.0) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  const double pa = eval_checked(rp, T[lo]);
  const double pb = eval_checked(rp, T[hi]);
  if (pb == 0.0) return T[hi];
  assert(pa < 0.0 && pb > 0.0);
  // Exact on the affine segment.
  return T[lo] + (T[hi] - T[lo]) * (-pa) / (pb - pa);
}

double root_by_ssn(const RootProblem& rp, double tol, RootTrace* trace) {
  double alpha = 0.0;
  double p_alpha = eval_checked(rp, alpha);
  if (trace) trace->iterates.push_back(alpha);
  if (std::abs(p_alpha) <= tol) return alpha;

  // Bracket [lo, hi] with p(lo) < 0 < p(hi), expanded geometrically away
  // from 0.  The slope lower bound makes |p(0)| an upper bound on the
  // root distance, so the first width usually brackets immediately.
  double lo, hi, p_lo, p_hi;
  {
    const double dir = p_alpha > 0 ? -1.0 : 1.0;
    double width = std::max(std::abs(p_alpha) /
                                std::max(rp.slope_lower_bound, 1e-12),
                            1e-12);
    int doublings = 0;
    double cand = dir * width;
    double p_cand = eval_checked(rp, cand);
    while (p_cand * p_alpha > 0) {
      if (++doublings > 100) {
        throw numerical_error(
            "root_by_ssn: failed to bracket the root after 100 doublings "
            "(evaluator is not strictly increasing?)");
      }
      width *= 2;
      cand = dir * width;
      p_cand = eval_checked(rp, cand);
    }
    if (p_cand == 0.0) {
      if (trace) trace->iterates.push_back(cand);
      return cand;
    }
    if (p_alpha < 0) {
      lo = alpha, p_lo = p_alpha, hi = cand, p_hi = p_cand;
    } else {
      lo = cand, p_lo = p_cand, hi = alpha, p_hi = p_alpha;
    }
  }
  (void)p_lo;
  (void)p_hi;

  constexpr int kMaxIters = 200;
  for (int it = 0; it < kMaxIters; ++it) {
    double g;
    if (rp.slope) {
      g = rp.slope(alpha);
    } else {
      const double delta = 1e-7 * std::max(1.0, std::abs(alpha));
      g = (rp.value(alpha + delta) - rp.value(alpha - delta)) / (2 * delta);
    }
    double next;
    if (std::isfinite(g) && g > 0) {
      next = alpha - p_alpha / g;
    } else {
      next = 0.5 * (lo + hi);
    }
    if (!(next > lo && next < hi)) {
      next = 0.5 * (lo + hi);
      if (trace) ++trace->bisection_steps;
    }
    const double p_next = eval_checked(rp, next);
    if (p_next < 0) {
      lo = next;
    } else {
      hi = next;
    }
    alpha = next;
    p_alpha = p_next;
    if (trace) trace->iterates.push_back(alpha);
    if (std::abs(p_alpha) <= tol) return alpha;
    if (hi - lo <= 4e-16 * std::max(1.0, std::max(std::abs(lo), std::abs(hi)))) {
      return alpha;  // bracket exhausted at floating-point resolution
    }
  }
  return alpha;
}

// ---------------------------------------------------------------------------
// Metric proximity operators.
// ---------------------------------------------------------------------------

namespace {

double solve_root(const RootProblem& rp, RootMethod method, double ssn_tol) {
  switch (method) {
    case RootMethod::Auto:
    case RootMethod::Sorting:
      return root_by_sorting(rp);
    case RootMethod::Ssn:
      return root_by_ssn(rp, ssn_tol);
  }
  throw std::invalid_argument("unknown root method");
}

}  // namespace

MetricProxResult prox_forward_metric_separable(const SeparableFunction& h,
                                               const DiagRank1Metric& V,
                                               const Eigen::VectorXd& x,
                                               RootMethod method,
                                               double ssn_tol) {
  check_prox_args(h, V, x);
  MetricProxResult out;
  out.z.resize(x.size());
  if (V.u.isZero(0.0)) {
    out.alpha = 0.0;
    for (Eigen::Index i = 0; i < x.size(); ++i) {
      out.z[i] = piece_prox(h.pieces[i], 1.0 / V.d[i], x[i]);
    }
    return out;
  }
  const RootProblem rp = forward_root_problem(h, V, x);
  out.alpha = solve_root(rp, method, ssn_tol);
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    out.z[i] = piece_prox(h.pieces[i], 1.0 / V.d[i],
                          x[i] - out.alpha * V.u[i] / V.d[i]);
  }
  return out;
}

MetricProxResult prox_inverse_metric_separable(const SeparableFunction& h,
                                               const DiagRank1Metric& H,
                                               const Eigen::VectorXd& x,
                                               RootMethod method,
                                               double ssn_tol) {
  check_prox_args(h, H, x);
  MetricProxResult out;
  out.z.resize(x.size());
  if (H.u.isZero(0.0)) {
    out.alpha = 0.0;
    for (Eigen::Index i = 0; i < x.size(); ++i) {
      out.z[i] = piece_prox(h.pieces[i], H.d[i], x[i]);
    }
    return out;
  }
  const RootProblem rp = inverse_root_problem(h, H, x);
  out.alpha = solve_root(rp, method, ssn_tol);
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    out.z[i] = piece_prox(h.pieces[i], H.d[i], x[i] - out.alpha * H.u[i]);
  }
  return out;
}

Eigen::VectorXd prox_forward_metric_general(
    const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& prox_scaled,
    const DiagRank1Metric& V, const Eigen::VectorXd& x, double ssn_tol) {
  V.validate();
  if (x.size() != V.size()) {
    throw std::invalid_argument("metric prox: dimension mismatch");
  }
  const Eigen::VectorXd sqrt_d = V.d.cwiseSqrt();
  const Eigen::VectorXd q = V.u.cwiseQuotient(sqrt_d);  // D^{-1/2} u
  const Eigen::VectorXd base = sqrt_d.cwiseProduct(x);

  if (V.u.isZero(0.0)) {
    return prox_scaled(base).cwiseQuotient(sqrt_d);
  }

  RootProblem rp;
  rp.lipschitz_bound = 1.0 + q.squaredNorm();
  rp.value = [&](double alpha) {
    const Eigen::VectorXd z =
        prox_scaled(base - alpha * q).cwiseQuotient(sqrt_d);
    return alpha + V.u.dot(x - z);
  };
  const double alpha = root_by_ssn(rp, ssn_tol);
  return prox_scaled(base - alpha * q).cwiseQuotient(sqrt_d);
}

Eigen::VectorXd prox_inverse_metric_via_conjugate(const SeparableFunction& h,
                                                  const DiagRank1Metric& V,
                                                  const Eigen::VectorXd& x) {
  check_prox_args(h, V, x);
  SeparableFunction conj;
  conj.pieces.reserve(h.pieces.size());
  for (const auto& piece : h.pieces) {
    auto c = conjugate_piece(piece);
    if (!c) {
      throw std::invalid_argument(
          "prox_inverse_metric_via_conjugate: piece has no catalog conjugate");
    }
    conj.pieces.push_back(*c);
  }
  // prox^{V^{-1}}_h(x) = x - V prox^V_{h*}(V^{-1} x).
  const Eigen::VectorXd w = apply_inverse(V, x);
  const MetricProxResult r = prox_forward_metric_separable(conj, V, w);
  return x - apply(V, r.z);
}

}  // namespace proxqn
