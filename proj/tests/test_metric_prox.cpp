#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "proxqn/metric_prox.hpp"
#include "proxqn/rng.hpp"
#include "support/oracles.hpp"

using namespace proxqn;

namespace {

Eigen::VectorXd vec2(double a, double b) {
  Eigen::VectorXd v(2);
  v << a, b;
  return v;
}

DiagRank1Metric random_metric(Rng& rng, Eigen::Index n,
                              bool allow_zero_u = true) {
  DiagRank1Metric m;
  m.d.resize(n);
  m.u.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    m.d[i] = 0.1 + 9.9 * rng.uniform();
    m.u[i] = rng.normal();
    if (allow_zero_u && rng.below(5) == 0) m.u[i] = 0.0;
  }
  return m;
}

SeparableFunction random_h(Rng& rng, Eigen::Index n) {
  SeparableFunction h;
  for (Eigen::Index i = 0; i < n; ++i) {
    switch (rng.below(4)) {
      case 0:
        h.pieces.push_back(ScalarPiece::abs(0.2 + 2.0 * rng.uniform()));
        break;
      case 1:
        h.pieces.push_back(ScalarPiece::nonneg());
        break;
      case 2: {
        const double lo = -2.0 * rng.uniform();
        h.pieces.push_back(ScalarPiece::box(lo, lo + 3.0 * rng.uniform()));
        break;
      }
      default:
        h.pieces.push_back(ScalarPiece::hinge(0.2 + 2.0 * rng.uniform()));
        break;
    }
  }
  return h;
}

Eigen::VectorXd random_vector(Rng& rng, Eigen::Index n, double scale = 3.0) {
  Eigen::VectorXd v(n);
  for (Eigen::Index i = 0; i < n; ++i) v[i] = scale * rng.normal();
  return v;
}

}  // namespace

TEST_CASE("metric apply and Sherman-Morrison inverse") {
  DiagRank1Metric m{vec2(1, 1), vec2(1, 0)};
  CHECK(apply_inverse(m, vec2(2, 0)) == vec2(1, 0));

  DiagRank1Metric diag{vec2(2, 4), vec2(0, 0)};
  CHECK(apply_inverse(diag, vec2(2, 4)) == vec2(1, 1));

  Rng rng(31);
  const auto H = random_metric(rng, 6, false);
  for (int trial = 0; trial < 20; ++trial) {
    const Eigen::VectorXd x = random_vector(rng, 6);
    const Eigen::VectorXd r = apply(H, apply_inverse(H, x)) - x;
    CHECK(r.lpNorm<Eigen::Infinity>() < 1e-12 * (1 + x.norm()));
  }

  DiagRank1Metric bad{vec2(1, -1), vec2(0, 0)};
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}

TEST_CASE("forward metric prox: diagonal reduction and scalar case") {
  // u = 0 reduces exactly to the coordinate-wise prox.
  const auto l1 = SeparableFunction::l1(2, 1.0);
  DiagRank1Metric eye{vec2(1, 1), vec2(0, 0)};
  const auto r = prox_forward_metric_separable(l1, eye, vec2(2.5, -0.3));
  CHECK(r.alpha == 0.0);
  CHECK(r.z == vec2(1.5, 0.0));

  // Scalar V = 1 + 2^2 = 5: weighted soft threshold soft(2, 1/5).
  SeparableFunction habs;
  habs.pieces = {ScalarPiece::abs(1.0)};
  DiagRank1Metric V;
  V.d = Eigen::VectorXd::Ones(1);
  V.u = Eigen::VectorXd::Constant(1, 2.0);
  Eigen::VectorXd x(1);
  x << 2.0;
  const auto rs = prox_forward_metric_separable(habs, V, x);
  CHECK(rs.z[0] == doctest::Approx(1.8).epsilon(1e-12));
}

TEST_CASE("forward metric prox: nonnegativity example with KKT check") {
  const auto nn = SeparableFunction::nonneg(2);
  DiagRank1Metric V{vec2(1, 1), vec2(1, 1)};
  const Eigen::VectorXd x = vec2(-1, 1);
  const auto r = prox_forward_metric_separable(nn, V, x);
  CHECK(r.alpha == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(r.z[0] == doctest::Approx(0.0));
  CHECK(r.z[1] == doctest::Approx(0.5).epsilon(1e-12));

  // KKT: s = V(x-z) must lie in the normal cone at z, complementary to z.
  const Eigen::VectorXd s = apply(V, x - r.z);
  CHECK(s[0] <= 1e-12);                    // active coordinate pushes down
  CHECK(std::abs(s[1]) <= 1e-12);          // free coordinate is stationary
  CHECK(std::abs(s.dot(r.z)) <= 1e-12);    // complementarity

  // Independent check on a refined grid over the feasible quadrant.
  const auto objective = [&](const Eigen::Vector2d& z) {
    if (z[0] < 0 || z[1] < 0) return oracles::kInf;
    const Eigen::Vector2d d = Eigen::Vector2d(x) - z;
    return 0.5 * d.dot(to_dense(V) * d);
  };
  const Eigen::Vector2d ref = oracles::grid_refine_2d(
      objective, Eigen::Vector2d(0, 0), Eigen::Vector2d(2, 2), 1e-6);
  CHECK(std::abs(r.z[0] - ref[0]) < 1e-5);
  CHECK(std::abs(r.z[1] - ref[1]) < 1e-5);
}

TEST_CASE("forward metric prox matches the enumeration oracle") {
  Rng rng(32);
  for (int trial = 0; trial < 120; ++trial) {
    const Eigen::Index n = 1 + static_cast<Eigen::Index>(rng.below(8));
    const auto V = random_metric(rng, n);
    const auto h = random_h(rng, n);
    const Eigen::VectorXd x = random_vector(rng, n);
    const auto got = prox_forward_metric_separable(h, V, x);
    const Eigen::VectorXd want = oracles::prox_oracle(to_dense(V), h, x);
    CHECK((got.z - want).lpNorm<Eigen::Infinity>() < 1e-8);
  }
}

TEST_CASE("forward metric prox: optimality certificate for weighted l1") {
  Rng rng(33);
  for (int trial = 0; trial < 50; ++trial) {
    const Eigen::Index n = 2 + static_cast<Eigen::Index>(rng.below(6));
    const double w = 0.3 + rng.uniform();
    const auto h = SeparableFunction::l1(n, w);
    const auto V = random_metric(rng, n);
    const Eigen::VectorXd x = random_vector(rng, n);
    const auto r = prox_forward_metric_separable(h, V, x);
    const Eigen::VectorXd s = apply(V, x - r.z);
    for (Eigen::Index i = 0; i < n; ++i) {
      CHECK(std::abs(s[i]) <= w + 1e-9);
      if (r.z[i] > 1e-9) CHECK(s[i] == doctest::Approx(w).epsilon(1e-7));
      if (r.z[i] < -1e-9) CHECK(s[i] == doctest::Approx(-w).epsilon(1e-7));
    }
  }
}

TEST_CASE("forward metric prox is nonexpansive in the metric norm") {
  Rng rng(34);
  const Eigen::Index n = 5;
  const auto V = random_metric(rng, n);
  const auto h = random_h(rng, n);
  const Eigen::MatrixXd Vd = to_dense(V);
  for (int trial = 0; trial < 100; ++trial) {
    const Eigen::VectorXd x = random_vector(rng, n);
    const Eigen::VectorXd y = random_vector(rng, n);
    const Eigen::VectorXd px = prox_forward_metric_separable(h, V, x).z;
    const Eigen::VectorXd py = prox_forward_metric_separable(h, V, y).z;
    const double dp = std::sqrt((px - py).dot(Vd * (px - py)));
    const double dx = std::sqrt((x - y).dot(Vd * (x - y)));
    CHECK(dp <= dx * (1 + 1e-10) + 1e-12);
  }
}

TEST_CASE("scaling law: prox under c*V equals prox of h/c under V") {
  Rng rng(35);
  const Eigen::Index n = 4;
  const auto V = random_metric(rng, n);
  const Eigen::VectorXd x = random_vector(rng, n);
  for (double c : {0.5, 2.0, 10.0}) {
    // c*V = (c*D) + (sqrt(c) u)(sqrt(c) u)^T.
    DiagRank1Metric cV{c * V.d, std::sqrt(c) * V.u};
    const auto h = SeparableFunction::l1(n, 1.0);
    const auto h_over_c = SeparableFunction::l1(n, 1.0 / c);
    const Eigen::VectorXd a = prox_forward_metric_separable(h, cV, x).z;
    const Eigen::VectorXd b = prox_forward_metric_separable(h_over_c, V, x).z;
    CHECK((a - b).lpNorm<Eigen::Infinity>() < 1e-10);
  }
}

TEST_CASE("root function: slope and Lipschitz bounds on sampled pairs") {
  Rng rng(36);
  for (int instance = 0; instance < 50; ++instance) {
    const Eigen::Index n = 1 + static_cast<Eigen::Index>(rng.below(8));
    const auto V = random_metric(rng, n);
    const auto h = random_h(rng, n);
    const Eigen::VectorXd x = random_vector(rng, n);
    const RootProblem rp = rng.below(2)
                               ? forward_root_problem(h, V, x)
                               : inverse_root_problem(h, V, x);
    for (int pair = 0; pair < 40; ++pair) {
      double a = 6.0 * rng.normal();
      double b = 6.0 * rng.normal();
      if (a > b) std::swap(a, b);
      if (a == b) continue;
      const double gap = rp.value(b) - rp.value(a);
      CHECK(gap >= (b - a) * (1 - 1e-10));
      CHECK(gap <= rp.lipschitz_bound * (b - a) * (1 + 1e-10));
    }
  }
}

TEST_CASE("root_by_sorting on synthetic affine problems") {
  RootProblem linear;
  linear.piecewise_affine = true;
  linear.transitions = {-1.0, 1.0};
  linear.value = [](double a) { return 2.0 * a - 1.0; };
  linear.slope = [](double) { return 2.0; };
  CHECK(root_by_sorting(linear) == doctest::Approx(0.5).epsilon(1e-15));

  RootProblem no_transitions;
  no_transitions.piecewise_affine = true;
  no_transitions.value = [](double a) { return 3.0 * a + 0.6; };
  no_transitions.slope = [](double) { return 3.0; };
  CHECK(root_by_sorting(no_transitions) ==
        doctest::Approx(-0.2).epsilon(1e-15));

  RootProblem not_affine;
  CHECK_THROWS_AS(root_by_sorting(not_affine), std::invalid_argument);
}

TEST_CASE("root_by_sorting agrees with a dense scan on the nonneg example") {
  const auto nn = SeparableFunction::nonneg(2);
  DiagRank1Metric V{vec2(1, 1), vec2(1, 1)};
  const RootProblem rp = forward_root_problem(nn, V, vec2(-1, 1));
  REQUIRE(rp.transitions.size() == 2);
  CHECK(rp.transitions[0] == doctest::Approx(-1.0));
  CHECK(rp.transitions[1] == doctest::Approx(1.0));
  const double root = root_by_sorting(rp);
  CHECK(root == doctest::Approx(0.5).epsilon(1e-12));

  // Dense scan with step 1e-6 over the bracketing range.
  double prev = rp.value(-1.0);
  double crossing = -1.0;
  for (double a = -1.0; a <= 1.0; a += 1e-6) {
    const double cur = rp.value(a);
    if (prev < 0 && cur >= 0) {
      crossing = a;
      break;
    }
    prev = cur;
  }
  CHECK(std::abs(crossing - root) < 1e-5);
}

TEST_CASE("root_by_ssn: exact on affine, agrees with sorting, superlinear") {
  RootProblem linear;
  linear.value = [](double a) { return a - 3.0; };
  linear.slope = [](double) { return 1.0; };
  RootTrace tr;
  const double root = root_by_ssn(linear, 1e-14, &tr);
  CHECK(root == doctest::Approx(3.0).epsilon(1e-14));
  CHECK(tr.iterates.size() <= 3);  // bracketing endpoint + one Newton step

  Rng rng(37);
  for (int trial = 0; trial < 100; ++trial) {
    const Eigen::Index n = 1 + static_cast<Eigen::Index>(rng.below(8));
    const auto V = random_metric(rng, n);
    const auto h = random_h(rng, n);
    const Eigen::VectorXd x = random_vector(rng, n);
    const RootProblem rp = forward_root_problem(h, V, x);
    const double exact = root_by_sorting(rp);
    RootTrace trace;
    const double ssn = root_by_ssn(rp, 1e-13, &trace);
    CHECK(std::abs(ssn - exact) <= 1e-10);

    // Superlinear tail: error contraction below 0.5 over the last steps.
    const auto& it = trace.iterates;
    const std::size_t tail = std::min<std::size_t>(3, it.size() - 1);
    for (std::size_t j = it.size() - tail; j < it.size(); ++j) {
      const double e_prev = std::abs(it[j - 1] - exact);
      const double e_cur = std::abs(it[j] - exact);
      if (e_prev > 1e-14) {
        CHECK(e_cur / e_prev < 0.5);
      }
    }
  }
}

TEST_CASE("root finders reject NaN evaluators") {
  RootProblem bad;
  bad.piecewise_affine = true;
  bad.transitions = {0.0};
  bad.value = [](double) { return std::numeric_limits<double>::quiet_NaN(); };
  CHECK_THROWS_AS(root_by_sorting(bad), numerical_error);
  CHECK_THROWS_AS(root_by_ssn(bad, 1e-10), numerical_error);

  const auto h = SeparableFunction::l1(1, 1.0);
  DiagRank1Metric V;
  V.d = Eigen::VectorXd::Ones(1);
  V.u = Eigen::VectorXd::Ones(1);
  Eigen::VectorXd xnan(1);
  xnan << std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(prox_forward_metric_separable(h, V, xnan), numerical_error);
}

TEST_CASE("inverse metric prox: diagonal reduction and scalar case") {
  const auto l1 = SeparableFunction::l1(2, 1.0);
  DiagRank1Metric H{vec2(2, 2), vec2(0, 0)};
  const auto r = prox_inverse_metric_separable(l1, H, vec2(3, -0.5));
  CHECK(r.alpha == 0.0);
  // prox_{d_i h_i}: threshold 2.
  CHECK(r.z == vec2(1.0, 0.0));

  SeparableFunction habs;
  habs.pieces = {ScalarPiece::abs(1.0)};
  DiagRank1Metric H1;
  H1.d = Eigen::VectorXd::Ones(1);
  H1.u = Eigen::VectorXd::Ones(1);
  Eigen::VectorXd x(1);
  x << 3.0;
  // H = 2 as a scalar; the metric 1/2 scales the threshold to lambda*H.
  const auto rs = prox_inverse_metric_separable(habs, H1, x);
  CHECK(rs.z[0] == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("inverse metric prox: nonnegativity example with KKT check") {
  const auto nn = SeparableFunction::nonneg(2);
  DiagRank1Metric H{vec2(1, 1), vec2(1, 1)};
  const Eigen::VectorXd x = vec2(-1, 1);
  const auto r = prox_inverse_metric_separable(nn, H, x);
  // y_i = (x_i + alpha u_i)_+ with alpha = -beta = 0.5.
  CHECK(r.alpha == doctest::Approx(-0.5).epsilon(1e-12));
  CHECK(r.z[0] == doctest::Approx(0.0));
  CHECK(r.z[1] == doctest::Approx(1.5).epsilon(1e-12));

  // KKT: y = x + (D + uu^T) lambda with lambda >= 0, y >= 0, y^T lambda = 0.
  const Eigen::VectorXd lambda = apply_inverse(H, r.z - x);
  CHECK(lambda[0] == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(lambda[1] == doctest::Approx(0.0));
  CHECK(lambda.minCoeff() >= -1e-12);
  CHECK(r.z.minCoeff() >= 0.0);
  CHECK(std::abs(r.z.dot(lambda)) <= 1e-12);
}

TEST_CASE("inverse metric prox matches the enumeration oracle") {
  Rng rng(38);
  for (int trial = 0; trial < 120; ++trial) {
    const Eigen::Index n = 1 + static_cast<Eigen::Index>(rng.below(8));
    const auto H = random_metric(rng, n);
    const auto h = random_h(rng, n);
    const Eigen::VectorXd x = random_vector(rng, n);
    const auto got = prox_inverse_metric_separable(h, H, x);
    const Eigen::MatrixXd M = to_dense(H).inverse();
    const Eigen::VectorXd want = oracles::prox_oracle(M, h, x);
    CHECK((got.z - want).lpNorm<Eigen::Infinity>() < 1e-8);
  }
}

TEST_CASE("conjugate route reproduces the inverse metric prox") {
  // Identity metric: the route collapses to the classical Moreau identity.
  const auto l1 = SeparableFunction::l1(2, 1.0);
  DiagRank1Metric eye{vec2(1, 1), vec2(0, 0)};
  const Eigen::VectorXd x = vec2(2.5, -0.3);
  CHECK((prox_inverse_metric_via_conjugate(l1, eye, x) -
         prox_separable(l1, 1.0, x))
            .lpNorm<Eigen::Infinity>() < 1e-12);

  Rng rng(39);
  for (int trial = 0; trial < 60; ++trial) {
    const Eigen::Index n = 1 + static_cast<Eigen::Index>(rng.below(3));
    const auto H = random_metric(rng, n);
    const Eigen::VectorXd v = random_vector(rng, n);
    for (const auto& h :
         {SeparableFunction::nonneg(n), SeparableFunction::l1(n, 1.0),
          SeparableFunction::hinge(n, 0.8)}) {
      const Eigen::VectorXd direct =
          prox_inverse_metric_separable(h, H, v).z;
      const Eigen::VectorXd via = prox_inverse_metric_via_conjugate(h, H, v);
      CHECK((direct - via).lpNorm<Eigen::Infinity>() < 1e-9);
    }
  }

  SeparableFunction general_box;
  general_box.pieces = {ScalarPiece::box(-1.0, 3.0)};
  DiagRank1Metric one;
  one.d = Eigen::VectorXd::Ones(1);
  one.u = Eigen::VectorXd::Zero(1);
  CHECK_THROWS_AS(
      prox_inverse_metric_via_conjugate(general_box, one,
                                        Eigen::VectorXd::Zero(1)),
      std::invalid_argument);
}

TEST_CASE("general path: projections composed with the metric") {
  // h = l1-ball indicator, D = I, u = 0: plain projection.
  DiagRank1Metric eye{vec2(1, 1), vec2(0, 0)};
  const auto proj = [](const Eigen::VectorXd& v) {
    return project_l1_ball(v, 1.0);
  };
  CHECK((prox_forward_metric_general(proj, eye, vec2(3, 0)) - vec2(1, 0))
            .lpNorm<Eigen::Infinity>() < 1e-12);

  // Simplex with a rank-1 term: result stays on the simplex and matches
  // a refined grid search.
  DiagRank1Metric V{vec2(1, 1), vec2(1, 0)};
  const auto simplex = [](const Eigen::VectorXd& v) {
    return project_simplex(v);
  };
  const Eigen::VectorXd z =
      prox_forward_metric_general(simplex, V, vec2(1, 1), 1e-12);
  CHECK(z.minCoeff() >= -1e-12);
  CHECK(z.sum() == doctest::Approx(1.0).epsilon(1e-10));
  const Eigen::MatrixXd Vd = to_dense(V);
  const Eigen::VectorXd target = vec2(1, 1);
  const auto objective = [&](const Eigen::Vector2d& p) {
    if (p[0] < 0 || p[1] < 0 || std::abs(p[0] + p[1] - 1.0) > 1e-9) {
      return oracles::kInf;
    }
    const Eigen::Vector2d d = Eigen::Vector2d(target) - p;
    return 0.5 * d.dot(Vd * d);
  };
  // Scan the 1-D simplex parameterization directly.
  double best_val = oracles::kInf, best_t = 0.0;
  for (double t = 0.0; t <= 1.0; t += 1e-5) {
    const double v = objective(Eigen::Vector2d(t, 1.0 - t));
    if (v < best_val) {
      best_val = v;
      best_t = t;
    }
  }
  CHECK(std::abs(z[0] - best_t) < 1e-4);

  // D = 4I, u = 0, h = l1: the scaling lemma gives prox_{h/4}.
  DiagRank1Metric fourI{4.0 * Eigen::VectorXd::Ones(2),
                        Eigen::VectorXd::Zero(2)};
  const auto habs = SeparableFunction::l1(2, 1.0);
  // prox_{h o D^{-1/2}} for D = 4I is soft thresholding at 1/2.
  const auto scaled_prox = [&](const Eigen::VectorXd& v) {
    return prox_separable(habs, 0.5, v);
  };
  const Eigen::VectorXd got =
      prox_forward_metric_general(scaled_prox, fourI, vec2(2.0, -0.1));
  const Eigen::VectorXd want = prox_separable(habs, 0.25, vec2(2.0, -0.1));
  CHECK((got - want).lpNorm<Eigen::Infinity>() < 1e-12);
}

TEST_CASE("Moreau identity in the scaled norm") {
  // prox^V_{rho h*}(x) + rho V^{-1} prox^{V^{-1}}_{h/rho}(V x / rho) = x.
  Rng rng(40);
  for (int trial = 0; trial < 60; ++trial) {
    const Eigen::Index n = 1 + static_cast<Eigen::Index>(rng.below(4));
    const auto V = random_metric(rng, n);
    const Eigen::VectorXd x = random_vector(rng, n);
    const double rho = 0.2 + 2.0 * rng.uniform();
    for (const auto& base : {ScalarPiece::abs(1.0), ScalarPiece::nonneg()}) {
      SeparableFunction h, h_conj, h_over_rho;
      for (Eigen::Index i = 0; i < n; ++i) {
        h.pieces.push_back(base);
        h_conj.pieces.push_back(*conjugate_piece(base));
        ScalarPiece scaled = base;
        scaled.weight /= rho;
        h_over_rho.pieces.push_back(scaled);
      }
      // Both catalog conjugates here are indicators, so rho*h* = h*.
      const Eigen::VectorXd lhs1 =
          prox_forward_metric_separable(h_conj, V, x).z;
      const Eigen::VectorXd inner =
          prox_inverse_metric_separable(h_over_rho, V, apply(V, x) / rho).z;
      const Eigen::VectorXd residual =
          lhs1 + rho * apply_inverse(V, inner) - x;
      CHECK(residual.lpNorm<Eigen::Infinity>() <= 1e-10);
    }
  }
}
