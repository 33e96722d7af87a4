#include "proxqn/linops.hpp"

#include <stdexcept>

#include "proxqn/rng.hpp"

namespace proxqn {

LinearOperator LinearOperator::dense(Eigen::MatrixXd A) {
  LinearOperator op;
  op.kind_ = OpKind::Dense;
  op.rows_ = A.rows();
  op.cols_ = A.cols();
  op.A_ = std::move(A);
  return op;
}

LinearOperator LinearOperator::diff3d(int n_side) {
  if (n_side < 2) {
    throw std::invalid_argument("diff3d requires n_side >= 2");
  }
  LinearOperator op;
  op.kind_ = OpKind::Diff3d;
  const Eigen::Index n = static_cast<Eigen::Index>(n_side) * n_side * n_side;
  op.rows_ = n;
  op.cols_ = n;
  op.n_side_ = n_side;
  return op;
}

const Eigen::MatrixXd& LinearOperator::matrix() const {
  if (kind_ != OpKind::Dense) {
    throw std::logic_error("matrix() is only available for dense operators");
  }
  return A_;
}

namespace {

// 7-point Laplacian with Dirichlet boundaries: 6 on the diagonal, -1 for
// each in-grid neighbor; out-of-grid neighbors are dropped (zero value).
Eigen::VectorXd apply_laplacian3d(int n, const Eigen::VectorXd& x) {
  Eigen::VectorXd y(x.size());
  auto idx = [n](int i, int j, int k) {
    return (static_cast<Eigen::Index>(i) * n + j) * n + k;
  };
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      for (int k = 0; k < n; ++k) {
        double v = 6.0 * x[idx(i, j, k)];
        if (i > 0) v -= x[idx(i - 1, j, k)];
        if (i < n - 1) v -= x[idx(i + 1, j, k)];
        if (j > 0) v -= x[idx(i, j - 1, k)];
        if (j < n - 1) v -= x[idx(i, j + 1, k)];
        if (k > 0) v -= x[idx(i, j, k - 1)];
        if (k < n - 1) v -= x[idx(i, j, k + 1)];
        y[idx(i, j, k)] = v;
      }
    }
  }
  return y;
}

}  // namespace

Eigen::VectorXd LinearOperator::apply(const Eigen::VectorXd& x,
                                      ApplyMode mode) const {
  const Eigen::Index expected =
      mode == ApplyMode::Forward ? cols_ : rows_;
  if (x.size() != expected) {
    throw std::invalid_argument("LinearOperator::apply: dimension mismatch");
  }
  switch (kind_) {
    case OpKind::Dense:
      return mode == ApplyMode::Forward ? Eigen::VectorXd(A_ * x)
                                        : Eigen::VectorXd(A_.transpose() * x);
    case OpKind::Diff3d:
      // Symmetric; forward and adjoint coincide.
      return apply_laplacian3d(n_side_, x);
  }
  throw std::logic_error("unreachable operator kind");
}

LinearOperator make_diff3d(int n_side) { return LinearOperator::diff3d(n_side); }

LipschitzEstimate estimate_lipschitz(const LinearOperator& op, double tol) {
  if (tol <= 0) {
    throw std::invalid_argument("estimate_lipschitz: tol must be positive");
  }
  const Eigen::Index n = op.cols();
  Rng rng(0x9e3779b97f4a7c15ULL);
  Eigen::VectorXd v(n);
  for (Eigen::Index i = 0; i < n; ++i) v[i] = rng.normal();
  v.normalize();

  constexpr int kMaxIters = 10000;
  double lambda = 0.0;
  for (int it = 1; it <= kMaxIters; ++it) {
    Eigen::VectorXd w =
        op.apply(op.apply(v, ApplyMode::Forward), ApplyMode::Adjoint);
    const double lambda_new = v.dot(w);  // Rayleigh quotient, ||v|| = 1
    const double wn = w.norm();
    if (wn == 0.0) {
      return {0.0, true, it};  // A = 0
    }
    v = w / wn;
    if (it > 1 &&
        std::abs(lambda_new - lambda) <= tol * std::abs(lambda_new)) {
      return {lambda_new, true, it};
    }
    lambda = lambda_new;
  }
  return {lambda, false, kMaxIters};
}

}  // namespace proxqn
