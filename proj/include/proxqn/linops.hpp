#pragma once

#include <Eigen/Dense>

namespace proxqn {

enum class OpKind { Dense, Diff3d };
enum class ApplyMode { Forward, Adjoint };

// Linear operator behind least-squares objectives: either an explicit
// dense matrix or the matrix-free 7-point 3D Laplacian (Dirichlet
// boundaries).  Immutable after construction; safe to share across
// concurrent solver runs.
class LinearOperator {
 public:
  LinearOperator() = default;  // empty 0x0 dense operator

  static LinearOperator dense(Eigen::MatrixXd A);
  static LinearOperator diff3d(int n_side);

  Eigen::Index rows() const { return rows_; }
  Eigen::Index cols() const { return cols_; }
  OpKind kind() const { return kind_; }

  // Ax (Forward) or A^T x (Adjoint); throws std::invalid_argument on a
  // dimension mismatch.
  Eigen::VectorXd apply(const Eigen::VectorXd& x, ApplyMode mode) const;

  const Eigen::MatrixXd& matrix() const;  // Dense only
  int n_side() const { return n_side_; }  // Diff3d only

 private:
  OpKind kind_ = OpKind::Dense;
  Eigen::Index rows_ = 0;
  Eigen::Index cols_ = 0;
  Eigen::MatrixXd A_;
  int n_side_ = 0;
};

LinearOperator make_diff3d(int n_side);

struct LipschitzEstimate {
  double value = 0.0;   // estimate of ||A||_2^2
  bool converged = true;
  int iterations = 0;
};

// Largest eigenvalue of A^T A by power iteration, relative tolerance
// `tol`.  Deterministic (fixed internal start vector).  If the
// iteration cap is hit the best estimate is returned with
// converged=false.
LipschitzEstimate estimate_lipschitz(const LinearOperator& op, double tol);

// Safety factor applied before an estimate is used as a gradient
// Lipschitz constant, protecting step sizes against power-iteration
// under-estimation.
inline constexpr double kLipschitzSafety = 1.01;

}  // namespace proxqn
