#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>

#include "proxqn/linops.hpp"
#include "proxqn/prox.hpp"

namespace proxqn {

struct SmoothObjective {
  std::function<double(const Eigen::VectorXd&)> eval;
  std::function<Eigen::VectorXd(const Eigen::VectorXd&)> grad;
  double lipschitz = 0.0;
};

// Retained by least-squares problems so transforms (variable splitting)
// and instance hashing can reuse the ingredients.
struct LeastSquaresData {
  LinearOperator A;
  Eigen::VectorXd b;
  double lambda = 0.0;
};

struct CompositeProblem {
  SmoothObjective smooth;
  SeparableFunction nonsmooth;
  Eigen::Index dimension = 0;
  std::optional<double> reference_optimum;
  std::shared_ptr<const LeastSquaresData> least_squares;
  std::string name;
};

inline double objective_value(const CompositeProblem& p,
                              const Eigen::VectorXd& x) {
  return p.smooth.eval(x) + value(p.nonsmooth, x);
}

// 0.5*||Ax-b||^2 + lambda*||x||_1.
CompositeProblem make_lasso(LinearOperator A, Eigen::VectorXd b,
                            double lambda);

// 0.5*||Ax-b||^2 subject to x >= 0.
CompositeProblem make_nnls(LinearOperator A, Eigen::VectorXd b);

enum class SvmLoss { SquaredHinge, Logistic };

// (1/m) sum_i L(<x, z_i> + bias, y_i) + lambda*||x||_1 with the bias as
// an appended unpenalized coordinate, so the problem dimension is
// Z.cols() + 1.  Labels must be +-1.
CompositeProblem make_sparse_svm(Eigen::MatrixXd Z, Eigen::VectorXd y,
                                 double lambda, SvmLoss loss);

// Gaussian compressed-sensing LASSO: A is m x n iid N(0,1), the planted
// signal has ~5% +-1 spikes, b = A x_true + N(0, 0.01) noise.
// Deterministic given the seed (see rng.hpp for the fixed generator).
CompositeProblem gen_gaussian_instance(int m, int n, double lambda,
                                       std::uint64_t seed);

// LASSO whose operator is the 3D Laplacian on an n_side^3 grid and
// whose data comes from a smooth bump, b = A x_true.
CompositeProblem gen_pde_instance(int n_side, double lambda);

// Positive/negative-part splitting of a LASSO problem:
//   min_{z >= 0} 0.5*||[A, -A] z - b||^2 + lambda*<1, z>,  z = (x+, x-),
// dimension doubled, the linear l1 surrogate moved into the smooth part.
// Throws std::invalid_argument when the input is not a LASSO problem.
CompositeProblem split_variables(const CompositeProblem& lasso);

// x = x+ - x- from a split iterate.
Eigen::VectorXd split_recover(const Eigen::VectorXd& z);

}  // namespace proxqn
