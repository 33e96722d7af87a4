#include "proxqn/problems.hpp"

#include <cmath>
#include <stdexcept>
#include <unordered_set>

#include "proxqn/rng.hpp"

namespace proxqn {

namespace {

std::shared_ptr<const LeastSquaresData> make_ls_data(LinearOperator A,
                                                     Eigen::VectorXd b,
                                                     double lambda) {
  if (A.rows() != b.size()) {
    throw std::invalid_argument("least squares: A rows must match b size");
  }
  auto ls = std::make_shared<LeastSquaresData>();
  ls->A = std::move(A);
  ls->b = std::move(b);
  ls->lambda = lambda;
  return ls;
}

SmoothObjective least_squares_objective(
    std::shared_ptr<const LeastSquaresData> ls) {
  SmoothObjective f;
  f.eval = [ls](const Eigen::VectorXd& x) {
    return 0.5 * (ls->A.apply(x, ApplyMode::Forward) - ls->b).squaredNorm();
  };
  f.grad = [ls](const Eigen::VectorXd& x) {
    return ls->A.apply(ls->A.apply(x, ApplyMode::Forward) - ls->b,
                       ApplyMode::Adjoint);
  };
  f.lipschitz = kLipschitzSafety * estimate_lipschitz(ls->A, 1e-8).value;
  return f;
}

// log(1 + e^{-z}) without overflow on either tail.
double log1p_exp_neg(double z) {
  return z >= 0 ? std::log1p(std::exp(-z)) : -z + std::log1p(std::exp(z));
}

// 1 / (1 + e^{z}), the stable form of sigma(-z).
double sigmoid_neg(double z) {
  if (z >= 0) {
    const double e = std::exp(-z);
    return e / (1.0 + e);
  }
  return 1.0 / (1.0 + std::exp(z));
}

}  // namespace

CompositeProblem make_lasso(LinearOperator A, Eigen::VectorXd b,
                            double lambda) {
  if (lambda <= 0) {
    throw std::invalid_argument("make_lasso: lambda must be positive");
  }
  auto ls = make_ls_data(std::move(A), std::move(b), lambda);
  CompositeProblem p;
  p.dimension = ls->A.cols();
  p.smooth = least_squares_objective(ls);
  p.nonsmooth = SeparableFunction::l1(p.dimension, lambda);
  p.least_squares = ls;
  p.name = "lasso";
  return p;
}

CompositeProblem make_nnls(LinearOperator A, Eigen::VectorXd b) {
  auto ls = make_ls_data(std::move(A), std::move(b), 0.0);
  CompositeProblem p;
  p.dimension = ls->A.cols();
  p.smooth = least_squares_objective(ls);
  p.nonsmooth = SeparableFunction::nonneg(p.dimension);
  p.least_squares = ls;
  p.name = "nnls";
  return p;
}

CompositeProblem make_sparse_svm(Eigen::MatrixXd Z, Eigen::VectorXd y,
                                 double lambda, SvmLoss loss) {
  const Eigen::Index m = Z.rows();
  if (y.size() != m) {
    throw std::invalid_argument("make_sparse_svm: label count mismatch");
  }
  for (Eigen::Index i = 0; i < m; ++i) {
    if (y[i] != 1.0 && y[i] != -1.0) {
      throw std::invalid_argument("make_sparse_svm: labels must be +-1");
    }
  }
  if (lambda < 0) {
    throw std::invalid_argument("make_sparse_svm: lambda must be nonnegative");
  }

  // Bias as an appended unpenalized coordinate: data matrix [Z, 1].
  const Eigen::Index dim = Z.cols() + 1;
  auto zhat = std::make_shared<Eigen::MatrixXd>(m, dim);
  zhat->leftCols(Z.cols()) = Z;
  zhat->col(Z.cols()).setOnes();
  auto labels = std::make_shared<Eigen::VectorXd>(std::move(y));
  const double inv_m = 1.0 / static_cast<double>(m);

  CompositeProblem p;
  p.dimension = dim;
  if (loss == SvmLoss::SquaredHinge) {
    p.smooth.eval = [zhat, labels, inv_m](const Eigen::VectorXd& x) {
      const Eigen::VectorXd margin =
          Eigen::VectorXd::Ones(labels->size()) -
          labels->cwiseProduct(*zhat * x);
      return inv_m * margin.cwiseMax(0.0).squaredNorm();
    };
    p.smooth.grad = [zhat, labels, inv_m](const Eigen::VectorXd& x) {
      const Eigen::VectorXd margin =
          Eigen::VectorXd::Ones(labels->size()) -
          labels->cwiseProduct(*zhat * x);
      const Eigen::VectorXd w =
          -2.0 * inv_m * labels->cwiseProduct(margin.cwiseMax(0.0));
      return Eigen::VectorXd(zhat->transpose() * w);
    };
  } else {
    p.smooth.eval = [zhat, labels, inv_m](const Eigen::VectorXd& x) {
      const Eigen::VectorXd z = labels->cwiseProduct(*zhat * x);
      double total = 0.0;
      for (Eigen::Index i = 0; i < z.size(); ++i) {
        total += log1p_exp_neg(z[i]);
      }
      return inv_m * total;
    };
    p.smooth.grad = [zhat, labels, inv_m](const Eigen::VectorXd& x) {
      const Eigen::VectorXd z = labels->cwiseProduct(*zhat * x);
      Eigen::VectorXd w(z.size());
      for (Eigen::Index i = 0; i < z.size(); ++i) {
        w[i] = -inv_m * (*labels)[i] * sigmoid_neg(z[i]);
      }
      return Eigen::VectorXd(zhat->transpose() * w);
    };
  }
  const double curvature = loss == SvmLoss::SquaredHinge ? 2.0 : 0.25;
  p.smooth.lipschitz =
      kLipschitzSafety * curvature * inv_m *
      estimate_lipschitz(LinearOperator::dense(*zhat), 1e-8).value;

  p.nonsmooth.pieces.assign(static_cast<std::size_t>(dim - 1),
                            ScalarPiece::abs(lambda));
  p.nonsmooth.pieces.push_back(ScalarPiece::zero());
  p.name = "svm";
  return p;
}

CompositeProblem gen_gaussian_instance(int m, int n, double lambda,
                                       std::uint64_t seed) {
  if (m < 1 || n < 1) {
    throw std::invalid_argument("gen_gaussian_instance: m, n must be >= 1");
  }
  Rng rng(seed);
  // Draw order is part of the instance format: A row-major, then the
  // spike support/signs, then the noise.
  Eigen::MatrixXd A(m, n);
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < n; ++j) {
      A(i, j) = rng.normal();
    }
  }
  Eigen::VectorXd x_true = Eigen::VectorXd::Zero(n);
  const int n_spikes = std::max(1, static_cast<int>(std::lround(0.05 * n)));
  std::unordered_set<std::uint64_t> used;
  while (static_cast<int>(used.size()) < n_spikes) {
    const std::uint64_t idx = rng.below(static_cast<std::uint64_t>(n));
    if (used.insert(idx).second) {
      x_true[static_cast<Eigen::Index>(idx)] = rng.below(2) ? 1.0 : -1.0;
    }
  }
  Eigen::VectorXd noise(m);
  for (int i = 0; i < m; ++i) noise[i] = 0.1 * rng.normal();
  Eigen::VectorXd b = A * x_true + noise;
  auto p = make_lasso(LinearOperator::dense(std::move(A)), std::move(b),
                      lambda);
  p.name = "lasso-gaussian";
  return p;
}

CompositeProblem gen_pde_instance(int n_side, double lambda) {
  LinearOperator A = make_diff3d(n_side);
  const double center = 0.5 * (n_side - 1);
  const double sigma = std::max(1.0, 0.25 * n_side);
  Eigen::VectorXd x_true(A.cols());
  Eigen::Index idx = 0;
  for (int i = 0; i < n_side; ++i) {
    for (int j = 0; j < n_side; ++j) {
      for (int k = 0; k < n_side; ++k) {
        const double r2 = (i - center) * (i - center) +
                          (j - center) * (j - center) +
                          (k - center) * (k - center);
        x_true[idx++] = std::exp(-r2 / (2.0 * sigma * sigma));
      }
    }
  }
  Eigen::VectorXd b = A.apply(x_true, ApplyMode::Forward);
  auto p = make_lasso(std::move(A), std::move(b), lambda);
  p.name = "lasso-pde";
  return p;
}

CompositeProblem split_variables(const CompositeProblem& lasso) {
  if (lasso.name != "lasso" && lasso.name != "lasso-gaussian" &&
      lasso.name != "lasso-pde") {
    throw std::invalid_argument("split_variables: input must be a LASSO");
  }
  if (!lasso.least_squares) {
    throw std::invalid_argument("split_variables: missing problem data");
  }
  auto ls = lasso.least_squares;
  const Eigen::Index n = ls->A.cols();
  const double lambda = ls->lambda;

  CompositeProblem p;
  p.dimension = 2 * n;
  p.smooth.eval = [ls, lambda, n](const Eigen::VectorXd& z) {
    const Eigen::VectorXd x = z.head(n) - z.tail(n);
    const double fit =
        0.5 * (ls->A.apply(x, ApplyMode::Forward) - ls->b).squaredNorm();
    return fit + lambda * z.sum();
  };
  p.smooth.grad = [ls, lambda, n](const Eigen::VectorXd& z) {
    const Eigen::VectorXd x = z.head(n) - z.tail(n);
    const Eigen::VectorXd g = ls->A.apply(
        ls->A.apply(x, ApplyMode::Forward) - ls->b, ApplyMode::Adjoint);
    Eigen::VectorXd out(2 * n);
    out.head(n) = g.array() + lambda;
    out.tail(n) = -g.array() + lambda;
    return out;
  };
  // Hessian of the fit is [[A^T A, -A^T A], [-A^T A, A^T A]]; its norm is
  // twice the original, and the linear term adds nothing.
  p.smooth.lipschitz = 2.0 * lasso.smooth.lipschitz;
  p.nonsmooth = SeparableFunction::nonneg(2 * n);
  p.least_squares = ls;
  p.name = "lasso-split";
  return p;
}

Eigen::VectorXd split_recover(const Eigen::VectorXd& z) {
  const Eigen::Index n = z.size() / 2;
  if (2 * n != z.size()) {
    throw std::invalid_argument("split_recover: odd dimension");
  }
  return z.head(n) - z.tail(n);
}

}  // namespace proxqn
