#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <vector>

#include <json.hpp>

#include "sparsegap/combinatorics.hpp"
#include "sparsegap/errors.hpp"
#include "sparsegap/x3c.hpp"

// Sparse-regression estimators for y = X theta + noise:
//   - exact best-subset search over all supports of a given size,
//   - l1-penalized least squares (coordinate descent with a subgradient
//     certificate),
//   - the two-step variant that truncates the penalized solution to its k
//     largest-magnitude coefficients.

namespace sparsegap::estimators {

struct RegressionProblem {
  Eigen::MatrixXd X;  // n x d
  Eigen::VectorXd y;  // length n
  double sigma = 0.0;
  int k = 1;

  int n() const { return static_cast<int>(X.rows()); }
  int d() const { return static_cast<int>(X.cols()); }
};

inline RegressionProblem make_problem(Eigen::MatrixXd X, Eigen::VectorXd y,
                                      double sigma, int k) {
  if (X.rows() < 1 || X.cols() < 1)
    throw ShapeError("design matrix must be nonempty");
  if (y.size() != X.rows())
    throw ShapeError("response length must match the design row count");
  if (!(sigma >= 0.0)) throw PreconditionError("noise level must be >= 0");
  if (k < 1 || k > X.cols())
    throw PreconditionError("sparsity budget must lie in [1, d]");
  return RegressionProblem{std::move(X), std::move(y), sigma, k};
}

struct Estimate {
  Eigen::VectorXd theta;
  std::vector<int> support;  // 0-based indices of nonzero coefficients
  double objective = 0.0;
  // Coordinate-descent diagnostics (meaningful for the penalized solver).
  bool converged = true;
  double kkt_gap = 0.0;
  int sweeps = 0;
};

inline std::vector<int> support_of(const Eigen::VectorXd& theta) {
  std::vector<int> s;
  for (Eigen::Index j = 0; j < theta.size(); ++j)
    if (theta[j] != 0.0) s.push_back(static_cast<int>(j));
  return s;
}

// Minimum-norm least-squares solution for possibly rank-deficient X_S.
inline Eigen::VectorXd least_squares(const Eigen::MatrixXd& X_S,
                                     const Eigen::VectorXd& y) {
  if (X_S.rows() != y.size())
    throw ShapeError("least_squares: row count must match response length");
  if (X_S.cols() > X_S.rows())
    throw ShapeError("least_squares: more columns than rows");
  Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(X_S);
  return cod.solve(y);
}

// Exact best-subset regression: minimizes ||y - X theta||^2 over all theta
// with at most k nonzeros by enumerating every size-k support (minima over
// supports are attained at some size-k support since fits only improve as
// supports grow). Ties keep the lexicographically smallest support. The
// reported objective is the squared residual norm.
inline Estimate l0_estimate(const RegressionProblem& prob,
                            std::uint64_t budget = 10'000'000) {
  const int n = prob.n(), d = prob.d(), k = prob.k;
  if (binomial(static_cast<std::uint64_t>(d), static_cast<std::uint64_t>(k),
               budget + 1) > budget)
    throw BudgetExceeded("support enumeration exceeds the budget");
  Eigen::MatrixXd Xs(n, k);
  Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod;
  double best = std::numeric_limits<double>::infinity();
  std::vector<int> best_support;
  Eigen::VectorXd best_beta;
  for_each_combination(d, k, [&](const std::vector<int>& S) {
    for (int i = 0; i < k; ++i) Xs.col(i) = prob.X.col(S[i]);
    cod.compute(Xs);
    Eigen::VectorXd beta = cod.solve(prob.y);
    double res = (prob.y - Xs * beta).squaredNorm();
    if (res < best) {
      best = res;
      best_support = S;
      best_beta = beta;
    }
    return true;
  });
  Estimate est;
  est.theta = Eigen::VectorXd::Zero(d);
  for (int i = 0; i < k; ++i) est.theta[best_support[i]] = best_beta[i];
  est.support = support_of(est.theta);
  est.objective = best;
  return est;
}

namespace detail {

inline double soft_threshold(double z, double lambda) {
  if (z > lambda) return z - lambda;
  if (z < -lambda) return z + lambda;
  return 0.0;
}

}  // namespace detail

inline double penalized_objective(const RegressionProblem& prob,
                                  const Eigen::VectorXd& theta,
                                  double lambda) {
  double n = static_cast<double>(prob.n());
  return (prob.y - prob.X * theta).squaredNorm() / (2.0 * n) +
         lambda * theta.lpNorm<1>();
}

// Worst violation of the subgradient optimality conditions for the
// penalized objective (1/2n)||y - X theta||^2 + lambda*||theta||_1:
// with g = X^T(y - X theta)/n, optimality requires g_j = lambda*sign(theta_j)
// on the support and |g_j| <= lambda off it.
inline double kkt_violation(const RegressionProblem& prob,
                            const Eigen::VectorXd& theta, double lambda) {
  Eigen::VectorXd g =
      prob.X.transpose() * (prob.y - prob.X * theta) / prob.n();
  double worst = 0.0;
  for (Eigen::Index j = 0; j < g.size(); ++j) {
    double v = theta[j] != 0.0
                   ? std::abs(g[j] - lambda * (theta[j] > 0.0 ? 1.0 : -1.0))
                   : std::max(0.0, std::abs(g[j]) - lambda);
    worst = std::max(worst, v);
  }
  return worst;
}

// l1-penalized least squares, objective (1/2n)||y - X theta||^2 + lambda
// ||theta||_1, by cyclic coordinate descent with exact univariate updates.
// Converged means: a full sweep moved no coordinate by more than tol AND the
// subgradient conditions hold within cert_tol. If max_sweeps elapse first,
// the best iterate is returned with converged = false (callers that cannot
// tolerate that should check the flag). Zero columns keep coefficient 0.
inline Estimate lasso(const RegressionProblem& prob, double lambda,
                      double tol = 1e-10, int max_sweeps = 100'000,
                      double cert_tol = 1e-8) {
  if (!(lambda >= 0.0)) throw PreconditionError("lambda must be >= 0");
  const int n = prob.n(), d = prob.d();
  Eigen::VectorXd col_sq(d);
  for (int j = 0; j < d; ++j)
    col_sq[j] = prob.X.col(j).squaredNorm() / static_cast<double>(n);
  Eigen::VectorXd theta = Eigen::VectorXd::Zero(d);
  Eigen::VectorXd r = prob.y;
  Estimate est;
  est.converged = false;
  int sweep = 0;
  for (; sweep < max_sweeps; ++sweep) {
    double max_change = 0.0;
    for (int j = 0; j < d; ++j) {
      if (col_sq[j] == 0.0) continue;
      double rho = prob.X.col(j).dot(r) / static_cast<double>(n) +
                   col_sq[j] * theta[j];
      double next = detail::soft_threshold(rho, lambda) / col_sq[j];
      double delta = next - theta[j];
      if (delta != 0.0) {
        r -= prob.X.col(j) * delta;
        theta[j] = next;
      }
      max_change = std::max(max_change, std::abs(delta));
    }
    // Periodic residual refresh bounds drift from incremental updates.
    if ((sweep & 63) == 63) r = prob.y - prob.X * theta;
    if (max_change < tol) {
      est.kkt_gap = kkt_violation(prob, theta, lambda);
      if (est.kkt_gap <= cert_tol) {
        est.converged = true;
        ++sweep;
        break;
      }
    }
  }
  if (!est.converged) est.kkt_gap = kkt_violation(prob, theta, lambda);
  est.theta = theta;
  est.support = support_of(theta);
  est.objective = penalized_objective(prob, theta, lambda);
  est.sweeps = sweep;
  return est;
}

// Keeps the k largest-magnitude entries (ties keep the smaller index) and
// zeroes the rest: the best k-term approximation in every l_p norm.
inline Eigen::VectorXd threshold_topk(const Eigen::VectorXd& theta, int k) {
  const int d = static_cast<int>(theta.size());
  if (k < 1 || k > d)
    throw PreconditionError("keep count must lie in [1, d]");
  std::vector<int> order(static_cast<std::size_t>(d));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    return std::abs(theta[a]) > std::abs(theta[b]);
  });
  Eigen::VectorXd out = Eigen::VectorXd::Zero(d);
  for (int i = 0; i < k; ++i) out[order[static_cast<std::size_t>(i)]] = theta[order[static_cast<std::size_t>(i)]];
  return out;
}

// Default penalty level 4*sigma*sqrt(ln(d)/n).
inline double default_lambda(double sigma, int n, int d) {
  return 4.0 * sigma * std::sqrt(std::log(static_cast<double>(d)) /
                                 static_cast<double>(n));
}

// Two-step estimator: penalized fit at the default lambda, then truncation
// to the k largest-magnitude coefficients. The reported objective is the
// squared residual norm of the truncated vector; coordinate-descent
// diagnostics are inherited from the inner solve.
inline Estimate thresholded_lasso(const RegressionProblem& prob,
                                  double tol = 1e-10,
                                  int max_sweeps = 100'000,
                                  double cert_tol = 1e-8) {
  if (!(prob.sigma > 0.0))
    throw PreconditionError("noise level must be positive for the default penalty");
  if (prob.d() < 2)
    throw PreconditionError("need at least two predictors for the default penalty");
  double lambda = default_lambda(prob.sigma, prob.n(), prob.d());
  Estimate inner = lasso(prob, lambda, tol, max_sweeps, cert_tol);
  Estimate est;
  est.theta = threshold_topk(inner.theta, prob.k);
  est.support = support_of(est.theta);
  est.objective = (prob.y - prob.X * est.theta).squaredNorm();
  est.converged = inner.converged;
  est.kkt_gap = inner.kkt_gap;
  est.sweeps = inner.sweeps;
  return est;
}

inline nlohmann::ordered_json estimate_to_json(const Estimate& est) {
  nlohmann::ordered_json j;
  j["theta"] = std::vector<double>(est.theta.data(),
                                   est.theta.data() + est.theta.size());
  j["support"] = est.support;
  j["objective"] = est.objective;
  return j;
}

// Adapter handing the best-subset solver to the cover-decoding pipeline.
inline x3c::RegressionOracle l0_oracle(std::uint64_t budget = 10'000'000) {
  return [budget](const Eigen::MatrixXd& M, const Eigen::VectorXd& y,
                  int k) {
    return l0_estimate(make_problem(M, y, 0.0, k), budget).theta;
  };
}

}  // namespace sparsegap::estimators
