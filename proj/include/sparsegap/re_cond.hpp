#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <vector>

#include <json.hpp>

#include "sparsegap/combinatorics.hpp"
#include "sparsegap/errors.hpp"
#include "sparsegap/prng.hpp"

// Restricted-eigenvalue machinery. For a design X (n x d) and sparsity k,
// the restricted eigenvalue constant is the smallest value of
// ||X theta||^2 / (n ||theta||^2) over the union of the cones
//   C(S) = { theta : ||theta restricted off S||_1 <= 3 ||theta on S||_1 }
// over all supports |S| = k. Computing it exactly is intractable (the cone
// union is nonconvex), so re_upper_bound ships a seeded multi-start descent
// that returns an UPPER bound together with the witness attaining it. Two
// computable bounds sandwich the output:
//   lambda_min(X^T X)/n  <=  gamma_hat  <=  min_{|S|=k} lambda_min(X_S^T X_S)/n,
// the right side because each support's bottom eigenvector is a descent
// start and descent only ever accepts strict improvement.

namespace sparsegap::re_cond {

struct ConeSpec {
  std::vector<int> support;  // 0-based, sorted
  double factor = 3.0;
};

inline bool in_cone(const Eigen::VectorXd& theta, const ConeSpec& spec) {
  double on = 0.0, off = 0.0;
  std::size_t pos = 0;
  for (Eigen::Index j = 0; j < theta.size(); ++j) {
    if (pos < spec.support.size() &&
        spec.support[pos] == static_cast<int>(j)) {
      on += std::abs(theta[j]);
      ++pos;
    } else {
      off += std::abs(theta[j]);
    }
  }
  return off <= spec.factor * on;
}

inline double rayleigh(const Eigen::MatrixXd& X, const Eigen::VectorXd& theta) {
  if (theta.size() != X.cols())
    throw ShapeError("rayleigh: vector length must match column count");
  double nrm2 = theta.squaredNorm();
  if (nrm2 == 0.0) throw ZeroVector("rayleigh quotient of the zero vector");
  return (X * theta).squaredNorm() /
         (static_cast<double>(X.rows()) * nrm2);
}

struct REEstimate {
  double gamma_hat = 0.0;  // minimum Rayleigh quotient found
  Eigen::VectorXd witness;
  std::vector<int> witness_support;
  int restarts = 0;
  std::uint64_t seed = 0;
};

inline nlohmann::ordered_json re_estimate_to_json(const REEstimate& est) {
  nlohmann::ordered_json j;
  j["gamma_hat"] = est.gamma_hat;
  j["witness"] = std::vector<double>(
      est.witness.data(), est.witness.data() + est.witness.size());
  j["witness_support"] = est.witness_support;
  j["restarts"] = est.restarts;
  j["seed"] = est.seed;
  return j;
}

// Largest singular value by power iteration on X^T X (deterministic start).
inline double operator_norm(const Eigen::MatrixXd& X, double tol = 1e-9,
                            int max_iters = 5000) {
  const Eigen::Index d = X.cols();
  Eigen::VectorXd v(d);
  for (Eigen::Index i = 0; i < d; ++i)
    v[i] = 1.0 + 1e-3 * static_cast<double>(i);
  v.normalize();
  double lambda = 0.0;
  for (int it = 0; it < max_iters; ++it) {
    Eigen::VectorXd w = X.transpose() * (X * v);
    double nw = w.norm();
    if (nw == 0.0) return 0.0;
    w /= nw;
    double next = (X * w).squaredNorm();
    if (std::abs(next - lambda) <= tol * std::max(1.0, next) && it > 0) {
      lambda = next;
      break;
    }
    lambda = next;
    v = w;
  }
  return std::sqrt(lambda);
}

namespace detail {

// Multiplier map used by the cone projection: off-support entries shrink by
// mu (soft-threshold), support entries grow by factor*mu along their own
// sign (entries at exactly zero stay zero).
inline Eigen::VectorXd cone_multiplier_point(const Eigen::VectorXd& z,
                                             const std::vector<int>& support,
                                             double factor, double mu) {
  Eigen::VectorXd p = z;
  std::size_t pos = 0;
  for (Eigen::Index j = 0; j < z.size(); ++j) {
    if (pos < support.size() && support[pos] == static_cast<int>(j)) {
      if (z[j] > 0.0)
        p[j] = z[j] + factor * mu;
      else if (z[j] < 0.0)
        p[j] = z[j] - factor * mu;
      ++pos;
    } else {
      double a = std::abs(z[j]) - mu;
      p[j] = a > 0.0 ? (z[j] > 0.0 ? a : -a) : 0.0;
    }
  }
  return p;
}

inline double cone_slack(const Eigen::VectorXd& p,
                         const std::vector<int>& support, double factor) {
  double on = 0.0, off = 0.0;
  std::size_t pos = 0;
  for (Eigen::Index j = 0; j < p.size(); ++j) {
    if (pos < support.size() && support[pos] == static_cast<int>(j)) {
      on += std::abs(p[j]);
      ++pos;
    } else {
      off += std::abs(p[j]);
    }
  }
  return off - factor * on;  // <= 0 inside the cone
}

// Approximate projection onto C(S) by bisection on the constraint
// multiplier. The returned point always satisfies the cone inequality (the
// bisection keeps the feasible endpoint).
inline Eigen::VectorXd project_cone(const Eigen::VectorXd& z,
                                    const std::vector<int>& support,
                                    double factor) {
  if (cone_slack(z, support, factor) <= 0.0) return z;
  double lo = 0.0;
  double hi = z.cwiseAbs().maxCoeff();
  for (int it = 0; it < 64; ++it) {
    double mid = 0.5 * (lo + hi);
    Eigen::VectorXd p = cone_multiplier_point(z, support, factor, mid);
    if (cone_slack(p, support, factor) <= 0.0)
      hi = mid;
    else
      lo = mid;
  }
  return cone_multiplier_point(z, support, factor, hi);
}

// Shrinks off-support mass by tiny factors until the cone inequality holds
// exactly under recomputation (guards against 1-ulp boundary flips after
// normalization).
inline void enforce_cone(Eigen::VectorXd& theta,
                         const std::vector<int>& support, double factor) {
  for (int guard = 0; guard < 8; ++guard) {
    if (cone_slack(theta, support, factor) <= 0.0) return;
    std::size_t pos = 0;
    for (Eigen::Index j = 0; j < theta.size(); ++j) {
      if (pos < support.size() && support[pos] == static_cast<int>(j))
        ++pos;
      else
        theta[j] *= 1.0 - 1e-12;
    }
  }
}

struct DescentResult {
  double value = std::numeric_limits<double>::infinity();
  Eigen::VectorXd point;
  bool ok = false;
};

// Projected gradient descent of theta^T Q theta over (unit sphere) cap
// C(S): gradient step, cone projection, renormalization, accepted only on
// strict decrease. Monotone by construction, so the start's value is an
// upper bound on the result.
inline DescentResult descend(const Eigen::MatrixXd& Q,
                             const std::vector<int>& support, double factor,
                             Eigen::VectorXd theta, double lambda_max,
                             int max_iters = 500, double step_tol = 1e-9) {
  DescentResult out;
  double nrm = theta.norm();
  if (nrm == 0.0) return out;
  theta /= nrm;
  enforce_cone(theta, support, factor);
  if (cone_slack(theta, support, factor) > 0.0) return out;
  double f = theta.dot(Q * theta);
  double eta = lambda_max > 0.0 ? 1.0 / lambda_max : 1.0;
  for (int it = 0; it < max_iters; ++it) {
    Eigen::VectorXd grad = 2.0 * (Q * theta);
    bool accepted = false;
    double local_eta = eta;
    for (int bt = 0; bt < 40; ++bt) {
      Eigen::VectorXd cand =
          project_cone(theta - local_eta * grad, support, factor);
      double cn = cand.norm();
      if (cn > 0.0) {
        cand /= cn;
        enforce_cone(cand, support, factor);
        double fc = cand.dot(Q * cand);
        if (fc < f - 1e-15) {
          double moved = (cand - theta).norm();
          theta = std::move(cand);
          f = fc;
          accepted = true;
          eta = std::min(local_eta * 1.5, lambda_max > 0.0 ? 10.0 / lambda_max : 10.0);
          if (moved <= step_tol) it = max_iters;  // converged
          break;
        }
      }
      local_eta *= 0.25;
      if (local_eta < 1e-18) break;
    }
    if (!accepted) break;
  }
  out.value = f;
  out.point = std::move(theta);
  out.ok = true;
  return out;
}

inline Eigen::VectorXd random_cone_point(int d, const std::vector<int>& support,
                                         double factor, Prng& rng) {
  Eigen::VectorXd theta = Eigen::VectorXd::Zero(d);
  double on_mass = 0.0;
  for (int j : support) {
    theta[j] = rng.next_gaussian();
    on_mass += std::abs(theta[j]);
  }
  std::vector<double> off(static_cast<std::size_t>(d), 0.0);
  double off_mass = 0.0;
  for (int j = 0; j < d; ++j) {
    if (std::binary_search(support.begin(), support.end(), j)) continue;
    off[static_cast<std::size_t>(j)] = rng.next_gaussian();
    off_mass += std::abs(off[static_cast<std::size_t>(j)]);
  }
  double budget = rng.next_unit() * factor * on_mass;
  if (off_mass > 0.0 && budget > 0.0) {
    double scale = budget / off_mass;
    for (int j = 0; j < d; ++j) theta[j] += off[static_cast<std::size_t>(j)] * scale;
  }
  return theta;
}

}  // namespace detail

// A descent start: a point together with the cone support to project
// against. Used to carry witnesses between estimates (e.g. re-checking a
// perturbed matrix against the original matrix's witness).
struct ConeStart {
  Eigen::VectorXd theta;
  std::vector<int> support;
};

// Seeded multi-start upper bound on the restricted eigenvalue constant.
// Starts: (i) for every candidate support, the bottom eigenvector of
// X_S^T X_S / n (all C(d,k) supports when that count is at most
// support_budget, otherwise support_samples random ones); (ii) the given
// extra_starts; (iii) `restarts` random cone points on random supports.
inline REEstimate re_upper_bound(
    const Eigen::MatrixXd& X, int k, int restarts = 200,
    std::uint64_t seed = 0,
    const std::vector<ConeStart>& extra_starts = {},
    std::uint64_t support_budget = 2000, int support_samples = 2000) {
  const int d = static_cast<int>(X.cols());
  if (k < 1 || k > d)
    throw PreconditionError("support size must lie in [1, d]");
  const double n = static_cast<double>(X.rows());
  Eigen::MatrixXd Q = X.transpose() * X / n;
  double lambda_max = operator_norm(X);
  lambda_max = lambda_max * lambda_max / n;

  std::vector<std::vector<int>> supports;
  if (binomial(static_cast<std::uint64_t>(d), static_cast<std::uint64_t>(k),
               support_budget + 1) <= support_budget) {
    for_each_combination(d, k, [&](const std::vector<int>& S) {
      supports.push_back(S);
      return true;
    });
  } else {
    Prng rng(derive_seed(seed, "support-sample"));
    supports.reserve(static_cast<std::size_t>(support_samples));
    for (int i = 0; i < support_samples; ++i)
      supports.push_back(rng.sample_subset(d, k));
  }

  const double factor = 3.0;
  double best = std::numeric_limits<double>::infinity();
  Eigen::VectorXd best_witness;
  std::vector<int> best_support;
  auto consider = [&](const detail::DescentResult& r,
                      const std::vector<int>& S) {
    if (r.ok && r.value < best) {
      best = r.value;
      best_witness = r.point;
      best_support = S;
    }
  };

  Eigen::MatrixXd Qs(k, k);
  for (const auto& S : supports) {
    for (int a = 0; a < k; ++a)
      for (int b = 0; b < k; ++b) Qs(a, b) = Q(S[static_cast<std::size_t>(a)], S[static_cast<std::size_t>(b)]);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(Qs);
    Eigen::VectorXd start = Eigen::VectorXd::Zero(d);
    for (int a = 0; a < k; ++a)
      start[S[static_cast<std::size_t>(a)]] = es.eigenvectors()(a, 0);
    consider(detail::descend(Q, S, factor, start, lambda_max), S);
  }

  for (const auto& st : extra_starts) {
    if (st.theta.size() != d) throw ShapeError("extra start has wrong length");
    consider(detail::descend(Q, st.support, factor, st.theta, lambda_max),
             st.support);
  }

  Prng rng(derive_seed(seed, "restarts"));
  for (int r = 0; r < restarts; ++r) {
    std::vector<int> S = rng.sample_subset(d, k);
    Eigen::VectorXd start = detail::random_cone_point(d, S, factor, rng);
    consider(detail::descend(Q, S, factor, start, lambda_max), S);
  }

  REEstimate est;
  est.witness = best_witness;
  est.witness_support = best_support;
  detail::enforce_cone(est.witness, est.witness_support, factor);
  est.gamma_hat = rayleigh(X, est.witness);
  est.restarts = restarts;
  est.seed = seed;
  return est;
}

// Searches for a (3k+1)-sparse kernel vector: any such vector lies in the
// cone of its own k largest-magnitude entries (at most 2k+1 off-support
// entries, each no larger than the smallest on-support one, and
// (2k+1)/k <= 3). Zero columns give 1-sparse certificates directly;
// otherwise sliding windows of 3k+1 nonzero columns are tested for rank
// deficiency.
inline std::optional<Eigen::VectorXd> zero_re_certificate(
    const Eigen::MatrixXd& X, int k) {
  const int d = static_cast<int>(X.cols());
  if (k < 1) throw PreconditionError("sparsity must be positive");
  std::vector<int> nonzero_cols;
  for (int j = 0; j < d; ++j) {
    if (X.col(j).squaredNorm() == 0.0) {
      Eigen::VectorXd cert = Eigen::VectorXd::Zero(d);
      cert[j] = 1.0;
      return cert;
    }
    nonzero_cols.push_back(j);
  }
  const int s = 3 * k + 1;
  if (static_cast<int>(nonzero_cols.size()) < s) return std::nullopt;
  const int n = static_cast<int>(X.rows());
  Eigen::MatrixXd W(n, s);
  for (std::size_t start = 0; start + static_cast<std::size_t>(s) <= nonzero_cols.size(); ++start) {
    for (int i = 0; i < s; ++i)
      W.col(i) = X.col(nonzero_cols[start + static_cast<std::size_t>(i)]);
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(W, Eigen::ComputeFullV);
    const auto& sv = svd.singularValues();
    bool deficient = s > n ||
                     sv[sv.size() - 1] <= 1e-10 * std::max(1.0, sv[0]);
    if (!deficient) continue;
    Eigen::VectorXd v = svd.matrixV().col(s - 1);
    Eigen::VectorXd cert = Eigen::VectorXd::Zero(d);
    for (int i = 0; i < s; ++i)
      cert[nonzero_cols[start + static_cast<std::size_t>(i)]] = v[i];
    cert.normalize();
    if ((X * cert).norm() <= 1e-10) return cert;
  }
  return std::nullopt;
}

enum class NormalizationMode { exact, sampled };

struct NormalizationReport {
  bool pass = false;
  double worst_ratio = 0.0;
  int checked = 0;
};

// Certifies (or refutes) ||X theta||^2/n <= ||theta||^2 over all 2k-sparse
// theta. Exact mode maximizes the top eigenvalue of X_S^T X_S / n over all
// size-2k supports; sampled mode probes random 2k-sparse unit vectors.
inline NormalizationReport check_normalization(const Eigen::MatrixXd& X,
                                               int k, NormalizationMode mode,
                                               std::uint64_t seed = 0,
                                               int samples = 10'000) {
  const int d = static_cast<int>(X.cols());
  if (k < 1) throw PreconditionError("sparsity must be positive");
  const int s = std::min(2 * k, d);
  const double n = static_cast<double>(X.rows());
  NormalizationReport rep;
  if (mode == NormalizationMode::exact) {
    if (binomial(static_cast<std::uint64_t>(d), static_cast<std::uint64_t>(s),
                 1'000'001) > 1'000'000)
      throw BudgetExceeded("exact normalization check exceeds the support budget");
    Eigen::MatrixXd Q = X.transpose() * X / n;
    Eigen::MatrixXd Qs(s, s);
    for_each_combination(d, s, [&](const std::vector<int>& S) {
      for (int a = 0; a < s; ++a)
        for (int b = 0; b < s; ++b) Qs(a, b) = Q(S[static_cast<std::size_t>(a)], S[static_cast<std::size_t>(b)]);
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(
          Qs, Eigen::EigenvaluesOnly);
      rep.worst_ratio = std::max(rep.worst_ratio, es.eigenvalues()(s - 1));
      ++rep.checked;
      return true;
    });
  } else {
    Prng rng(derive_seed(seed, "norm-sample"));
    for (int it = 0; it < samples; ++it) {
      std::vector<int> S = rng.sample_subset(d, s);
      Eigen::VectorXd theta = Eigen::VectorXd::Zero(d);
      double nrm2 = 0.0;
      while (nrm2 == 0.0) {
        for (int j : S) theta[j] = rng.next_gaussian();
        nrm2 = theta.squaredNorm();
      }
      rep.worst_ratio = std::max(
          rep.worst_ratio, (X * theta).squaredNorm() / (n * nrm2));
      ++rep.checked;
    }
  }
  rep.pass = rep.worst_ratio <= 1.0 + 1e-9;
  return rep;
}

struct GaussianBoundTrial {
  double upper_rate = 0.0;  // fraction of sparse probes with ||A theta||/sqrt(n) <= 3||theta||
  double lower_rate = 0.0;  // fraction of cone probes with ||A theta||/sqrt(n) >= ||theta||/8
};

struct GaussianBoundReport {
  std::vector<GaussianBoundTrial> trials;
  int trials_passing = 0;  // both rates >= 0.99
};

// Monte-Carlo check that i.i.d. standard-Gaussian designs satisfy, with
// high probability, the two-sided bounds used by the theory: an upper bound
// of 3 on 2k-sparse directions and a lower bound of 1/8 on cone directions.
inline GaussianBoundReport gaussian_bound_suite(int n, int d, int k,
                                                int trials,
                                                std::uint64_t seed,
                                                int probes = 1000) {
  if (k < 1) throw PreconditionError("sparsity must be positive");
  if (d < 2) throw PreconditionError("need at least two columns");
  if (static_cast<double>(n) <
      60.0 * static_cast<double>(k) * std::log10(static_cast<double>(d)))
    throw PreconditionError("sample size below the 60*k*log10(d) floor");
  if (trials < 1) throw PreconditionError("need at least one trial");
  GaussianBoundReport rep;
  const int s = std::min(2 * k, d);
  for (int t = 0; t < trials; ++t) {
    Prng rng(derive_seed(seed, "trial", static_cast<std::uint64_t>(t)));
    Eigen::MatrixXd A(n, d);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < d; ++j) A(i, j) = rng.next_gaussian();
    GaussianBoundTrial row;
    int upper_hits = 0, lower_hits = 0;
    for (int p = 0; p < probes; ++p) {
      Eigen::VectorXd theta = Eigen::VectorXd::Zero(d);
      double nrm = 0.0;
      while (nrm == 0.0) {
        for (int j : rng.sample_subset(d, s)) theta[j] = rng.next_gaussian();
        nrm = theta.norm();
      }
      if ((A * theta).norm() / std::sqrt(static_cast<double>(n)) <=
          3.0 * nrm)
        ++upper_hits;
    }
    for (int p = 0; p < probes; ++p) {
      std::vector<int> S = rng.sample_subset(d, k);
      Eigen::VectorXd theta = detail::random_cone_point(d, S, 3.0, rng);
      double nrm = theta.norm();
      if (nrm == 0.0) {
        --p;
        continue;
      }
      if ((A * theta).norm() / std::sqrt(static_cast<double>(n)) >=
          nrm / 8.0)
        ++lower_hits;
    }
    row.upper_rate = static_cast<double>(upper_hits) / probes;
    row.lower_rate = static_cast<double>(lower_hits) / probes;
    if (row.upper_rate >= 0.99 && row.lower_rate >= 0.99)
      ++rep.trials_passing;
    rep.trials.push_back(row);
  }
  return rep;
}

}  // namespace sparsegap::re_cond
