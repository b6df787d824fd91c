#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "sparsegap/errors.hpp"
#include "sparsegap/prng.hpp"
#include "sparsegap/re_cond.hpp"
#include "sparsegap/textio.hpp"
#include "sparsegap/x3c.hpp"

// Construction of ill-conditioned designs with a calibrated restricted
// eigenvalue. The deterministic top half stacks copies of the (rescaled,
// zero-padded) cover matrix; the bottom half is a scaled Gaussian block
// x * R. At x = 0 the restricted eigenvalue is exactly zero (the padding
// gives kernel vectors); it grows continuously with x, so bisection on x
// against a witness-pool estimate calibrates it to a target. The final
// matrix is quantized entrywise onto the grid of multiples of 2^-l.
//
// Scale conventions: re_cond reports the minimum RAYLEIGH QUOTIENT
// ||X theta||^2/(n ||theta||^2). Calibration targets and HardDesign's
// gamma_hat live on its square root (the per-unit-norm scale): the bracket
// guarantee for the Gaussian block bounds the Rayleigh quotient from below
// by the SQUARE of the target at the bracket top, which makes the square
// root the scale on which the target is reachable. gamma_hat_sq carries the
// raw Rayleigh value alongside.

namespace sparsegap::hard_design {

// Largest multiple of 2^-l not exceeding x.
inline double quantize(double x, int l) {
  return std::ldexp(std::floor(std::ldexp(x, l)), -l);
}

struct HardDesignParams {
  int m = 3;
  int t = 1;
  int d = 0;
  int n = 0;
  double gamma_target = 0.0;
  int l = 30;
  double epsilon_bar = 9.5367431640625e-07;  // 2^-20
  std::uint64_t seed = 0;

  int p() const {
    return static_cast<int>(binomial(static_cast<std::uint64_t>(m), 3));
  }
  int k() const { return t * (m / 3 + p()); }
};

inline void validate_params(const HardDesignParams& prm) {
  if (prm.m < 3 || prm.m % 3 != 0)
    throw InvalidGroundSet("ground set size must be a positive multiple of 3");
  if (prm.t < 1) throw PreconditionError("replication count must be >= 1");
  const int k = prm.k();
  if (prm.d < 4 * k)
    throw PreconditionError("ambient dimension must be at least 4k");
  if (prm.n < 2 || prm.n % (6 * k) != 0)
    throw ShapeError("sample size must be a positive multiple of 6k");
  if (!(prm.epsilon_bar > 0.0 && prm.epsilon_bar < 1.0))
    throw PreconditionError("precision floor must lie in (0, 1)");
  if (!(prm.gamma_target > prm.epsilon_bar && prm.gamma_target < 1.0))
    throw PreconditionError(
        "calibration target must lie in (precision floor, 1)");
  if (prm.l < 1) throw PreconditionError("quantization level must be >= 1");
}

inline int min_quantization_level(const HardDesignParams& prm) {
  double a = std::log2(12.0 * std::sqrt(static_cast<double>(prm.d)));
  double b = std::log2(
      std::sqrt(static_cast<double>(prm.n) * static_cast<double>(prm.d)) /
      prm.epsilon_bar);
  return static_cast<int>(std::ceil(std::max(a, b)));
}

// Block-diagonal replication: t copies of sqrt(t) * M.
inline Eigen::MatrixXd build_Ak(const x3c::CoverMatrix& cm, int t) {
  if (t < 1) throw PreconditionError("replication count must be >= 1");
  const Eigen::Index r = cm.M.rows(), c = cm.M.cols();
  Eigen::MatrixXd Ak = Eigen::MatrixXd::Zero(r * t, c * t);
  const double scale = std::sqrt(static_cast<double>(t));
  for (int b = 0; b < t; ++b)
    Ak.block(b * r, b * c, r, c) = scale * cm.M;
  return Ak;
}

// Halve and pad with zero columns up to the ambient dimension.
inline Eigen::MatrixXd build_Bk(const Eigen::MatrixXd& Ak, int d) {
  if (d < Ak.cols())
    throw ShapeError("ambient dimension is smaller than the block width");
  Eigen::MatrixXd Bk = Eigen::MatrixXd::Zero(Ak.rows(), d);
  Bk.leftCols(Ak.cols()) = 0.5 * Ak;
  return Bk;
}

// The x-parameterized family: top n/2 rows stack n/(6k) copies of B_k
// (independent of x), bottom n/2 rows are x * R with R i.i.d. standard
// Gaussian drawn once per family.
struct CxFamily {
  Eigen::MatrixXd top;  // n/2 x d
  Eigen::MatrixXd R;    // n/2 x d
  std::uint64_t R_seed = 0;

  int n() const { return static_cast<int>(top.rows() + R.rows()); }

  Eigen::MatrixXd at(double x) const {
    Eigen::MatrixXd X(n(), top.cols());
    X.topRows(top.rows()) = top;
    X.bottomRows(R.rows()) = x * R;
    return X;
  }
};

inline Eigen::MatrixXd stack_top_block(const Eigen::MatrixXd& Bk, int n) {
  const Eigen::Index rows = Bk.rows();
  if (n % 2 != 0 || (n / 2) % rows != 0)
    throw ShapeError("sample size must stack the block an integer number of times");
  Eigen::MatrixXd top(n / 2, Bk.cols());
  for (Eigen::Index i = 0; i < (n / 2) / rows; ++i)
    top.middleRows(i * rows, rows) = Bk;
  return top;
}

inline CxFamily make_cx_family(const Eigen::MatrixXd& Bk,
                               const HardDesignParams& prm,
                               std::uint64_t R_seed) {
  CxFamily fam;
  fam.top = stack_top_block(Bk, prm.n);
  fam.R_seed = R_seed;
  Prng rng(R_seed);
  fam.R.resize(prm.n / 2, prm.d);
  for (Eigen::Index i = 0; i < fam.R.rows(); ++i)
    for (Eigen::Index j = 0; j < fam.R.cols(); ++j)
      fam.R(i, j) = rng.next_gaussian();
  return fam;
}

inline CxFamily default_family(const HardDesignParams& prm) {
  validate_params(prm);
  x3c::CoverMatrix cm = x3c::build_cover_matrix(prm.m);
  Eigen::MatrixXd Bk = build_Bk(build_Ak(cm, prm.t), prm.d);
  return make_cx_family(Bk, prm, derive_seed(prm.seed, "gaussian-block"));
}

// Single family member (fresh R from the params seed). The same seed always
// reproduces the same R, so the family is shared across x values.
inline Eigen::MatrixXd build_Cx(const Eigen::MatrixXd& Bk,
                                const HardDesignParams& prm, double x) {
  if (!(x >= 0.0)) throw PreconditionError("scale must be >= 0");
  return make_cx_family(Bk, prm, derive_seed(prm.seed, "gaussian-block"))
      .at(x);
}

struct CalibrationPoint {
  double x = 0.0;
  double gamma = 0.0;  // square-root scale
};

struct Calibration {
  double x = 0.0;
  double gamma_hat = 0.0;  // square-root scale, unquantized matrix
  std::vector<CalibrationPoint> trace;
  std::uint64_t R_seed = 0;
  int attempts = 1;
};

namespace detail {

// A witness w (unit norm, in the cone of `support`) with its energy split
// a = ||top w||^2/n and b = ||R w||^2/n, so its Rayleigh quotient on the
// family member at x is exactly a + x^2 b — monotone nondecreasing in x.
struct PoolEntry {
  Eigen::VectorXd theta;
  std::vector<int> support;
  double a = 0.0;
  double b = 0.0;
};

class Calibrator {
 public:
  Calibrator(const HardDesignParams& prm, const CxFamily& fam,
             std::uint64_t sweep_seed)
      : prm_(prm), fam_(fam), rng_(derive_seed(sweep_seed, "sweeps")) {
    const double n = static_cast<double>(prm.n);
    q_top_ = fam.top.transpose() * fam.top / n;
    q_r_ = fam.R.transpose() * fam.R / n;
    lambda_top_ = re_cond::operator_norm(fam.top);
    lambda_top_ = lambda_top_ * lambda_top_ / n;
    lambda_r_ = re_cond::operator_norm(fam.R);
    lambda_r_ = lambda_r_ * lambda_r_ / n;
    const std::uint64_t budget = 20000;
    if (binomial(static_cast<std::uint64_t>(prm.d),
                 static_cast<std::uint64_t>(prm.k()), budget + 1) <= budget) {
      for_each_combination(prm.d, prm.k(), [&](const std::vector<int>& S) {
        supports_.push_back(S);
        return true;
      });
    } else {
      for (std::uint64_t i = 0; i < budget; ++i)
        supports_.push_back(rng_.sample_subset(prm.d, prm.k()));
    }
  }

  double pool_min(double x) const {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& e : pool_) best = std::min(best, e.a + x * x * e.b);
    return best;
  }

  double gamma_at(double x) const { return std::sqrt(pool_min(x)); }

  // All-supports eigenvector starts plus random restarts.
  void sweep_full(double x, int restarts) {
    log_x(x);
    Eigen::MatrixXd Q = q_at(x);
    const double lmax = lambda_at(x);
    const int k = prm_.k();
    Eigen::MatrixXd Qs(k, k);
    for (const auto& S : supports_) {
      for (int a = 0; a < k; ++a)
        for (int b = 0; b < k; ++b)
          Qs(a, b) = Q(S[static_cast<std::size_t>(a)],
                       S[static_cast<std::size_t>(b)]);
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(Qs);
      Eigen::VectorXd start = Eigen::VectorXd::Zero(prm_.d);
      for (int a = 0; a < k; ++a)
        start[S[static_cast<std::size_t>(a)]] = es.eigenvectors()(a, 0);
      descend_into_pool(Q, lmax, S, start);
    }
    for (int r = 0; r < restarts; ++r) {
      std::vector<int> S = rng_.sample_subset(prm_.d, k);
      descend_into_pool(Q, lmax, S,
                        re_cond::detail::random_cone_point(prm_.d, S, 3.0, rng_));
    }
    refine_pool_at(x, Q, lmax, 8);
  }

  // Cheap tracking step: descend from the current pool minimizers, the best
  // single-support eigenvector, and a few random points.
  void sweep_light(double x) {
    log_x(x);
    Eigen::MatrixXd Q = q_at(x);
    const double lmax = lambda_at(x);
    const int k = prm_.k();
    double best_eig = std::numeric_limits<double>::infinity();
    std::vector<int> best_S;
    Eigen::VectorXd best_vec;
    Eigen::MatrixXd Qs(k, k);
    for (const auto& S : supports_) {
      for (int a = 0; a < k; ++a)
        for (int b = 0; b < k; ++b)
          Qs(a, b) = Q(S[static_cast<std::size_t>(a)],
                       S[static_cast<std::size_t>(b)]);
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(Qs);
      if (es.eigenvalues()(0) < best_eig) {
        best_eig = es.eigenvalues()(0);
        best_S = S;
        best_vec = es.eigenvectors().col(0);
      }
    }
    Eigen::VectorXd start = Eigen::VectorXd::Zero(prm_.d);
    for (int a = 0; a < k; ++a)
      start[best_S[static_cast<std::size_t>(a)]] = best_vec(a);
    descend_into_pool(Q, lmax, best_S, start);
    refine_pool_at(x, Q, lmax, 8);
    for (int r = 0; r < 4; ++r) {
      std::vector<int> S = rng_.sample_subset(prm_.d, k);
      descend_into_pool(Q, lmax, S,
                        re_cond::detail::random_cone_point(prm_.d, S, 3.0, rng_));
    }
  }

  void add_witness(const Eigen::VectorXd& theta,
                   const std::vector<int>& support) {
    push_entry(theta, support);
  }

  // Pool minimizers at x, as descent starts for external estimators.
  std::vector<re_cond::ConeStart> top_starts(double x, int count) const {
    std::vector<std::size_t> order(pool_.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t i, std::size_t j) {
                       return pool_[i].a + x * x * pool_[i].b <
                              pool_[j].a + x * x * pool_[j].b;
                     });
    std::vector<re_cond::ConeStart> starts;
    for (std::size_t i = 0;
         i < order.size() && i < static_cast<std::size_t>(count); ++i)
      starts.push_back({pool_[order[i]].theta, pool_[order[i]].support});
    return starts;
  }

  // Bisection of x in [0, x_hi] against the square-root-scale pool value.
  double bisect(double x_hi, double target, int iters = 60) {
    double lo = 0.0, hi = x_hi;
    for (int it = 0; it < iters; ++it) {
      double mid = 0.5 * (lo + hi);
      sweep_light(mid);
      if (gamma_at(mid) < target)
        lo = mid;
      else
        hi = mid;
    }
    return hi;  // feasible endpoint: pool value at hi is >= target
  }

  std::vector<CalibrationPoint> final_trace() const {
    std::vector<double> xs = evaluated_x_;
    std::sort(xs.begin(), xs.end());
    xs.erase(std::unique(xs.begin(), xs.end()), xs.end());
    std::vector<CalibrationPoint> trace;
    trace.reserve(xs.size());
    for (double x : xs) trace.push_back({x, gamma_at(x)});
    return trace;
  }

  std::size_t pool_size() const { return pool_.size(); }

 private:
  Eigen::MatrixXd q_at(double x) const { return q_top_ + (x * x) * q_r_; }
  double lambda_at(double x) const { return lambda_top_ + x * x * lambda_r_; }

  void log_x(double x) { evaluated_x_.push_back(x); }

  void push_entry(const Eigen::VectorXd& theta,
                  const std::vector<int>& support) {
    PoolEntry e;
    e.theta = theta;
    double nrm = e.theta.norm();
    if (nrm == 0.0) return;
    e.theta /= nrm;
    re_cond::detail::enforce_cone(e.theta, support, 3.0);
    e.support = support;
    const double n = static_cast<double>(prm_.n);
    e.a = (fam_.top * e.theta).squaredNorm() / n;
    e.b = (fam_.R * e.theta).squaredNorm() / n;
    pool_.push_back(std::move(e));
  }

  void descend_into_pool(const Eigen::MatrixXd& Q, double lmax,
                         const std::vector<int>& S,
                         const Eigen::VectorXd& start) {
    auto res = re_cond::detail::descend(Q, S, 3.0, start, lmax);
    if (res.ok) push_entry(res.point, S);
  }

  // Re-descends the current pool minimizers at x so the pool tracks the
  // active landscape.
  void refine_pool_at(double x, const Eigen::MatrixXd& Q, double lmax,
                      int count) {
    for (const auto& st : top_starts(x, count))
      descend_into_pool(Q, lmax, st.support, st.theta);
  }

  HardDesignParams prm_;
  const CxFamily& fam_;
  Prng rng_;
  Eigen::MatrixXd q_top_, q_r_;
  double lambda_top_ = 0.0, lambda_r_ = 0.0;
  std::vector<std::vector<int>> supports_;
  std::vector<PoolEntry> pool_;
  std::vector<double> evaluated_x_;
};

}  // namespace detail

// Bisection calibration of the Gaussian-block scale x against the target,
// on the square-root scale, over the bracket [0, 8*sqrt(2)*target]. The
// bracket top is guaranteed (with high probability over R) to reach the
// target; if it does not, fresh R draws are tried before giving up.
inline Calibration calibrate_x(const HardDesignParams& prm,
                               int max_attempts = 5) {
  validate_params(prm);
  x3c::CoverMatrix cm = x3c::build_cover_matrix(prm.m);
  Eigen::MatrixXd Bk = build_Bk(build_Ak(cm, prm.t), prm.d);
  const double target = prm.gamma_target;
  const double x_hi = 8.0 * std::sqrt(2.0) * target;
  const double rel_tol = 0.05;
  for (int attempt = 0; attempt < max_attempts; ++attempt) {
    CxFamily fam = make_cx_family(
        Bk, prm,
        derive_seed(prm.seed, "gaussian-block",
                    static_cast<std::uint64_t>(attempt)));
    detail::Calibrator cal(
        prm, fam,
        derive_seed(prm.seed, "calibration",
                    static_cast<std::uint64_t>(attempt)));
    cal.sweep_full(x_hi, 200);
    if (cal.gamma_at(x_hi) < target) continue;  // Gaussian block too weak
    for (int round = 0; round < 8; ++round) {
      double x_star = cal.bisect(x_hi, target);
      cal.sweep_full(x_star, 50);
      double achieved = cal.gamma_at(x_star);
      if (std::abs(achieved - target) <= rel_tol * target) {
        Calibration out;
        out.x = x_star;
        out.gamma_hat = achieved;
        out.trace = cal.final_trace();
        out.R_seed = fam.R_seed;
        out.attempts = attempt + 1;
        return out;
      }
      if (cal.gamma_at(x_hi) < target) {
        cal.sweep_full(x_hi, 50);
        if (cal.gamma_at(x_hi) < target) break;  // bracket truly failed
      }
    }
  }
  throw CalibrationFailed(
      "Gaussian block never reached the calibration target at the bracket top");
}

struct HardDesign {
  Eigen::MatrixXd X;  // quantized, n x d
  HardDesignParams params;
  double x_calibrated = 0.0;
  double gamma_hat = 0.0;     // square-root scale, on the quantized matrix
  double gamma_hat_sq = 0.0;  // Rayleigh-quotient scale
  std::uint64_t R_seed = 0;
  std::vector<CalibrationPoint> trace;
};

// Full pipeline: calibrate x, quantize entrywise, re-estimate on the
// quantized matrix (seeded with the calibration pool so the two estimates
// share witnesses), check the quantization drift bound and the sparse-scale
// normalization, and package everything with provenance.
inline HardDesign build_hard_design(const HardDesignParams& prm) {
  validate_params(prm);
  if (prm.l < min_quantization_level(prm))
    throw PrecisionTooCoarse(
        "quantization level " + std::to_string(prm.l) +
        " below the required floor " +
        std::to_string(min_quantization_level(prm)) + " for this shape");
  x3c::CoverMatrix cm = x3c::build_cover_matrix(prm.m);
  Eigen::MatrixXd Bk = build_Bk(build_Ak(cm, prm.t), prm.d);
  const double target = prm.gamma_target;
  const double x_hi = 8.0 * std::sqrt(2.0) * target;
  const double rel_tol = 0.05;
  const double drift_bound =
      std::ldexp(1.0, -prm.l) *
          std::sqrt(static_cast<double>(prm.n) * static_cast<double>(prm.d)) /
          std::sqrt(static_cast<double>(prm.n)) +
      1e-6;

  for (int attempt = 0; attempt < 3; ++attempt) {
    CxFamily fam = make_cx_family(
        Bk, prm,
        derive_seed(prm.seed, "gaussian-block",
                    static_cast<std::uint64_t>(attempt)));
    detail::Calibrator cal(
        prm, fam,
        derive_seed(prm.seed, "calibration",
                    static_cast<std::uint64_t>(attempt)));
    cal.sweep_full(x_hi, 200);
    if (cal.gamma_at(x_hi) < target) continue;

    bool normalization_failed = false;
    for (int round = 0; round < 8 && !normalization_failed; ++round) {
      double x_star = cal.bisect(x_hi, target);
      cal.sweep_full(x_star, 50);
      double unquantized = cal.gamma_at(x_star);
      if (std::abs(unquantized - target) > rel_tol * target) {
        if (cal.gamma_at(x_hi) < target) {
          cal.sweep_full(x_hi, 50);
          if (cal.gamma_at(x_hi) < target) break;  // fresh R needed
        }
        continue;
      }

      Eigen::MatrixXd Xq = fam.at(x_star);
      for (Eigen::Index i = 0; i < Xq.rows(); ++i)
        for (Eigen::Index j = 0; j < Xq.cols(); ++j)
          Xq(i, j) = quantize(Xq(i, j), prm.l);

      re_cond::REEstimate est = re_cond::re_upper_bound(
          Xq, prm.k(), 200,
          derive_seed(prm.seed, "quantized-estimate",
                      static_cast<std::uint64_t>(attempt) * 16 +
                          static_cast<std::uint64_t>(round)),
          cal.top_starts(x_star, 32));
      double quantized = std::sqrt(est.gamma_hat);
      if (std::abs(quantized - unquantized) > drift_bound)
        throw ConstructionFailed(
            "quantization moved the calibrated value past the drift bound");
      if (std::abs(quantized - target) > rel_tol * target) {
        // The quantized-matrix estimate found a deeper witness; feed it
        // back and recalibrate against the enlarged pool.
        cal.add_witness(est.witness, est.witness_support);
        continue;
      }

      re_cond::NormalizationReport norm = re_cond::check_normalization(
          Xq, prm.k(), re_cond::NormalizationMode::exact);
      if (!norm.pass) {
        normalization_failed = true;  // retry with a fresh Gaussian block
        break;
      }

      HardDesign design;
      design.X = std::move(Xq);
      design.params = prm;
      design.x_calibrated = x_star;
      design.gamma_hat = quantized;
      design.gamma_hat_sq = est.gamma_hat;
      design.R_seed = fam.R_seed;
      design.trace = cal.final_trace();
      return design;
    }
    if (!normalization_failed && cal.gamma_at(x_hi) < target) continue;
    if (!normalization_failed)
      throw ConstructionFailed(
          "calibration did not settle within the tolerance band");
  }
  throw CalibrationFailed(
      "no Gaussian block realization supported the calibration bracket");
}

inline nlohmann::ordered_json params_to_json(const HardDesignParams& prm) {
  nlohmann::ordered_json j;
  j["m"] = prm.m;
  j["t"] = prm.t;
  j["d"] = prm.d;
  j["n"] = prm.n;
  j["gamma_target"] = prm.gamma_target;
  j["l"] = prm.l;
  j["epsilon_bar"] = prm.epsilon_bar;
  j["seed"] = prm.seed;
  j["k"] = prm.k();
  j["p"] = prm.p();
  return j;
}

inline HardDesignParams params_from_json(const nlohmann::json& j) {
  HardDesignParams prm;
  prm.m = j.at("m").get<int>();
  prm.t = j.at("t").get<int>();
  prm.d = j.at("d").get<int>();
  prm.n = j.at("n").get<int>();
  prm.gamma_target = j.at("gamma_target").get<double>();
  prm.l = j.at("l").get<int>();
  prm.epsilon_bar = j.at("epsilon_bar").get<double>();
  prm.seed = j.at("seed").get<std::uint64_t>();
  return prm;
}

// Directory layout: params.json (inputs + calibration outputs), X.bin
// (row-major 64-bit floats, native little-endian), X.meta.json (shape and
// grid), provenance.json (calibration trace).
inline void save_design(const std::filesystem::path& dir,
                        const HardDesign& design, bool force = false) {
  std::filesystem::create_directories(dir);
  for (const char* name :
       {"params.json", "X.bin", "X.meta.json", "provenance.json"})
    ensure_writable(dir / name, force);

  nlohmann::ordered_json pj = params_to_json(design.params);
  pj["x_calibrated"] = design.x_calibrated;
  pj["gamma_hat"] = design.gamma_hat;
  pj["gamma_hat_sq"] = design.gamma_hat_sq;
  pj["R_seed"] = design.R_seed;
  write_text_file(dir / "params.json", pj.dump(2) + "\n");

  using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic,
                                 Eigen::RowMajor>;
  RowMajor rm = design.X;
  write_text_file(
      dir / "X.bin",
      std::string(reinterpret_cast<const char*>(rm.data()),
                  static_cast<std::size_t>(rm.size()) * sizeof(double)));

  nlohmann::ordered_json mj;
  mj["rows"] = design.X.rows();
  mj["cols"] = design.X.cols();
  mj["dtype"] = "float64";
  mj["order"] = "row-major";
  mj["byte_order"] = "little-endian";
  mj["l"] = design.params.l;
  write_text_file(dir / "X.meta.json", mj.dump(2) + "\n");

  nlohmann::ordered_json prov;
  prov["trace"] = nlohmann::ordered_json::array();
  for (const auto& pt : design.trace)
    prov["trace"].push_back({pt.x, pt.gamma});
  write_text_file(dir / "provenance.json", prov.dump(2) + "\n");
}

inline HardDesign load_design(const std::filesystem::path& dir) {
  HardDesign design;
  nlohmann::json pj = nlohmann::json::parse(read_text_file(dir / "params.json"));
  design.params = params_from_json(pj);
  design.x_calibrated = pj.at("x_calibrated").get<double>();
  design.gamma_hat = pj.at("gamma_hat").get<double>();
  design.gamma_hat_sq = pj.at("gamma_hat_sq").get<double>();
  design.R_seed = pj.at("R_seed").get<std::uint64_t>();

  nlohmann::json mj = nlohmann::json::parse(read_text_file(dir / "X.meta.json"));
  const Eigen::Index rows = mj.at("rows").get<Eigen::Index>();
  const Eigen::Index cols = mj.at("cols").get<Eigen::Index>();
  std::string raw = read_text_file(dir / "X.bin");
  if (raw.size() != static_cast<std::size_t>(rows * cols) * sizeof(double))
    throw ShapeError("matrix payload size disagrees with its metadata");
  design.X.resize(rows, cols);
  const double* src = reinterpret_cast<const double*>(raw.data());
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j) design.X(i, j) = src[i * cols + j];

  nlohmann::json prov =
      nlohmann::json::parse(read_text_file(dir / "provenance.json"));
  for (const auto& pt : prov.at("trace"))
    design.trace.push_back({pt.at(0).get<double>(), pt.at(1).get<double>()});
  return design;
}

}  // namespace sparsegap::hard_design
