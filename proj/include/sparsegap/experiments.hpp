#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include <json.hpp>

#include "sparsegap/errors.hpp"
#include "sparsegap/estimators.hpp"
#include "sparsegap/hard_design.hpp"
#include "sparsegap/prng.hpp"
#include "sparsegap/textio.hpp"
#include "sparsegap/x3c.hpp"

// Monte-Carlo evaluation of prediction error on fixed designs, the
// gap experiment contrasting best-subset and thresholded-Lasso error
// across calibration targets, and the split-response demo that feeds two
// coefficient vectors through the two halves of a design.
//
// All randomness is derived from caller seeds via labeled sub-seeds, so
// every report regenerates byte-identically from its parameters.

namespace sparsegap::experiments {

struct ReductionParams {
  double r = 0.0;    // per-segment signal radius
  double rho = 0.0;  // per-coordinate magnitude, on the 2^-l grid
  int t = 0;
  int k = 0;
  double sigma = 0.0;
  double gamma = 0.0;
  int n = 0;
  int l = 0;
};

// Signal scaling for the planted-cover signals: r = sigma*t/(400*gamma*
// sqrt(n)*(k+t)), then rho truncates r/sqrt(m/3+p) onto the grid. Uses the
// design's calibration target (not the achieved estimate) so the values
// regenerate from the stored parameters alone; calibration guarantees the
// two agree within 5%.
inline ReductionParams reduction_params(const hard_design::HardDesign& design,
                                        double sigma) {
  if (!(sigma > 0.0)) throw PreconditionError("noise level must be > 0");
  const hard_design::HardDesignParams& prm = design.params;
  ReductionParams rp;
  rp.t = prm.t;
  rp.k = prm.k();
  rp.sigma = sigma;
  rp.gamma = prm.gamma_target;
  rp.n = prm.n;
  rp.l = prm.l;
  rp.r = sigma * prm.t /
         (400.0 * prm.gamma_target * std::sqrt(static_cast<double>(prm.n)) *
          (rp.k + prm.t));
  const double width = static_cast<double>(prm.m / 3 + prm.p());
  rp.rho = hard_design::quantize(rp.r / std::sqrt(width), prm.l);
  if (!(rp.rho > 0.0))
    throw PrecisionTooCoarse("grid too coarse to represent the signal level");
  return rp;
}

// A sampled k-sparse signal: each of the t segments carries rho times the
// encoding of a uniformly chosen exact cover of a freshly planted
// collection; coordinates beyond the t segments stay zero.
struct ThetaStarSpec {
  double rho = 0.0;
  std::uint64_t seed = 0;
  std::vector<x3c::X3CInstance> collections;  // one per segment
  std::vector<x3c::ExactCover> covers;        // chosen cover per segment
  Eigen::VectorXd theta;
};

// Planted collections get min(C(m,3) - m/3, 2m) decoy triples on top of
// the planted partition; the cover is drawn uniformly from the collection's
// exact covers by full enumeration. This is a documented substitute for a
// sampling distribution that has no constructive description; reports note
// it in their metadata.
inline ThetaStarSpec sample_theta_star(const hard_design::HardDesign& design,
                                       double rho, std::uint64_t seed) {
  if (!(rho > 0.0)) throw PreconditionError("signal level must be > 0");
  const hard_design::HardDesignParams& prm = design.params;
  const int p = prm.p();
  const int width = 4 * p;
  const int decoys =
      std::min(p - prm.m / 3, 2 * prm.m);
  ThetaStarSpec spec;
  spec.rho = rho;
  spec.seed = seed;
  spec.theta = Eigen::VectorXd::Zero(prm.d);
  for (int s = 0; s < prm.t; ++s) {
    x3c::X3CInstance inst = x3c::gen_planted_instance(
        prm.m, decoys,
        derive_seed(seed, "collection", static_cast<std::uint64_t>(s)));
    std::vector<x3c::ExactCover> covers = x3c::enumerate_exact_covers(inst);
    Prng pick(derive_seed(seed, "cover", static_cast<std::uint64_t>(s)));
    x3c::ExactCover cover =
        covers[static_cast<std::size_t>(pick.next_below(
            static_cast<std::uint64_t>(covers.size())))];
    x3c::BinarySolution sol = x3c::encode_cover(inst, cover);
    spec.theta.segment(s * width, width) = rho * sol.u;
    spec.collections.push_back(std::move(inst));
    spec.covers.push_back(std::move(cover));
  }
  return spec;
}

// One estimator applied to a regression problem. The sparsity budget and
// noise level ride inside the problem; closures bind any other tuning.
using EstimatorFn =
    std::function<estimators::Estimate(const estimators::RegressionProblem&)>;

inline EstimatorFn l0_estimator(std::uint64_t budget = 10'000'000) {
  return [budget](const estimators::RegressionProblem& prob) {
    return estimators::l0_estimate(prob, budget);
  };
}

inline EstimatorFn thresh_lasso_estimator() {
  return [](const estimators::RegressionProblem& prob) {
    return estimators::thresholded_lasso(prob);
  };
}

struct MseSummary {
  double mean = 0.0;
  double std = 0.0;
  int trials = 0;
  int nonconverged = 0;     // flagged trials still count toward the mean
  double max_kkt_gap = 0.0; // worst certificate gap among converged trials
};

// Monte-Carlo prediction error on a fixed design: per trial, y = X theta*
// + sigma * w with w a fresh standard Gaussian vector from the derived
// trial seed, and the recorded error is ||X theta_hat - X theta*||^2 / n.
inline MseSummary simulate_mse(const Eigen::MatrixXd& X,
                               const Eigen::VectorXd& theta_star, double sigma,
                               int k, const EstimatorFn& estimator, int trials,
                               std::uint64_t seed) {
  if (trials < 1) throw PreconditionError("trials must be >= 1");
  if (!(sigma >= 0.0)) throw PreconditionError("noise level must be >= 0");
  if (theta_star.size() != X.cols())
    throw ShapeError("signal length must match the design column count");
  const Eigen::Index n = X.rows();
  const Eigen::VectorXd prediction = X * theta_star;
  MseSummary out;
  out.trials = trials;
  std::vector<double> errors;
  errors.reserve(static_cast<std::size_t>(trials));
  for (int tau = 0; tau < trials; ++tau) {
    Prng rng(derive_seed(seed, static_cast<std::uint64_t>(tau)));
    Eigen::VectorXd y(n);
    for (Eigen::Index i = 0; i < n; ++i)
      y[i] = prediction[i] + sigma * rng.next_gaussian();
    estimators::Estimate est =
        estimator(estimators::make_problem(X, y, sigma, k));
    if (!est.converged)
      ++out.nonconverged;
    else
      out.max_kkt_gap = std::max(out.max_kkt_gap, est.kkt_gap);
    errors.push_back((X * est.theta - prediction).squaredNorm() /
                     static_cast<double>(n));
  }
  double sum = 0.0;
  for (double e : errors) sum += e;
  out.mean = sum / trials;
  if (trials > 1) {
    double ss = 0.0;
    for (double e : errors) ss += (e - out.mean) * (e - out.mean);
    out.std = std::sqrt(ss / (trials - 1));
  }
  return out;
}

struct GapRow {
  double gamma = 0.0;
  std::string estimator;
  int trials = 0;
  double mse_mean = 0.0;
  double mse_std = 0.0;
  std::uint64_t seed = 0;
  double runtime_s = 0.0;  // pinned to 0 so reports regenerate byte-exactly
};

struct ExperimentReport {
  std::vector<GapRow> rows;  // keyed uniquely by (gamma, estimator)
  nlohmann::ordered_json metadata;
};

// Contrast experiment: for each calibration target, build a design, sample
// signals, and measure both estimators' prediction error (max over signal
// samples of the per-signal Monte-Carlo mean, reported with that signal's
// std). Reference curves 10*sigma^2 k ln(d)/n and (320/gamma_hat_sq)*
// sigma^2 k ln(d)/n land in rows named l0_bound and lasso_bound with
// trials = 0. Both estimators see identical responses (shared noise seeds)
// so the contrast is paired.
inline ExperimentReport gap_experiment(int m, int t, int n, int d,
                                       const std::vector<double>& gammas,
                                       double sigma, int trials,
                                       std::uint64_t seed, int l = 30,
                                       int theta_samples = 5) {
  if (gammas.empty())
    throw PreconditionError("at least one calibration target is required");
  if (trials < 1) throw PreconditionError("trials must be >= 1");
  if (theta_samples < 1)
    throw PreconditionError("theta samples must be >= 1");
  if (!(sigma > 0.0)) throw PreconditionError("noise level must be > 0");

  ExperimentReport rep;
  nlohmann::ordered_json meta;
  meta["m"] = m;
  meta["t"] = t;
  meta["n"] = n;
  meta["d"] = d;
  meta["gammas"] = gammas;
  meta["sigma"] = sigma;
  meta["trials"] = trials;
  meta["seed"] = seed;
  meta["l"] = l;
  meta["theta_samples"] = theta_samples;
  meta["noise_model"] = "iid gaussian, sigma * N(0,1), derived per-trial seeds";
  meta["signal_distribution"] =
      "uniform over planted exact-cover encodings per segment; a documented "
      "substitute distribution, and the reported maximum is over sampled "
      "signals rather than a certified supremum";
  meta["designs"] = nlohmann::ordered_json::array();

  const EstimatorFn l0 = l0_estimator();
  const EstimatorFn th = thresh_lasso_estimator();

  for (std::size_t gi = 0; gi < gammas.size(); ++gi) {
    hard_design::HardDesignParams prm;
    prm.m = m;
    prm.t = t;
    prm.d = d;
    prm.n = n;
    prm.gamma_target = gammas[gi];
    prm.l = l;
    prm.seed = derive_seed(seed, "design", static_cast<std::uint64_t>(gi));
    hard_design::HardDesign design = hard_design::build_hard_design(prm);
    ReductionParams rp = reduction_params(design, sigma);
    const int k = prm.k();
    const double ref = sigma * sigma * k *
                       std::log(static_cast<double>(d)) /
                       static_cast<double>(n);

    MseSummary best_l0, best_th;
    best_l0.mean = -std::numeric_limits<double>::infinity();
    best_th.mean = -std::numeric_limits<double>::infinity();
    int nonconv_l0 = 0, nonconv_th = 0;
    double max_kkt = 0.0;
    for (int s = 0; s < theta_samples; ++s) {
      ThetaStarSpec spec = sample_theta_star(
          design, rp.rho,
          derive_seed(prm.seed, "theta", static_cast<std::uint64_t>(s)));
      std::uint64_t sim_seed =
          derive_seed(prm.seed, "sim", static_cast<std::uint64_t>(s));
      MseSummary ms_l0 =
          simulate_mse(design.X, spec.theta, sigma, k, l0, trials, sim_seed);
      MseSummary ms_th =
          simulate_mse(design.X, spec.theta, sigma, k, th, trials, sim_seed);
      nonconv_l0 += ms_l0.nonconverged;
      nonconv_th += ms_th.nonconverged;
      max_kkt = std::max(max_kkt, ms_th.max_kkt_gap);
      if (ms_l0.mean > best_l0.mean) best_l0 = ms_l0;
      if (ms_th.mean > best_th.mean) best_th = ms_th;
    }

    rep.rows.push_back(
        {gammas[gi], "l0", trials, best_l0.mean, best_l0.std, seed, 0.0});
    rep.rows.push_back({gammas[gi], "thresh_lasso", trials, best_th.mean,
                        best_th.std, seed, 0.0});
    rep.rows.push_back({gammas[gi], "l0_bound", 0, 10.0 * ref, 0.0, seed, 0.0});
    rep.rows.push_back({gammas[gi], "lasso_bound", 0,
                        (320.0 / design.gamma_hat_sq) * ref, 0.0, seed, 0.0});

    nlohmann::ordered_json dj;
    dj["gamma_target"] = gammas[gi];
    dj["design_seed"] = prm.seed;
    dj["k"] = k;
    dj["p"] = prm.p();
    dj["gamma_hat"] = design.gamma_hat;
    dj["gamma_hat_sq"] = design.gamma_hat_sq;
    dj["x_calibrated"] = design.x_calibrated;
    dj["R_seed"] = design.R_seed;
    dj["r"] = rp.r;
    dj["rho"] = rp.rho;
    dj["nonconverged"] = {{"l0", nonconv_l0}, {"thresh_lasso", nonconv_th}};
    dj["max_kkt_gap_converged"] = max_kkt;
    meta["designs"].push_back(std::move(dj));
  }

  std::sort(rep.rows.begin(), rep.rows.end(),
            [](const GapRow& a, const GapRow& b) {
              if (a.gamma != b.gamma) return a.gamma < b.gamma;
              return a.estimator < b.estimator;
            });
  rep.metadata = std::move(meta);
  return rep;
}

inline std::string report_to_csv(const ExperimentReport& rep) {
  std::string out = "gamma,estimator,trials,mse_mean,mse_std,seed,runtime_s\n";
  for (const GapRow& row : rep.rows) {
    out += format_double(row.gamma);
    out += ',';
    out += row.estimator;
    out += ',';
    out += std::to_string(row.trials);
    out += ',';
    out += format_double(row.mse_mean);
    out += ',';
    out += format_double(row.mse_std);
    out += ',';
    out += std::to_string(row.seed);
    out += ',';
    out += format_double(row.runtime_s);
    out += '\n';
  }
  return out;
}

inline nlohmann::ordered_json report_to_json(const ExperimentReport& rep) {
  nlohmann::ordered_json j;
  j["rows"] = nlohmann::ordered_json::array();
  for (const GapRow& row : rep.rows) {
    nlohmann::ordered_json rj;
    rj["gamma"] = row.gamma;
    rj["estimator"] = row.estimator;
    rj["trials"] = row.trials;
    rj["mse_mean"] = row.mse_mean;
    rj["mse_std"] = row.mse_std;
    rj["seed"] = row.seed;
    rj["runtime_s"] = row.runtime_s;
    j["rows"].push_back(std::move(rj));
  }
  j["metadata"] = rep.metadata;
  return j;
}

// Split response: the top half of the design acts on theta_bar, the bottom
// half on theta_tilde, plus fresh Gaussian noise. The two coefficient
// vectors must agree outside the designated segment (they differ only in
// which cover encoding occupies segment_i).
inline Eigen::VectorXd build_pprime_response(
    const hard_design::HardDesign& design, const ThetaStarSpec& theta_bar,
    const ThetaStarSpec& theta_tilde, double sigma, int segment_i,
    std::uint64_t seed) {
  const hard_design::HardDesignParams& prm = design.params;
  if (!(sigma >= 0.0)) throw PreconditionError("noise level must be >= 0");
  if (segment_i < 0 || segment_i >= prm.t)
    throw PreconditionError("segment index out of range");
  if (theta_bar.theta.size() != prm.d || theta_tilde.theta.size() != prm.d)
    throw ShapeError("coefficient vectors must match the ambient dimension");
  const int width = 4 * prm.p();
  for (Eigen::Index j = 0; j < prm.d; ++j) {
    bool inside = j >= static_cast<Eigen::Index>(segment_i) * width &&
                  j < static_cast<Eigen::Index>(segment_i + 1) * width;
    if (!inside && theta_bar.theta[j] != theta_tilde.theta[j])
      throw InvalidAdvice(
          "coefficient vectors differ outside the designated segment");
  }
  const int n = prm.n;
  Eigen::VectorXd y(n);
  y.head(n / 2) = design.X.topRows(n / 2) * theta_bar.theta;
  y.tail(n / 2) = design.X.bottomRows(n / 2) * theta_tilde.theta;
  Prng rng(derive_seed(seed, "split-noise"));
  for (int i = 0; i < n; ++i) y[i] += sigma * rng.next_gaussian();
  return y;
}

}  // namespace sparsegap::experiments
