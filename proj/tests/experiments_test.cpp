#include <catch2/catch_amalgamated.hpp>

#include <Eigen/Dense>
#include <cmath>

#include "sparsegap/errors.hpp"
#include "sparsegap/estimators.hpp"
#include "sparsegap/experiments.hpp"
#include "sparsegap/hard_design.hpp"
#include "sparsegap/prng.hpp"

using namespace sparsegap;
using namespace sparsegap::experiments;

namespace {

// A parameter-only design shell for operations that never touch X.
hard_design::HardDesign shell_design(int m, int t, int d, int n, double gamma,
                                     int l) {
  hard_design::HardDesign design;
  design.params.m = m;
  design.params.t = t;
  design.params.d = d;
  design.params.n = n;
  design.params.gamma_target = gamma;
  design.params.l = l;
  return design;
}

const hard_design::HardDesign& built_design() {
  static hard_design::HardDesign design = [] {
    hard_design::HardDesignParams prm;
    prm.m = 3;
    prm.t = 2;
    prm.d = 16;
    prm.n = 48;
    prm.gamma_target = 0.05;
    prm.l = 30;
    prm.seed = 424242;
    return hard_design::build_hard_design(prm);
  }();
  return design;
}

Eigen::MatrixXd scaled_gaussian(int n, int d, std::uint64_t seed) {
  Prng rng(seed);
  Eigen::MatrixXd G(n, d);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < d; ++j) G(i, j) = rng.next_gaussian();
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(G);
  return G * (std::sqrt(static_cast<double>(n)) / svd.singularValues()(0));
}

}  // namespace

TEST_CASE("signal radius follows the closed form") {
  hard_design::HardDesign design = shell_design(3, 2, 16, 400, 0.1, 30);
  REQUIRE(design.params.k() == 4);

  ReductionParams rp = reduction_params(design, 1.0);
  CHECK(std::abs(rp.r - 1.0 / 2400.0) < 1e-12);
  CHECK(rp.t == 2);
  CHECK(rp.k == 4);
  CHECK(rp.n == 400);

  // Truncation never rounds up, and with a fine grid it loses at most one
  // grid step, keeping rho above half the un-truncated value.
  double exact = rp.r / std::sqrt(2.0);
  CHECK(rp.rho <= exact);
  CHECK(rp.rho > 0.0);
  CHECK(rp.rho >= rp.r / (2.0 * std::sqrt(2.0)));

  CHECK_THROWS_AS(reduction_params(design, 0.0), PreconditionError);

  hard_design::HardDesign coarse = shell_design(3, 2, 16, 400, 0.1, 5);
  CHECK_THROWS_AS(reduction_params(coarse, 1.0), PrecisionTooCoarse);
}

TEST_CASE("sampled signals encode one cover per segment") {
  // Parameter-only shell: signal sampling reads m, t, d, p but never X.
  hard_design::HardDesign design = shell_design(6, 2, 176, 528, 0.05, 30);
  const int p = design.params.p();
  REQUIRE(p == 20);
  REQUIRE(design.params.k() == 44);

  const double rho = 0.001;
  ThetaStarSpec spec = sample_theta_star(design, rho, 77);

  REQUIRE(spec.collections.size() == 2);
  REQUIRE(spec.covers.size() == 2);
  REQUIRE(spec.theta.size() == 176);
  CHECK(spec.rho == rho);

  // Each collection is the planted partition plus min(p - m/3, 2m) decoys.
  for (const auto& inst : spec.collections)
    CHECK(static_cast<int>(inst.triples.size()) == 2 + 12);

  int nnz = 0;
  for (Eigen::Index j = 0; j < spec.theta.size(); ++j) {
    double v = spec.theta[j];
    CHECK((v == 0.0 || v == rho));
    if (v != 0.0) ++nnz;
  }
  CHECK(nnz == design.params.k());

  for (int s = 0; s < 2; ++s) {
    Eigen::VectorXd seg = spec.theta.segment(s * 4 * p, 4 * p);
    CHECK(std::abs(seg.norm() - rho * std::sqrt(2.0 + 20.0)) < 1e-15);
    // The chosen cover's triples occupy the first two blocks (doubly), the
    // rest exactly one of the last two blocks.
    for (int idx : spec.covers[static_cast<std::size_t>(s)].selected) {
      CHECK(seg[idx - 1] == rho);
      CHECK(seg[p + idx - 1] == rho);
    }
  }

  ThetaStarSpec again = sample_theta_star(design, rho, 77);
  CHECK(again.theta == spec.theta);

  ThetaStarSpec other = sample_theta_star(design, rho, 78);
  CHECK(other.theta != spec.theta);  // decoys and cover pick both reseeded

  CHECK_THROWS_AS(sample_theta_star(design, 0.0, 1), PreconditionError);
}

TEST_CASE("sampled signal stays within the radius on a built design") {
  const hard_design::HardDesign& design = built_design();
  ReductionParams rp = reduction_params(design, 1.0);
  ThetaStarSpec spec = sample_theta_star(design, rp.rho, 5);

  const int p = design.params.p();
  for (int s = 0; s < design.params.t; ++s)
    CHECK(spec.theta.segment(s * 4 * p, 4 * p).norm() <= rp.r);
  CHECK(spec.theta.tail(design.params.d - 4 * p * design.params.t)
            .isZero(0.0));
}

TEST_CASE("noiseless simulation recovers the prediction exactly") {
  const int n = 6;
  Eigen::MatrixXd X = std::sqrt(static_cast<double>(n)) *
                      Eigen::MatrixXd::Identity(n, n);
  Eigen::VectorXd theta = Eigen::VectorXd::Zero(n);
  theta[0] = 1.0;
  theta[3] = -0.5;

  MseSummary ms = simulate_mse(X, theta, 0.0, 2, l0_estimator(), 3, 11);
  CHECK(ms.mean <= 1e-28);  // exact up to solver round-off
  CHECK(ms.std <= 1e-28);
  CHECK(ms.nonconverged == 0);

  MseSummary one = simulate_mse(X, theta, 1.0, 2, l0_estimator(), 1, 11);
  CHECK(one.std == 0.0);  // single trial: no spread by convention
  CHECK(one.trials == 1);
}

TEST_CASE("simulation matches a hand-rolled replay of its trial recipe") {
  Eigen::MatrixXd X = scaled_gaussian(20, 6, 3);
  Eigen::VectorXd theta = Eigen::VectorXd::Zero(6);
  theta[1] = 1.0;
  theta[4] = 2.0;
  const double sigma = 0.5;
  const int trials = 8;
  const std::uint64_t seed = 99;

  MseSummary ms =
      simulate_mse(X, theta, sigma, 2, l0_estimator(), trials, seed);

  std::vector<double> errors;
  Eigen::VectorXd prediction = X * theta;
  for (int tau = trials - 1; tau >= 0; --tau) {  // reversed on purpose
    Prng rng(derive_seed(seed, static_cast<std::uint64_t>(tau)));
    Eigen::VectorXd y(20);
    for (int i = 0; i < 20; ++i) y[i] = prediction[i] + sigma * rng.next_gaussian();
    estimators::Estimate est =
        estimators::l0_estimate(estimators::make_problem(X, y, sigma, 2));
    errors.push_back((X * est.theta - prediction).squaredNorm() / 20.0);
  }
  double mean = 0.0;
  for (double e : errors) mean += e;
  mean /= trials;
  CHECK(std::abs(ms.mean - mean) < 1e-15);  // trial order is immaterial

  MseSummary again =
      simulate_mse(X, theta, sigma, 2, l0_estimator(), trials, seed);
  CHECK(again.mean == ms.mean);
  CHECK(again.std == ms.std);
}

TEST_CASE("subset search meets the reference rate on a random design") {
  Eigen::MatrixXd X = scaled_gaussian(60, 12, 8);
  Eigen::VectorXd theta = Eigen::VectorXd::Zero(12);
  theta[2] = 1.0;
  theta[9] = -1.5;

  MseSummary ms = simulate_mse(X, theta, 1.0, 2, l0_estimator(), 10, 21);
  double bound = 10.0 * 2.0 * std::log(12.0) / 60.0;
  CHECK(ms.mean <= bound);
}

TEST_CASE("contrast report is complete, sorted, and byte-stable") {
  std::vector<double> gammas = {0.1, 0.05};
  ExperimentReport rep =
      gap_experiment(3, 1, 24, 8, gammas, 1.0, 3, 7, 30, 2);

  REQUIRE(rep.rows.size() == 8);
  const char* names[] = {"l0", "l0_bound", "lasso_bound", "thresh_lasso"};
  for (std::size_t i = 0; i < rep.rows.size(); ++i) {
    CHECK(rep.rows[i].gamma == (i < 4 ? 0.05 : 0.1));
    CHECK(rep.rows[i].estimator == names[i % 4]);
    CHECK(rep.rows[i].mse_mean >= 0.0);
    CHECK(rep.rows[i].runtime_s == 0.0);
    CHECK(rep.rows[i].seed == 7);
  }

  const double ref = 2.0 * std::log(8.0) / 24.0;  // sigma^2 k ln(d) / n
  CHECK(rep.rows[1].mse_mean == 10.0 * ref);
  CHECK(rep.rows[1].trials == 0);
  double ghsq = -1.0;  // design entries stay in input order; rows are sorted
  for (const auto& dj : rep.metadata["designs"])
    if (dj["gamma_target"].get<double>() == 0.05)
      ghsq = dj["gamma_hat_sq"].get<double>();
  REQUIRE(ghsq > 0.0);
  CHECK(rep.rows[2].mse_mean == (320.0 / ghsq) * ref);

  std::string csv = report_to_csv(rep);
  CHECK(csv.rfind("gamma,estimator,trials,mse_mean,mse_std,seed,runtime_s\n",
                  0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 9);

  ExperimentReport rerun =
      gap_experiment(3, 1, 24, 8, gammas, 1.0, 3, 7, 30, 2);
  CHECK(report_to_csv(rerun) == csv);
  CHECK(report_to_json(rerun).dump(2) == report_to_json(rep).dump(2));

  CHECK(rep.metadata["designs"].size() == 2);
  CHECK(rep.metadata.contains("signal_distribution"));
  for (const auto& dj : rep.metadata["designs"]) {
    CHECK(dj["nonconverged"]["l0"].get<int>() == 0);
    CHECK(dj["nonconverged"].contains("thresh_lasso"));
    CHECK(dj["max_kkt_gap_converged"].get<double>() <= 1e-8);
  }

  CHECK_THROWS_AS(gap_experiment(3, 1, 24, 8, {}, 1.0, 3, 7),
                  PreconditionError);
  CHECK_THROWS_AS(gap_experiment(3, 1, 24, 8, gammas, 1.0, 0, 7),
                  PreconditionError);
}

TEST_CASE("split response feeds each half its own coefficients") {
  const hard_design::HardDesign& design = built_design();
  ReductionParams rp = reduction_params(design, 1.0);
  ThetaStarSpec bar = sample_theta_star(design, rp.rho, 13);

  // Same vector on both halves reproduces the standard model.
  Eigen::VectorXd y_same = build_pprime_response(design, bar, bar, 0.7, 1, 55);
  Prng rng(derive_seed(55ull, "split-noise"));
  Eigen::VectorXd expect = design.X * bar.theta;
  for (int i = 0; i < design.params.n; ++i)
    expect[i] += 0.7 * rng.next_gaussian();
  CHECK(y_same == expect);

  // Alter segment 1 only: noiseless halves match their own predictions.
  ThetaStarSpec tilde = bar;
  const int p = design.params.p();
  tilde.theta.segment(4 * p, 4 * p).setZero();
  tilde.theta[4 * p + 2] = rp.rho;  // arbitrary content, still segment-local
  Eigen::VectorXd y0 = build_pprime_response(design, bar, tilde, 0.0, 1, 55);
  const int half = design.params.n / 2;
  CHECK(y0.head(half) == (design.X * bar.theta).head(half));
  CHECK(y0.tail(half) == (design.X * tilde.theta).tail(half));

  // Any difference outside the designated segment is rejected.
  ThetaStarSpec bad = bar;
  bad.theta[0] += rp.rho;
  CHECK_THROWS_AS(build_pprime_response(design, bar, bad, 0.0, 1, 55),
                  InvalidAdvice);
  CHECK_THROWS_AS(build_pprime_response(design, bar, tilde, 0.0, 5, 55),
                  PreconditionError);
  CHECK_THROWS_AS(build_pprime_response(design, bar, tilde, -1.0, 1, 55),
                  PreconditionError);
}
