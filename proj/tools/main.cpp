// Command-line frontend for the sparsegap library: X3C instance generation
// and solving, cover-matrix emission, sparse estimation, restricted-
// eigenvalue estimation, normalization checking, hard-design construction,
// the gap experiment, and the split-response demo.
//
// Conventions: every randomized subcommand requires an explicit --seed;
// existing output files are never overwritten without --force; all numeric
// output is full-precision decimal; exit 0 = success, 1 = domain error
// (module error name on stderr), 2 = usage error.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "sparsegap/errors.hpp"
#include "sparsegap/estimators.hpp"
#include "sparsegap/experiments.hpp"
#include "sparsegap/hard_design.hpp"
#include "sparsegap/prng.hpp"
#include "sparsegap/re_cond.hpp"
#include "sparsegap/textio.hpp"
#include "sparsegap/x3c.hpp"

namespace {

using namespace sparsegap;

void emit(const std::string& text, const std::string& out_path, bool force) {
  if (out_path.empty()) {
    std::fputs(text.c_str(), stdout);
  } else {
    ensure_writable(out_path, force);
    write_text_file(out_path, text);
  }
}

Eigen::MatrixXd load_matrix(const std::string& path) {
  return matrix_from_csv(read_text_file(path));
}

Eigen::VectorXd json_to_vector(const nlohmann::json& j) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(j.size()));
  Eigen::Index i = 0;
  for (const auto& e : j) v[i++] = e.get<double>();
  return v;
}

Eigen::MatrixXd json_to_matrix(const nlohmann::json& j) {
  if (j.empty()) throw ShapeError("matrix must have at least one row");
  const Eigen::Index rows = static_cast<Eigen::Index>(j.size());
  const Eigen::Index cols = static_cast<Eigen::Index>(j.at(0).size());
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    const auto& row = j.at(static_cast<std::size_t>(i));
    if (static_cast<Eigen::Index>(row.size()) != cols)
      throw ShapeError("matrix rows must have equal length");
    for (Eigen::Index c = 0; c < cols; ++c)
      m(i, c) = row.at(static_cast<std::size_t>(c)).get<double>();
  }
  return m;
}

estimators::RegressionProblem load_problem(const std::string& path) {
  nlohmann::json j = nlohmann::json::parse(read_text_file(path));
  return estimators::make_problem(json_to_matrix(j.at("X")),
                                  json_to_vector(j.at("y")),
                                  j.at("sigma").get<double>(),
                                  j.at("k").get<int>());
}

nlohmann::ordered_json cover_to_json(const std::optional<x3c::ExactCover>& c) {
  nlohmann::ordered_json j;
  j["found"] = c.has_value();
  j["cover"] = c ? nlohmann::ordered_json(c->selected)
                 : nlohmann::ordered_json::array();
  return j;
}

int run(int argc, char** argv) {
  CLI::App app{"sparse-regression hardness toolkit"};
  app.require_subcommand(1);

  // ---- gen-x3c ----
  auto* gen = app.add_subcommand(
      "gen-x3c", "Generate an X3C instance (random or planted-cover)");
  int gen_m = 0;
  int gen_count = -1;
  bool gen_plant = false;
  int gen_extra = -1;
  std::uint64_t gen_seed = 0;
  std::string gen_out;
  bool gen_force = false;
  gen->add_option("--m", gen_m, "ground-set size (multiple of 3)")->required();
  auto* count_opt =
      gen->add_option("--count", gen_count, "number of random triples");
  auto* plant_opt = gen->add_flag("--plant-cover", gen_plant,
                                  "plant an exact cover in the collection");
  gen->add_option("--extra", gen_extra,
                  "decoy triples beyond the planted cover (default: "
                  "min(C(m,3) - m/3, 2m))")
      ->needs(plant_opt);
  count_opt->excludes(plant_opt);
  plant_opt->excludes(count_opt);
  gen->add_option("--seed", gen_seed, "RNG seed")->required();
  gen->add_option("--out", gen_out, "output path (default: stdout)");
  gen->add_flag("--force", gen_force, "overwrite existing output");
  gen->callback([&] {
    x3c::X3CInstance inst;
    if (gen_plant) {
      int p_all = static_cast<int>(
          binomial(static_cast<std::uint64_t>(gen_m), 3, 1u << 30));
      int extra = gen_extra >= 0
                      ? gen_extra
                      : std::min(p_all - gen_m / 3, 2 * gen_m);
      inst = x3c::gen_planted_instance(gen_m, extra, gen_seed);
    } else if (gen_count >= 0) {
      inst = x3c::gen_random_instance(gen_m, gen_count, gen_seed);
    } else {
      throw CLI::ValidationError("gen-x3c",
                                 "one of --count or --plant-cover is required");
    }
    emit(x3c::instance_to_json(inst).dump(2) + "\n", gen_out, gen_force);
  });

  // ---- build-m ----
  auto* bm = app.add_subcommand(
      "build-m", "Emit the cover matrix and response for an instance");
  std::string bm_instance, bm_out_matrix, bm_out_response;
  bool bm_force = false;
  bm->add_option("--instance", bm_instance, "instance JSON path")->required();
  bm->add_option("--out-matrix", bm_out_matrix,
                 "matrix CSV path (default: stdout)");
  bm->add_option("--out-response", bm_out_response,
                 "response CSV path (default: stdout)");
  bm->add_flag("--force", bm_force, "overwrite existing outputs");
  bm->callback([&] {
    x3c::X3CInstance inst = x3c::load_instance(bm_instance);
    x3c::CoverMatrix cm = x3c::build_cover_matrix(inst.m);
    Eigen::VectorXd y = x3c::build_response(inst);
    emit(matrix_to_csv(cm.M), bm_out_matrix, bm_force);
    emit(matrix_to_csv(y), bm_out_response, bm_force);
  });

  // ---- solve-x3c ----
  auto* sx = app.add_subcommand("solve-x3c",
                                "Search for an exact cover of an instance");
  std::string sx_instance, sx_oracle = "brute", sx_out;
  std::uint64_t sx_budget = 10'000'000;
  bool sx_force = false;
  sx->add_option("--instance", sx_instance, "instance JSON path")->required();
  sx->add_option("--oracle", sx_oracle, "brute | l0")
      ->check(CLI::IsMember({"brute", "l0"}));
  sx->add_option("--budget", sx_budget, "enumeration budget");
  sx->add_option("--out", sx_out, "output path (default: stdout)");
  sx->add_flag("--force", sx_force, "overwrite existing output");
  sx->callback([&] {
    x3c::X3CInstance inst = x3c::load_instance(sx_instance);
    std::optional<x3c::ExactCover> cover;
    if (sx_oracle == "brute")
      cover = x3c::solve_x3c_bruteforce(inst, sx_budget);
    else
      cover = x3c::solve_x3c_via_regression(
          inst, estimators::l0_oracle(sx_budget));
    emit(cover_to_json(cover).dump(2) + "\n", sx_out, sx_force);
  });

  // ---- estimate ----
  auto* est_cmd = app.add_subcommand(
      "estimate", "Run a sparse estimator on a regression problem file");
  std::string est_problem, est_method, est_out;
  double est_lambda = -1.0, est_tol = 1e-10;
  int est_max_sweeps = 100'000;
  std::uint64_t est_budget = 10'000'000;
  bool est_force = false;
  est_cmd->add_option("--problem", est_problem,
                      "problem JSON path ({X, y, sigma, k})")
      ->required();
  est_cmd->add_option("--method", est_method, "l0 | lasso | thresh-lasso")
      ->required()
      ->check(CLI::IsMember({"l0", "lasso", "thresh-lasso"}));
  est_cmd->add_option("--lambda", est_lambda,
                      "lasso penalty (default: 4*sigma*sqrt(ln(d)/n))");
  est_cmd->add_option("--tol", est_tol, "coordinate-descent tolerance");
  est_cmd->add_option("--max-sweeps", est_max_sweeps,
                      "coordinate-descent sweep cap");
  est_cmd->add_option("--budget", est_budget, "subset-enumeration budget");
  est_cmd->add_option("--out", est_out, "output path (default: stdout)");
  est_cmd->add_flag("--force", est_force, "overwrite existing output");
  est_cmd->callback([&] {
    estimators::RegressionProblem prob = load_problem(est_problem);
    estimators::Estimate est;
    if (est_method == "l0") {
      est = estimators::l0_estimate(prob, est_budget);
    } else if (est_method == "lasso") {
      double lambda = est_lambda >= 0.0
                          ? est_lambda
                          : estimators::default_lambda(prob.sigma, prob.n(),
                                                       prob.d());
      est = estimators::lasso(prob, lambda, est_tol, est_max_sweeps);
    } else {
      est = estimators::thresholded_lasso(prob, est_tol, est_max_sweeps);
    }
    if (!est.converged)
      std::fprintf(stderr,
                   "warning: solver hit its sweep cap; emitting best "
                   "iterate (kkt_gap %s)\n",
                   format_double(est.kkt_gap).c_str());
    nlohmann::ordered_json j = estimators::estimate_to_json(est);
    j["converged"] = est.converged;
    j["kkt_gap"] = est.kkt_gap;
    j["sweeps"] = est.sweeps;
    emit(j.dump(2) + "\n", est_out, est_force);
  });

  // ---- re-estimate ----
  auto* re = app.add_subcommand(
      "re-estimate", "Estimate the restricted eigenvalue of a matrix");
  std::string re_x, re_out;
  int re_k = 0, re_restarts = 200;
  std::uint64_t re_seed = 0;
  bool re_force = false;
  re->add_option("--x", re_x, "design matrix CSV path")->required();
  re->add_option("--k", re_k, "support size")->required();
  re->add_option("--seed", re_seed, "RNG seed")->required();
  re->add_option("--restarts", re_restarts, "random restarts");
  re->add_option("--out", re_out, "output path (default: stdout)");
  re->add_flag("--force", re_force, "overwrite existing output");
  re->callback([&] {
    Eigen::MatrixXd X = load_matrix(re_x);
    re_cond::REEstimate est =
        re_cond::re_upper_bound(X, re_k, re_restarts, re_seed);
    emit(re_cond::re_estimate_to_json(est).dump(2) + "\n", re_out, re_force);
  });

  // ---- check-norm ----
  auto* cn = app.add_subcommand(
      "check-norm", "Check the sparse-scale normalization of a matrix");
  std::string cn_x, cn_mode = "exact", cn_out;
  int cn_k = 0, cn_samples = 10'000;
  std::uint64_t cn_seed = 0;
  bool cn_force = false;
  cn->add_option("--x", cn_x, "design matrix CSV path")->required();
  cn->add_option("--k", cn_k, "support size")->required();
  cn->add_option("--mode", cn_mode, "exact | sampled")
      ->check(CLI::IsMember({"exact", "sampled"}));
  auto* cn_seed_opt = cn->add_option("--seed", cn_seed,
                                     "RNG seed (required in sampled mode)");
  cn->add_option("--samples", cn_samples, "probe count in sampled mode");
  cn->add_option("--out", cn_out, "output path (default: stdout)");
  cn->add_flag("--force", cn_force, "overwrite existing output");
  cn->callback([&] {
    if (cn_mode == "sampled" && cn_seed_opt->count() == 0)
      throw CLI::RequiresError("--mode sampled", "--seed");
    Eigen::MatrixXd X = load_matrix(cn_x);
    re_cond::NormalizationMode mode = cn_mode == "exact"
                                          ? re_cond::NormalizationMode::exact
                                          : re_cond::NormalizationMode::sampled;
    re_cond::NormalizationReport rep =
        re_cond::check_normalization(X, cn_k, mode, cn_seed, cn_samples);
    nlohmann::ordered_json j;
    j["pass"] = rep.pass;
    j["worst_ratio"] = rep.worst_ratio;
    j["checked"] = rep.checked;
    j["mode"] = cn_mode;
    emit(j.dump(2) + "\n", cn_out, cn_force);
  });

  // ---- build-design ----
  auto* bd = app.add_subcommand(
      "build-design", "Build a calibrated design into a directory");
  int bd_m = 0, bd_t = 0, bd_n = 0, bd_d = 0, bd_l = 30;
  double bd_gamma = 0.0, bd_eps = 9.5367431640625e-07;
  std::uint64_t bd_seed = 0;
  std::string bd_out;
  bool bd_force = false;
  bd->add_option("--m", bd_m, "ground-set size")->required();
  bd->add_option("--t", bd_t, "replication count")->required();
  bd->add_option("--n", bd_n, "sample size (multiple of 6k)")->required();
  bd->add_option("--d", bd_d, "ambient dimension (at least 4k)")->required();
  bd->add_option("--gamma", bd_gamma, "calibration target")->required();
  bd->add_option("--l", bd_l, "quantization level");
  bd->add_option("--epsilon-bar", bd_eps, "precision floor");
  bd->add_option("--seed", bd_seed, "RNG seed")->required();
  bd->add_option("--out", bd_out, "output directory")->required();
  bd->add_flag("--force", bd_force, "overwrite existing outputs");
  bd->callback([&] {
    hard_design::HardDesignParams prm;
    prm.m = bd_m;
    prm.t = bd_t;
    prm.n = bd_n;
    prm.d = bd_d;
    prm.gamma_target = bd_gamma;
    prm.l = bd_l;
    prm.epsilon_bar = bd_eps;
    prm.seed = bd_seed;
    hard_design::HardDesign design = hard_design::build_hard_design(prm);
    hard_design::save_design(bd_out, design, bd_force);
    nlohmann::ordered_json j;
    j["out"] = bd_out;
    j["x_calibrated"] = design.x_calibrated;
    j["gamma_hat"] = design.gamma_hat;
    j["gamma_hat_sq"] = design.gamma_hat_sq;
    j["R_seed"] = design.R_seed;
    std::fputs((j.dump(2) + "\n").c_str(), stdout);
  });

  // ---- gap ----
  auto* gap = app.add_subcommand(
      "gap", "Run the estimator-contrast experiment across targets");
  int gap_m = 0, gap_t = 0, gap_n = 0, gap_d = 0, gap_trials = 0,
      gap_l = 30, gap_theta_samples = 5;
  std::vector<double> gap_gammas;
  double gap_sigma = 0.0;
  std::uint64_t gap_seed = 0;
  std::string gap_out, gap_format = "csv";
  bool gap_force = false;
  gap->add_option("--m", gap_m, "ground-set size")->required();
  gap->add_option("--t", gap_t, "replication count")->required();
  gap->add_option("--n", gap_n, "sample size")->required();
  gap->add_option("--d", gap_d, "ambient dimension")->required();
  gap->add_option("--gammas", gap_gammas, "calibration targets")
      ->required()
      ->delimiter(',');
  gap->add_option("--sigma", gap_sigma, "noise level")->required();
  gap->add_option("--trials", gap_trials, "Monte-Carlo trials per signal")
      ->required();
  gap->add_option("--seed", gap_seed, "RNG seed")->required();
  gap->add_option("--l", gap_l, "quantization level");
  gap->add_option("--theta-samples", gap_theta_samples,
                  "signal samples per target");
  gap->add_option("--out", gap_out,
                  "output path (default: stdout; CSV output gets a "
                  "<out>.meta.json sidecar)");
  gap->add_option("--format", gap_format, "csv | json")
      ->check(CLI::IsMember({"csv", "json"}));
  gap->add_flag("--force", gap_force, "overwrite existing outputs");
  gap->callback([&] {
    experiments::ExperimentReport rep = experiments::gap_experiment(
        gap_m, gap_t, gap_n, gap_d, gap_gammas, gap_sigma, gap_trials,
        gap_seed, gap_l, gap_theta_samples);
    if (gap_format == "csv") {
      emit(experiments::report_to_csv(rep), gap_out, gap_force);
      if (!gap_out.empty())
        emit(rep.metadata.dump(2) + "\n", gap_out + ".meta.json", gap_force);
    } else {
      emit(experiments::report_to_json(rep).dump(2) + "\n", gap_out,
           gap_force);
    }
  });

  // ---- pprime-demo ----
  auto* pp = app.add_subcommand(
      "pprime-demo",
      "Feed two cover signals through the two halves of a stored design");
  std::string pp_design, pp_out;
  double pp_sigma = 0.0;
  int pp_segment = 0;
  std::uint64_t pp_seed = 0;
  bool pp_force = false;
  pp->add_option("--design", pp_design, "design directory")->required();
  pp->add_option("--sigma", pp_sigma, "noise level")->required();
  pp->add_option("--segment", pp_segment, "segment to vary")->required();
  pp->add_option("--seed", pp_seed, "RNG seed")->required();
  pp->add_option("--out", pp_out, "output path (default: stdout)");
  pp->add_flag("--force", pp_force, "overwrite existing output");
  pp->callback([&] {
    hard_design::HardDesign design = hard_design::load_design(pp_design);
    if (pp_segment < 0 || pp_segment >= design.params.t)
      throw PreconditionError("segment index out of range");
    experiments::ReductionParams rp =
        experiments::reduction_params(design, pp_sigma);
    experiments::ThetaStarSpec tilde = experiments::sample_theta_star(
        design, rp.rho, derive_seed(pp_seed, "tilde"));
    experiments::ThetaStarSpec fresh = experiments::sample_theta_star(
        design, rp.rho, derive_seed(pp_seed, "bar"));
    const int width = 4 * design.params.p();
    experiments::ThetaStarSpec bar = tilde;
    bar.theta.segment(pp_segment * width, width) =
        fresh.theta.segment(pp_segment * width, width);
    bar.collections[static_cast<std::size_t>(pp_segment)] =
        fresh.collections[static_cast<std::size_t>(pp_segment)];
    bar.covers[static_cast<std::size_t>(pp_segment)] =
        fresh.covers[static_cast<std::size_t>(pp_segment)];
    Eigen::VectorXd y = experiments::build_pprime_response(
        design, bar, tilde, pp_sigma, pp_segment,
        derive_seed(pp_seed, "noise"));
    nlohmann::ordered_json j;
    j["segment"] = pp_segment;
    j["r"] = rp.r;
    j["rho"] = rp.rho;
    j["theta_bar"] = std::vector<double>(
        bar.theta.data(), bar.theta.data() + bar.theta.size());
    j["theta_tilde"] = std::vector<double>(
        tilde.theta.data(), tilde.theta.data() + tilde.theta.size());
    j["y_prime"] = std::vector<double>(y.data(), y.data() + y.size());
    emit(j.dump(2) + "\n", pp_out, pp_force);
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);  // prints help, exit 0
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << e.what() << "\n";
    return 2;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const Error& e) {
    std::cerr << e.name() << ": " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "InternalError: " << e.what() << "\n";
    return 1;
  }
}
