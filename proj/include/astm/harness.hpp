#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "astm/solver.hpp"
#include "json.hpp"

namespace astm {

/// Synthetic problem description, as read from an experiment config.
struct ProblemSpec {
  std::string kind = "noisy_quadratic";  // or "logistic"
  std::size_t dim = 20;
  double spectrum_lo = 0.1;
  double spectrum_hi = 1.0;
  double noise_std = 0.0;
  std::optional<std::vector<double>> b;  // explicit linear term
  double b_norm = 2.0;                   // otherwise random b with this Euclidean norm
  std::size_t n_samples = 200;           // logistic only
  std::uint64_t data_seed = 1;
  double delta = 0.0;
  double delta_u = 1.0;
  /// Serialized oracle (see oracle_from_json); overrides the generated fields.
  std::optional<nlohmann::json> oracle;
};

struct ExperimentConfig {
  ProblemSpec problem;
  std::string geometry = "euclidean";  // or "entropy"
  FeasibleSet set = FeasibleSet::all();
  CompositeTerm composite = CompositeTerm::zero();

  double epsilon = 0.1;
  double beta = 0.05;
  std::optional<double> lipschitz;  // defaults to the oracle's L
  std::optional<double> L0;         // defaults to L
  std::optional<double> R_Q;        // defaults to the diameter of Q
  std::optional<double> sigma;      // defaults to the oracle's σ
  std::uint64_t seed = 1;
  int max_inner_doublings = 60;
  bool early_stop = true;
  std::optional<std::vector<double>> x0;

  std::size_t n_seeds = 1;
  std::string out_dir = ".";
  unsigned threads = 0;  // 0 = hardware concurrency
};

ExperimentConfig experiment_from_json(const nlohmann::json& j);
nlohmann::json experiment_to_json(const ExperimentConfig& cfg);
ExperimentConfig load_experiment(const std::string& path);

/// Noiseless n = 50 quadratic on the unit ball, ε = 1e−3.
ExperimentConfig default_noiseless_experiment();
/// Stochastic n = 20 quadratic on the unit ball, s = 0.1, ε = 0.1, β = 0.05, 200 seeds.
ExperimentConfig default_stochastic_experiment();

struct Optimum {
  Vector x;
  double value = 0.0;
  std::string method;
  /// Upper bound on value − F* (0 for closed forms).
  double certified_error = 0.0;
};

/// Everything needed to run solves for one experiment.
struct Experiment {
  CompositeProblem problem;
  SolverConfig solver;
  Vector x0;
  Optimum optimum;
  OracleSpec oracle_spec;
};

OraclePtr build_oracle(const ProblemSpec& spec);
Geometry build_geometry(const ExperimentConfig& cfg);
Vector default_start(const Geometry& g, const FeasibleSet& q);

/// Solver settings from the config, with L, σ, δ taken from the oracle and
/// R_Q from the diameter of Q where not given.
SolverConfig resolve_solver_config(const ExperimentConfig& cfg, const OracleSpec& spec,
                                   const Geometry& g);

/// Builds the problem, resolves solver defaults and computes the reference optimum.
Experiment build_experiment(const ExperimentConfig& cfg);

/// x* and F* for a synthetic problem: a direct solve for unconstrained or
/// ball-constrained quadratics, otherwise a long noiseless run of the solver
/// with ε_ref = ε/100, whose gap bound R_Q²/A certifies F* to within ε_ref.
Optimum reference_optimum(const CompositeProblem& problem, const SolverConfig& cfg,
                          const Vector& x0);

struct GrowthCheck {
  bool applicable = false;  // max L_k < 3L held on this run
  std::size_t violations = 0;
};

/// Counts steps with A_k < (k+1)²/(12L)·(1 − 1e−10), on runs with max L_k < 3L.
GrowthCheck check_lemma_growth(const std::vector<IterationTrace>& trace, double L_global);

struct RunRecord {
  std::uint64_t seed = 0;
  double final_gap = 0.0;
  double max_L = 0.0;
  StopReason stop_reason = StopReason::BudgetReached;
  std::size_t M = 0;
  std::size_t f_evals = 0;
  std::size_t steps = 0;
  bool gap_ok = false;
  bool L_ok = false;
  bool M_ok = false;
  GrowthCheck growth;
};

struct ClaimVerdict {
  std::string name;
  std::string statement;
  double observed = 0.0;
  double threshold = 0.0;
  std::string comparison;  // ">=" or "<="
  bool pass = false;
};

struct AggregateReport {
  std::size_t n_seeds = 0;
  double frac_gap_ok = 0.0;
  double frac_L_ok = 0.0;
  std::size_t max_M = 0;
  double M_bound = 0.0;
  std::size_t growth_violations = 0;
  std::size_t growth_runs_checked = 0;
  std::size_t inner_cap_runs = 0;
  std::vector<ClaimVerdict> claims;

  bool all_pass() const;
};

struct EnsembleResult {
  AggregateReport report;
  std::vector<RunRecord> runs;
};

/// One solve per seed cfg.seed … cfg.seed + n_seeds − 1, aggregated in seed order.
EnsembleResult run_ensemble(const ExperimentConfig& cfg);
EnsembleResult run_ensemble(const Experiment& experiment, const ExperimentConfig& cfg);

/// Lowest probability consistent with a claimed rate p at 3 binomial standard errors.
double binomial_floor(double p, std::size_t n);

nlohmann::json report_json(const EnsembleResult& result, const ExperimentConfig& cfg);

/// Subcommands solve | ensemble | verify | params. Returns 0 on success,
/// 1 on a failed check and 2 on a usage or configuration error.
int cli_main(const std::vector<std::string>& args);

}  // namespace astm
