#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "astm/oracle.hpp"
#include "astm/proxstep.hpp"
#include "json.hpp"

namespace astm {

/// Random point of Q: uniform on boxes and balls, Dirichlet(1) on the simplex,
/// standard normal for Q = All.
Vector random_point(const FeasibleSet& q, std::size_t dim, SplitMix64& rng);

struct OracleCheckOptions {
  std::size_t draws = 100000;  // per point
  std::size_t points = 10;
  std::size_t pairs = 1000;
  std::uint64_t seed = 7;
  double z_limit = 5.0;
  double moment_slack = 0.05;
  double sandwich_tol = 1e-9;
};

struct OracleConditionReport {
  double max_abs_z = 0.0;
  bool unbiased_ok = false;
  double st2_moment = 0.0;  // worst point
  double st2_limit = 0.0;
  bool st2_ok = false;
  double sandwich_lower_min = 0.0;    // min of f(x) − f_δ(y) − ⟨∇f_δ(y), x − y⟩
  double sandwich_upper_slack = 0.0;  // min of (L/2)‖x − y‖² + δ − that gap
  bool sandwich_ok = false;

  bool all_pass() const { return unbiased_ok && st2_ok && sandwich_ok; }
  nlohmann::json to_json() const;
};

/// Monte Carlo checks of the oracle conditions: unbiasedness (per-coordinate
/// z-scores), the sub-Gaussian moment E exp(‖g − ∇f‖²_*/σ²) ≤ e, and the
/// (δ, L) sandwich on random pairs of Q.
OracleConditionReport check_oracle_conditions(const StochasticOracle& oracle, const Geometry& g,
                                              const FeasibleSet& q, const OracleSpec& spec,
                                              const OracleCheckOptions& opts = {});

struct ProxCase {
  std::string name;
  bool entropy = false;
  FeasibleSet::Kind set = FeasibleSet::Kind::All;
  CompositeTerm::Kind composite = CompositeTerm::Kind::Zero;
};

/// Euclidean/All/Zero, Euclidean/All/L1, Euclidean/Box, Euclidean/Ball, Entropy/Simplex.
std::vector<ProxCase> standard_prox_cases();

struct SuiteResult {
  std::string name;
  std::size_t instances = 0;
  std::size_t failures = 0;
  double worst = 0.0;  // most negative normalized residual / margin

  bool pass() const { return failures == 0; }
};

/// Random prox instances; for each, the three-point residual at one random
/// probe of Q must be ≥ −1e−9·(1 + scale).
SuiteResult three_point_suite(const ProxCase& c, std::size_t instances, std::uint64_t seed);

/// V(x, y) − ½‖x − y‖² ≥ −1e−9 on random pairs of the geometry's domain.
SuiteResult bregman_lower_bound_suite(bool entropy, std::size_t pairs, std::uint64_t seed);

}  // namespace astm
