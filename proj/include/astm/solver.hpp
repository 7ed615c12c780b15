#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "astm/geometry.hpp"
#include "astm/oracle.hpp"
#include "astm/proxstep.hpp"
#include "json.hpp"

namespace astm {

/// min_{x ∈ Q} F(x) = f(x) + h(x) with f available through a stochastic oracle.
struct CompositeProblem {
  OraclePtr oracle;
  Geometry geometry;
  FeasibleSet set;
  CompositeTerm composite;
  /// F* when known; enables gap columns in traces.
  std::optional<double> optimum_value;

  /// True objective f(x) + h(x), for diagnostics.
  double objective(const Vector& x) const;
  void validate() const;
};

struct SolverConfig {
  double epsilon = 1e-2;
  double beta = 0.05;
  double lipschitz = 1.0;  // L of the oracle
  double L0 = 1.0;         // initial local estimate, expected <= lipschitz
  double R_Q = 1.0;        // bound on the diameter of Q
  double delta = 0.0;
  double sigma = 0.0;
  std::uint64_t seed = 0;
  int max_inner_doublings = 60;
  bool early_stop = true;

  void validate() const;
};

struct DerivedParams {
  std::size_t N = 1;
  double omega = 0.0;
  double omega_tilde = 0.0;
  double kappa = 1.0;
};

struct IterationTrace {
  std::size_t k = 0;
  double L = 0.0;
  double alpha = 0.0;
  double A = 0.0;
  std::size_t m = 0;
  std::size_t inner_trials = 0;
  std::optional<double> f_gap;
  double rq2_over_A = 0.0;
};

struct OracleCounters {
  std::size_t f_evals = 0;
  std::size_t grad_samples = 0;
};

struct SolverState {
  std::size_t k = 0;
  double A = 0.0;
  double alpha_last = 0.0;
  Vector x, u, y;
  double L_trial = 0.0;
  int j = 0;
  std::vector<double> L_accepted;
  OracleCounters counters;
  std::vector<IterationTrace> trace;
};

enum class StopReason { BudgetReached, EarlyStopAOverR, InnerCapExceeded };
enum class StepStatus { Accepted, InnerCapExceeded };

std::string to_string(StopReason r);

struct SolverResult {
  Vector x_final;
  std::vector<IterationTrace> trace;
  StopReason stop_reason = StopReason::BudgetReached;
  DerivedParams params;
  OracleCounters counters;
  std::vector<std::string> warnings;
  std::optional<double> final_gap;

  /// Total stochastic gradient samples M.
  std::size_t oracle_calls() const { return counters.grad_samples; }
  double max_L() const;
};

/// N = ⌈2√3·√L·R_Q/√ε⌉, Ω = √(6 ln(N/β)), Ω̃ = 2κ + 4Ω√κ + 2Ω².
DerivedParams derive_params(const SolverConfig& cfg, const Geometry& g);
DerivedParams derive_params(const SolverConfig& cfg, double kappa);

/// Positive root of L·α² = A + α.
double compute_alpha(double A, double L_trial);

/// m = ⌈3σ²Ω̃α/ε⌉, at least 1.
std::size_t batch_size(double sigma, double omega_tilde, double alpha, double epsilon);

/// f(x) ≤ f(y) + ⟨g̃, x − y⟩ + (L/2)‖x − y‖² + 3σ²Ω̃/(L·m) + δ, up to a 1e−12
/// relative slack on the right side.
bool line_search_condition(double f_x, double f_y, const Vector& gtilde, const Vector& x,
                           const Vector& y, double L_trial, double sigma, double omega_tilde,
                           std::size_t m, double delta, const Geometry& g);

/// Zero step: x = u = y = x0, A = α = 0, first trial L = L0/2.
SolverState initial_state(const SolverConfig& cfg, const Vector& x0);

/// One outer iteration including its inner doubling loop. On acceptance the
/// state advances by one step and gets a trace record; on exceeding
/// cfg.max_inner_doublings it is left at the failing trial.
StepStatus outer_step(SolverState& state, const CompositeProblem& problem, const SolverConfig& cfg,
                      const DerivedParams& params);

SolverResult solve(const CompositeProblem& problem, const SolverConfig& cfg, const Vector& x0);

/// Largest δ for which the 4ε guarantee applies: ε^{3/2} / (6√3·√L·R_Q).
double delta_threshold(double epsilon, double L, double R_Q);

/// (4 + log₂(3L/L₀)) · (2√3·√L·R_Q/√ε + 21σ²Ω̃R_Q²/ε² + 1).
double oracle_call_bound(const SolverConfig& cfg, const DerivedParams& params);

inline constexpr const char* kTraceCsvHeader = "k,L_k,alpha_k,A_k,m_k,inner_trials,f_gap,RQ2_over_A";

void write_trace_csv(std::ostream& out, const std::vector<IterationTrace>& trace);
std::string trace_csv(const std::vector<IterationTrace>& trace);

nlohmann::json summary_json(const SolverResult& result, const SolverConfig& cfg);

}  // namespace astm
