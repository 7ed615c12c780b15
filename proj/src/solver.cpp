#include "astm/solver.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <ostream>
#include <sstream>

#include "astm/errors.hpp"

namespace astm {

namespace {

constexpr double kLineSearchSlack = 1e-12;
constexpr double kMaxBatch = 1e15;

const double kSqrt3 = std::sqrt(3.0);

}  // namespace

double CompositeProblem::objective(const Vector& x) const {
  return oracle->true_value(x) + composite.value(x);
}

void CompositeProblem::validate() const {
  if (!oracle) throw ConfigError("problem has no oracle");
  if (oracle->dim() != geometry.dim()) throw ConfigError("oracle and geometry dimensions differ");
  require_supported(geometry, set, composite);
}

void SolverConfig::validate() const {
  if (!(epsilon > 0.0) || !std::isfinite(epsilon)) throw ConfigError("epsilon must be > 0");
  if (!(beta > 0.0 && beta < 1.0)) throw ConfigError("beta must lie in (0, 1)");
  if (!(lipschitz > 0.0) || !std::isfinite(lipschitz)) throw ConfigError("L must be > 0");
  if (!(L0 > 0.0) || !std::isfinite(L0)) throw ConfigError("L0 must be > 0");
  if (!(R_Q > 0.0) || !std::isfinite(R_Q)) {
    throw ConfigError("R_Q must be finite and > 0 (supply it explicitly for unbounded Q)");
  }
  if (!(delta >= 0.0) || !std::isfinite(delta)) throw ConfigError("delta must be >= 0");
  if (!(sigma >= 0.0) || !std::isfinite(sigma)) throw ConfigError("sigma must be >= 0");
  if (max_inner_doublings < 0) throw ConfigError("max_inner_doublings must be >= 0");
}

std::string to_string(StopReason r) {
  switch (r) {
    case StopReason::BudgetReached: return "BudgetReached";
    case StopReason::EarlyStopAOverR: return "EarlyStopAOverR";
    case StopReason::InnerCapExceeded: return "InnerCapExceeded";
  }
  return "?";
}

double SolverResult::max_L() const {
  double m = 0.0;
  for (const auto& t : trace) m = std::max(m, t.L);
  return m;
}

DerivedParams derive_params(const SolverConfig& cfg, const Geometry& g) {
  return derive_params(cfg, regularity_constant(g));
}

DerivedParams derive_params(const SolverConfig& cfg, double kappa) {
  cfg.validate();
  if (!(kappa >= 1.0) || !std::isfinite(kappa)) throw ConfigError("kappa must be >= 1");
  DerivedParams p;
  const double raw = 2.0 * kSqrt3 * std::sqrt(cfg.lipschitz) * cfg.R_Q / std::sqrt(cfg.epsilon);
  if (!(raw < 1e15)) throw ConfigError("iteration budget N is too large");
  p.N = std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(raw)));
  const double ratio = static_cast<double>(p.N) / cfg.beta;
  if (!(ratio > 1.0)) throw ConfigError("N/beta must exceed 1 for Omega to be real");
  p.omega = std::sqrt(6.0 * std::log(ratio));
  p.kappa = kappa;
  const double sk = std::sqrt(p.kappa);
  p.omega_tilde = 2.0 * p.kappa + 4.0 * p.omega * sk + 2.0 * p.omega * p.omega;
  return p;
}

double compute_alpha(double A, double L_trial) {
  if (!(A >= 0.0)) throw ConfigError("A must be >= 0");
  if (!(L_trial > 0.0)) throw ConfigError("trial L must be > 0");
  return (1.0 + std::sqrt(1.0 + 4.0 * A * L_trial)) / (2.0 * L_trial);
}

std::size_t batch_size(double sigma, double omega_tilde, double alpha, double epsilon) {
  if (!(epsilon > 0.0)) throw ConfigError("epsilon must be > 0");
  if (!(sigma >= 0.0 && omega_tilde >= 0.0 && alpha >= 0.0)) {
    throw ConfigError("batch size arguments must be >= 0");
  }
  const double raw = std::ceil(3.0 * sigma * sigma * omega_tilde * alpha / epsilon);
  if (!(raw <= kMaxBatch)) throw ConfigError("mini-batch size overflow");
  return std::max<std::size_t>(1, static_cast<std::size_t>(raw));
}

bool line_search_condition(double f_x, double f_y, const Vector& gtilde, const Vector& x,
                           const Vector& y, double L_trial, double sigma, double omega_tilde,
                           std::size_t m, double delta, const Geometry& g) {
  const Vector d = x - y;
  const double nd = norm(g, d);
  const double rhs = f_y + gtilde.dot(d) + 0.5 * L_trial * nd * nd +
                     3.0 * sigma * sigma * omega_tilde / (L_trial * static_cast<double>(m)) + delta;
  return f_x <= rhs + kLineSearchSlack * std::abs(rhs);
}

SolverState initial_state(const SolverConfig& cfg, const Vector& x0) {
  SolverState s;
  s.x = x0;
  s.u = x0;
  s.y = x0;
  s.L_trial = cfg.L0 / 2.0;
  return s;
}

StepStatus outer_step(SolverState& state, const CompositeProblem& problem, const SolverConfig& cfg,
                      const DerivedParams& params) {
  const StochasticOracle& oracle = *problem.oracle;
  const Geometry& g = problem.geometry;
  for (;;) {
    if (state.j > cfg.max_inner_doublings) return StepStatus::InnerCapExceeded;
    const double L = state.L_trial;
    if (!std::isfinite(L)) return StepStatus::InnerCapExceeded;

    const double alpha = compute_alpha(state.A, L);
    const double A_next = state.A + alpha;
    const Vector y = (alpha * state.u + state.A * state.x) / A_next;
    const std::size_t m = batch_size(cfg.sigma, params.omega_tilde, alpha, cfg.epsilon);

    const TrialStream stream{cfg.seed, state.k, static_cast<std::uint64_t>(state.j)};
    const BatchGradient batch = minibatch_gradient(oracle, y, m, stream);
    Vector u_next =
        prox_subproblem(g, problem.set, problem.composite, state.u, alpha, batch.mean_grad);
    Vector x_next = (alpha * u_next + state.A * state.x) / A_next;

    const double f_y = oracle.value(y);
    const double f_x = oracle.value(x_next);
    state.counters.f_evals += 2;
    state.counters.grad_samples += batch.samples_drawn;

    if (line_search_condition(f_x, f_y, batch.mean_grad, x_next, y, L, cfg.sigma,
                              params.omega_tilde, m, cfg.delta, g)) {
      IterationTrace rec;
      rec.k = state.k + 1;
      rec.L = L;
      rec.alpha = alpha;
      rec.A = A_next;
      rec.m = m;
      rec.inner_trials = static_cast<std::size_t>(state.j) + 1;
      rec.rq2_over_A = cfg.R_Q * cfg.R_Q / A_next;
      if (problem.optimum_value) rec.f_gap = problem.objective(x_next) - *problem.optimum_value;

      state.x = std::move(x_next);
      state.u = std::move(u_next);
      state.y = y;
      state.A = A_next;
      state.alpha_last = alpha;
      state.L_accepted.push_back(L);
      state.L_trial = L / 2.0;
      state.j = 0;
      state.k += 1;
      state.trace.push_back(rec);
      return StepStatus::Accepted;
    }
    state.L_trial = 2.0 * L;
    state.j += 1;
  }
}

SolverResult solve(const CompositeProblem& problem, const SolverConfig& cfg, const Vector& x0) {
  problem.validate();
  cfg.validate();
  require_point(problem.geometry, x0, "x0");
  if (!problem.set.contains(x0)) throw DomainError("x0 lies outside the feasible set");

  SolverResult result;
  result.params = derive_params(cfg, problem.geometry);
  if (cfg.delta > delta_threshold(cfg.epsilon, cfg.lipschitz, cfg.R_Q)) {
    result.warnings.push_back("delta exceeds the accuracy threshold; the 4*epsilon bound does not apply");
  }
  if (cfg.L0 > cfg.lipschitz) {
    result.warnings.push_back("L0 exceeds the oracle's L");
  }
  const double diam = domain_diameter(problem.geometry, problem.set);
  if (std::isfinite(diam) && cfg.R_Q < diam * (1.0 - 1e-12)) {
    result.warnings.push_back("R_Q is smaller than the diameter of Q");
  }

  SolverState state = initial_state(cfg, x0);
  result.stop_reason = StopReason::BudgetReached;
  while (state.k < result.params.N) {
    if (outer_step(state, problem, cfg, result.params) == StepStatus::InnerCapExceeded) {
      result.stop_reason = StopReason::InnerCapExceeded;
      result.warnings.push_back("inner doubling cap exceeded at step " + std::to_string(state.k + 1) +
                                "; L or sigma is likely mis-specified");
      break;
    }
    if (cfg.early_stop && cfg.R_Q * cfg.R_Q / state.A <= cfg.epsilon) {
      result.stop_reason = StopReason::EarlyStopAOverR;
      break;
    }
  }

  result.x_final = state.x;
  result.trace = std::move(state.trace);
  result.counters = state.counters;
  if (problem.optimum_value) {
    result.final_gap = problem.objective(result.x_final) - *problem.optimum_value;
  }
  return result;
}

double delta_threshold(double epsilon, double L, double R_Q) {
  if (!(epsilon > 0.0 && L > 0.0 && R_Q > 0.0)) throw ConfigError("arguments must be positive");
  return std::pow(epsilon, 1.5) / (6.0 * kSqrt3 * std::sqrt(L) * R_Q);
}

double oracle_call_bound(const SolverConfig& cfg, const DerivedParams& params) {
  cfg.validate();
  const double log_factor = 4.0 + std::log2(3.0 * cfg.lipschitz / cfg.L0);
  const double eps = cfg.epsilon;
  const double steps = 2.0 * kSqrt3 * std::sqrt(cfg.lipschitz) * cfg.R_Q / std::sqrt(eps);
  const double noise =
      21.0 * cfg.sigma * cfg.sigma * params.omega_tilde * cfg.R_Q * cfg.R_Q / (eps * eps);
  return log_factor * (steps + noise + 1.0);
}

void write_trace_csv(std::ostream& out, const std::vector<IterationTrace>& trace) {
  const auto flags = out.flags();
  const auto prec = out.precision();
  out << kTraceCsvHeader << '\n';
  out << std::setprecision(17);
  for (const auto& t : trace) {
    out << t.k << ',' << t.L << ',' << t.alpha << ',' << t.A << ',' << t.m << ','
        << t.inner_trials << ',';
    if (t.f_gap) out << *t.f_gap;
    out << ',' << t.rq2_over_A << '\n';
  }
  out.flags(flags);
  out.precision(prec);
}

std::string trace_csv(const std::vector<IterationTrace>& trace) {
  std::ostringstream os;
  write_trace_csv(os, trace);
  return os.str();
}

nlohmann::json summary_json(const SolverResult& result, const SolverConfig& cfg) {
  nlohmann::json j;
  j["stop_reason"] = to_string(result.stop_reason);
  j["M"] = result.oracle_calls();
  j["f_evals"] = result.counters.f_evals;
  j["N"] = result.params.N;
  j["steps"] = result.trace.size();
  if (result.stop_reason == StopReason::EarlyStopAOverR && !result.trace.empty()) {
    j["N_tilde"] = result.trace.size() - 1;
  } else {
    j["N_tilde"] = nullptr;
  }
  j["final_gap"] = result.final_gap ? nlohmann::json(*result.final_gap) : nlohmann::json(nullptr);
  j["A_N"] = result.trace.empty() ? 0.0 : result.trace.back().A;
  j["max_L"] = result.max_L();
  j["omega"] = result.params.omega;
  j["omega_tilde"] = result.params.omega_tilde;
  j["kappa"] = result.params.kappa;
  j["oracle_call_bound"] = oracle_call_bound(cfg, result.params);
  j["seed"] = cfg.seed;
  j["warnings"] = result.warnings;
  return j;
}

}  // namespace astm
