#include "astm/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <fstream>
#include <limits>
#include <mutex>
#include <random>
#include <thread>

#include "astm/errors.hpp"

namespace astm {

namespace {

using nlohmann::json;

Vector to_vector(const std::vector<double>& v) {
  return Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size()));
}

std::vector<double> to_std(const Vector& v) { return {v.data(), v.data() + v.size()}; }

// Scalar or per-coordinate array.
Vector coords_from_json(const json& j, std::size_t dim) {
  if (j.is_number()) return Vector::Constant(static_cast<Eigen::Index>(dim), j.get<double>());
  Vector v = to_vector(j.get<std::vector<double>>());
  if (static_cast<std::size_t>(v.size()) != dim) throw ConfigError("coordinate array has wrong length");
  return v;
}

template <class T>
std::optional<T> optional_field(const json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  return j.at(key).get<T>();
}

// Oracle used for the reference run: true f values, exact gradients.
class NoiselessView final : public StochasticOracle {
 public:
  explicit NoiselessView(OraclePtr inner) : inner_(std::move(inner)) {}
  std::size_t dim() const override { return inner_->dim(); }
  std::string kind() const override { return "noiseless_view"; }
  double value(const Vector& y) const override { return inner_->true_value(y); }
  Vector exact_gradient(const Vector& y) const override { return inner_->exact_gradient(y); }
  Vector sample_gradient(const Vector& y, SplitMix64&) const override {
    return inner_->exact_gradient(y);
  }
  OracleSpec spec(const Geometry& g) const override {
    OracleSpec s = inner_->spec(g);
    s.sigma = 0.0;
    s.delta = 0.0;
    return s;
  }
  json to_json() const override { return inner_->to_json(); }

 private:
  OraclePtr inner_;
};

const NoisyQuadratic* underlying_quadratic(const StochasticOracle* o) {
  while (o != nullptr) {
    if (const auto* q = dynamic_cast<const NoisyQuadratic*>(o)) return q;
    const auto* w = dynamic_cast<const DeltaInexact*>(o);
    o = w != nullptr ? w->inner().get() : nullptr;
  }
  return nullptr;
}

// min ½xᵀΣx − bᵀx over ‖x − c‖ ≤ r with the constraint active:
// (Σ + μI)(x − c) = b − Σc, μ ≥ 0 chosen so that ‖x − c‖ = r.
Vector ball_constrained_quadratic(const Matrix& sigma, const Vector& b, const Vector& c, double r) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(sigma);
  const Vector w = es.eigenvectors().transpose() * (b - sigma * c);
  const Vector& lam = es.eigenvalues();
  auto radius_at = [&](double mu) { return (w.array() / (lam.array() + mu)).matrix().norm(); };
  double lo = 0.0;
  double hi = w.norm() / r;
  for (int it = 0; it < 400 && hi - lo > 1e-17 * std::max(1.0, hi); ++it) {
    const double mid = 0.5 * (lo + hi);
    (radius_at(mid) > r ? lo : hi) = mid;
  }
  const Vector z = (w.array() / (lam.array() + hi)).matrix();
  Vector d = es.eigenvectors() * z;
  const double dn = d.norm();
  if (dn > r) d *= r / dn;
  return c + d;
}

}  // namespace

// --- config io --------------------------------------------------------------

ExperimentConfig experiment_from_json(const json& j) {
  try {
    ExperimentConfig cfg;
    const json p = j.value("problem", json::object());
    ProblemSpec& ps = cfg.problem;
    ps.kind = p.value("kind", ps.kind);
    ps.dim = p.value("dim", ps.dim);
    if (p.contains("spectrum")) {
      const auto sp = p.at("spectrum").get<std::vector<double>>();
      if (sp.size() != 2) throw ConfigError("spectrum must be [lo, hi]");
      ps.spectrum_lo = sp[0];
      ps.spectrum_hi = sp[1];
    }
    ps.noise_std = p.value("noise_std", ps.noise_std);
    ps.b = optional_field<std::vector<double>>(p, "b");
    ps.b_norm = p.value("b_norm", ps.b_norm);
    ps.n_samples = p.value("n_samples", ps.n_samples);
    ps.data_seed = p.value("data_seed", ps.data_seed);
    ps.delta = p.value("delta", ps.delta);
    ps.delta_u = p.value("delta_u", ps.delta_u);
    if (p.contains("oracle") && !p.at("oracle").is_null()) {
      ps.oracle = p.at("oracle");
      ps.dim = oracle_from_json(*ps.oracle)->dim();
    } else if (ps.b) {
      ps.dim = ps.b->size();
    }

    cfg.geometry = j.value("geometry", cfg.geometry);
    if (cfg.geometry != "euclidean" && cfg.geometry != "entropy") {
      throw ConfigError("geometry must be 'euclidean' or 'entropy'");
    }

    const json fs = j.value("feasible_set", json{{"kind", "all"}});
    const auto fkind = fs.value("kind", std::string("all"));
    if (fkind == "all") {
      cfg.set = FeasibleSet::all();
    } else if (fkind == "box") {
      cfg.set = FeasibleSet::box(coords_from_json(fs.at("lo"), ps.dim), coords_from_json(fs.at("hi"), ps.dim));
    } else if (fkind == "ball") {
      Vector c = fs.contains("center") && !fs.at("center").is_null()
                     ? coords_from_json(fs.at("center"), ps.dim)
                     : Vector::Zero(static_cast<Eigen::Index>(ps.dim));
      cfg.set = FeasibleSet::ball(std::move(c), fs.at("radius").get<double>());
    } else if (fkind == "simplex") {
      cfg.set = FeasibleSet::simplex();
    } else {
      throw ConfigError("unknown feasible_set kind '" + fkind + "'");
    }

    const json comp = j.value("composite", json{{"kind", "zero"}});
    const auto ckind = comp.value("kind", std::string("zero"));
    if (ckind == "zero") {
      cfg.composite = CompositeTerm::zero();
    } else if (ckind == "l1") {
      cfg.composite = CompositeTerm::l1(comp.at("lambda").get<double>());
    } else {
      throw ConfigError("unknown composite kind '" + ckind + "'");
    }

    const json s = j.value("solver", json::object());
    cfg.epsilon = s.value("epsilon", cfg.epsilon);
    cfg.beta = s.value("beta", cfg.beta);
    cfg.lipschitz = optional_field<double>(s, "L");
    cfg.L0 = optional_field<double>(s, "L0");
    cfg.R_Q = optional_field<double>(s, "R_Q");
    cfg.sigma = optional_field<double>(s, "sigma");
    cfg.seed = s.value("seed", cfg.seed);
    cfg.max_inner_doublings = s.value("max_inner_doublings", cfg.max_inner_doublings);
    cfg.early_stop = s.value("early_stop", cfg.early_stop);

    cfg.x0 = optional_field<std::vector<double>>(j, "x0");
    cfg.n_seeds = j.value("n_seeds", cfg.n_seeds);
    if (cfg.n_seeds == 0) throw ConfigError("n_seeds must be >= 1");
    if (j.contains("output")) cfg.out_dir = j.at("output").value("dir", cfg.out_dir);
    cfg.threads = j.value("threads", cfg.threads);
    return cfg;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed experiment config: ") + e.what());
  }
}

json experiment_to_json(const ExperimentConfig& cfg) {
  const ProblemSpec& ps = cfg.problem;
  json p = {{"kind", ps.kind},
            {"dim", ps.dim},
            {"spectrum", {ps.spectrum_lo, ps.spectrum_hi}},
            {"noise_std", ps.noise_std},
            {"b_norm", ps.b_norm},
            {"n_samples", ps.n_samples},
            {"data_seed", ps.data_seed},
            {"delta", ps.delta},
            {"delta_u", ps.delta_u}};
  if (ps.b) p["b"] = *ps.b;
  if (ps.oracle) p["oracle"] = *ps.oracle;

  json fs = {{"kind", cfg.set.name()}};
  if (cfg.set.kind == FeasibleSet::Kind::Box) {
    fs["lo"] = to_std(cfg.set.lo);
    fs["hi"] = to_std(cfg.set.hi);
  } else if (cfg.set.kind == FeasibleSet::Kind::Ball) {
    fs["center"] = to_std(cfg.set.center);
    fs["radius"] = cfg.set.radius;
  }
  json comp = {{"kind", cfg.composite.name()}};
  if (cfg.composite.kind == CompositeTerm::Kind::L1) comp["lambda"] = cfg.composite.lambda;

  auto opt = [](const std::optional<double>& v) { return v ? json(*v) : json(nullptr); };
  json s = {{"epsilon", cfg.epsilon},
            {"beta", cfg.beta},
            {"L", opt(cfg.lipschitz)},
            {"L0", opt(cfg.L0)},
            {"R_Q", opt(cfg.R_Q)},
            {"sigma", opt(cfg.sigma)},
            {"seed", cfg.seed},
            {"max_inner_doublings", cfg.max_inner_doublings},
            {"early_stop", cfg.early_stop}};
  json out = {{"problem", p},
              {"geometry", cfg.geometry},
              {"feasible_set", fs},
              {"composite", comp},
              {"solver", s},
              {"n_seeds", cfg.n_seeds},
              {"output", {{"dir", cfg.out_dir}}},
              {"threads", cfg.threads}};
  out["x0"] = cfg.x0 ? json(*cfg.x0) : json(nullptr);
  return out;
}

ExperimentConfig load_experiment(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config '" + path + "'");
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ConfigError("cannot parse config '" + path + "': " + e.what());
  }
  return experiment_from_json(j);
}

ExperimentConfig default_noiseless_experiment() {
  ExperimentConfig cfg;
  cfg.problem.dim = 50;
  cfg.problem.noise_std = 0.0;
  cfg.problem.data_seed = 2024;
  cfg.set = FeasibleSet::ball(Vector::Zero(50), 1.0);
  cfg.epsilon = 1e-3;
  cfg.beta = 0.05;
  cfg.seed = 1;
  cfg.n_seeds = 1;
  return cfg;
}

ExperimentConfig default_stochastic_experiment() {
  ExperimentConfig cfg;
  cfg.problem.dim = 20;
  cfg.problem.noise_std = 0.1;
  cfg.problem.data_seed = 2025;
  cfg.set = FeasibleSet::ball(Vector::Zero(20), 1.0);
  cfg.epsilon = 0.1;
  cfg.beta = 0.05;
  cfg.seed = 1000;
  cfg.n_seeds = 200;
  return cfg;
}

// --- building ---------------------------------------------------------------

OraclePtr build_oracle(const ProblemSpec& spec) {
  OraclePtr base;
  if (spec.oracle) {
    base = oracle_from_json(*spec.oracle);
  } else if (spec.kind == "noisy_quadratic") {
    Vector b;
    if (spec.b) {
      b = to_vector(*spec.b);
    } else {
      auto rng = substream(spec.data_seed, {0xB0});
      std::normal_distribution<double> normal;
      b.resize(static_cast<Eigen::Index>(spec.dim));
      for (Eigen::Index i = 0; i < b.size(); ++i) b[i] = normal(rng);
      const double nb = b.norm();
      b *= nb > 0.0 ? spec.b_norm / nb : 0.0;
    }
    base = NoisyQuadratic::with_spectrum(spec.dim, spec.spectrum_lo, spec.spectrum_hi, std::move(b),
                                         spec.noise_std, spec.data_seed);
  } else if (spec.kind == "logistic") {
    base = FiniteSumLogistic::random(spec.n_samples, spec.dim, spec.data_seed);
  } else {
    throw ConfigError("unknown problem kind '" + spec.kind + "'");
  }
  return make_delta_inexact(std::move(base), spec.delta, spec.delta_u);
}

Geometry build_geometry(const ExperimentConfig& cfg) {
  return cfg.geometry == "entropy" ? Geometry::entropy(cfg.problem.dim)
                                   : Geometry::euclidean(cfg.problem.dim);
}

Vector default_start(const Geometry& g, const FeasibleSet& q) {
  const auto n = static_cast<Eigen::Index>(g.dim());
  switch (q.kind) {
    case FeasibleSet::Kind::All:
      return Vector::Zero(n);
    case FeasibleSet::Kind::Box:
      return Vector::Zero(n).cwiseMax(q.lo).cwiseMin(q.hi);
    case FeasibleSet::Kind::Ball:
      return q.center;
    case FeasibleSet::Kind::Simplex:
      return Vector::Constant(n, 1.0 / static_cast<double>(n));
  }
  return Vector::Zero(n);
}

SolverConfig resolve_solver_config(const ExperimentConfig& cfg, const OracleSpec& spec,
                                   const Geometry& g) {
  SolverConfig s;
  s.epsilon = cfg.epsilon;
  s.beta = cfg.beta;
  s.lipschitz = cfg.lipschitz.value_or(spec.lipschitz);
  s.L0 = cfg.L0.value_or(s.lipschitz);
  s.sigma = cfg.sigma.value_or(spec.sigma);
  s.delta = spec.delta;
  s.seed = cfg.seed;
  s.max_inner_doublings = cfg.max_inner_doublings;
  s.early_stop = cfg.early_stop;
  if (cfg.R_Q) {
    s.R_Q = *cfg.R_Q;
  } else {
    s.R_Q = domain_diameter(g, cfg.set);
    if (!std::isfinite(s.R_Q)) throw ConfigError("unbounded feasible set: solver.R_Q must be given");
  }
  s.validate();
  return s;
}

Experiment build_experiment(const ExperimentConfig& cfg) {
  OraclePtr oracle = build_oracle(cfg.problem);
  const Geometry g = build_geometry(cfg);
  Experiment e{CompositeProblem{oracle, g, cfg.set, cfg.composite, std::nullopt}, {}, {}, {}, {}};
  e.problem.validate();
  e.oracle_spec = oracle->spec(g);

  e.solver = resolve_solver_config(cfg, e.oracle_spec, g);

  e.x0 = cfg.x0 ? to_vector(*cfg.x0) : default_start(g, cfg.set);
  require_point(g, e.x0, "x0");
  if (!cfg.set.contains(e.x0)) throw ConfigError("x0 lies outside the feasible set");

  e.optimum = reference_optimum(e.problem, e.solver, e.x0);
  e.problem.optimum_value = e.optimum.value;
  return e;
}

Optimum reference_optimum(const CompositeProblem& problem, const SolverConfig& cfg,
                          const Vector& x0) {
  problem.validate();
  Optimum opt;
  const NoisyQuadratic* quad = underlying_quadratic(problem.oracle.get());
  if (quad != nullptr && problem.composite.kind == CompositeTerm::Kind::Zero &&
      (problem.set.kind == FeasibleSet::Kind::All || problem.set.kind == FeasibleSet::Kind::Ball)) {
    Eigen::LDLT<Matrix> ldlt(quad->hessian());
    const double cond_limit =
        static_cast<double>(quad->dim()) * std::numeric_limits<double>::epsilon() * quad->max_eigenvalue();
    if (ldlt.info() != Eigen::Success || !(quad->min_eigenvalue() > cond_limit)) {
      throw DomainError("reference optimum: quadratic is numerically singular");
    }
    Vector x = ldlt.solve(quad->linear());
    opt.method = "linear_solve";
    if (problem.set.kind == FeasibleSet::Kind::Ball && !problem.set.contains(x, 0.0)) {
      x = ball_constrained_quadratic(quad->hessian(), quad->linear(), problem.set.center,
                                     problem.set.radius);
      opt.method = "ball_secular";
    }
    opt.value = problem.objective(x);
    opt.x = std::move(x);
    return opt;
  }

  CompositeProblem exact = problem;
  exact.oracle = std::make_shared<NoiselessView>(problem.oracle);
  exact.optimum_value.reset();
  SolverConfig ref = cfg;
  ref.epsilon = cfg.epsilon / 100.0;
  ref.sigma = 0.0;
  ref.delta = 0.0;
  ref.L0 = cfg.lipschitz;
  ref.early_stop = true;
  const SolverResult r = solve(exact, ref, x0);
  if (r.stop_reason == StopReason::InnerCapExceeded || r.trace.empty()) {
    throw DomainError("reference optimum: deterministic run did not converge");
  }
  opt.x = r.x_final;
  opt.value = problem.objective(opt.x);
  opt.method = "deterministic_run";
  opt.certified_error = r.trace.back().rq2_over_A;
  return opt;
}

// --- checks -----------------------------------------------------------------

GrowthCheck check_lemma_growth(const std::vector<IterationTrace>& trace, double L_global) {
  GrowthCheck c;
  double max_L = 0.0;
  for (const auto& t : trace) max_L = std::max(max_L, t.L);
  c.applicable = !trace.empty() && max_L < 3.0 * L_global;
  if (!c.applicable) return c;
  for (const auto& t : trace) {
    const double k1 = static_cast<double>(t.k) + 1.0;
    if (t.A < k1 * k1 / (12.0 * L_global) * (1.0 - 1e-10)) ++c.violations;
  }
  return c;
}

bool AggregateReport::all_pass() const {
  return std::all_of(claims.begin(), claims.end(), [](const ClaimVerdict& v) { return v.pass; });
}

double binomial_floor(double p, std::size_t n) {
  if (n == 0) return 0.0;
  return std::max(0.0, p - 3.0 * std::sqrt(p * (1.0 - p) / static_cast<double>(n)));
}

EnsembleResult run_ensemble(const ExperimentConfig& cfg) {
  return run_ensemble(build_experiment(cfg), cfg);
}

EnsembleResult run_ensemble(const Experiment& experiment, const ExperimentConfig& cfg) {
  if (cfg.n_seeds == 0) throw ConfigError("n_seeds must be >= 1");
  const SolverConfig& base = experiment.solver;
  const double M_bound = oracle_call_bound(base, derive_params(base, experiment.problem.geometry));

  EnsembleResult out;
  out.runs.resize(cfg.n_seeds);
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mu;

  auto worker = [&] {
    for (std::size_t i = next++; i < cfg.n_seeds; i = next++) {
      try {
        SolverConfig c = base;
        c.seed = base.seed + i;
        const SolverResult r = solve(experiment.problem, c, experiment.x0);
        RunRecord& rec = out.runs[i];
        rec.seed = c.seed;
        rec.final_gap = r.final_gap.value_or(std::numeric_limits<double>::quiet_NaN());
        rec.max_L = r.max_L();
        rec.stop_reason = r.stop_reason;
        rec.M = r.oracle_calls();
        rec.f_evals = r.counters.f_evals;
        rec.steps = r.trace.size();
        rec.gap_ok = r.stop_reason != StopReason::InnerCapExceeded &&
                     rec.final_gap <= 4.0 * base.epsilon;
        rec.L_ok = r.stop_reason != StopReason::InnerCapExceeded && rec.max_L < 3.0 * base.lipschitz;
        rec.M_ok = static_cast<double>(rec.M) <= M_bound;
        rec.growth = check_lemma_growth(r.trace, base.lipschitz);
      } catch (...) {
        std::lock_guard<std::mutex> lock(failure_mu);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  unsigned n_threads = cfg.threads != 0 ? cfg.threads : std::max(1u, std::thread::hardware_concurrency());
  n_threads = static_cast<unsigned>(std::min<std::size_t>(n_threads, cfg.n_seeds));
  if (n_threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < n_threads; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  if (failure) std::rethrow_exception(failure);

  AggregateReport& rep = out.report;
  rep.n_seeds = cfg.n_seeds;
  rep.M_bound = M_bound;
  std::size_t gap_ok = 0, L_ok = 0;
  for (const auto& r : out.runs) {
    gap_ok += r.gap_ok ? 1 : 0;
    L_ok += r.L_ok ? 1 : 0;
    rep.max_M = std::max(rep.max_M, r.M);
    if (r.growth.applicable) {
      ++rep.growth_runs_checked;
      rep.growth_violations += r.growth.violations;
    }
    if (r.stop_reason == StopReason::InnerCapExceeded) ++rep.inner_cap_runs;
  }
  const double n = static_cast<double>(cfg.n_seeds);
  rep.frac_gap_ok = static_cast<double>(gap_ok) / n;
  rep.frac_L_ok = static_cast<double>(L_ok) / n;

  const double beta = base.beta;
  auto add = [&](std::string name, std::string statement, double observed, double threshold,
                 std::string cmp) {
    const bool pass = cmp == ">=" ? observed >= threshold : observed <= threshold;
    rep.claims.push_back({std::move(name), std::move(statement), observed, threshold, std::move(cmp), pass});
  };
  add("optimality_gap", "P( F(x_N) - F(x_*) <= 4*eps ) >= 1 - 3*beta", rep.frac_gap_ok,
      binomial_floor(1.0 - 3.0 * beta, cfg.n_seeds), ">=");
  add("lipschitz_estimates", "P( L_k < 3L for all k ) >= 1 - beta", rep.frac_L_ok,
      binomial_floor(1.0 - beta, cfg.n_seeds), ">=");
  add("oracle_calls",
      "M <= (4 + log2(3L/L0)) * (2*sqrt(3)*sqrt(L)*R_Q/sqrt(eps) + 21*sigma^2*Omega~*R_Q^2/eps^2 + 1)",
      static_cast<double>(rep.max_M), M_bound, "<=");
  add("weight_growth", "A_k >= (k+1)^2 / (12L) on runs with L_k < 3L for all k",
      static_cast<double>(rep.growth_violations), 0.0, "<=");
  return out;
}

json report_json(const EnsembleResult& result, const ExperimentConfig& cfg) {
  const AggregateReport& rep = result.report;
  json claims = json::array();
  for (const auto& c : rep.claims) {
    claims.push_back({{"name", c.name},
                      {"statement", c.statement},
                      {"observed", c.observed},
                      {"threshold", c.threshold},
                      {"comparison", c.comparison},
                      {"margin", c.comparison == ">=" ? c.observed - c.threshold : c.threshold - c.observed},
                      {"verdict", c.pass ? "pass" : "fail"}});
  }
  json runs = json::array();
  for (const auto& r : result.runs) {
    runs.push_back({{"seed", r.seed},
                    {"final_gap", r.final_gap},
                    {"max_L", r.max_L},
                    {"stop_reason", to_string(r.stop_reason)},
                    {"M", r.M},
                    {"f_evals", r.f_evals},
                    {"steps", r.steps},
                    {"gap_ok", r.gap_ok},
                    {"L_ok", r.L_ok},
                    {"M_ok", r.M_ok},
                    {"growth_checked", r.growth.applicable},
                    {"growth_violations", r.growth.violations}});
  }
  return {{"root_seed", cfg.seed},
          {"n_seeds", rep.n_seeds},
          {"aggregate",
           {{"frac_gap_le_4eps", rep.frac_gap_ok},
            {"frac_maxL_lt_3L", rep.frac_L_ok},
            {"max_M", rep.max_M},
            {"M_bound", rep.M_bound},
            {"growth_violations", rep.growth_violations},
            {"growth_runs_checked", rep.growth_runs_checked},
            {"inner_cap_runs", rep.inner_cap_runs}}},
          {"claims", claims},
          {"all_pass", rep.all_pass()},
          {"config", experiment_to_json(cfg)},
          {"runs", runs}};
}

}  // namespace astm
