#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "astm/checks.hpp"
#include "astm/errors.hpp"
#include "astm/harness.hpp"

namespace astm {

namespace {

namespace fs = std::filesystem;

struct CommonOptions {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> seeds;
  std::optional<std::string> out;
  bool quiet = false;
};

void add_common(CLI::App* sub, CommonOptions& o) {
  sub->add_option("--config", o.config, "experiment config (JSON)")->check(CLI::ExistingFile);
  sub->add_option("--seed", o.seed, "root seed");
  sub->add_option("--seeds", o.seeds, "number of seeds (overrides n_seeds)")->check(CLI::PositiveNumber);
  sub->add_option("--out", o.out, "output directory");
  sub->add_flag("--quiet", o.quiet, "print nothing on success");
}

ExperimentConfig resolve_config(const CommonOptions& o, ExperimentConfig fallback) {
  ExperimentConfig cfg = o.config.empty() ? std::move(fallback) : load_experiment(o.config);
  if (o.seed) cfg.seed = *o.seed;
  if (o.seeds) cfg.n_seeds = *o.seeds;
  if (o.out) cfg.out_dir = *o.out;
  return cfg;
}

fs::path prepare_out_dir(const std::string& dir) {
  fs::path p(dir.empty() ? "." : dir);
  std::error_code ec;
  fs::create_directories(p, ec);
  if (ec || !fs::is_directory(p)) throw ConfigError("cannot create output directory '" + p.string() + "'");
  return p;
}

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write '" + path.string() + "'");
  out << text;
  if (!out) throw ConfigError("write failed for '" + path.string() + "'");
}

int run_solve(const CommonOptions& o) {
  const ExperimentConfig cfg = resolve_config(o, default_noiseless_experiment());
  const Experiment e = build_experiment(cfg);
  const SolverResult r = solve(e.problem, e.solver, e.x0);
  const fs::path dir = prepare_out_dir(cfg.out_dir);
  const std::string stem = "seed" + std::to_string(cfg.seed);
  write_file(dir / ("trace_" + stem + ".csv"), trace_csv(r.trace));
  nlohmann::json summary = summary_json(r, e.solver);
  summary["F_star"] = e.optimum.value;
  summary["optimum_method"] = e.optimum.method;
  summary["config"] = experiment_to_json(cfg);
  write_file(dir / ("summary_" + stem + ".json"), summary.dump(2) + "\n");
  if (!o.quiet) {
    std::cout << "stop_reason " << to_string(r.stop_reason) << "\n"
              << "steps " << r.trace.size() << " of N=" << r.params.N << "\n"
              << "M " << r.oracle_calls() << " (bound " << summary["oracle_call_bound"].get<double>()
              << ")\n";
    if (r.final_gap) std::cout << "final_gap " << *r.final_gap << "\n";
    for (const auto& w : r.warnings) std::cout << "warning: " << w << "\n";
    std::cout << "trace " << (dir / ("trace_" + stem + ".csv")).string() << "\n";
  }
  return r.stop_reason == StopReason::InnerCapExceeded ? 1 : 0;
}

int run_ensemble_cmd(const CommonOptions& o) {
  const ExperimentConfig cfg = resolve_config(o, default_stochastic_experiment());
  const EnsembleResult res = run_ensemble(cfg);
  const fs::path dir = prepare_out_dir(cfg.out_dir);
  const fs::path path = dir / ("report_seed" + std::to_string(cfg.seed) + ".json");
  write_file(path, report_json(res, cfg).dump(2) + "\n");
  if (!o.quiet) {
    for (const auto& c : res.report.claims) {
      std::cout << (c.pass ? "PASS " : "FAIL ") << c.name << ": observed " << c.observed << ' '
                << c.comparison << ' ' << c.threshold << "   [" << c.statement << "]\n";
    }
    std::cout << "report " << path.string() << "\n";
  }
  return res.report.all_pass() ? 0 : 1;
}

int run_verify(const CommonOptions& o, std::size_t draws) {
  std::vector<ExperimentConfig> configs;
  if (o.config.empty()) {
    configs = {default_noiseless_experiment(), default_stochastic_experiment()};
  } else {
    configs = {load_experiment(o.config)};
  }
  const std::uint64_t seed = o.seed.value_or(7);
  bool ok = true;
  nlohmann::json report = nlohmann::json::array();
  auto line = [&](bool pass, const std::string& what) {
    ok = ok && pass;
    if (!o.quiet) std::cout << (pass ? "PASS " : "FAIL ") << what << "\n";
  };

  for (const auto& cfg : configs) {
    const OraclePtr oracle = build_oracle(cfg.problem);
    const Geometry g = build_geometry(cfg);
    require_supported(g, cfg.set, cfg.composite);
    OracleCheckOptions opts;
    opts.draws = draws;
    opts.seed = seed;
    const OracleSpec spec = oracle->spec(g);
    const auto r = check_oracle_conditions(*oracle, g, cfg.set, spec, opts);
    std::ostringstream os;
    os << oracle->kind() << "/" << g.name() << "/" << cfg.set.name() << ": max|z|=" << r.max_abs_z
       << " moment=" << r.st2_moment << " sandwich_slack=" << r.sandwich_upper_slack;
    line(r.all_pass(), "oracle " + os.str());
    report.push_back({{"config", experiment_to_json(cfg)}, {"oracle", r.to_json()}});
  }
  for (const auto& c : standard_prox_cases()) {
    const auto r = three_point_suite(c, 1000, seed);
    line(r.pass(), "three-point " + c.name + " (" + std::to_string(r.failures) + " failures)");
  }
  for (bool entropy : {false, true}) {
    const auto r = bregman_lower_bound_suite(entropy, 10000, seed);
    line(r.pass(), "bregman lower bound " + r.name + " (" + std::to_string(r.failures) + " failures)");
  }
  if (o.out) {
    const fs::path dir = prepare_out_dir(*o.out);
    write_file(dir / "verify.json", report.dump(2) + "\n");
  }
  return ok ? 0 : 1;
}

struct ParamOptions {
  std::optional<double> L, L0, R_Q, epsilon, beta, kappa, sigma, delta;
};

int run_params(const CommonOptions& o, const ParamOptions& p) {
  SolverConfig s;
  double kappa = 1.0;
  if (!o.config.empty()) {
    const ExperimentConfig cfg = resolve_config(o, {});
    const Geometry g = build_geometry(cfg);
    s = resolve_solver_config(cfg, build_oracle(cfg.problem)->spec(g), g);
    kappa = regularity_constant(g);
  } else if (!p.L || !p.R_Q || !p.epsilon) {
    throw ConfigError("params needs --config or at least --L, --RQ and --epsilon");
  }
  if (p.L) s.lipschitz = *p.L;
  s.L0 = p.L0.value_or(o.config.empty() ? s.lipschitz : s.L0);
  if (p.R_Q) s.R_Q = *p.R_Q;
  if (p.epsilon) s.epsilon = *p.epsilon;
  if (p.beta) s.beta = *p.beta;
  if (p.sigma) s.sigma = *p.sigma;
  if (p.delta) s.delta = *p.delta;
  if (p.kappa) kappa = *p.kappa;

  const DerivedParams d = derive_params(s, kappa);
  const double alpha1 = compute_alpha(0.0, s.L0 / 2.0);
  const std::size_t m1 = batch_size(s.sigma, d.omega_tilde, alpha1, s.epsilon);
  std::cout << std::setprecision(10) << "N " << d.N << "\n"
            << "Omega " << d.omega << "\n"
            << "OmegaTilde " << d.omega_tilde << "\n"
            << "kappa " << d.kappa << "\n"
            << "m1 " << m1 << "\n"
            << "delta_threshold " << delta_threshold(s.epsilon, s.lipschitz, s.R_Q) << "\n"
            << "oracle_call_bound " << oracle_call_bound(s, d) << "\n";
  return 0;
}

}  // namespace

int cli_main(const std::vector<std::string>& args) {
  CLI::App app{"Adaptive stochastic similar-triangles solver and experiment harness", "astm"};
  app.require_subcommand(1);

  CommonOptions solve_o, ens_o, verify_o, params_o;
  auto* solve_cmd = app.add_subcommand("solve", "one run; writes trace CSV and summary JSON");
  add_common(solve_cmd, solve_o);
  auto* ens_cmd = app.add_subcommand("ensemble", "seeded Monte Carlo ensemble; writes a report");
  add_common(ens_cmd, ens_o);
  auto* verify_cmd = app.add_subcommand("verify", "oracle, prox and Bregman property suites");
  add_common(verify_cmd, verify_o);
  std::size_t draws = 100000;
  verify_cmd->add_option("--draws", draws, "gradient draws per point")->check(CLI::Range(2, 100000000));
  auto* params_cmd = app.add_subcommand("params", "print derived parameters");
  add_common(params_cmd, params_o);
  ParamOptions po;
  params_cmd->add_option("--L", po.L);
  params_cmd->add_option("--L0", po.L0);
  params_cmd->add_option("--RQ", po.R_Q);
  params_cmd->add_option("--epsilon", po.epsilon);
  params_cmd->add_option("--beta", po.beta);
  params_cmd->add_option("--kappa", po.kappa);
  params_cmd->add_option("--sigma", po.sigma);
  params_cmd->add_option("--delta", po.delta);

  std::vector<std::string> argv(args.rbegin(), args.rend());
  try {
    app.parse(argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << e.what() << "\n\n" << app.help();
    return 2;
  }

  try {
    if (*solve_cmd) return run_solve(solve_o);
    if (*ens_cmd) return run_ensemble_cmd(ens_o);
    if (*verify_cmd) return run_verify(verify_o, draws);
    if (*params_cmd) return run_params(params_o, po);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const DomainError& e) {
    std::cerr << "domain error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  std::cerr << app.help();
  return 2;
}

}  // namespace astm
