#include "commands.hpp"

#include <cstdlib>
#include <fstream>
#include <ostream>
#include <random>

#include <nlohmann/json.hpp>

#include "hypoflow/io.hpp"
#include "hypoflow/parallel.hpp"
#include "hypoflow/random_state.hpp"
#include "hypoflow/verifier.hpp"

namespace hypoflow::cli {

namespace fs = std::filesystem;

namespace {

nlohmann::json grid_json(const GridSpec& g) {
  return {{"dim", g.dim}, {"nx", g.nx}, {"nv", g.nv}, {"period", g.period}};
}

void write_manifest(const RunConfig& cfg, const Context& ctx, const std::string& command,
                    const std::vector<std::string>& artifacts) {
  nlohmann::json m;
  m["tool"] = "hypoflow";
  m["version"] = kVersion;
  m["command"] = command;
  m["config_hash"] = config_hash(cfg);
  m["grid"] = grid_json(cfg.grid);
  m["seed"] = cfg.initial.seed;
  m["config"] = config_json(cfg);
  m["artifacts"] = artifacts;
  write_json(ctx.output_dir / "manifest.json", m);
}

struct Certified {
  CertificateParams params;
  nlohmann::json source;
};

Certified certify(const RunConfig& cfg, const GridPtr<double>& grid) {
  Certified out;
  double C = 0.0;
  if (cfg.certificate.C) {
    C = *cfg.certificate.C;
    out.source = {{"C", C}, {"origin", "override"}};
  } else {
    ConstantEstimatorOptions opt;
    opt.starts = cfg.certificate.estimator_starts;
    opt.max_mode = cfg.certificate.estimator_max_mode;
    const ConstantEstimate e = estimate_functional_constant(*grid, cfg.p, opt);
    C = e.C;
    out.source = {{"C", C}, {"origin", "estimate"}, {"best_ratio", e.best_ratio}, {"converged", e.converged}};
  }
  switch (cfg.model) {
    case Model::FokkerPlanckP:
      out.params = paper_constants_fp(cfg.p.p, phase_space_constant(C));
      out.source["phase_space_C"] = phase_space_constant(C);
      break;
    case Model::BgkBoltzmann:
      out.params = cfg.certificate.eta ? paper_constants_bgk(cfg.lambda, C, *cfg.certificate.eta)
                                       : optimize_rate(cfg.model, cfg.lambda, 1.0, C);
      break;
    case Model::BgkP:
      out.params = cfg.certificate.eta ? paper_constants_bgk_p(cfg.lambda, cfg.p.p, C, *cfg.certificate.eta)
                                       : optimize_rate(cfg.model, cfg.lambda, cfg.p.p, C);
      break;
  }
  return out;
}

bool include_fp_terms(const RunConfig& cfg) { return cfg.model == Model::FokkerPlanckP; }

}  // namespace

Context make_context(RunConfig& cfg, const std::optional<std::string>& output_dir,
                     const std::optional<std::uint64_t>& seed, int jobs, std::ostream& out) {
  if (jobs < 1) throw ConfigError("--jobs must be >= 1");
  if (seed) {
    cfg.initial.seed = *seed;
  } else if (!cfg.initial.seed_given) {
    if (const char* env = std::getenv("HYPOFLOW_SEED"); env && *env) {
      char* end = nullptr;
      const unsigned long long v = std::strtoull(env, &end, 10);
      if (*end != '\0') throw ConfigError("HYPOFLOW_SEED is not a non-negative integer");
      cfg.initial.seed = v;
    }
  }
  if (output_dir) cfg.output.directory = *output_dir;
  return Context{fs::path(cfg.output.directory), jobs, &out};
}

int run_simulate(const RunConfig& cfg, const Context& ctx) {
  auto grid = build_grid<double>(cfg.grid);
  const State<double> s0 = initial_state(cfg, grid);
  const Trajectory<double> traj = simulate(s0, cfg.schedule);
  const auto reports = trajectory_reports(traj, cfg.p, include_fp_terms(cfg), ctx.jobs);

  fs::create_directories(ctx.output_dir);
  std::vector<std::string> artifacts;
  if (cfg.output.save_states) {
    write_trajectory(ctx.output_dir / "trajectory", traj);
    artifacts.push_back("trajectory/manifest.json");
  }
  if (cfg.output.csv) {
    write_reports_csv(ctx.output_dir / "functionals.csv", reports);
    artifacts.push_back("functionals.csv");
  }
  if (cfg.output.json) {
    write_json(ctx.output_dir / "functionals.json", reports_json(reports));
    artifacts.push_back("functionals.json");
  }
  write_manifest(cfg, ctx, "simulate", artifacts);

  const FunctionalReport& last = reports.back();
  *ctx.out << "simulate: " << traj.snapshots.size() << " snapshots to t = " << format_number(last.time)
           << ", H = " << format_number(last.at(FunctionalName::H)) << '\n';
  for (const auto& r : reports) {
    if (r.under_resolved) {
      *ctx.out << "warning: velocity resolution tail " << format_number(r.tail_fraction) << " at t = "
               << format_number(r.time) << '\n';
      break;
    }
  }
  return kSuccess;
}

int run_certify(const RunConfig& cfg, const Context& ctx) {
  auto grid = build_grid<double>(cfg.grid);
  const Certified c = certify(cfg, grid);
  nlohmann::json j;
  j["certificate"] = c.params;
  j["functional_constant"] = c.source;
  fs::create_directories(ctx.output_dir);
  write_json(ctx.output_dir / "certificate.json", j);
  write_manifest(cfg, ctx, "certify", {"certificate.json"});
  *ctx.out << "certify: " << to_string(c.params.model) << (c.params.feasible() ? " feasible" : " infeasible")
           << ", rate = " << format_number(c.params.rate) << ", binding = " << c.params.feasibility.binding << '\n';
  return c.params.feasible() ? kSuccess : kInvariantFailure;
}

int run_verify(const RunConfig& cfg, const Context& ctx) {
  auto grid = build_grid<double>(cfg.grid);
  const VerifyOptions& vo = cfg.verify;
  std::mt19937_64 rng(cfg.initial.seed);
  RandomStateOptions ro;
  ro.max_mode = cfg.initial.max_mode;
  std::vector<State<double>> states;
  states.reserve(static_cast<std::size_t>(vo.states));
  for (int i = 0; i < vo.states; ++i) states.push_back(random_state(grid, rng, ro));

  VerifierOptions opt;
  opt.delta = vo.delta;
  opt.epsilons = vo.epsilons;
  opt.etas = vo.etas;
  opt.abs_tolerance = vo.abs_tolerance;
  opt.rel_tolerance = vo.rel_tolerance;
  opt.speed_scale = vo.speed_scale;
  if (cfg.certificate.C) {
    opt.functional_constant = *cfg.certificate.C;
  } else {
    opt.functional_constant = estimate_functional_constant(*grid, cfg.p).C;
  }

  SuiteReport suite = run_lemma_suite(states, cfg.model, cfg.lambda, cfg.p, opt, ctx.jobs);
  std::vector<LemmaCheckResult> transport(states.size());
  parallel_for(states.size(), ctx.jobs,
               [&](std::size_t i) { transport[i] = check_transport_polynomial(states[i], vo.transport_times, cfg.p, opt); });
  for (std::size_t i = 0; i < states.size(); ++i) {
    suite.per_state[i].push_back(transport[i]);
    ++suite.checks;
    suite.failures += transport[i].pass ? 0 : 1;
  }

  nlohmann::json j = suite_json(suite);
  j["model"] = to_string(cfg.model);
  j["p"] = cfg.p.label();
  j["functional_constant"] = opt.functional_constant;
  fs::create_directories(ctx.output_dir);
  write_json(ctx.output_dir / "verify.json", j);
  std::vector<LemmaCheckResult> failing;
  for (const auto& rows : suite.per_state) {
    for (const auto& r : rows) {
      if (!r.pass) failing.push_back(r);
    }
  }
  {
    std::ofstream table(ctx.output_dir / "verify.txt");
    table << format_table(suite.per_state.front());
    if (!failing.empty()) table << "\nfailures\n" << format_table(failing);
  }
  write_manifest(cfg, ctx, "verify", {"verify.json", "verify.txt"});

  *ctx.out << format_table(suite.per_state.front());
  if (!failing.empty()) *ctx.out << "failures\n" << format_table(failing);
  *ctx.out << "verify: " << suite.checks << " checks on " << states.size() << " states, " << suite.failures
           << " failed\n";
  return suite.pass() ? kSuccess : kInvariantFailure;
}

int run_fit_decay(const RunConfig& cfg, const Context& ctx) {
  Trajectory<double> traj;
  if (!cfg.fit.trajectory.empty()) {
    traj = read_trajectory(cfg.fit.trajectory);
  } else {
    auto grid = build_grid<double>(cfg.grid);
    traj = simulate(initial_state(cfg, grid), cfg.schedule);
  }
  if (traj.snapshots.empty()) throw ConfigError("fit-decay: empty trajectory");
  const auto reports = trajectory_reports(traj, cfg.p, false, ctx.jobs);

  nlohmann::json j;
  ReportFunction f;
  const std::string& name = cfg.fit.functional;
  if (name == "composite" || name == "decay_lhs") {
    const Certified c = certify(cfg, traj.snapshots.front().second.grid);
    const CertificateParams params = c.params;
    if (name == "composite") {
      f = [params](const FunctionalReport& r) { return params.composite(r); };
    } else {
      f = [params](const FunctionalReport& r) { return params.decay_lhs(r); };
    }
    j["certificate"] = params;
  } else if (name == "fisher") {
    f = [](const FunctionalReport& r) { return r.at(FunctionalName::I_X) + r.at(FunctionalName::I_V); };
  } else {
    const FunctionalName n = *functional_from_string(name);
    f = [n](const FunctionalReport& r) { return r.at(n); };
  }
  const DecayFit fit = fit_decay(reports, f, cfg.fit.t_start, cfg.fit.t_end, name);
  j["fit"] = fit;
  fs::create_directories(ctx.output_dir);
  write_json(ctx.output_dir / "fit.json", j);
  write_manifest(cfg, ctx, "fit-decay", {"fit.json"});
  *ctx.out << "fit-decay: " << name << " rate = " << format_number(fit.fitted_rate)
           << ", r^2 = " << format_number(fit.r_squared) << (fit.window_shortened ? " (window shortened)" : "")
           << '\n';
  return kSuccess;
}

int run_estimate_constant(const RunConfig& cfg, const Context& ctx) {
  auto grid = build_grid<double>(cfg.grid);
  ConstantEstimatorOptions opt;
  opt.starts = cfg.certificate.estimator_starts;
  opt.max_mode = cfg.certificate.estimator_max_mode;
  opt.seed = cfg.initial.seed;
  const ConstantEstimate e = estimate_functional_constant(*grid, cfg.p, opt);
  nlohmann::json j = {{"C", e.C},
                      {"best_ratio", e.best_ratio},
                      {"iterations", e.iterations},
                      {"converged", e.converged},
                      {"p", cfg.p.label()},
                      {"best_coefficients", e.best_coefficients}};
  fs::create_directories(ctx.output_dir);
  write_json(ctx.output_dir / "constant.json", j);
  write_manifest(cfg, ctx, "estimate-constant", {"constant.json"});
  *ctx.out << "estimate-constant: C = " << format_number(e.C) << " (best ratio " << format_number(e.best_ratio)
           << ")\n";
  return kSuccess;
}

int dispatch(const std::string& command, const std::string& config_path, const std::optional<std::string>& output_dir,
             const std::optional<std::uint64_t>& seed, int jobs, std::ostream& out, std::ostream& err) {
  try {
    RunConfig cfg = load_config(config_path);
    const Context ctx = make_context(cfg, output_dir, seed, jobs, out);
    if (command == "simulate") return run_simulate(cfg, ctx);
    if (command == "certify") return run_certify(cfg, ctx);
    if (command == "verify") return run_verify(cfg, ctx);
    if (command == "fit-decay") return run_fit_decay(cfg, ctx);
    if (command == "estimate-constant") return run_estimate_constant(cfg, ctx);
    throw ConfigError("unknown command '" + command + "'");
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kConfigFailure;
  } catch (const InvariantError& e) {
    err << "invariant failure: " << e.what() << '\n';
    return kInvariantFailure;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kInvariantFailure;
  }
}

}  // namespace hypoflow::cli
