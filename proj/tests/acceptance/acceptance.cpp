// One PASS/FAIL line per acceptance criterion. Exit status is the number of
// failed criteria (capped at 1).

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include <Eigen/Dense>

#include "commands.hpp"
#include "hypoflow/certificate.hpp"
#include "hypoflow/config.hpp"
#include "hypoflow/functionals.hpp"
#include "hypoflow/integrator.hpp"
#include "hypoflow/random_state.hpp"
#include "hypoflow/verifier.hpp"

namespace fs = std::filesystem;
using namespace hypoflow;

namespace {

// Pinned tolerances.
constexpr double kConstantTol = 1e-14;
constexpr double kLemmaAbsTol = 1e-6;
constexpr double kLemmaRelTol = 1e-4;
constexpr double kVanishTol = 1e-12;
constexpr double kTransportInvariantTol = 1e-8;
constexpr double kTransportCoefficientTol = 1e-5;
constexpr double kClosedFormTol = 1e-10;
constexpr double kVelocityRateTol = 0.05;
constexpr double kMonotoneRelTol = 1e-8;
constexpr double kRateShortfall = 0.10;
constexpr double kQuadraticEntropyTol = 1e-10;

constexpr int kSuiteStates = 100;

struct Outcome {
  bool pass = true;
  std::ostringstream detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      if (!pass) detail << "; ";
      else detail.str("");
      detail << what;
      pass = false;
    }
  }
};

std::string fmt(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3e", x);
  return buf;
}

bool close(double a, double b, double tol) { return std::abs(a - b) <= tol * std::max(1.0, std::abs(b)); }

std::vector<State<double>> seeded_states(const GridPtr<double>& grid, std::uint64_t seed, int count,
                                         const RandomStateOptions& opt = {}) {
  std::mt19937_64 rng(seed);
  std::vector<State<double>> states;
  states.reserve(count);
  for (int i = 0; i < count; ++i) states.push_back(random_state(grid, rng, opt));
  return states;
}

VerifierOptions literal_tolerances(double C) {
  VerifierOptions opt;
  opt.abs_tolerance = kLemmaAbsTol;
  opt.rel_tolerance = kLemmaRelTol;
  opt.use_discretization_estimate = false;
  opt.functional_constant = C;
  return opt;
}

void report_suite(Outcome& out, const SuiteReport& suite, const std::string& tag) {
  for (const auto& rows : suite.per_state) {
    for (const auto& r : rows) {
      if (!r.pass) {
        out.require(false, tag + " " + to_string(r.id) + " " + r.label + " residual " + fmt(r.residual_or_slack) +
                               " tol " + fmt(r.tolerance));
        return;
      }
    }
  }
}

// 1 -----------------------------------------------------------------------

Outcome constants() {
  Outcome out;
  const double C = 1.0 / (8.0 * M_PI * M_PI);
  for (double lambda : {0.5, 1.0, 2.0}) {
    for (double eta : {0.01, 0.1, 0.5}) {
      const auto c = paper_constants_bgk(lambda, C, eta);
      const std::string tag = "lambda " + fmt(lambda) + " eta " + fmt(eta);
      out.require(close(c.A2 / c.A3, lambda, kConstantTol), tag + ": A2/A3");
      out.require(close(c.eps, 1.0 / lambda, kConstantTol), tag + ": eps");
      out.require(close(c.A1 * eta / c.A3, lambda + 2.0 / lambda, kConstantTol), tag + ": A1 eta/A3");
      out.require(close(c.rate, lambda * lambda * eta / (4.0 * (lambda * lambda + 2.0)), kConstantTol),
                  tag + ": rate");
      out.require(close(c.A4, (lambda * lambda + 2.0) * c.A3, kConstantTol), tag + ": A4");
    }
  }
  for (double Cfp : {0.25, 0.5, 1.0, 2.0, 10.0}) {
    for (double p : {1.2, 1.5, 2.0}) {
      const auto c = paper_constants_fp(p, Cfp);
      out.require(c.A4 == 27.0 / 4.0, "FP A4 at C " + fmt(Cfp));
      out.require(close(c.rate, std::min(1.0 / 12.0, 4.0 / (216.0 * Cfp)), kConstantTol),
                  "FP k at C " + fmt(Cfp));
    }
  }
  if (out.pass) out.detail << "BGK lambda in {0.5, 1, 2} x 3 eta, FP 5 C x 3 p";
  return out;
}

// 2 -----------------------------------------------------------------------

Outcome boltzmann_suite() {
  Outcome out;
  auto grid = build_grid<double>({1, 64, 32, 1.0});
  const double C = estimate_functional_constant(*grid, PIndex::log_entropy()).C;
  const auto states = seeded_states(grid, 2024, kSuiteStates);
  const auto suite = run_lemma_suite(states, Model::BgkBoltzmann, 1.0, PIndex::log_entropy(), literal_tolerances(C), 1);
  report_suite(out, suite, "Boltzmann");
  if (out.pass) out.detail << suite.checks << " checks on " << kSuiteStates << " states";
  return out;
}

// 3 -----------------------------------------------------------------------

Outcome p_suite() {
  Outcome out;
  for (double p : {1.1, 1.5, 1.9, 2.0}) {
    for (int i = 0; i <= 1000; ++i) {
      const double r = 10.0 * i / 1000.0;
      const double f = f_p(r, p);
      if (f < -kVanishTol) {
        out.require(false, "F_p(" + fmt(r) + ") = " + fmt(f) + " at p " + fmt(p));
        break;
      }
    }
  }

  auto grid = build_grid<double>({1, 64, 32, 1.0});
  std::size_t checks = 0;
  for (double p : {1.5, 2.0}) {
    const PIndex pi = PIndex::power(p);
    const double C = estimate_functional_constant(*grid, pi).C;
    const auto states = seeded_states(grid, 4048, kSuiteStates);
    const auto suite = run_lemma_suite(states, Model::BgkP, 1.0, pi, literal_tolerances(C), 1);
    report_suite(out, suite, "p " + fmt(p));
    checks += suite.checks;
    if (p == 2.0) {
      for (const auto& s : states) {
        const auto rep = functional_report(s, pi);
        const double xf = rep.at(FunctionalName::I_XF), vf = rep.at(FunctionalName::I_VF);
        if (std::abs(xf) > kVanishTol || std::abs(vf) > kVanishTol) {
          out.require(false, "p = 2: I_XF " + fmt(xf) + " I_VF " + fmt(vf));
          break;
        }
      }
    }
  }
  if (out.pass) out.detail << checks << " checks, F_p on 4 x 1001 grid";
  return out;
}

// 4 -----------------------------------------------------------------------

Outcome transport_law() {
  Outcome out;
  auto grid = build_grid<double>({1, 64, 64, 1.0});
  RandomStateOptions ro;
  ro.max_mode = 1;
  const auto states = seeded_states(grid, 77, 10, ro);
  const PIndex p = PIndex::log_entropy();
  std::vector<double> times;
  for (int k = 0; k <= 10; ++k) times.push_back(0.05 * k);

  double worst_ix = 0.0, worst_coef = 0.0;
  for (const auto& s : states) {
    Eigen::VectorXd ix(times.size()), im(times.size()), iv(times.size());
    Eigen::MatrixXd design(times.size(), 3);
    for (std::size_t k = 0; k < times.size(); ++k) {
      const auto r = functional_report(transport_flow(s, times[k]), p);
      ix[k] = r.at(FunctionalName::I_X);
      im[k] = r.at(FunctionalName::I_M);
      iv[k] = r.at(FunctionalName::I_V);
      design.row(k) << 1.0, times[k], times[k] * times[k];
    }
    const double ix0 = ix[0];
    worst_ix = std::max(worst_ix, (ix.array() - ix0).abs().maxCoeff());

    const Eigen::MatrixXd lin = design.leftCols(2);
    const Eigen::Vector2d cm = lin.colPivHouseholderQr().solve(im);
    const Eigen::Vector3d cv = design.colPivHouseholderQr().solve(iv);
    const double lin_misfit = (lin * cm - im).cwiseAbs().maxCoeff();
    const double quad_misfit = (design * cv - iv).cwiseAbs().maxCoeff();
    worst_coef = std::max({worst_coef, std::abs(cm[1] + ix0), std::abs(cv[2] - ix0), std::abs(cv[1] + 2.0 * im[0]),
                           lin_misfit, quad_misfit});
  }
  out.require(worst_ix <= kTransportInvariantTol, "I_X drift " + fmt(worst_ix));
  out.require(worst_coef <= kTransportCoefficientTol, "coefficient mismatch " + fmt(worst_coef));
  if (out.pass) out.detail << "I_X drift " << fmt(worst_ix) << ", coefficients " << fmt(worst_coef);
  return out;
}

// 5 -----------------------------------------------------------------------

Outcome velocity_closed_form() {
  Outcome out;
  auto grid = build_grid<double>({1, 16, 32, 1.0});
  const double a = 0.5;
  const Field<double> h0 = sample(*grid, [&](const auto&, const auto& v) { return 1.0 + a * v[0] / std::sqrt(1.0 + v[0] * v[0]); });
  const State<double> s0 = make_state(grid, h0);
  double worst = 0.0;
  std::ostringstream rates;
  for (double lambda : {0.5, 1.0, 2.0}) {
    Schedule sc;
    sc.collision = CollisionKind::bgk(lambda);
    sc.dt = Schedule::default_dt(sc.collision);
    sc.t_end = 8.0 / lambda;
    sc.snapshot_every = 10;
    const auto traj = simulate(s0, sc);
    for (const auto& [t, s] : traj.snapshots) {
      const Field<double> exact = (1.0 + std::exp(-lambda * t) * (h0.array() - 1.0)).matrix();
      worst = std::max(worst, (s.h - exact).cwiseAbs().maxCoeff());
    }
    const auto reports = trajectory_reports(traj, PIndex::log_entropy());
    const auto fit = fit_decay(reports, [](const FunctionalReport& r) { return r.at(FunctionalName::I_V); },
                               2.0 / lambda, 8.0 / lambda, "I_V");
    out.require(std::abs(fit.fitted_rate - 2.0 * lambda) <= kVelocityRateTol * 2.0 * lambda,
                "lambda " + fmt(lambda) + ": I_V rate " + fmt(fit.fitted_rate));
    rates << (rates.tellp() > 0 ? ", " : "") << fit.fitted_rate / lambda;
  }
  out.require(worst <= kClosedFormTol, "sup error " + fmt(worst));
  if (out.pass) out.detail << "sup error " << fmt(worst) << ", I_V rate / lambda = " << rates.str();
  return out;
}

// 6, 7, 8 ----------------------------------------------------------------

RunConfig end_to_end_config(Model model, double p) {
  RunConfig cfg;
  cfg.grid = {1, 64, model == Model::FokkerPlanckP ? 12 : 32, 1.0};
  cfg.model = model;
  cfg.lambda = 1.0;
  cfg.p = model == Model::BgkBoltzmann ? PIndex::log_entropy() : PIndex::power(p);
  cfg.initial.family = "cosine";
  cfg.initial.amplitude = 0.5;
  cfg.initial.velocity_coupling = 0.2;
  cfg.schedule.collision = cfg.collision();
  cfg.schedule.dt = 0.01;
  cfg.schedule.t_end = 20.0;
  cfg.schedule.snapshot_every = 10;
  return cfg;
}

Outcome end_to_end(Model model, double p) {
  Outcome out;
  const RunConfig cfg = end_to_end_config(model, p);
  auto grid = build_grid<double>(cfg.grid);
  const double C_torus = estimate_functional_constant(*grid, cfg.p).C;
  const CertificateParams cert = model == Model::FokkerPlanckP
                                     ? paper_constants_fp(p, phase_space_constant(C_torus))
                                     : optimize_rate(model, cfg.lambda, cfg.p.p, C_torus);
  out.require(cert.feasible(), "certificate infeasible");

  const auto traj = simulate(initial_state(cfg, grid), cfg.schedule);
  const auto reports = trajectory_reports(traj, cfg.p, model == Model::FokkerPlanckP);

  double worst_increase = -HUGE_VAL, worst_ratio = 0.0;
  for (std::size_t k = 0; k < reports.size(); ++k) {
    const double ck = cert.composite(reports[k]);
    if (k > 0) {
      const double prev = cert.composite(reports[k - 1]);
      worst_increase = std::max(worst_increase, (ck - prev) / prev);
    }
    const double lhs = cert.decay_lhs(reports[k]);
    const double rhs = cert.decay_rhs(reports.front(), reports[k].time);
    worst_ratio = std::max(worst_ratio, lhs / rhs);
  }
  if (model != Model::FokkerPlanckP)
    out.require(worst_increase <= kMonotoneRelTol, "composite increases by " + fmt(worst_increase));
  out.require(worst_ratio <= 1.0, "decay statement lhs/rhs = " + fmt(worst_ratio));

  // Fokker-Planck reaches the entropy roundoff floor near t = 5.
  const double t_fit_end = model == Model::FokkerPlanckP ? 4.0 : 10.0;
  const auto fit = fit_decay(reports, [&](const FunctionalReport& r) { return cert.composite(r); }, 1.0, t_fit_end);
  out.require(fit.fitted_rate >= (1.0 - kRateShortfall) * cert.rate,
              "fitted rate " + fmt(fit.fitted_rate) + " < 0.9 x " + fmt(cert.rate));
  if (out.pass) {
    out.detail << "certified " << fmt(cert.rate) << ", fitted " << fmt(fit.fitted_rate) << ", max rel step "
               << fmt(worst_increase) << ", max lhs/rhs " << fmt(worst_ratio);
  }
  return out;
}

// 9 -----------------------------------------------------------------------

Outcome quadratic_entropy() {
  Outcome out;
  auto grid = build_grid<double>({1, 32, 16, 1.0});
  double worst = 0.0;
  for (const auto& s : seeded_states(grid, 99, 20)) {
    const double h2 = functional_report(s, PIndex::power(2.0)).at(FunctionalName::H);
    const Field<double> dev = (s.h.array() - 1.0).square().matrix();
    worst = std::max(worst, std::abs(h2 - 0.5 * integrate_mu(dev, *grid)));
  }
  out.require(worst <= kQuadraticEntropyTol, "max error " + fmt(worst));
  if (out.pass) out.detail << "max error " << fmt(worst);
  return out;
}

// 10 ----------------------------------------------------------------------

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

Outcome determinism() {
  Outcome out;
  const fs::path root = fs::temp_directory_path() / ("hypoflow-acceptance-" + std::to_string(::getpid()));
  RunConfig cfg = end_to_end_config(Model::BgkBoltzmann, 1.0);
  cfg.output.save_states = false;
  cfg.output.json = false;
  std::ostringstream sink;
  std::vector<std::string> csv;
  for (int run = 0; run < 2; ++run) {
    cli::Context ctx{root / ("run" + std::to_string(run)), 1, &sink};
    out.require(cli::run_simulate(cfg, ctx) == cli::kSuccess, "simulate failed");
    csv.push_back(slurp(ctx.output_dir / "functionals.csv"));
  }
  fs::remove_all(root);
  out.require(!csv[0].empty() && csv[0] == csv[1], "functional CSVs differ");
  if (out.pass) out.detail << csv[0].size() << " identical bytes";
  return out;
}

}  // namespace

int main() {
  const std::vector<std::pair<int, std::function<Outcome()>>> criteria = {
      {1, constants},
      {2, boltzmann_suite},
      {3, p_suite},
      {4, transport_law},
      {5, velocity_closed_form},
      {6, [] { return end_to_end(Model::BgkBoltzmann, 1.0); }},
      {7, [] { return end_to_end(Model::BgkP, 1.5); }},
      {8, [] { return end_to_end(Model::FokkerPlanckP, 1.5); }},
      {9, quadratic_entropy},
      {10, determinism},
  };
  int failed = 0;
  for (const auto& [id, run] : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = run();
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail.str(std::string("exception: ") + e.what());
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::printf("criterion %2d: %s  %s  [%.1f s]\n", id, o.pass ? "PASS" : "FAIL", o.detail.str().c_str(), secs);
    std::fflush(stdout);
    failed += o.pass ? 0 : 1;
  }
  return failed == 0 ? 0 : 1;
}
