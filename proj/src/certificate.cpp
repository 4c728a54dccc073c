#include "hypoflow/certificate.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>

#include <nlohmann/json.hpp>

#include "hypoflow/random_state.hpp"

namespace hypoflow {

std::string to_string(Model m) {
  switch (m) {
    case Model::BgkBoltzmann:
      return "bgk_boltzmann";
    case Model::BgkP:
      return "bgk_p";
    case Model::FokkerPlanckP:
      return "fokker_planck_p";
  }
  return "unknown";
}

Model model_from_string(const std::string& s) {
  if (s == "bgk_boltzmann") return Model::BgkBoltzmann;
  if (s == "bgk_p") return Model::BgkP;
  if (s == "fokker_planck_p" || s == "fokker_planck") return Model::FokkerPlanckP;
  throw ConfigError("unknown model '" + s + "' (expected bgk_boltzmann, bgk_p or fokker_planck_p)");
}

const ConstraintValue& FeasibilityReport::at(const std::string& id) const {
  for (const auto& c : constraints) {
    if (c.id == id) return c;
  }
  throw ConfigError("no constraint named " + id);
}

double CertificateParams::lyapunov_j(const FunctionalReport& r) const {
  return A1 * r.at(FunctionalName::I_X) + A2 * r.at(FunctionalName::I_M) + A3 * r.at(FunctionalName::I_V);
}

double CertificateParams::entropy_term(const FunctionalReport& r) const {
  return model == Model::FokkerPlanckP ? r.at(FunctionalName::H) : r.at(FunctionalName::H_pi);
}

double CertificateParams::composite(const FunctionalReport& r) const { return lyapunov_j(r) + A4 * entropy_term(r); }

double CertificateParams::decay_lhs(const FunctionalReport& r) const {
  return r.at(FunctionalName::I_X) + r.at(FunctionalName::I_V) + prefactors.beta * entropy_term(r);
}

double CertificateParams::decay_rhs(const FunctionalReport& initial, double t) const {
  const double i0 = initial.at(FunctionalName::I_X) + initial.at(FunctionalName::I_V);
  return std::exp(-rate * t) *
         (prefactors.alpha * i0 + prefactors.rhs_factor * prefactors.beta * entropy_term(initial));
}

double phase_space_constant(double torus_constant) { return std::max(torus_constant, 0.5); }

namespace {

void require_positive(double v, const char* what) {
  if (!(v > 0.0) || !std::isfinite(v)) throw ConfigError(std::string(what) + " must be positive");
}

void add(FeasibilityReport& f, std::string id, double lhs, double scale, bool eta_dependent = true) {
  const double tol = kFeasibilityTolerance * std::max(1.0, std::abs(scale));
  f.constraints.push_back({std::move(id), lhs, std::max(1.0, std::abs(scale)), lhs >= -tol, eta_dependent});
}

void finish(FeasibilityReport& f) {
  f.feasible = std::all_of(f.constraints.begin(), f.constraints.end(), [](const auto& c) { return c.satisfied; });
  // Binding: the violated constraint if any, otherwise the tightest eta-dependent one.
  const ConstraintValue* best = nullptr;
  for (const auto& c : f.constraints) {
    if (!f.feasible && c.satisfied) continue;
    if (f.feasible && !c.eta_dependent) continue;
    if (!best || c.lhs / c.scale < best->lhs / best->scale) best = &c;
  }
  f.binding = best ? best->id : "";
}

// Young-inequality conditions for (1/2) A3 I <= J <= upper * I.
void equivalence_constraints(FeasibilityReport& f, double A1, double A2, double A3, double upper) {
  add(f, "equivalence_lower", (A1 - A3 / 2) * (A3 / 2) - A2 * A2 / 4, A1 * A3);
  add(f, "equivalence_upper", (upper - A1) * (upper - A3) - A2 * A2 / 4, upper * upper);
  add(f, "coefficient_positivity", A1 * A3 - A2 * A2 / 4, A1 * A3);
}

double gamma_for(double C, const Prefactors& pf) {
  const double ch = phase_space_constant(C);
  return ch * (pf.alpha + pf.rhs_factor * pf.beta * ch);
}

}  // namespace

CertificateParams paper_constants_bgk(double lambda, double C, double eta) {
  require_positive(lambda, "lambda");
  require_positive(C, "C");
  require_positive(eta, "eta");
  CertificateParams c;
  c.model = Model::BgkBoltzmann;
  c.lambda = lambda;
  c.p = 1.0;
  c.C = C;
  c.eta = eta;
  c.A3 = 1.0;
  c.A2 = lambda * c.A3;
  c.A1 = (lambda + 2.0 / lambda) * c.A3 / eta;
  c.eps = c.eps1 = c.eps2 = 1.0 / lambda;
  c.alpha = 0.5;
  const double l2 = lambda * lambda + 2.0;
  c.A4 = lambda * c.A2 + 2.0 * c.A3;
  c.rate = lambda * lambda * eta / (4.0 * l2);
  c.prefactors.alpha = 4.0 * l2 / (eta * lambda);
  c.prefactors.beta = 2.0 * l2;
  c.prefactors.rhs_factor = 2.0;
  c.prefactors.gamma = gamma_for(C, c.prefactors);

  auto& f = c.feasibility;
  add(f, "pi_x_over_x", lambda * c.A1 - lambda * c.A2 / c.eps, lambda * c.A1);
  add(f, "x_minus_pix", lambda * c.A1 - (lambda * c.A2 + 2.0 * c.A3) / (2.0 * eta), lambda * c.A1);
  add(f, "pi_v_over_v", lambda * (c.A3 - c.eps * c.A2), lambda * c.A3, false);
  add(f, "velocity_dissipation", lambda * c.A3 - 0.5 * eta * (lambda * c.A2 + 2.0 * c.A3) - 0.5 * lambda * c.A3,
      lambda * c.A3);
  equivalence_constraints(f, c.A1, c.A2, c.A3, 2.0 * c.A1);
  add(f, "rate_domination", C * lambda / (2.0 * l2) - c.rate, C * lambda / l2);
  finish(f);
  return c;
}

CertificateParams paper_constants_bgk_p(double lambda, double p, double C, double eta) {
  require_positive(lambda, "lambda");
  require_positive(C, "C");
  require_positive(eta, "eta");
  PIndex::power(p);
  CertificateParams c;
  c.model = Model::BgkP;
  c.lambda = lambda;
  c.p = p;
  c.C = C;
  c.eta = eta;
  c.A3 = 1.0;
  c.A2 = lambda * c.A3;
  c.A1 = (lambda + 2.0 / lambda) * c.A3 / eta;
  c.eps = c.eps1 = c.eps2 = 2.0 / lambda;
  c.alpha = 0.5;
  const double l2 = lambda * lambda + 2.0;
  c.A4 = lambda * c.A2 + 2.0 * c.A3;
  c.rate = lambda * lambda * eta / (2.0 * l2);
  c.prefactors.alpha = 4.0 * l2 / (eta * lambda);
  c.prefactors.beta = 2.0 * l2;
  c.prefactors.rhs_factor = 1.0;
  c.prefactors.gamma = gamma_for(C, c.prefactors);

  auto& f = c.feasibility;
  add(f, "d_coefficient", lambda * (c.A1 - c.A2 / (2.0 * c.eps1)), lambda * c.A1);
  add(f, "x_minus_pix", lambda * c.A1 - (lambda * c.A2 + 2.0 * c.A3) / (2.0 * eta), lambda * c.A1);
  add(f, "x_f_coefficient", lambda * (c.A1 - c.A2 / (2.0 * c.eps2)), lambda * c.A1);
  add(f, "v_pi_coefficient", lambda * (c.A3 - c.A2 * c.eps1 / 2.0), lambda * c.A3, false);
  add(f, "v_f_coefficient", lambda * (c.A3 - c.A2 * c.eps2 / 2.0), lambda * c.A3, false);
  add(f, "velocity_dissipation", lambda * c.A3 - 0.5 * eta * (lambda * c.A2 + 2.0 * c.A3) - 0.5 * lambda * c.A3,
      lambda * c.A3);
  equivalence_constraints(f, c.A1, c.A2, c.A3, 2.0 * c.A1);
  add(f, "rate_domination", lambda * C / l2 - c.rate, lambda * C / l2);
  finish(f);
  return c;
}

CertificateParams paper_constants_fp(double p, double C) {
  require_positive(C, "C");
  PIndex::power(p);
  CertificateParams c;
  c.model = Model::FokkerPlanckP;
  c.p = p;
  c.C = C;
  c.A1 = c.A2 = c.A3 = 1.0;
  c.eps = c.eps1 = c.eps2 = 4.0 * c.A3;
  c.A4 = 27.0 / 4.0;
  const double fisher_rate = 1.0 / 12.0;
  const double entropy_rate = 4.0 / (216.0 * C);
  c.rate = std::min(fisher_rate, entropy_rate);
  c.prefactors.alpha = 3.0;
  c.prefactors.beta = 27.0 / 2.0;
  c.prefactors.rhs_factor = 1.0;
  c.prefactors.gamma = gamma_for(C, c.prefactors);

  auto& f = c.feasibility;
  add(f, "vx_coefficient", 2.0 * c.A1 - c.A2, 1.0, false);
  add(f, "xv2_coefficient", c.A1 - c.A2 / 2.0, 1.0, false);
  add(f, "vv_coefficient", 2.0 * c.A3 - c.A2, 1.0, false);
  add(f, "v2_coefficient", c.A3 - c.A2 / 2.0, 1.0, false);
  add(f, "x_dissipation", c.A2 / 2.0 - c.A3 / c.eps - 0.25, 1.0, false);
  add(f, "v_absorption", c.A4 - (c.A2 / 2.0 + c.A3 * c.eps + 2.0 * c.A3) - 0.25, c.A4, false);
  equivalence_constraints(f, c.A1, c.A2, c.A3, 1.5);
  finish(f);
  f.binding = fisher_rate <= entropy_rate ? "fisher_rate" : "entropy_rate";
  return c;
}

CertificateParams optimize_rate(Model model, double lambda, double p, double C) {
  if (model == Model::FokkerPlanckP) return paper_constants_fp(p, C);
  const auto build = [&](double eta) {
    return model == Model::BgkBoltzmann ? paper_constants_bgk(lambda, C, eta) : paper_constants_bgk_p(lambda, p, C, eta);
  };
  // Every eta-dependent constraint decreases in eta, so the feasible set is (0, eta*].
  double lo = 1.0, hi = 1.0;
  if (build(lo).feasible()) {
    while (build(hi).feasible()) {
      lo = hi;
      hi *= 2.0;
      if (hi > 1e12) throw InvariantError("optimize_rate: feasible region is unbounded");
    }
  } else {
    while (!build(lo).feasible()) {
      hi = lo;
      lo /= 2.0;
      if (lo < 1e-300) throw InvariantError("optimize_rate: no feasible splitter found");
    }
  }
  for (int it = 0; it < 200 && hi - lo > 4 * std::numeric_limits<double>::epsilon() * hi; ++it) {
    const double mid = 0.5 * (lo + hi);
    (build(mid).feasible() ? lo : hi) = mid;
  }
  CertificateParams best = build(lo);
  if (!best.feasible()) throw InvariantError("optimize_rate: bisection ended on an infeasible splitter");
  return best;
}

// Trial densities ----------------------------------------------------------

namespace {

std::vector<std::vector<int>> trial_modes(int dim, int max_mode) {
  std::vector<std::vector<int>> modes;
  if (dim == 1) {
    for (int k = 1; k <= max_mode; ++k) modes.push_back({k});
  } else {
    for (int k0 = 0; k0 <= max_mode; ++k0) {
      for (int k1 = -max_mode; k1 <= max_mode; ++k1) {
        if (k0 == 0 && k1 <= 0) continue;
        modes.push_back({k0, k1});
      }
    }
  }
  return modes;
}

double norm(const std::vector<double>& c) {
  double s = 0;
  for (double x : c) s += x * x;
  return std::sqrt(s);
}

void project(std::vector<double>& c, double floor, double ceiling) {
  const double n = norm(c);
  const double target = std::clamp(n, floor, ceiling);
  if (n == 0.0) {
    c[0] = target;
    return;
  }
  for (double& x : c) x *= target / n;
}

}  // namespace

int constant_trial_size(int dim, int max_mode) { return 2 * static_cast<int>(trial_modes(dim, max_mode).size()); }

SpatialField<double> constant_trial_density(const Grid<double>& grid, const std::vector<double>& coefficients,
                                            int max_mode) {
  const auto modes = trial_modes(grid.dim(), max_mode);
  if (coefficients.size() != 2 * modes.size()) throw ConfigError("constant_trial_density: coefficient count mismatch");
  const double two_pi = 2.0 * std::numbers::pi / grid.spec().period;
  SpatialField<double> rho(grid.num_x());
  for (Eigen::Index ix = 0; ix < grid.num_x(); ++ix) {
    double phi = 0.0;
    for (std::size_t m = 0; m < modes.size(); ++m) {
      double arg = 0.0;
      for (int a = 0; a < grid.dim(); ++a) arg += modes[m][a] * grid.x_coord(ix, a);
      phi += coefficients[2 * m] * std::cos(two_pi * arg) + coefficients[2 * m + 1] * std::sin(two_pi * arg);
    }
    rho(ix) = std::exp(phi);
  }
  return rho / rho.mean();
}

double functional_ratio(const SpatialField<double>& rho, const Grid<double>& grid, const PIndex& p) {
  const double i = spatial_fisher(rho, grid, p);
  if (!(i > 0.0)) return 0.0;
  return spatial_entropy(rho, p) / i;
}

ConstantEstimate estimate_functional_constant(const Grid<double>& grid, const PIndex& p,
                                              const ConstantEstimatorOptions& opt) {
  if (opt.max_mode < 1 || 2 * opt.max_mode >= grid.nx()) throw ConfigError("constant estimator: max_mode out of range");
  const int n = constant_trial_size(grid.dim(), opt.max_mode);
  const auto ratio = [&](const std::vector<double>& c) {
    return functional_ratio(constant_trial_density(grid, c, opt.max_mode), grid, p);
  };

  std::mt19937_64 rng(opt.seed);
  ConstantEstimate out;
  out.converged = true;
  double best = -1.0;
  for (int start = 0; start < opt.starts; ++start) {
    std::vector<double> c(n);
    for (double& x : c) x = symmetric_uniform(rng);
    project(c, 0.3, 0.3);
    double value = ratio(c);
    double step = 0.1;
    bool converged = false;
    int it = 0;
    for (; it < opt.max_iterations; ++it) {
      std::vector<double> grad(n);
      for (int k = 0; k < n; ++k) {
        const double hstep = 1e-6 * std::max(1.0, std::abs(c[k]));
        auto cp = c, cm = c;
        cp[k] += hstep;
        cm[k] -= hstep;
        grad[k] = (ratio(cp) - ratio(cm)) / (2 * hstep);
      }
      const double gnorm = norm(grad);
      if (gnorm == 0.0) {
        converged = true;
        break;
      }
      // Backtracking on the projected step.
      bool moved = false;
      while (step > 1e-14) {
        auto trial = c;
        for (int k = 0; k < n; ++k) trial[k] += step * grad[k] / gnorm;
        project(trial, opt.amplitude_floor, opt.amplitude_ceiling);
        const double tv = ratio(trial);
        if (tv > value) {
          const double gain = tv - value;
          c = std::move(trial);
          value = tv;
          step *= 1.5;
          moved = true;
          if (gain <= 1e-13 * std::abs(value)) converged = true;
          break;
        }
        step *= 0.5;
      }
      if (!moved) converged = true;
      if (converged) break;
    }
    out.iterations += it;
    out.converged = out.converged && converged;
    if (value > best) {
      best = value;
      out.best_coefficients = c;
    }
  }
  out.best_ratio = best;
  out.C = best * opt.safety_factor;
  return out;
}

// JSON ---------------------------------------------------------------------

void to_json(nlohmann::json& j, const FeasibilityReport& f) {
  j = nlohmann::json::object();
  j["feasible"] = f.feasible;
  j["binding"] = f.binding;
  auto arr = nlohmann::json::array();
  for (const auto& c : f.constraints) {
    arr.push_back({{"id", c.id}, {"lhs", c.lhs}, {"satisfied", c.satisfied}, {"eta_dependent", c.eta_dependent}});
  }
  j["constraints"] = std::move(arr);
}

void to_json(nlohmann::json& j, const CertificateParams& c) {
  j = nlohmann::json::object();
  j["model"] = to_string(c.model);
  if (c.model != Model::FokkerPlanckP) j["lambda"] = c.lambda;
  if (c.model != Model::BgkBoltzmann) j["p"] = c.p;
  j["A1"] = c.A1;
  j["A2"] = c.A2;
  j["A3"] = c.A3;
  j["A4"] = c.A4;
  j["eps"] = c.eps;
  j["eps1"] = c.eps1;
  j["eps2"] = c.eps2;
  if (c.model != Model::FokkerPlanckP) j["eta"] = c.eta;
  j["C"] = c.C;
  j["alpha"] = c.alpha;
  j["rate"] = c.rate;
  j["prefactors"] = {{"alpha", c.prefactors.alpha},
                     {"beta", c.prefactors.beta},
                     {"gamma", c.prefactors.gamma},
                     {"rhs_factor", c.prefactors.rhs_factor}};
  j["feasibility"] = c.feasibility;
}

}  // namespace hypoflow
