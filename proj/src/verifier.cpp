#include "hypoflow/verifier.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <sstream>

#include <nlohmann/json.hpp>

#include "hypoflow/operators.hpp"
#include "hypoflow/parallel.hpp"

namespace hypoflow {

namespace {

using F = FunctionalName;
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::array<double, kAllFunctionals.size()> values_of(const FunctionalReport& r) {
  std::array<double, kAllFunctionals.size()> out;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = r.values[i].value_or(kNaN);
  return out;
}

State<double> flow(const State<double>& s, const Generator& g, double t, double speed_scale) {
  switch (g.tag) {
    case Generator::Tag::Transport:
      return transport_flow(s, t, speed_scale);
    case Generator::Tag::Bgk:
      return bgk_flow(s, g.lambda, t);
    case Generator::Tag::FokkerPlanck:
      return fokker_planck_flow(s, t);
  }
  throw ConfigError("unknown generator");
}

std::string param(const char* name, double v) {
  std::ostringstream os;
  os << name << '=' << v;
  return os.str();
}

struct RowBuilder {
  const VerifierOptions& opt;
  std::vector<LemmaCheckResult>& out;

  double assertion(double scale, CheckKind kind) const {
    return kind == CheckKind::Equality ? std::max(opt.abs_tolerance, opt.rel_tolerance * scale) : opt.abs_tolerance;
  }

  // lhs == rhs; `scale` is the sum of magnitudes of the terms.
  void equality(LemmaId id, std::string label, double lhs, double rhs, double scale, double fd_error) {
    LemmaCheckResult r{id, std::move(label), CheckKind::Equality, lhs, rhs, lhs - rhs, 0.0, fd_error, false};
    r.tolerance = assertion(scale, r.kind);
    if (opt.use_discretization_estimate) r.tolerance = std::max(r.tolerance, fd_error);
    r.pass = std::isfinite(r.residual_or_slack) && std::abs(r.residual_or_slack) <= r.tolerance;
    out.push_back(std::move(r));
  }

  // lhs <= rhs
  void inequality(LemmaId id, std::string label, double lhs, double rhs, double fd_error) {
    LemmaCheckResult r{id, std::move(label), CheckKind::Inequality, lhs, rhs, rhs - lhs, 0.0, fd_error, false};
    r.tolerance = assertion(0.0, r.kind);
    if (opt.use_discretization_estimate) r.tolerance = std::max(r.tolerance, fd_error);
    r.pass = std::isfinite(r.residual_or_slack) && r.residual_or_slack >= -r.tolerance;
    out.push_back(std::move(r));
  }
};

double mixed_rhs(const FunctionalReport& r, double eta, double dh_pi) {
  return 0.5 * eta * r.at(F::I_V) + (r.at(F::I_X) - r.at(F::I_piX)) / (2.0 * eta) - dh_pi;
}

void transport_rows(RowBuilder& b, const SemigroupDerivative& dT, LemmaId r1, LemmaId r2, LemmaId r3) {
  const FunctionalReport& r = dT.base;
  const double ix = r.at(F::I_X), im = r.at(F::I_M);
  b.equality(r1, "-dT I_X = 0", -dT.at(F::I_X), 0.0, std::abs(dT.at(F::I_X)), dT.error_at(F::I_X));
  b.equality(r2, "-dT I_V = 2 I_M", -dT.at(F::I_V), 2.0 * im, std::abs(dT.at(F::I_V)) + 2.0 * std::abs(im),
             dT.error_at(F::I_V));
  b.equality(r3, "-dT I_M = I_X", -dT.at(F::I_M), ix, std::abs(dT.at(F::I_M)) + ix, dT.error_at(F::I_M));
}

// Jensen, functional inequality and projected-entropy rate.
void projection_rows(RowBuilder& b, const SemigroupDerivative& dT, const SemigroupDerivative& dL, bool boltzmann,
                     double C) {
  const FunctionalReport& r = dT.base;
  const LemmaId a = boltzmann ? LemmaId::L1a : LemmaId::L5;
  const LemmaId c = boltzmann ? LemmaId::L1c : LemmaId::L5;
  b.inequality(a, "I_piX <= I_X", r.at(F::I_piX), r.at(F::I_X), 0.0);
  if (C > 0.0) b.inequality(boltzmann ? LemmaId::L1b : LemmaId::L5, param("H_pi <= C I_X, C", C), r.at(F::H_pi),
                            C * r.at(F::I_X), 0.0);
  const double measured = dT.at(F::H_pi) + dL.at(F::H_pi);
  const double exact = r.at(F::U_divergence_pairing);
  b.equality(c, "d/dt H_pi = -<phi'(Pi h), div U>", measured, exact, std::abs(measured) + std::abs(exact),
             dT.error_at(F::H_pi) + dL.error_at(F::H_pi));
}

void mixed_rows(RowBuilder& b, const SemigroupDerivative& dT, const SemigroupDerivative& dL, LemmaId id,
                const std::vector<double>& etas) {
  const FunctionalReport& r = dT.base;
  const double measured = dT.at(F::H_pi) + dL.at(F::H_pi);
  const double fd = dT.error_at(F::H_pi) + dL.error_at(F::H_pi);
  for (double eta : etas) {
    b.inequality(id, param("eta", eta), -r.at(F::I_M), mixed_rhs(r, eta, r.at(F::U_divergence_pairing)), 0.0);
    b.inequality(LemmaId::INEQ_H, param("eta", eta), -r.at(F::I_M), mixed_rhs(r, eta, measured), fd);
  }
}

}  // namespace

std::string to_string(LemmaId id) {
  switch (id) {
    case LemmaId::L1a: return "L1a";
    case LemmaId::L1b: return "L1b";
    case LemmaId::L1c: return "L1c";
    case LemmaId::L2_1: return "L2.1";
    case LemmaId::L2_2: return "L2.2";
    case LemmaId::L2_3: return "L2.3";
    case LemmaId::L2_4: return "L2.4";
    case LemmaId::L2_5: return "L2.5";
    case LemmaId::L2_6: return "L2.6";
    case LemmaId::L3: return "L3";
    case LemmaId::L5: return "L5";
    case LemmaId::L6: return "L6";
    case LemmaId::L7: return "L7";
    case LemmaId::L8_1: return "L8.1";
    case LemmaId::L8_2: return "L8.2";
    case LemmaId::L8_3: return "L8.3";
    case LemmaId::L8_4: return "L8.4";
    case LemmaId::L8_5: return "L8.5";
    case LemmaId::L8_6: return "L8.6";
    case LemmaId::FP_1: return "FP.1";
    case LemmaId::FP_2: return "FP.2";
    case LemmaId::FP_3: return "FP.3";
    case LemmaId::INEQ_H: return "INEQ.H";
    case LemmaId::TransportLaw: return "TRANSPORT";
  }
  return "?";
}

double default_probe_step(double lambda) {
  return lambda > 0.0 ? 1e-4 * std::min(1.0, 1.0 / lambda) : 1e-4;
}

SemigroupDerivative semigroup_derivatives(const State<double>& s, const Generator& g, const PIndex& p, double delta,
                                          double speed_scale) {
  if (!(delta > 0.0) || !std::isfinite(delta)) throw ConfigError("semigroup_derivative: delta must be positive");
  if (g.tag == Generator::Tag::Bgk && !(g.lambda > 0.0)) throw ConfigError("semigroup_derivative: lambda must be positive");
  const bool fp = g.tag == Generator::Tag::FokkerPlanck && !p.boltzmann;
  SemigroupDerivative out;
  out.base = functional_report(s, p, fp);
  const auto at = [&](double t) { return values_of(functional_report(flow(s, g, t, speed_scale), p)); };

  if (g.tag == Generator::Tag::Transport) {
    const auto fp1 = at(delta), fm1 = at(-delta), fp2 = at(0.5 * delta), fm2 = at(-0.5 * delta);
    for (std::size_t i = 0; i < out.value.size(); ++i) {
      const double c1 = (fp1[i] - fm1[i]) / (2.0 * delta);
      const double c2 = (fp2[i] - fm2[i]) / delta;
      out.value[i] = c1;
      out.error[i] = 4.0 / 3.0 * std::abs(c1 - c2);
    }
  } else {
    const auto f0 = values_of(out.base);
    const auto f1 = at(delta), f2 = at(0.5 * delta), f4 = at(0.25 * delta);
    for (std::size_t i = 0; i < out.value.size(); ++i) {
      const double d1 = (f1[i] - f0[i]) / delta;
      const double d2 = (f2[i] - f0[i]) / (0.5 * delta);
      const double d4 = (f4[i] - f0[i]) / (0.25 * delta);
      const double r1 = 2.0 * d2 - d1;
      const double r2 = 2.0 * d4 - d2;
      out.value[i] = r1;
      out.error[i] = 4.0 / 3.0 * std::abs(r1 - r2);
    }
  }
  for (std::size_t i = 0; i < out.value.size(); ++i) {
    if (!out.base.values[i]) out.value[i] = out.error[i] = kNaN;
  }
  return out;
}

double semigroup_derivative(const State<double>& s, const Generator& g, FunctionalName functional, const PIndex& p,
                            double delta) {
  return semigroup_derivatives(s, g, p, delta).at(functional);
}

std::vector<LemmaCheckResult> check_lemma_table(const State<double>& s, Model model, double lambda, const PIndex& p,
                                                const VerifierOptions& opt) {
  std::vector<LemmaCheckResult> out;
  RowBuilder b{opt, out};
  const bool fp_model = model == Model::FokkerPlanckP;
  if (model == Model::BgkBoltzmann && !p.boltzmann) throw ConfigError("check_lemma_table: BGK-Boltzmann needs the log entropy");
  if (model != Model::BgkBoltzmann && p.boltzmann) throw ConfigError("check_lemma_table: model needs a p-entropy");
  if (!fp_model && !(lambda > 0.0)) throw ConfigError("check_lemma_table: lambda must be positive");
  const double delta = opt.delta.value_or(default_probe_step(fp_model ? 1.0 : lambda));
  const Generator collision = fp_model ? Generator::fokker_planck() : Generator::bgk(lambda);

  const SemigroupDerivative dT = semigroup_derivatives(s, Generator::transport(), p, delta, opt.speed_scale);
  const SemigroupDerivative dL = semigroup_derivatives(s, collision, p, delta);
  const FunctionalReport& r = dL.base;
  const double ix = r.at(F::I_X), iv = r.at(F::I_V), im = r.at(F::I_M);
  const double dix = dL.at(F::I_X), div = dL.at(F::I_V), dim = dL.at(F::I_M);
  const double eix = dL.error_at(F::I_X), eiv = dL.error_at(F::I_V), eim = dL.error_at(F::I_M);

  if (model == Model::BgkBoltzmann) {
    const double pix = r.at(F::I_piX), pxx = r.at(F::I_piX_over_X), pvv = r.at(F::I_piV_over_V);
    projection_rows(b, dT, dL, true, opt.functional_constant);
    transport_rows(b, dT, LemmaId::L2_1, LemmaId::L2_2, LemmaId::L2_3);
    b.equality(LemmaId::L2_4, "dL I_V = -lambda (I_V + I_piV/V)", div, -lambda * (iv + pvv),
               std::abs(div) + lambda * (iv + pvv), eiv);
    b.inequality(LemmaId::L2_5, "dL I_X <= -lambda I_piX/X - lambda (I_X - I_piX)", dix,
                 -lambda * pxx - lambda * (ix - pix), eix);
    for (double eps : opt.epsilons) {
      b.inequality(LemmaId::L2_6, param("eps", eps), dim, lambda * eps * pvv + lambda / eps * pxx - lambda * im, eim);
    }
    mixed_rows(b, dT, dL, LemmaId::L3, opt.etas);
    return out;
  }

  const double q = p.p;
  const double c = (2.0 - q) * (q - 1.0);
  projection_rows(b, dT, dL, false, opt.functional_constant);
  {
    const Field<double> ratio = broadcast(project_pi(s), *s.grid).array() / s.h.array();
    double min_f = std::numeric_limits<double>::infinity();
    for (Eigen::Index i = 0; i < ratio.size(); ++i) min_f = std::min(min_f, f_p(ratio(i), q));
    b.inequality(LemmaId::L6, "F_p(Pi h / h) >= 0", 0.0, min_f, 0.0);
  }
  transport_rows(b, dT, LemmaId::L8_1, LemmaId::L8_2, LemmaId::L8_3);

  if (fp_model) {
    const double ivx = r.at(F::I_VX), ivv = r.at(F::I_VV), i2xv = r.at(F::I_2XV), i2v = r.at(F::I_2V);
    b.equality(LemmaId::FP_1, "dL I_X = -2 I_VX - (2-p)(p-1) I_2XV", dix, -2.0 * ivx - c * i2xv,
               std::abs(dix) + 2.0 * ivx + c * i2xv, eix);
    b.inequality(LemmaId::FP_2, "dL I_M <= I_VV + I_VX + (2-p)(p-1)/2 (I_2V + I_2XV) + (I_X + I_V)/2", dim,
                 ivv + ivx + 0.5 * c * (i2v + i2xv) + 0.5 * (ix + iv), eim);
    b.equality(LemmaId::FP_3, "dL I_V = -2 I_VV - (2-p)(p-1) I_2V - 2 I_V", div, -2.0 * ivv - c * i2v - 2.0 * iv,
               std::abs(div) + 2.0 * ivv + c * i2v + 2.0 * iv, eiv);
    return out;
  }

  const double d = r.at(F::D), ixf = r.at(F::I_XF), ivf = r.at(F::I_VF), ivpi = r.at(F::I_Vpi);
  b.equality(LemmaId::L8_4, "dL I_V = -lambda (I_VF + I_Vpi + I_V)", div, -lambda * (ivf + ivpi + iv),
             std::abs(div) + lambda * (ivf + ivpi + iv), eiv);
  b.inequality(LemmaId::L8_5, "dL I_X <= -lambda D - lambda I_XF", dix, -lambda * d - lambda * ixf, eix);
  for (double e1 : opt.epsilons) {
    for (double e2 : opt.epsilons) {
      const double rhs = 0.5 * lambda * e1 * ivpi + lambda / e1 * d + lambda / (2.0 * e2) * ixf +
                         0.5 * lambda * e2 * ivf - lambda * im;
      b.inequality(LemmaId::L8_6, param("eps1", e1) + " " + param("eps2", e2), dim, rhs, eim);
    }
  }
  mixed_rows(b, dT, dL, LemmaId::L7, opt.etas);
  return out;
}

LemmaCheckResult check_mixed_term(const State<double>& s, double eta, const PIndex& p, const VerifierOptions& opt) {
  if (!(eta > 0.0)) throw ConfigError("check_mixed_term: eta must be positive");
  const FunctionalReport r = functional_report(s, p);
  std::vector<LemmaCheckResult> out;
  RowBuilder b{opt, out};
  b.inequality(p.boltzmann ? LemmaId::L3 : LemmaId::L7, param("eta", eta), -r.at(F::I_M),
               mixed_rhs(r, eta, r.at(F::U_divergence_pairing)), 0.0);
  return out.front();
}

LemmaCheckResult check_transport_polynomial(const State<double>& s, const std::vector<double>& times, const PIndex& p,
                                            const VerifierOptions& opt) {
  const FunctionalReport r0 = functional_report(s, p);
  const double ix = r0.at(F::I_X), iv = r0.at(F::I_V), im = r0.at(F::I_M);
  LemmaCheckResult worst{LemmaId::TransportLaw, "t=0", CheckKind::Equality, ix, ix, 0.0, opt.abs_tolerance, 0.0, true};
  bool under_resolved = r0.under_resolved;
  for (double t : times) {
    const FunctionalReport rt = functional_report(transport_flow(s, t, opt.speed_scale), p);
    under_resolved = under_resolved || rt.under_resolved;
    const std::array<std::pair<double, double>, 3> laws{{
        {rt.at(F::I_X), ix},
        {rt.at(F::I_M), im - t * ix},
        {rt.at(F::I_V), iv - 2.0 * t * im + t * t * ix},
    }};
    static constexpr const char* names[] = {"I_X", "I_M", "I_V"};
    for (std::size_t k = 0; k < laws.size(); ++k) {
      const double res = laws[k].first - laws[k].second;
      if (!(std::abs(res) <= std::abs(worst.residual_or_slack))) {
        worst.label = std::string(names[k]) + " " + param("t", t);
        worst.lhs = laws[k].first;
        worst.rhs = laws[k].second;
        worst.residual_or_slack = res;
      }
    }
  }
  worst.pass = std::isfinite(worst.residual_or_slack) && std::abs(worst.residual_or_slack) <= worst.tolerance;
  if (under_resolved) worst.label += " (under-resolved in v)";
  return worst;
}

double transport_quadratic_coefficient(const State<double>& s, double t1, double t2, const PIndex& p) {
  if (!(t1 > 0.0) || !(t2 > t1)) throw ConfigError("transport_quadratic_coefficient: need 0 < t1 < t2");
  const double y0 = functional_report(s, p).at(F::I_V);
  const double y1 = functional_report(transport_flow(s, t1), p).at(F::I_V);
  const double y2 = functional_report(transport_flow(s, t2), p).at(F::I_V);
  // second divided difference
  return ((y2 - y0) / t2 - (y1 - y0) / t1) / (t2 - t1);
}

SuiteReport run_lemma_suite(const std::vector<State<double>>& states, Model model, double lambda, const PIndex& p,
                            const VerifierOptions& opt, int jobs) {
  SuiteReport suite;
  suite.per_state.resize(states.size());
  parallel_for(states.size(), jobs,
               [&](std::size_t i) { suite.per_state[i] = check_lemma_table(states[i], model, lambda, p, opt); });
  for (const auto& rows : suite.per_state) {
    suite.checks += rows.size();
    for (const auto& r : rows) suite.failures += r.pass ? 0 : 1;
  }
  return suite;
}

DecayFit fit_decay(const std::vector<double>& times, const std::vector<double>& values, double t_start, double t_end,
                   std::string name) {
  if (times.size() != values.size()) throw ConfigError("fit_decay: times and values differ in length");
  if (!(t_end > t_start)) throw ConfigError("fit_decay: empty window");
  if (times.empty() || t_start < times.front() - 1e-12 || t_end > times.back() + 1e-12) {
    throw ConfigError("fit_decay: window outside the trajectory");
  }
  DecayFit fit;
  fit.functional = std::move(name);
  fit.t_start = t_start;
  fit.t_end = t_end;
  std::vector<double> t, y;
  for (std::size_t i = 0; i < times.size(); ++i) {
    if (times[i] < t_start - 1e-12 || times[i] > t_end + 1e-12) continue;
    if (!(values[i] > kEquilibriumFloor)) {
      fit.window_shortened = true;
      break;
    }
    t.push_back(times[i]);
    y.push_back(std::log(values[i]));
  }
  fit.samples = static_cast<int>(t.size());
  if (fit.window_shortened) fit.t_end = t.empty() ? t_start : t.back();
  if (t.size() < 2) {
    fit.window_shortened = true;
    return fit;
  }
  const double n = double(t.size());
  double mt = 0, my = 0;
  for (std::size_t i = 0; i < t.size(); ++i) {
    mt += t[i];
    my += y[i];
  }
  mt /= n;
  my /= n;
  double stt = 0, sty = 0, syy = 0;
  for (std::size_t i = 0; i < t.size(); ++i) {
    stt += (t[i] - mt) * (t[i] - mt);
    sty += (t[i] - mt) * (y[i] - my);
    syy += (y[i] - my) * (y[i] - my);
  }
  const double slope = sty / stt;
  fit.fitted_rate = -slope;
  fit.fitted_prefactor = std::exp(my - slope * mt);
  fit.r_squared = syy > 0.0 ? std::clamp(sty * sty / (stt * syy), 0.0, 1.0) : 1.0;
  return fit;
}

DecayFit fit_decay(const std::vector<FunctionalReport>& series, const ReportFunction& functional, double t_start,
                   double t_end, std::string name) {
  std::vector<double> t, y;
  t.reserve(series.size());
  y.reserve(series.size());
  for (const auto& r : series) {
    t.push_back(r.time);
    y.push_back(functional(r));
  }
  return fit_decay(t, y, t_start, t_end, std::move(name));
}

std::vector<FunctionalReport> trajectory_reports(const Trajectory<double>& traj, const PIndex& p, bool include_fp,
                                                 int jobs) {
  std::vector<FunctionalReport> out(traj.snapshots.size());
  parallel_for(out.size(), jobs, [&](std::size_t i) {
    out[i] = functional_report(traj.snapshots[i].second, p, include_fp);
    out[i].time = traj.snapshots[i].first;
  });
  return out;
}

void to_json(nlohmann::json& j, const LemmaCheckResult& r) {
  j = {{"lemma", to_string(r.id)},
       {"label", r.label},
       {"kind", r.kind == CheckKind::Equality ? "equality" : "inequality"},
       {"lhs", r.lhs},
       {"rhs", r.rhs},
       {"residual_or_slack", r.residual_or_slack},
       {"tolerance", r.tolerance},
       {"discretization_error", r.discretization_error},
       {"pass", r.pass}};
}

void to_json(nlohmann::json& j, const DecayFit& f) {
  j = {{"functional", f.functional},
       {"t_start", f.t_start},
       {"t_end", f.t_end},
       {"fitted_rate", f.fitted_rate},
       {"fitted_prefactor", f.fitted_prefactor},
       {"r_squared", f.r_squared},
       {"window_shortened", f.window_shortened},
       {"samples", f.samples}};
}

nlohmann::json suite_json(const SuiteReport& suite) {
  nlohmann::json states = nlohmann::json::array();
  for (const auto& rows : suite.per_state) states.push_back(rows);
  return {{"checks", suite.checks}, {"failures", suite.failures}, {"pass", suite.pass()}, {"states", states}};
}

std::string format_table(const std::vector<LemmaCheckResult>& rows) {
  std::ostringstream os;
  os << std::left << std::setw(10) << "lemma" << std::setw(6) << "kind" << std::right << std::setw(14) << "lhs"
     << std::setw(14) << "rhs" << std::setw(12) << "res/slack" << std::setw(10) << "tol" << "  ok    detail\n";
  os << std::scientific << std::setprecision(4);
  for (const auto& r : rows) {
    os << std::left << std::setw(10) << to_string(r.id) << std::setw(6)
       << (r.kind == CheckKind::Equality ? "eq" : "ineq") << std::right << std::setw(14) << r.lhs << std::setw(14)
       << r.rhs << std::setprecision(2) << std::setw(12) << r.residual_or_slack << std::setw(10) << r.tolerance
       << std::setprecision(4) << "  " << (r.pass ? "pass" : "FAIL") << "  " << r.label << '\n';
  }
  return os.str();
}

}  // namespace hypoflow
