#pragma once

#include <array>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "hypoflow/certificate.hpp"
#include "hypoflow/functionals.hpp"
#include "hypoflow/integrator.hpp"

namespace hypoflow {

enum class LemmaId {
  L1a, L1b, L1c,
  L2_1, L2_2, L2_3, L2_4, L2_5, L2_6,
  L3,
  L5, L6, L7,
  L8_1, L8_2, L8_3, L8_4, L8_5, L8_6,
  FP_1, FP_2, FP_3,
  INEQ_H,
  TransportLaw,
};

std::string to_string(LemmaId id);

enum class CheckKind { Equality, Inequality };

struct LemmaCheckResult {
  LemmaId id = LemmaId::L1a;
  std::string label;  // row detail and parameters, e.g. "eps=0.1"
  CheckKind kind = CheckKind::Equality;
  double lhs = 0.0;
  double rhs = 0.0;
  double residual_or_slack = 0.0;  // lhs - rhs for equalities, rhs - lhs for inequalities
  double tolerance = 0.0;
  double discretization_error = 0.0;
  bool pass = false;
};

/// One-parameter semigroups probed by finite differences.
struct Generator {
  enum class Tag { Transport, Bgk, FokkerPlanck };
  Tag tag = Tag::Transport;
  double lambda = 0.0;

  static Generator transport() { return {Tag::Transport, 0.0}; }
  static Generator bgk(double lambda) { return {Tag::Bgk, lambda}; }
  static Generator fokker_planck() { return {Tag::FokkerPlanck, 0.0}; }
};

/// 1e-4 min(1, 1/lambda).
double default_probe_step(double lambda);

struct VerifierOptions {
  std::optional<double> delta;               // probe step, default_probe_step(lambda) when empty
  std::vector<double> epsilons{0.1, 1.0, 10.0};
  std::vector<double> etas{0.1, 1.0, 10.0};
  double functional_constant = 0.0;          // C in H_pi <= C I_X; <= 0 skips that row
  double abs_tolerance = 1e-6;
  double rel_tolerance = 1e-4;
  bool use_discretization_estimate = true;
  double speed_scale = 1.0;                  // transport speed used by the probes (mutation testing)
};

/// Derivative of every functional along one semigroup, with an estimate of
/// the finite-difference error. Entries absent from the report stay NaN.
struct SemigroupDerivative {
  FunctionalReport base;
  std::array<double, kAllFunctionals.size()> value{};
  std::array<double, kAllFunctionals.size()> error{};

  double at(FunctionalName n) const { return value[static_cast<std::size_t>(n)]; }
  double error_at(FunctionalName n) const { return error[static_cast<std::size_t>(n)]; }
};

/// Transport: centered difference over (-delta, delta). Collision generators:
/// one-sided Richardson extrapolation 2 D(delta/2) - D(delta).
SemigroupDerivative semigroup_derivatives(const State<double>& s, const Generator& g, const PIndex& p, double delta,
                                          double speed_scale = 1.0);
double semigroup_derivative(const State<double>& s, const Generator& g, FunctionalName functional, const PIndex& p,
                            double delta);

std::vector<LemmaCheckResult> check_lemma_table(const State<double>& s, Model model, double lambda, const PIndex& p,
                                                const VerifierOptions& opt = {});

/// -I_M <= (eta/2) I_V + (1/(2 eta)) (I_X - I_piX) - d/dt H_pi with the exact
/// U-pairing for d/dt H_pi.
LemmaCheckResult check_mixed_term(const State<double>& s, double eta, const PIndex& p,
                                  const VerifierOptions& opt = {});

/// Free-streaming laws I_X(t) = I_X(0), I_M(t) = I_M(0) - t I_X(0),
/// I_V(t) = I_V(0) - 2 t I_M(0) + t^2 I_X(0), worst residual over `times`.
LemmaCheckResult check_transport_polynomial(const State<double>& s, const std::vector<double>& times,
                                            const PIndex& p = PIndex::log_entropy(),
                                            const VerifierOptions& opt = {});

/// Quadratic coefficient of I_V(t) from a three-point parabola through t = 0, t1, t2.
double transport_quadratic_coefficient(const State<double>& s, double t1, double t2, const PIndex& p);

struct SuiteReport {
  std::vector<std::vector<LemmaCheckResult>> per_state;
  std::size_t checks = 0;
  std::size_t failures = 0;
  bool pass() const { return failures == 0; }
};

/// check_lemma_table over many states on `jobs` worker threads. Results keep
/// the input order.
SuiteReport run_lemma_suite(const std::vector<State<double>>& states, Model model, double lambda, const PIndex& p,
                            const VerifierOptions& opt = {}, int jobs = 1);

struct DecayFit {
  std::string functional;
  double t_start = 0.0;
  double t_end = 0.0;
  double fitted_rate = 0.0;
  double fitted_prefactor = 0.0;
  double r_squared = 0.0;
  bool window_shortened = false;
  int samples = 0;
};

inline constexpr double kEquilibriumFloor = 1e-14;

/// Least-squares fit of log(values) against t on [t_start, t_end]. Samples
/// past the first value below kEquilibriumFloor are dropped and the window is
/// flagged as shortened.
DecayFit fit_decay(const std::vector<double>& times, const std::vector<double>& values, double t_start, double t_end,
                   std::string name = "composite");

using ReportFunction = std::function<double(const FunctionalReport&)>;
DecayFit fit_decay(const std::vector<FunctionalReport>& series, const ReportFunction& functional, double t_start,
                   double t_end, std::string name = "composite");

std::vector<FunctionalReport> trajectory_reports(const Trajectory<double>& traj, const PIndex& p,
                                                 bool include_fp = false, int jobs = 1);

void to_json(nlohmann::json& j, const LemmaCheckResult& r);
void to_json(nlohmann::json& j, const DecayFit& f);
nlohmann::json suite_json(const SuiteReport& suite);
std::string format_table(const std::vector<LemmaCheckResult>& rows);

}  // namespace hypoflow
