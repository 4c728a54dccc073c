#pragma once

#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "hypoflow/functionals.hpp"
#include "hypoflow/phase_space.hpp"

namespace hypoflow {

enum class Model { BgkBoltzmann, BgkP, FokkerPlanckP };

std::string to_string(Model m);
Model model_from_string(const std::string& s);

/// Relative slack below which a constraint still counts as satisfied.
inline constexpr double kFeasibilityTolerance = 1e-12;

struct ConstraintValue {
  std::string id;
  double lhs = 0.0;    // satisfied when lhs >= -tolerance * scale
  double scale = 1.0;  // magnitude of the terms entering lhs
  bool satisfied = false;
  bool eta_dependent = true;
};

struct FeasibilityReport {
  std::vector<ConstraintValue> constraints;
  std::string binding;
  bool feasible = false;

  const ConstraintValue& at(const std::string& id) const;
};

/// Constants of the decay statement
///   I(t) + beta E(t) <= exp(-rate t) (alpha I(0) + rhs_factor beta E(0)),
///   H(t) <= exp(-rate t) gamma I(0),
/// where E is H_pi for the BGK models and H for Fokker-Planck.
struct Prefactors {
  double alpha = 0.0;
  double beta = 0.0;
  double gamma = 0.0;
  double rhs_factor = 1.0;
};

struct CertificateParams {
  Model model = Model::BgkBoltzmann;
  double lambda = 0.0;
  double p = 1.0;  // 1 stands for the Boltzmann entropy
  double A1 = 0.0, A2 = 0.0, A3 = 1.0, A4 = 0.0;
  double eps = 0.0, eps1 = 0.0, eps2 = 0.0;
  double eta = 0.0;
  double C = 0.0;
  double alpha = 0.5;
  double rate = 0.0;
  Prefactors prefactors;
  FeasibilityReport feasibility;

  bool feasible() const { return feasibility.feasible; }
  PIndex p_index() const { return model == Model::BgkBoltzmann ? PIndex::log_entropy() : PIndex::power(p); }

  /// A1 I_X + A2 I_M + A3 I_V
  double lyapunov_j(const FunctionalReport& r) const;
  /// Entropy term paired with J: H_pi for BGK, H for Fokker-Planck.
  double entropy_term(const FunctionalReport& r) const;
  /// J + A4 * entropy term
  double composite(const FunctionalReport& r) const;
  /// I + beta * entropy term
  double decay_lhs(const FunctionalReport& r) const;
  /// exp(-rate t) (alpha I(0) + rhs_factor beta entropy term(0))
  double decay_rhs(const FunctionalReport& initial, double t) const;
};

/// max(C, 1/2): tensorizes the torus constant with the Gaussian one so that
/// H <= C_H I holds on the full phase space.
double phase_space_constant(double torus_constant);

CertificateParams paper_constants_bgk(double lambda, double C, double eta);
CertificateParams paper_constants_bgk_p(double lambda, double p, double C, double eta);
CertificateParams paper_constants_fp(double p, double C);

/// Maximizes the certified rate over the splitter eta (bisection on the
/// feasible interval (0, eta*]). Fokker-Planck has no free parameter.
CertificateParams optimize_rate(Model model, double lambda, double p, double C);

struct ConstantEstimate {
  double C = 0.0;           // best ratio times the safety factor
  double best_ratio = 0.0;  // sup of H_pi / I over the trials
  int iterations = 0;
  bool converged = false;
  std::vector<double> best_coefficients;
};

struct ConstantEstimatorOptions {
  int max_mode = 2;
  int starts = 4;
  int max_iterations = 300;
  double amplitude_floor = 1e-3;
  double amplitude_ceiling = 2.0;
  double safety_factor = 1.1;
  unsigned long long seed = 12345;
};

/// Trial density exp(phi) / mean on the spatial grid, phi a real trigonometric
/// polynomial with the given coefficients (cos, sin per mode).
SpatialField<double> constant_trial_density(const Grid<double>& grid, const std::vector<double>& coefficients,
                                            int max_mode);
int constant_trial_size(int dim, int max_mode);
/// H_pi(rho) / I(rho) for a density on the torus.
double functional_ratio(const SpatialField<double>& rho, const Grid<double>& grid, const PIndex& p);

/// Lower estimate of the best C in H_pi <= C I_spatial on T^d, by projected
/// gradient ascent of the ratio over band-limited positive trials.
ConstantEstimate estimate_functional_constant(const Grid<double>& grid, const PIndex& p,
                                              const ConstantEstimatorOptions& opt = {});

void to_json(nlohmann::json& j, const CertificateParams& c);
void to_json(nlohmann::json& j, const FeasibilityReport& f);

}  // namespace hypoflow
