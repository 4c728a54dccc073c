#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "hypoflow/certificate.hpp"
#include "hypoflow/integrator.hpp"

namespace hypoflow {

/// Initial data families.
///   equilibrium: h = 1
///   cosine:      h = 1 + a cos(2 pi m x_1) (1 + c v_1 / sqrt(1 + v_1^2))
///   velocity:    h = 1 + a v_1 / sqrt(1 + v_1^2)        (x-independent)
///   random:      random_state with the given seed, amplitude and max_mode
struct InitialData {
  std::string family = "cosine";
  double amplitude = 0.5;
  int mode = 1;
  double velocity_coupling = 0.0;
  int max_mode = 2;
  std::uint64_t seed = 0;
  bool seed_given = false;  // set when the config file names a seed
};

inline constexpr double kMinInitialDensity = 0.1;

struct OutputOptions {
  std::string directory = "hypoflow-out";
  bool csv = true;
  bool json = true;
  bool save_states = true;
};

struct CertificateOptions {
  std::optional<double> C;
  std::optional<double> eta;
  int estimator_starts = 4;
  int estimator_max_mode = 2;
};

struct VerifyOptions {
  int states = 100;
  double mixed_eta = 1.0;
  std::vector<double> epsilons{0.1, 1.0, 10.0};
  std::vector<double> etas{0.1, 1.0, 10.0};
  std::optional<double> delta;
  double abs_tolerance = 1e-6;
  double rel_tolerance = 1e-4;
  double speed_scale = 1.0;  // != 1 corrupts the transport probe
  std::vector<double> transport_times{0.05, 0.1};
};

struct FitOptions {
  std::string functional = "composite";
  double t_start = 1.0;
  double t_end = 10.0;
  std::string trajectory;  // existing trajectory directory; simulate when empty
};

struct RunConfig {
  GridSpec grid{1, 64, 32, 1.0};
  Model model = Model::BgkBoltzmann;
  double lambda = 1.0;
  PIndex p = PIndex::log_entropy();
  InitialData initial;
  Schedule schedule;
  OutputOptions output;
  CertificateOptions certificate;
  VerifyOptions verify;
  FitOptions fit;

  CollisionKind collision() const {
    return model == Model::FokkerPlanckP ? CollisionKind::fokker_planck() : CollisionKind::bgk(lambda);
  }
};

/// Parses the INI text. Unknown sections or keys, malformed values and
/// inconsistent combinations raise ConfigError.
RunConfig parse_config(const std::string& text);
RunConfig load_config(const std::string& path);

/// Canonical JSON of the resolved configuration (stable key order).
nlohmann::json config_json(const RunConfig& cfg);
/// FNV-1a 64 of the canonical JSON, as 16 hex digits.
std::string config_hash(const RunConfig& cfg);

/// Builds and normalizes the initial state; ConfigError if h < 0.1 anywhere.
State<double> initial_state(const RunConfig& cfg, GridPtr<double> grid);

}  // namespace hypoflow
