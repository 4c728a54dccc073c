#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>

#include "hypoflow/config.hpp"

namespace hypoflow::cli {

inline constexpr const char* kVersion = "0.1.0";

enum ExitCode { kSuccess = 0, kConfigFailure = 1, kInvariantFailure = 2 };

struct Context {
  std::filesystem::path output_dir;
  int jobs = 1;
  std::ostream* out = nullptr;
};

/// Applies --output-dir and the seed precedence: --seed, then the config
/// file, then HYPOFLOW_SEED.
Context make_context(RunConfig& cfg, const std::optional<std::string>& output_dir,
                     const std::optional<std::uint64_t>& seed, int jobs, std::ostream& out);

int run_simulate(const RunConfig& cfg, const Context& ctx);
int run_certify(const RunConfig& cfg, const Context& ctx);
int run_verify(const RunConfig& cfg, const Context& ctx);
int run_fit_decay(const RunConfig& cfg, const Context& ctx);
int run_estimate_constant(const RunConfig& cfg, const Context& ctx);

/// Runs `command` ("simulate", ...) on the config file and maps errors to
/// exit codes, reporting them on `err`.
int dispatch(const std::string& command, const std::string& config_path, const std::optional<std::string>& output_dir,
             const std::optional<std::uint64_t>& seed, int jobs, std::ostream& out, std::ostream& err);

}  // namespace hypoflow::cli
