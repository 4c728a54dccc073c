#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "commands.hpp"

int main(int argc, char** argv) {
  CLI::App app{"hypoflow: kinetic relaxation simulator and hypocoercivity checker"};
  app.set_version_flag("--version", hypoflow::cli::kVersion);
  app.require_subcommand(1);

  std::string config;
  std::optional<std::string> output_dir;
  std::optional<std::uint64_t> seed;
  int jobs = 1;

  const std::pair<const char*, const char*> commands[] = {
      {"simulate", "Run a trajectory and write functional reports"},
      {"certify", "Compute Lyapunov certificate constants"},
      {"verify", "Check the lemma table on seeded random states"},
      {"fit-decay", "Fit an exponential rate to a functional along a trajectory"},
      {"estimate-constant", "Estimate the torus functional-inequality constant"},
  };
  for (const auto& [name, help] : commands) {
    CLI::App* sub = app.add_subcommand(name, help);
    sub->add_option("config", config, "INI configuration file")->required()->check(CLI::ExistingFile);
    sub->add_option("--output-dir", output_dir, "Override [output] directory");
    sub->add_option("--seed", seed, "Seed for random initial data (falls back to HYPOFLOW_SEED)");
    sub->add_option("--jobs", jobs, "Worker threads for independent tasks")->check(CLI::PositiveNumber);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : hypoflow::cli::kConfigFailure;
  }
  const std::string command = app.get_subcommands().front()->get_name();
  return hypoflow::cli::dispatch(command, config, output_dir, seed, jobs, std::cout, std::cerr);
}
