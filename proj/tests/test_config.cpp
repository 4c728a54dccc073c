#include <doctest.h>

#include <string>

#include <nlohmann/json.hpp>

#include "hypoflow/config.hpp"

using namespace hypoflow;

namespace {

const char* kMinimal = R"(
[grid]
nx = 32
nv = 16

[model]
collision = bgk
lambda = 1.0
)";

std::string with(const std::string& extra) { return std::string(kMinimal) + extra; }

}  // namespace

TEST_CASE("minimal BGK config resolves defaults") {
  const RunConfig c = parse_config(kMinimal);
  CHECK(c.grid.dim == 1);
  CHECK(c.grid.nx == 32);
  CHECK(c.grid.nv == 16);
  CHECK(c.model == Model::BgkBoltzmann);
  CHECK(c.lambda == 1.0);
  CHECK(c.p.boltzmann);
  CHECK(c.schedule.dt == doctest::Approx(0.01));
  CHECK(c.schedule.collision.is_bgk());
  CHECK(c.initial.family == "cosine");
  CHECK_FALSE(c.initial.seed_given);
}

TEST_CASE("default dt follows lambda") {
  const RunConfig c = parse_config("[model]\ncollision = bgk\nlambda = 4\n");
  CHECK(c.schedule.dt == doctest::Approx(0.0025));
}

TEST_CASE("BGK without lambda is rejected") {
  CHECK_THROWS_AS(parse_config("[model]\ncollision = bgk\n"), ConfigError);
}

TEST_CASE("unknown sections, keys and values are rejected") {
  CHECK_THROWS_AS(parse_config(with("[extras]\nfoo = 1\n")), ConfigError);
  CHECK_THROWS_AS(parse_config(with("[schedule]\nsteps = 10\n")), ConfigError);
  CHECK_THROWS_AS(parse_config(with("[schedule]\ndt = fast\n")), ConfigError);
  CHECK_THROWS_AS(parse_config(with("[initial]\nfamily = gaussian\n")), ConfigError);
  CHECK_THROWS_AS(parse_config(with("[grid]\nperiod = 2\n")), ConfigError);
  CHECK_THROWS_AS(parse_config(with("[fit]\nfunctional = nonsense\n")), ConfigError);
  CHECK_THROWS_AS(parse_config("[model]\ncollision = landau\n"), ConfigError);
}

TEST_CASE("entropy index is validated") {
  CHECK_THROWS_AS(parse_config(with("[entropy]\nfamily = p\np = 2.5\n")), ConfigError);
  CHECK_THROWS_AS(parse_config(with("[entropy]\nfamily = p\n")), ConfigError);
  const RunConfig c = parse_config(with("[entropy]\nfamily = p\np = 1.5\n"));
  CHECK(c.model == Model::BgkP);
  CHECK(c.p.p == 1.5);
}

TEST_CASE("Fokker-Planck takes the p family and no lambda") {
  const char* fp = "[model]\ncollision = fokker_planck\n[entropy]\nfamily = p\np = 1.5\n";
  const RunConfig c = parse_config(fp);
  CHECK(c.model == Model::FokkerPlanckP);
  CHECK_FALSE(c.schedule.collision.is_bgk());
  CHECK_THROWS_AS(parse_config("[model]\ncollision = fokker_planck\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("[model]\ncollision = fokker_planck\nlambda = 1\n[entropy]\nfamily = p\np = 1.5\n"),
                  ConfigError);
}

TEST_CASE("list values and output formats") {
  const RunConfig c = parse_config(with("[verify]\netas = 0.5, 2\ntransport_times = 0.01\n[output]\nformats = csv\n"));
  CHECK(c.verify.etas == std::vector<double>{0.5, 2.0});
  CHECK(c.verify.transport_times == std::vector<double>{0.01});
  CHECK(c.output.csv);
  CHECK_FALSE(c.output.json);
}

TEST_CASE("seed in the file is recorded") {
  const RunConfig c = parse_config(with("[initial]\nfamily = random\nseed = 17\n"));
  CHECK(c.initial.seed == 17);
  CHECK(c.initial.seed_given);
}

TEST_CASE("config hash is stable and sensitive") {
  const std::string a = config_hash(parse_config(kMinimal));
  CHECK(a.size() == 16);
  CHECK(a == config_hash(parse_config(kMinimal)));
  CHECK(a == config_hash(parse_config(std::string("; comment\n") + kMinimal)));
  CHECK(a != config_hash(parse_config(with("[schedule]\nt_end = 2\n"))));
  CHECK(config_json(parse_config(kMinimal))["grid"]["nx"] == 32);
}

TEST_CASE("initial states are normalized and guarded") {
  RunConfig c = parse_config(kMinimal);
  auto grid = build_grid<double>(c.grid);

  c.initial.family = "equilibrium";
  CHECK((initial_state(c, grid).h.array() - 1.0).abs().maxCoeff() < 1e-15);

  c.initial.family = "cosine";
  c.initial.velocity_coupling = 0.2;
  const auto s = initial_state(c, grid);
  CHECK(mass(s) == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(s.h.minCoeff() >= kMinInitialDensity);

  c.initial.amplitude = 0.95;
  CHECK_THROWS_AS(initial_state(c, grid), ConfigError);

  c.initial.family = "random";
  c.initial.amplitude = 0.5;
  c.initial.seed = 3;
  const auto r1 = initial_state(c, grid);
  const auto r2 = initial_state(c, grid);
  CHECK((r1.h - r2.h).cwiseAbs().maxCoeff() == 0.0);
}
