#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include <nlohmann/json.hpp>

#include "hypoflow/certificate.hpp"
#include "hypoflow/random_state.hpp"

using namespace hypoflow;
using std::numbers::pi;

namespace {

// Largest feasible splitter, solved constraint by constraint in closed form.
double eta_star_bgk(double lambda, double C) {
  const double l2 = lambda * lambda + 2.0;
  const double a1_eta = lambda + 2.0 / lambda;  // A1 * eta
  double eta = lambda / l2;                                            // velocity dissipation
  eta = std::min(eta, l2 / (lambda * lambda * lambda));                // Pi X / X coefficient
  eta = std::min(eta, 2.0 * C / lambda);                               // rate domination
  eta = std::min(eta, a1_eta / (0.5 + lambda * lambda / 2.0));         // lower equivalence
  eta = std::min(eta, a1_eta / ((1.0 + std::sqrt(1.0 + 2.0 * lambda * lambda)) / 4.0));  // upper equivalence
  eta = std::min(eta, a1_eta / (lambda * lambda / 4.0));               // A1 A3 >= A2^2 / 4
  return eta;
}

}  // namespace

TEST_CASE("BGK certificate at the documented splitter") {
  const auto c = paper_constants_bgk(1.0, 100.0, 1.0 / 3.0);
  CHECK(c.feasible());
  CHECK(c.feasibility.at("velocity_dissipation").lhs == doctest::Approx(0.0).scale(1.0));
  CHECK(c.feasibility.binding == "velocity_dissipation");
  CHECK(c.rate == doctest::Approx(1.0 / 36.0).epsilon(1e-15));
  CHECK(c.A4 == doctest::Approx(3.0));
  CHECK(c.prefactors.alpha == doctest::Approx(36.0));
  CHECK(c.prefactors.beta == doctest::Approx(6.0));

  const auto bad = paper_constants_bgk(1.0, 100.0, 10.0);
  CHECK_FALSE(bad.feasible());
  CHECK_FALSE(bad.feasibility.at("velocity_dissipation").satisfied);

  std::mt19937_64 rng(3);
  for (int i = 0; i < 20; ++i) {
    const double lambda = 0.1 + 10 * unit_uniform(rng);
    const auto ci = paper_constants_bgk(lambda, 1.0, 0.01);
    CHECK(ci.A2 / ci.A3 == doctest::Approx(lambda).epsilon(1e-15));
  }
  CHECK_THROWS_AS(paper_constants_bgk(-1.0, 1.0, 0.1), ConfigError);
  CHECK_THROWS_AS(paper_constants_bgk(1.0, 1.0, 0.0), ConfigError);
}

TEST_CASE("BGK p-entropy certificate") {
  const auto a = paper_constants_bgk_p(1.0, 2.0, 1.0, 0.2);
  const auto b = paper_constants_bgk_p(1.0, 1.5, 1.0, 0.2);
  CHECK(a.A1 == b.A1);
  CHECK(a.A2 == b.A2);
  CHECK(a.rate == b.rate);
  CHECK(a.feasibility.constraints.size() == b.feasibility.constraints.size());
  CHECK(a.rate == doctest::Approx(0.2 / 6.0));
  CHECK(a.eps1 == doctest::Approx(2.0));
  CHECK(a.eps2 == doctest::Approx(2.0));
  double prev = 1.0;
  for (double eta : {0.3, 0.1, 0.01, 1e-4, 1e-8}) {
    const double r = paper_constants_bgk_p(1.0, 1.5, 1.0, eta).rate;
    CHECK(r < prev);
    prev = r;
  }
  CHECK(prev < 1e-8);
}

TEST_CASE("Fokker-Planck certificate") {
  CHECK(paper_constants_fp(1.5, 1.0).rate == doctest::Approx(1.0 / 54.0).epsilon(1e-15));
  CHECK(paper_constants_fp(1.5, 2.0 / 9.0).rate == doctest::Approx(1.0 / 12.0).epsilon(1e-15));
  CHECK(paper_constants_fp(1.5, 0.05).rate == doctest::Approx(1.0 / 12.0));
  const auto c = paper_constants_fp(1.5, 0.5);
  CHECK(c.A4 == 27.0 / 4.0);
  CHECK(c.feasible());
  CHECK(c.prefactors.alpha == 3.0);
  CHECK(c.prefactors.beta == 13.5);
  const auto o = optimize_rate(Model::FokkerPlanckP, 0.0, 1.5, 0.5);
  CHECK(o.rate == c.rate);
  CHECK(o.A1 == c.A1);
  CHECK(o.feasibility.binding == c.feasibility.binding);
}

TEST_CASE("rate optimizer matches the closed-form splitter") {
  const auto big = optimize_rate(Model::BgkBoltzmann, 1.0, 1.0, 1e6);
  CHECK(big.eta == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
  CHECK(big.rate == doctest::Approx(1.0 / 36.0).epsilon(1e-12));
  CHECK(big.feasibility.binding == "velocity_dissipation");

  const double C = 0.01;
  const auto small = optimize_rate(Model::BgkBoltzmann, 1.0, 1.0, C);
  CHECK(small.rate == doctest::Approx(C * 1.0 / (2.0 * 3.0)).epsilon(1e-12));
  CHECK(small.feasibility.binding == "rate_domination");

  std::mt19937_64 rng(99);
  for (int i = 0; i < 50; ++i) {
    const double lambda = std::exp(4 * symmetric_uniform(rng));
    const double c = std::exp(3 * symmetric_uniform(rng));
    CAPTURE(lambda);
    CAPTURE(c);
    const auto opt = optimize_rate(Model::BgkBoltzmann, lambda, 1.0, c);
    CHECK(opt.eta == doctest::Approx(eta_star_bgk(lambda, c)).epsilon(1e-10));
    CHECK(opt.feasible());
    const auto opt_p = optimize_rate(Model::BgkP, lambda, 1.5, c);
    CHECK(opt_p.feasible());
    CHECK(opt_p.rate > 0);
  }
}

TEST_CASE("feasibility is monotone in the splitter") {
  std::mt19937_64 rng(5);
  for (int i = 0; i < 40; ++i) {
    const double lambda = std::exp(3 * symmetric_uniform(rng));
    const double C = std::exp(2 * symmetric_uniform(rng));
    for (Model m : {Model::BgkBoltzmann, Model::BgkP}) {
      bool seen_infeasible = false;
      for (int k = -40; k <= 20; ++k) {
        const double eta = std::pow(1.3, k);
        const auto c = m == Model::BgkBoltzmann ? paper_constants_bgk(lambda, C, eta)
                                                : paper_constants_bgk_p(lambda, 1.5, C, eta);
        if (seen_infeasible) CHECK_FALSE(c.feasible());
        if (!c.feasible()) seen_infeasible = true;
      }
      CHECK(seen_infeasible);
    }
  }
}

TEST_CASE("certificate norms bracket the Lyapunov functional on random states") {
  auto g = build_grid(GridSpec{1, 16, 24, 1.0});
  std::mt19937_64 rng(17);
  const auto cert = optimize_rate(Model::BgkBoltzmann, 1.0, 1.0, 0.0139);
  const auto cert_p = optimize_rate(Model::BgkP, 1.0, 1.5, 0.0139);
  const auto cert_fp = paper_constants_fp(1.5, 0.5);
  for (int i = 0; i < 100; ++i) {
    const State<double> s = random_state(g, rng);
    for (const auto* c : {&cert, &cert_p, &cert_fp}) {
      const auto r = functional_report(s, c->p_index());
      const double I = r.at(FunctionalName::I_X) + r.at(FunctionalName::I_V);
      const double J = c->lyapunov_j(r);
      const double upper = c->model == Model::FokkerPlanckP ? 1.5 : 2.0 * c->A1;
      CHECK(J >= 0.5 * c->A3 * I * (1 - 1e-12));
      CHECK(J <= upper * I * (1 + 1e-12));
      // Chain of the decay statement at t = 0.
      CHECK(c->decay_lhs(r) <= c->decay_rhs(r, 0.0) * (1 + 1e-12));
    }
  }
}

TEST_CASE("certificate JSON carries every constraint") {
  const auto c = optimize_rate(Model::BgkBoltzmann, 2.0, 1.0, 0.5);
  const nlohmann::json j = c;
  CHECK(j["model"] == "bgk_boltzmann");
  CHECK(j["feasibility"]["constraints"].size() == c.feasibility.constraints.size());
  CHECK(j["rate"].get<double>() == c.rate);
  CHECK(model_from_string("bgk_p") == Model::BgkP);
  CHECK_THROWS_AS(model_from_string("nope"), ConfigError);
}

TEST_CASE("functional constant estimator on the unit torus") {
  const double sharp = 1.0 / (8.0 * pi * pi);
  auto g = build_grid(GridSpec{1, 32, 4, 1.0});
  SUBCASE("perturbative trial approaches the spectral-gap value") {
    for (double delta : {1e-2, 1e-3}) {
      SpatialField<double> rho(g->num_x());
      for (Eigen::Index i = 0; i < rho.size(); ++i) rho(i) = 1.0 + delta * std::cos(2 * pi * g->x_coord(i, 0));
      CHECK(functional_ratio(rho, *g, PIndex::power(2.0)) == doctest::Approx(sharp).epsilon(2 * delta));
      CHECK(functional_ratio(rho, *g, PIndex::log_entropy()) == doctest::Approx(sharp).epsilon(2 * delta));
    }
  }
  SUBCASE("estimate brackets the sharp constant") {
    for (const PIndex& p : {PIndex::log_entropy(), PIndex::power(1.5), PIndex::power(2.0)}) {
      CAPTURE(p.label());
      const auto est = estimate_functional_constant(*g, p);
      CHECK(est.best_ratio <= sharp * (1 + 1e-9));
      CHECK(est.best_ratio >= sharp * 0.99);
      CHECK(est.C == doctest::Approx(1.1 * est.best_ratio));
    }
  }
  SUBCASE("holdout trials respect the estimate") {
    const auto est = estimate_functional_constant(*g, PIndex::log_entropy());
    std::mt19937_64 rng(404);
    const int n = constant_trial_size(1, 2);
    for (int i = 0; i < 200; ++i) {
      std::vector<double> c(n);
      for (double& x : c) x = 1.5 * symmetric_uniform(rng);
      const auto rho = constant_trial_density(*g, c, 2);
      CHECK(functional_ratio(rho, *g, PIndex::log_entropy()) <= est.C);
    }
  }
  SUBCASE("estimated constant is flat across the p family") {
    double lo = 1e300, hi = 0;
    for (double p : {1.1, 1.3, 1.5, 1.7, 1.9, 2.0}) {
      const double c = estimate_functional_constant(*g, PIndex::power(p)).C;
      lo = std::min(lo, c);
      hi = std::max(hi, c);
    }
    CHECK(hi <= lo * 1.01);
  }
}

TEST_CASE("estimator in two dimensions") {
  auto g = build_grid(GridSpec{2, 16, 4, 1.0});
  ConstantEstimatorOptions opt;
  opt.max_mode = 1;
  opt.starts = 2;
  const auto est = estimate_functional_constant(*g, PIndex::log_entropy(), opt);
  const double sharp = 1.0 / (8.0 * pi * pi);
  CHECK(est.best_ratio <= sharp * (1 + 1e-9));
  CHECK(est.best_ratio >= sharp * 0.99);
}
