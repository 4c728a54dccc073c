#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <vector>

#include "hypoflow/phase_space.hpp"

namespace hypoflow {

/// h(x, v) = A(v) (1 + sum_k c_k(v) cos(2 pi k.x / period + theta_k)) / Z with
/// A(v) = exp(drift v + spread psi_2(v)) and c_k(v) = alpha_k + beta_k sin(omega v_a + delta_k).
/// The spatial part is a trigonometric polynomial, so free transport keeps it
/// exact on the grid, and sum |alpha| + |beta| = amplitude keeps h positive.
struct RandomStateOptions {
  int max_mode = 2;
  double amplitude = 0.5;
  double drift = 0.2;
  double spread = 0.03;
  double omega = 0.7;
};

/// Uniform on [0, 1) from the top 53 bits; identical across standard libraries.
inline double unit_uniform(std::mt19937_64& rng) { return double(rng() >> 11) * 0x1.0p-53; }

inline double symmetric_uniform(std::mt19937_64& rng) { return 2.0 * unit_uniform(rng) - 1.0; }

template <typename Scalar = double>
State<Scalar> random_state(GridPtr<Scalar> grid, std::mt19937_64& rng, const RandomStateOptions& opt = {}) {
  using std::cos;
  using std::exp;
  using std::sin;
  if (!(opt.amplitude >= 0.0 && opt.amplitude < 1.0)) throw ConfigError("random_state: amplitude must lie in [0, 1)");
  if (opt.max_mode < 1 || 2 * opt.max_mode >= grid->nx()) throw ConfigError("random_state: max_mode out of range");
  const int d = grid->dim();
  const Scalar two_pi = Scalar(2) * std::numbers::pi_v<Scalar>;

  struct Mode {
    std::vector<int> k;
    Scalar theta, alpha, beta, delta;
    int axis;
  };
  std::vector<Mode> modes;
  const int m = opt.max_mode;
  // One representative per +-k pair.
  const auto add_mode = [&](std::vector<int> k) {
    Mode md;
    md.k = std::move(k);
    md.theta = Scalar(std::numbers::pi * symmetric_uniform(rng));
    md.alpha = Scalar(symmetric_uniform(rng));
    md.beta = Scalar(symmetric_uniform(rng));
    md.delta = Scalar(std::numbers::pi * symmetric_uniform(rng));
    md.axis = static_cast<int>(rng() % static_cast<std::uint64_t>(d));
    modes.push_back(std::move(md));
  };
  if (d == 1) {
    for (int k = 1; k <= m; ++k) add_mode({k});
  } else {
    for (int k0 = 0; k0 <= m; ++k0) {
      for (int k1 = -m; k1 <= m; ++k1) {
        if (k0 == 0 && k1 <= 0) continue;
        add_mode({k0, k1});
      }
    }
  }
  Scalar budget(0);
  for (const Mode& md : modes) budget += std::abs(md.alpha) + std::abs(md.beta);
  const Scalar scale = budget > Scalar(0) ? Scalar(opt.amplitude) / budget : Scalar(0);

  std::vector<Scalar> drift(d), spread(d);
  for (int a = 0; a < d; ++a) {
    drift[a] = Scalar(opt.drift * symmetric_uniform(rng));
    spread[a] = Scalar(opt.spread * symmetric_uniform(rng));
  }

  const Scalar period = Scalar(grid->spec().period);
  const Scalar omega = Scalar(opt.omega);
  Field<Scalar> h = sample(*grid, [&](const std::vector<Scalar>& x, const std::vector<Scalar>& v) {
    Scalar log_a(0);
    for (int a = 0; a < d; ++a) log_a += drift[a] * v[a] + spread[a] * (v[a] * v[a] - Scalar(1)) / std::sqrt(Scalar(2));
    Scalar bracket(1);
    for (const Mode& md : modes) {
      Scalar arg(0);
      for (int a = 0; a < d; ++a) arg += Scalar(md.k[a]) * x[a];
      const Scalar c = scale * (md.alpha + md.beta * sin(omega * v[md.axis] + md.delta));
      bracket += c * cos(two_pi * arg / period + md.theta);
    }
    return exp(log_a) * bracket;
  });
  return normalized_state(std::move(grid), std::move(h));
}

}  // namespace hypoflow
