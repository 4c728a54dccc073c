#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "hypoflow/operators.hpp"

namespace hypoflow {

struct Schedule {
  double dt = 0.01;
  double t_end = 1.0;
  int snapshot_every = 1;
  CollisionKind collision = CollisionKind::bgk(1.0);

  /// 0.01 min(1, 1/lambda); 0.01 for Fokker-Planck.
  static double default_dt(const CollisionKind& c) {
    return c.is_bgk() ? 0.01 * std::min(1.0, 1.0 / c.lambda) : 0.01;
  }

  void validate() const {
    if (!(dt > 0.0) || !std::isfinite(dt)) throw ConfigError("schedule: dt must be positive");
    if (!(t_end >= 0.0) || !std::isfinite(t_end)) throw ConfigError("schedule: t_end must be non-negative");
    if (snapshot_every < 1) throw ConfigError("schedule: snapshot_every must be >= 1");
  }
};

template <typename Scalar = double>
struct Trajectory {
  std::vector<std::pair<Scalar, State<Scalar>>> snapshots;
  Schedule schedule;
};

/// transport(dt/2) o collision(dt) o transport(dt/2)
template <typename Scalar>
State<Scalar> strang_step(const State<Scalar>& s, Scalar dt, const CollisionKind& collision) {
  if (!(dt > Scalar(0))) throw ConfigError("strang_step: dt must be positive");
  const Scalar half = dt / Scalar(2);
  State<Scalar> out = transport_flow(s, half);
  out = collision_flow(out, collision, dt);
  out = transport_flow(out, half);
  out.time = s.time + dt;
  return out;
}

/// Repeated Strang steps from `initial`; the last step is shortened to land on
/// t_end. Positivity or mass failure mid-run throws with the step index.
template <typename Scalar>
Trajectory<Scalar> simulate(const State<Scalar>& initial, const Schedule& schedule, double mass_tolerance = 1e-9) {
  schedule.validate();
  check_state_invariants(initial, mass_tolerance);

  Trajectory<Scalar> traj;
  traj.schedule = schedule;
  traj.snapshots.emplace_back(initial.time, initial);
  if (schedule.t_end == 0.0) return traj;

  const auto steps = static_cast<long>(std::ceil(schedule.t_end / schedule.dt - 1e-9));
  const Scalar t0 = initial.time;
  State<Scalar> s = initial;
  for (long k = 1; k <= steps; ++k) {
    const Scalar target = (k == steps) ? t0 + Scalar(schedule.t_end) : t0 + Scalar(k) * Scalar(schedule.dt);
    s = strang_step(s, target - s.time, schedule.collision);
    s.time = target;
    try {
      check_state_invariants(s, mass_tolerance);
    } catch (const InvariantError& e) {
      throw InvariantError("simulate: step " + std::to_string(k) + " (t = " + std::to_string(double(target)) +
                           "): " + e.what());
    }
    if (k % schedule.snapshot_every == 0 || k == steps) traj.snapshots.emplace_back(s.time, s);
  }
  return traj;
}

}  // namespace hypoflow
