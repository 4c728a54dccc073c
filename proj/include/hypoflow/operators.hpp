#pragma once

#include <cmath>
#include <string>

#include "hypoflow/phase_space.hpp"

namespace hypoflow {

/// Collision part of the kinetic equation: BGK relaxation lambda (Pi - I) or
/// the velocity Ornstein-Uhlenbeck generator.
struct CollisionKind {
  enum class Tag { Bgk, FokkerPlanck };

  Tag tag = Tag::Bgk;
  double lambda = 1.0;

  static CollisionKind bgk(double lambda) {
    if (!(lambda > 0.0) || !std::isfinite(lambda)) throw ConfigError("BGK rate lambda must be positive");
    return {Tag::Bgk, lambda};
  }
  static CollisionKind fokker_planck() { return {Tag::FokkerPlanck, 0.0}; }

  bool is_bgk() const { return tag == Tag::Bgk; }
  std::string name() const { return is_bgk() ? "bgk" : "fokker_planck"; }
};

/// Free streaming h(x, v) <- h(x - v t, v), one Fourier phase shift per
/// velocity node. `speed_scale` exists for mutation testing only.
template <typename Scalar>
State<Scalar> transport_flow(const State<Scalar>& s, Scalar t, Scalar speed_scale = Scalar(1)) {
  State<Scalar> out = s;
  out.time = s.time + t;
  if (t == Scalar(0)) return out;
  const Grid<Scalar>& grid = *s.grid;
  Eigen::FFT<Scalar> fft;
  for (Eigen::Index iv = 0; iv < grid.num_v(); ++iv) {
    for (int a = 0; a < grid.dim(); ++a) {
      const Scalar shift = speed_scale * grid.velocity(a)(iv) * t;
      detail::for_each_spatial_line(out.h.col(iv).data(), grid, a,
                                    [&](std::vector<Scalar>& line) { grid.fourier().shift(line, shift, fft); });
    }
  }
  return out;
}

/// Exact BGK relaxation: h <- e^{-lambda t} h + (1 - e^{-lambda t}) Pi h.
template <typename Scalar>
State<Scalar> bgk_flow(const State<Scalar>& s, Scalar lambda, Scalar t) {
  using std::exp;
  if (!(lambda > Scalar(0))) throw ConfigError("bgk_flow: lambda must be positive");
  if (t < Scalar(0)) throw ConfigError("bgk_flow: duration must be non-negative");
  State<Scalar> out = s;
  out.time = s.time + t;
  if (t == Scalar(0)) return out;
  const Scalar keep = exp(-lambda * t);
  const SpatialField<Scalar> rho = project_pi(s);
  out.h = keep * s.h + ((Scalar(1) - keep) * rho).replicate(1, s.h.cols());
  return out;
}

/// Per-axis Hermite eigen-decay: coefficient of psi_n scales by exp(-|n| t).
/// Nodal values below -1e-8 raise InvariantError.
template <typename Scalar>
State<Scalar> fokker_planck_flow(const State<Scalar>& s, Scalar t) {
  if (t < Scalar(0)) throw ConfigError("fokker_planck_flow: duration must be non-negative");
  State<Scalar> out = s;
  out.time = s.time + t;
  if (t == Scalar(0)) return out;
  const Grid<Scalar>& grid = *s.grid;
  const Matrix<Scalar> propagator = grid.hermite().ou_propagator(t);
  for (int a = 0; a < grid.dim(); ++a) out.h = apply_velocity_operator(propagator, out.h, grid, a);
  if (out.h.minCoeff() < Scalar(-1e-8)) {
    throw InvariantError("fokker_planck_flow: positivity lost, min h = " + std::to_string(double(out.h.minCoeff())));
  }
  return out;
}

template <typename Scalar>
State<Scalar> collision_flow(const State<Scalar>& s, const CollisionKind& kind, Scalar t) {
  return kind.is_bgk() ? bgk_flow(s, Scalar(kind.lambda), t) : fokker_planck_flow(s, t);
}

}  // namespace hypoflow
