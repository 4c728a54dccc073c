#pragma once

#include <cmath>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include "hypoflow/errors.hpp"

namespace hypoflow {

template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

/// Values of the orthonormal probabilists' Hermite functions psi_0..psi_{n-1}
/// at `v`, psi_k = He_k / sqrt(k!), orthonormal against the standard normal.
template <typename Scalar>
Vector<Scalar> hermite_values(int n, Scalar v) {
  using std::sqrt;
  Vector<Scalar> psi(n);
  if (n == 0) return psi;
  psi(0) = Scalar(1);
  if (n > 1) psi(1) = v;
  for (int k = 1; k + 1 < n; ++k) {
    psi(k + 1) = (v * psi(k) - sqrt(Scalar(k)) * psi(k - 1)) / sqrt(Scalar(k + 1));
  }
  return psi;
}

/// Gauss rule for the weight M(v) = (2 pi)^{-1/2} exp(-v^2/2). Weights sum to one.
template <typename Scalar>
struct GaussHermiteRule {
  Vector<Scalar> nodes;
  Vector<Scalar> weights;
};

// Golub-Welsch gives the starting nodes; Newton on psi_n polishes them and the
// Christoffel form 1 / sum_k psi_k(v_j)^2 keeps tiny tail weights at full
// relative accuracy.
template <typename Scalar>
GaussHermiteRule<Scalar> gauss_hermite_rule(int n) {
  using std::abs;
  using std::sqrt;
  if (n < 1) throw ConfigError("gauss_hermite_rule: need at least one node");

  Matrix<Scalar> jacobi = Matrix<Scalar>::Zero(n, n);
  for (int i = 1; i < n; ++i) {
    jacobi(i, i - 1) = jacobi(i - 1, i) = sqrt(Scalar(i));
  }
  Eigen::SelfAdjointEigenSolver<Matrix<Scalar>> solver(jacobi, Eigen::EigenvaluesOnly);
  Vector<Scalar> nodes = solver.eigenvalues();

  for (int j = 0; j < n; ++j) {
    Scalar v = nodes(j);
    for (int it = 0; it < 8; ++it) {
      const Vector<Scalar> psi = hermite_values<Scalar>(n + 1, v);
      // psi_n' = sqrt(n) psi_{n-1}
      const Scalar step = psi(n) / (sqrt(Scalar(n)) * psi(n - 1));
      v -= step;
      if (abs(step) <= Eigen::NumTraits<Scalar>::epsilon() * (Scalar(1) + abs(v))) break;
    }
    nodes(j) = v;
  }
  // Exact symmetry about the origin.
  for (int j = 0; j < n / 2; ++j) {
    const Scalar a = (nodes(n - 1 - j) - nodes(j)) / Scalar(2);
    nodes(j) = -a;
    nodes(n - 1 - j) = a;
  }
  if (n % 2 == 1) nodes(n / 2) = Scalar(0);

  Vector<Scalar> weights(n);
  for (int j = 0; j < n; ++j) {
    weights(j) = Scalar(1) / hermite_values<Scalar>(n, nodes(j)).squaredNorm();
  }
  weights /= weights.sum();
  return {std::move(nodes), std::move(weights)};
}

/// Collocation basis on Gauss-Hermite nodes. Moves between nodal samples and
/// coefficients in the psi_k basis; derivative and Ornstein-Uhlenbeck
/// propagators are diagonal or bidiagonal in coefficient space.
template <typename Scalar>
class HermiteBasis {
 public:
  explicit HermiteBasis(int n) : rule_(gauss_hermite_rule<Scalar>(n)) {
    const int size = n;
    synthesis_.resize(size, size);
    for (int j = 0; j < size; ++j) {
      synthesis_.row(j) = hermite_values<Scalar>(size, rule_.nodes(j)).transpose();
    }
    analysis_ = synthesis_.transpose() * rule_.weights.asDiagonal();

    Matrix<Scalar> shift = Matrix<Scalar>::Zero(size, size);
    for (int k = 1; k < size; ++k) shift(k - 1, k) = std::sqrt(Scalar(k));
    derivative_ = synthesis_ * shift * analysis_;
  }

  int size() const { return static_cast<int>(rule_.nodes.size()); }
  const Vector<Scalar>& nodes() const { return rule_.nodes; }
  const Vector<Scalar>& weights() const { return rule_.weights; }

  /// (j, k) -> psi_k(v_j)
  const Matrix<Scalar>& synthesis() const { return synthesis_; }
  /// (k, j) -> w_j psi_k(v_j); analysis() * synthesis() = I
  const Matrix<Scalar>& analysis() const { return analysis_; }
  /// Nodal matrix of d/dv on polynomials of degree < size().
  const Matrix<Scalar>& derivative() const { return derivative_; }

  /// Nodal matrix of exp(t (d^2/dv^2 - v d/dv)): psi_k decays like exp(-k t).
  Matrix<Scalar> ou_propagator(Scalar t) const {
    using std::exp;
    Vector<Scalar> decay(size());
    for (int k = 0; k < size(); ++k) decay(k) = exp(-Scalar(k) * t);
    return synthesis_ * decay.asDiagonal() * analysis_;
  }

 private:
  GaussHermiteRule<Scalar> rule_;
  Matrix<Scalar> synthesis_;
  Matrix<Scalar> analysis_;
  Matrix<Scalar> derivative_;
};

}  // namespace hypoflow
