#pragma once

#include <cmath>
#include <cstdint>
#include <memory>
#include <string>
#include <type_traits>
#include <vector>

#include <Eigen/Dense>

#include "hypoflow/errors.hpp"
#include "hypoflow/fourier.hpp"
#include "hypoflow/hermite.hpp"

namespace hypoflow {

/// Phase-space sample: rows are spatial nodes, columns are velocity nodes.
template <typename Scalar>
using Field = Matrix<Scalar>;
/// One value per spatial node.
template <typename Scalar>
using SpatialField = Vector<Scalar>;

/// Densities below this are rejected by every functional that divides by h.
inline constexpr double kDensityFloor = 1e-12;

struct GridSpec {
  int dim = 1;
  int nx = 32;
  int nv = 16;
  double period = 1.0;

  void validate() const {
    if (dim != 1 && dim != 2) throw ConfigError("grid: dim must be 1 or 2, got " + std::to_string(dim));
    if (nx < 8 || nx % 2 != 0) throw ConfigError("grid: nx must be even and >= 8, got " + std::to_string(nx));
    if (nv < 4) throw ConfigError("grid: nv must be >= 4, got " + std::to_string(nv));
    if (!(period > 0.0)) throw ConfigError("grid: period must be positive");
  }

  friend bool operator==(const GridSpec&, const GridSpec&) = default;
};

/// Tensor grid on T^d x R^d. Spatial and velocity multi-indices are flattened
/// with axis 0 slowest: ix = sum_a i_a nx^(d-1-a).
template <typename Scalar = double>
class Grid {
 public:
  explicit Grid(const GridSpec& spec) : spec_(spec), hermite_((spec.validate(), spec.nv)), fourier_(spec.nx, Scalar(spec.period)) {
    x_nodes_.resize(spec.nx);
    for (int i = 0; i < spec.nx; ++i) x_nodes_(i) = Scalar(spec.period) * Scalar(i) / Scalar(spec.nx);

    num_x_ = ipow(spec.nx, spec.dim);
    num_v_ = ipow(spec.nv, spec.dim);
    weights_.resize(num_v_);
    velocity_.assign(spec.dim, Vector<Scalar>(num_v_));
    for (Eigen::Index iv = 0; iv < num_v_; ++iv) {
      Scalar w(1);
      for (int a = 0; a < spec.dim; ++a) {
        const int j = axis_index(iv, a, spec.nv);
        w *= hermite_.weights()(j);
        velocity_[a](iv) = hermite_.nodes()(j);
      }
      weights_(iv) = w;
    }
  }

  const GridSpec& spec() const { return spec_; }
  int dim() const { return spec_.dim; }
  int nx() const { return spec_.nx; }
  int nv() const { return spec_.nv; }
  Eigen::Index num_x() const { return num_x_; }
  Eigen::Index num_v() const { return num_v_; }

  const Vector<Scalar>& x_nodes() const { return x_nodes_; }
  const Vector<Scalar>& v_nodes() const { return hermite_.nodes(); }
  const Vector<Scalar>& v_weights() const { return hermite_.weights(); }
  const Vector<Scalar>& wavenumbers() const { return fourier_.wavenumbers(); }

  /// Tensor-product velocity weights, one per flattened velocity node.
  const Vector<Scalar>& weights() const { return weights_; }
  /// Velocity component `axis` at every flattened velocity node.
  const Vector<Scalar>& velocity(int axis) const { return velocity_[axis]; }
  Scalar x_coord(Eigen::Index ix, int axis) const { return x_nodes_(axis_index(ix, axis, spec_.nx)); }

  const HermiteBasis<Scalar>& hermite() const { return hermite_; }
  const FourierAxis<Scalar>& fourier() const { return fourier_; }

  int axis_index(Eigen::Index flat, int axis, int n) const {
    Eigen::Index stride = 1;
    for (int a = spec_.dim - 1; a > axis; --a) stride *= n;
    return static_cast<int>((flat / stride) % n);
  }

 private:
  static Eigen::Index ipow(int base, int exp) {
    Eigen::Index r = 1;
    for (int i = 0; i < exp; ++i) r *= base;
    return r;
  }

  GridSpec spec_;
  HermiteBasis<Scalar> hermite_;
  FourierAxis<Scalar> fourier_;
  Vector<Scalar> x_nodes_;
  Vector<Scalar> weights_;
  std::vector<Vector<Scalar>> velocity_;
  Eigen::Index num_x_ = 0;
  Eigen::Index num_v_ = 0;
};

template <typename Scalar = double>
using GridPtr = std::shared_ptr<const Grid<Scalar>>;

template <typename Scalar = double>
GridPtr<Scalar> build_grid(const GridSpec& spec) {
  spec.validate();
  return std::make_shared<const Grid<Scalar>>(spec);
}

/// Density ratio h = f / mu sampled on a grid, at simulation time `time`.
template <typename Scalar = double>
struct State {
  GridPtr<Scalar> grid;
  Field<Scalar> h;
  Scalar time{0};
};

template <typename Scalar>
void check_shape(const Field<Scalar>& field, const Grid<Scalar>& grid) {
  if (field.rows() != grid.num_x() || field.cols() != grid.num_v()) {
    throw ConfigError("field shape does not match grid");
  }
}

template <typename Scalar>
State<Scalar> make_state(GridPtr<Scalar> grid, std::type_identity_t<Field<Scalar>> h,
                         std::type_identity_t<Scalar> time = Scalar(0)) {
  check_shape(h, *grid);
  return State<Scalar>{std::move(grid), std::move(h), time};
}

/// Samples f(x, v) at every node; f receives coordinate arrays of length d.
template <typename Scalar, typename Fn>
Field<Scalar> sample(const Grid<Scalar>& grid, Fn&& f) {
  Field<Scalar> out(grid.num_x(), grid.num_v());
  std::vector<Scalar> x(grid.dim()), v(grid.dim());
  for (Eigen::Index ix = 0; ix < grid.num_x(); ++ix) {
    for (int a = 0; a < grid.dim(); ++a) x[a] = grid.x_coord(ix, a);
    for (Eigen::Index iv = 0; iv < grid.num_v(); ++iv) {
      for (int a = 0; a < grid.dim(); ++a) v[a] = grid.velocity(a)(iv);
      out(ix, iv) = f(x, v);
    }
  }
  return out;
}

/// (1/nx^d) sum_x sum_v w_v field(x, v)
template <typename Scalar>
Scalar integrate_mu(const Field<Scalar>& field, const Grid<Scalar>& grid) {
  check_shape(field, grid);
  if (!field.allFinite()) throw InvariantError("integrate_mu: non-finite field entry");
  return (field * grid.weights()).sum() / Scalar(grid.num_x());
}

/// Uniform-measure integral over the torus.
template <typename Scalar>
Scalar integrate_x(const SpatialField<Scalar>& field, const Grid<Scalar>& grid) {
  if (field.size() != grid.num_x()) throw ConfigError("spatial field shape does not match grid");
  if (!field.allFinite()) throw InvariantError("integrate_x: non-finite field entry");
  return field.mean();
}

/// Velocity average: (Pi h)(x) = sum_v w_v h(x, v).
template <typename Scalar>
SpatialField<Scalar> project_pi(const Field<Scalar>& h, const Grid<Scalar>& grid) {
  check_shape(h, grid);
  return h * grid.weights();
}

template <typename Scalar>
SpatialField<Scalar> project_pi(const State<Scalar>& state) {
  return project_pi(state.h, *state.grid);
}

/// Copies a spatial field into every velocity column.
template <typename Scalar>
Field<Scalar> broadcast(const SpatialField<Scalar>& rho, const Grid<Scalar>& grid) {
  return rho.replicate(1, grid.num_v());
}

template <typename Scalar>
Scalar mass(const State<Scalar>& state) {
  return integrate_mu(state.h, *state.grid);
}

namespace detail {

// Calls fn(line) for every line of one column of `column_data` along spatial
// `axis`; lines are gathered into a contiguous buffer and scattered back.
template <typename Scalar, typename Fn>
void for_each_spatial_line(Scalar* column_data, const Grid<Scalar>& grid, int axis, Fn&& fn) {
  const int n = grid.nx();
  Eigen::Index stride = 1;
  for (int a = grid.dim() - 1; a > axis; --a) stride *= n;
  const Eigen::Index total = grid.num_x();
  std::vector<Scalar> line(n);
  for (Eigen::Index start = 0; start < total; ++start) {
    // Line starts are the flat indices whose axis-coordinate is zero.
    if ((start / stride) % n != 0) continue;
    for (int i = 0; i < n; ++i) line[i] = column_data[start + i * stride];
    fn(line);
    for (int i = 0; i < n; ++i) column_data[start + i * stride] = line[i];
  }
}

}  // namespace detail

/// d/dx_axis applied to every velocity column (Fourier differentiation).
template <typename Scalar>
Field<Scalar> spatial_derivative(const Field<Scalar>& field, const Grid<Scalar>& grid, int axis) {
  if (field.rows() != grid.num_x()) throw ConfigError("spatial_derivative: row count does not match grid");
  Field<Scalar> out = field;
  Eigen::FFT<Scalar> fft;
  for (Eigen::Index c = 0; c < out.cols(); ++c) {
    detail::for_each_spatial_line(out.col(c).data(), grid, axis,
                                  [&](std::vector<Scalar>& line) { grid.fourier().differentiate(line, fft); });
  }
  return out;
}

/// Applies the nodal matrix `op` (nv x nv) along velocity `axis` of every row.
template <typename Scalar>
Field<Scalar> apply_velocity_operator(const Matrix<Scalar>& op, const Field<Scalar>& field, const Grid<Scalar>& grid,
                                      int axis) {
  check_shape(field, grid);
  if (grid.dim() == 1) return field * op.transpose();
  // d = 2: each row is an nv x nv tensor T(j1, j0) in column-major storage.
  const int nv = grid.nv();
  Field<Scalar> out(field.rows(), field.cols());
  Vector<Scalar> row(field.cols());
  for (Eigen::Index r = 0; r < field.rows(); ++r) {
    row = field.row(r).transpose();
    Eigen::Map<Matrix<Scalar>> tensor(row.data(), nv, nv);
    Matrix<Scalar> result = (axis == 1) ? Matrix<Scalar>(op * tensor) : Matrix<Scalar>(tensor * op.transpose());
    out.row(r) = Eigen::Map<const Vector<Scalar>>(result.data(), result.size()).transpose();
  }
  return out;
}

/// Fraction of Hermite coefficient norm carried by the top quarter of modes
/// along any velocity axis. Large values mean v-derivatives are unreliable.
template <typename Scalar>
Scalar hermite_tail_fraction(const Field<Scalar>& field, const Grid<Scalar>& grid) {
  using std::sqrt;
  Field<Scalar> coeffs = field;
  for (int a = 0; a < grid.dim(); ++a) coeffs = apply_velocity_operator(grid.hermite().analysis(), coeffs, grid, a);
  const int cut = grid.nv() - std::max(1, grid.nv() / 4);
  Scalar tail(0);
  for (Eigen::Index iv = 0; iv < grid.num_v(); ++iv) {
    bool in_tail = false;
    for (int a = 0; a < grid.dim(); ++a) in_tail = in_tail || grid.axis_index(iv, a, grid.nv()) >= cut;
    if (in_tail) tail += coeffs.col(iv).squaredNorm();
  }
  const Scalar total = coeffs.squaredNorm();
  return total > Scalar(0) ? sqrt(tail / total) : Scalar(0);
}

/// Threshold on hermite_tail_fraction above which results carry a warning.
inline constexpr double kTailWarning = 1e-6;

template <typename Scalar>
Field<Scalar> velocity_derivative(const Field<Scalar>& field, const Grid<Scalar>& grid, int axis) {
  return apply_velocity_operator(grid.hermite().derivative(), field, grid, axis);
}

template <typename Scalar>
struct Gradient {
  std::vector<Field<Scalar>> components;
  Scalar tail_fraction{0};
  bool under_resolved = false;
};

template <typename Scalar>
Gradient<Scalar> grad_x(const Field<Scalar>& field, const Grid<Scalar>& grid) {
  Gradient<Scalar> g;
  for (int a = 0; a < grid.dim(); ++a) g.components.push_back(spatial_derivative(field, grid, a));
  return g;
}

template <typename Scalar>
Gradient<Scalar> grad_v(const Field<Scalar>& field, const Grid<Scalar>& grid) {
  Gradient<Scalar> g;
  for (int a = 0; a < grid.dim(); ++a) g.components.push_back(velocity_derivative(field, grid, a));
  g.tail_fraction = hermite_tail_fraction(field, grid);
  g.under_resolved = g.tail_fraction > Scalar(kTailWarning);
  return g;
}

template <typename Scalar>
Gradient<Scalar> grad_x(const State<Scalar>& s) {
  return grad_x(s.h, *s.grid);
}

template <typename Scalar>
Gradient<Scalar> grad_v(const State<Scalar>& s) {
  return grad_v(s.h, *s.grid);
}

/// Positivity (h > 0 everywhere) and unit mass.
template <typename Scalar>
void check_state_invariants(const State<Scalar>& s, double mass_tolerance = 1e-10) {
  check_shape(s.h, *s.grid);
  if (!s.h.allFinite()) throw InvariantError("state has non-finite entries");
  const Scalar lo = s.h.minCoeff();
  if (!(lo > Scalar(0))) throw InvariantError("state positivity violated: min h = " + std::to_string(double(lo)));
  const double m = double(mass(s));
  if (std::abs(m - 1.0) > mass_tolerance) {
    throw InvariantError("state mass drifted: integral = " + std::to_string(m));
  }
}

/// Rescales a positive field to unit mass against mu.
template <typename Scalar>
State<Scalar> normalized_state(GridPtr<Scalar> grid, std::type_identity_t<Field<Scalar>> h,
                               std::type_identity_t<Scalar> time = Scalar(0)) {
  const Scalar m = integrate_mu(h, *grid);
  if (!(m > Scalar(0))) throw InvariantError("cannot normalize a field with non-positive mass");
  h /= m;
  return make_state(std::move(grid), std::move(h), time);
}

}  // namespace hypoflow
