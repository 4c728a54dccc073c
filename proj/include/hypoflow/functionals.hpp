#pragma once

#include <array>
#include <cmath>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "hypoflow/phase_space.hpp"

namespace hypoflow {

/// Entropy family selector: the Boltzmann tag means H = int h log h, otherwise
/// H^(p) = int (h^p - h) / (p (p - 1)) with p in (1, 2].
struct PIndex {
  bool boltzmann = true;
  double p = 1.0;

  static PIndex log_entropy() { return {true, 1.0}; }
  static PIndex power(double p) {
    if (!(p > 1.0 && p <= 2.0)) throw ConfigError("p must lie in (1, 2], got " + std::to_string(p));
    return {false, p};
  }

  std::string label() const;
  friend bool operator==(const PIndex&, const PIndex&) = default;
};

/// F_p(r) = p - 1 + (2 - p) r - r^(2 - p); non-negative for r >= 0.
template <typename Scalar>
Scalar f_p(Scalar r, Scalar p) {
  using std::pow;
  if (r < Scalar(0)) throw ConfigError("f_p: r must be non-negative");
  return p - Scalar(1) + (Scalar(2) - p) * r - pow(r, Scalar(2) - p);
}

enum class FunctionalName {
  H,
  H_pi,
  I_X,
  I_V,
  I_M,
  I_piX,
  I_piX_over_X,
  I_piV_over_V,
  D,
  I_XF,
  I_VF,
  I_Vpi,
  U_divergence_pairing,
  I_VX,
  I_VV,
  I_2XV,
  I_2V,
};

inline constexpr std::array<FunctionalName, 17> kAllFunctionals = {
    FunctionalName::H,     FunctionalName::H_pi,  FunctionalName::I_X,          FunctionalName::I_V,
    FunctionalName::I_M,   FunctionalName::I_piX, FunctionalName::I_piX_over_X, FunctionalName::I_piV_over_V,
    FunctionalName::D,     FunctionalName::I_XF,  FunctionalName::I_VF,         FunctionalName::I_Vpi,
    FunctionalName::U_divergence_pairing,         FunctionalName::I_VX,         FunctionalName::I_VV,
    FunctionalName::I_2XV, FunctionalName::I_2V,
};

std::string_view to_string(FunctionalName name);
std::optional<FunctionalName> functional_from_string(std::string_view name);

/// Every functional at one instant. Entries that do not apply to the chosen
/// entropy family or model stay empty.
struct FunctionalReport {
  double time = 0.0;
  PIndex p;
  std::array<std::optional<double>, kAllFunctionals.size()> values{};
  double tail_fraction = 0.0;
  bool under_resolved = false;

  std::optional<double> get(FunctionalName name) const { return values[static_cast<std::size_t>(name)]; }
  double at(FunctionalName name) const;
  void set(FunctionalName name, double v) { values[static_cast<std::size_t>(name)] = v; }
};

template <typename Scalar>
struct FisherComponents {
  Scalar I_X{0};
  Scalar I_V{0};
  Scalar I_M{0};
};

template <typename Scalar>
struct ProjectedQuantities {
  Scalar H_pi{0};
  Scalar I_piX{0};
  std::optional<Scalar> I_piX_over_X;  // Boltzmann only
  std::optional<Scalar> I_piV_over_V;  // Boltzmann only
  std::optional<Scalar> D;             // p-entropies only
  std::vector<SpatialField<Scalar>> U;  // local mean velocity, one field per axis
  Scalar U_divergence_pairing{0};       // equals d/dt H_pi along the kinetic flow
};

template <typename Scalar>
struct CorrectionTerms {
  Scalar I_XF{0};
  Scalar I_VF{0};
  Scalar I_Vpi{0};
};

template <typename Scalar>
struct FpDissipation {
  Scalar I_VX{0};
  Scalar I_VV{0};
  Scalar I_2XV{0};
  Scalar I_2V{0};
};

/// Derivatives shared by all functionals of one state.
template <typename Scalar>
struct PhaseDerivatives {
  const Grid<Scalar>* grid = nullptr;
  Field<Scalar> h;
  SpatialField<Scalar> rho;  // Pi h
  std::vector<Field<Scalar>> dx, dv;
  std::vector<SpatialField<Scalar>> drho;
  // Filled on request: dvdx[j][i] = d_{v_j} d_{x_i} h, dvdv[j][k] = d_{v_j} d_{v_k} h.
  std::vector<std::vector<Field<Scalar>>> dvdx, dvdv;
  Scalar tail_fraction{0};
};

namespace detail {

template <typename Scalar, typename Derived>
void require_floor(const Eigen::DenseBase<Derived>& values, const char* what) {
  if (!values.allFinite()) throw InvariantError(std::string(what) + ": non-finite density");
  const Scalar lo = values.minCoeff();
  if (lo < Scalar(kDensityFloor)) {
    throw InvariantError(std::string(what) + " below density floor: min = " + std::to_string(double(lo)));
  }
}

template <typename Scalar>
Scalar mu_mean(const Field<Scalar>& integrand, const Grid<Scalar>& grid) {
  return (integrand * grid.weights()).sum() / Scalar(grid.num_x());
}

// Pointwise Fisher weight: 1/h (Boltzmann) or h^(p-2).
template <typename Scalar, typename Derived>
auto fisher_weight(const Eigen::ArrayBase<Derived>& h, const PIndex& p) {
  using Array = Eigen::Array<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  if (p.boltzmann) return Array(h.inverse());
  return Array(h.pow(Scalar(p.p - 2.0)));
}

template <typename Scalar, typename Derived>
auto entropy_density(const Eigen::ArrayBase<Derived>& h, const PIndex& p) {
  using Array = Eigen::Array<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  if (p.boltzmann) return Array(h * h.log());
  const Scalar q = Scalar(p.p);
  return Array((h.pow(q) - h) / (q * (q - Scalar(1))));
}

template <typename Scalar>
Field<Scalar> sum_of_products(const std::vector<Field<Scalar>>& a, const std::vector<Field<Scalar>>& b) {
  Field<Scalar> out = (a[0].array() * b[0].array()).matrix();
  for (std::size_t i = 1; i < a.size(); ++i) out.array() += a[i].array() * b[i].array();
  return out;
}

}  // namespace detail

template <typename Scalar>
PhaseDerivatives<Scalar> differentiate(const State<Scalar>& s, bool second_order = false) {
  const Grid<Scalar>& grid = *s.grid;
  PhaseDerivatives<Scalar> d;
  d.grid = &grid;
  d.h = s.h;
  d.rho = project_pi(s);
  d.dx = grad_x(s.h, grid).components;
  Gradient<Scalar> gv = grad_v(s.h, grid);
  d.dv = std::move(gv.components);
  d.tail_fraction = gv.tail_fraction;
  Field<Scalar> rho_col = d.rho;
  for (int a = 0; a < grid.dim(); ++a) d.drho.push_back(spatial_derivative(rho_col, grid, a).col(0));
  if (second_order) {
    d.dvdx.resize(grid.dim());
    d.dvdv.resize(grid.dim());
    for (int j = 0; j < grid.dim(); ++j) {
      for (int i = 0; i < grid.dim(); ++i) {
        d.dvdx[j].push_back(velocity_derivative(d.dx[i], grid, j));
        d.dvdv[j].push_back(velocity_derivative(d.dv[i], grid, j));
      }
    }
  }
  return d;
}

template <typename Scalar>
Scalar entropy(const PhaseDerivatives<Scalar>& d, const PIndex& p) {
  detail::require_floor<Scalar>(d.h, "entropy");
  const Field<Scalar> density = detail::entropy_density<Scalar>(d.h.array(), p).matrix();
  return detail::mu_mean(density, *d.grid);
}

template <typename Scalar>
Scalar entropy(const State<Scalar>& s, const PIndex& p) {
  detail::require_floor<Scalar>(s.h, "entropy");
  const Field<Scalar> density = detail::entropy_density<Scalar>(s.h.array(), p).matrix();
  return detail::mu_mean(density, *s.grid);
}

/// Entropy of a density on the torus alone (uniform measure).
template <typename Scalar>
Scalar spatial_entropy(const SpatialField<Scalar>& rho, const PIndex& p) {
  detail::require_floor<Scalar>(rho, "spatial entropy");
  return detail::entropy_density<Scalar>(rho.array(), p).mean();
}

/// int w_p(rho) |grad rho|^2 dx for a density on the torus.
template <typename Scalar>
Scalar spatial_fisher(const SpatialField<Scalar>& rho, const Grid<Scalar>& grid, const PIndex& p) {
  detail::require_floor<Scalar>(rho, "spatial fisher");
  const Field<Scalar> col = rho;
  Eigen::Array<Scalar, Eigen::Dynamic, 1> grad2 = Eigen::Array<Scalar, Eigen::Dynamic, 1>::Zero(rho.size());
  for (int a = 0; a < grid.dim(); ++a) grad2 += spatial_derivative(col, grid, a).col(0).array().square();
  return (detail::fisher_weight<Scalar>(rho.array(), p).col(0) * grad2).mean();
}

template <typename Scalar>
FisherComponents<Scalar> fisher_components(const PhaseDerivatives<Scalar>& d, const PIndex& p) {
  detail::require_floor<Scalar>(d.h, "fisher_components");
  const auto w = detail::fisher_weight<Scalar>(d.h.array(), p);
  const Grid<Scalar>& g = *d.grid;
  FisherComponents<Scalar> out;
  out.I_X = detail::mu_mean(Field<Scalar>((w * detail::sum_of_products(d.dx, d.dx).array()).matrix()), g);
  out.I_V = detail::mu_mean(Field<Scalar>((w * detail::sum_of_products(d.dv, d.dv).array()).matrix()), g);
  out.I_M = detail::mu_mean(Field<Scalar>((w * detail::sum_of_products(d.dx, d.dv).array()).matrix()), g);
  return out;
}

template <typename Scalar>
FisherComponents<Scalar> fisher_components(const State<Scalar>& s, const PIndex& p) {
  return fisher_components(differentiate(s), p);
}

template <typename Scalar>
ProjectedQuantities<Scalar> projected_quantities(const PhaseDerivatives<Scalar>& d, const PIndex& p) {
  using Array = Eigen::Array<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  const Grid<Scalar>& g = *d.grid;
  detail::require_floor<Scalar>(d.rho, "projected_quantities (Pi h)");
  detail::require_floor<Scalar>(d.h, "projected_quantities");

  ProjectedQuantities<Scalar> out;
  const auto rho = d.rho.array();
  out.H_pi = detail::entropy_density<Scalar>(rho, p).mean();

  Array drho2 = Array::Zero(rho.size(), 1);
  for (const auto& dr : d.drho) drho2 += dr.array().square();
  out.I_piX = (detail::fisher_weight<Scalar>(rho, p).col(0) * drho2.col(0)).mean();

  // U(x) = sum_v w_v v h and its divergence.
  Field<Scalar> div_u = Field<Scalar>::Zero(g.num_x(), 1);
  for (int a = 0; a < g.dim(); ++a) {
    SpatialField<Scalar> ua = d.h * (g.weights().array() * g.velocity(a).array()).matrix();
    div_u += spatial_derivative(Field<Scalar>(ua), g, a);
    out.U.push_back(std::move(ua));
  }
  const Array entropy_slope =
      p.boltzmann ? Array(rho.log()) : Array(rho.pow(Scalar(p.p - 1.0)) / Scalar(p.p - 1.0));
  out.U_divergence_pairing = -(entropy_slope.col(0) * div_u.col(0).array()).mean();

  const Array h = d.h.array();
  const Array rho_b = d.rho.replicate(1, g.num_v()).array();
  if (p.boltzmann) {
    // |grad_x (rho/h)|^2 / (rho/h) * h  =  |grad rho / h - rho grad h / h^2|^2 h^2 / rho
    Array acc = Array::Zero(h.rows(), h.cols());
    for (int a = 0; a < g.dim(); ++a) {
      const Array grad_r = d.drho[a].replicate(1, g.num_v()).array() / h - rho_b * d.dx[a].array() / h.square();
      acc += grad_r.square();
    }
    out.I_piX_over_X = detail::mu_mean(Field<Scalar>((acc * h.square() / rho_b).matrix()), g);
    const Array dv2 = detail::sum_of_products(d.dv, d.dv).array();
    out.I_piV_over_V = detail::mu_mean(Field<Scalar>((dv2 / h * rho_b / h).matrix()), g);
  } else {
    const Scalar q = Scalar(p.p);
    Array acc = Array::Zero(h.rows(), h.cols());
    for (int a = 0; a < g.dim(); ++a) {
      const Array g_pi = rho_b.pow(q - Scalar(2)) * d.drho[a].replicate(1, g.num_v()).array();
      const Array g_h = h.pow(q - Scalar(2)) * d.dx[a].array();
      acc += (g_pi - g_h).square();
    }
    out.D = detail::mu_mean(Field<Scalar>((acc * rho_b.pow(Scalar(2) - q)).matrix()), g);
  }
  return out;
}

template <typename Scalar>
ProjectedQuantities<Scalar> projected_quantities(const State<Scalar>& s, const PIndex& p) {
  return projected_quantities(differentiate(s), p);
}

template <typename Scalar>
CorrectionTerms<Scalar> correction_terms(const PhaseDerivatives<Scalar>& d, const PIndex& p) {
  using Array = Eigen::Array<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  if (p.boltzmann) throw ConfigError("correction_terms: defined for p-entropies only");
  detail::require_floor<Scalar>(d.h, "correction_terms");
  detail::require_floor<Scalar>(d.rho, "correction_terms (Pi h)");
  const Grid<Scalar>& g = *d.grid;
  const Scalar q = Scalar(p.p);
  const Array h = d.h.array();
  const Array r = d.rho.replicate(1, g.num_v()).array() / h;
  const Array f = (q - Scalar(1)) + (Scalar(2) - q) * r - r.pow(Scalar(2) - q);
  const Array w = h.pow(q - Scalar(2));
  const Array dx2 = detail::sum_of_products(d.dx, d.dx).array();
  const Array dv2 = detail::sum_of_products(d.dv, d.dv).array();
  CorrectionTerms<Scalar> out;
  out.I_XF = detail::mu_mean(Field<Scalar>((w * dx2 * f).matrix()), g);
  out.I_VF = detail::mu_mean(Field<Scalar>((w * dv2 * f).matrix()), g);
  out.I_Vpi = detail::mu_mean(Field<Scalar>((w * dv2 * r.pow(Scalar(2) - q)).matrix()), g);
  return out;
}

template <typename Scalar>
CorrectionTerms<Scalar> correction_terms(const State<Scalar>& s, const PIndex& p) {
  return correction_terms(differentiate(s), p);
}

/// Second-order dissipation terms of the kinetic Fokker-Planck flow. Needs
/// derivatives built with second_order = true.
template <typename Scalar>
FpDissipation<Scalar> fp_dissipation_terms(const PhaseDerivatives<Scalar>& d, const PIndex& p) {
  using Array = Eigen::Array<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  if (p.boltzmann) throw ConfigError("fp_dissipation_terms: defined for p-entropies only");
  if (d.dvdx.empty()) throw ConfigError("fp_dissipation_terms: second derivatives were not computed");
  detail::require_floor<Scalar>(d.h, "fp_dissipation_terms");
  const Grid<Scalar>& g = *d.grid;
  const Scalar q = Scalar(p.p);
  const Array h = d.h.array();
  const Array w = h.pow(q - Scalar(2));
  const Array w_cross = (q - Scalar(2)) * h.pow(q - Scalar(3));

  // |d_c d_c'(h^(p-1)/(p-1))|^2 h^(2-p), with d_c'(h^(p-1)/(p-1)) = h^(p-2) d_c' h
  const auto hessian_term = [&](const std::vector<std::vector<Field<Scalar>>>& second,
                                const std::vector<Field<Scalar>>& outer, const std::vector<Field<Scalar>>& inner) {
    Array acc = Array::Zero(h.rows(), h.cols());
    for (int j = 0; j < g.dim(); ++j) {
      for (int i = 0; i < g.dim(); ++i) {
        const Array entry = w * second[j][i].array() + w_cross * outer[j].array() * inner[i].array();
        acc += entry.square();
      }
    }
    return detail::mu_mean(Field<Scalar>((acc * h.pow(Scalar(2) - q)).matrix()), g);
  };

  const Array dx2 = detail::sum_of_products(d.dx, d.dx).array();
  const Array dv2 = detail::sum_of_products(d.dv, d.dv).array();
  const Array w4 = h.pow(q - Scalar(4));
  FpDissipation<Scalar> out;
  out.I_VX = hessian_term(d.dvdx, d.dv, d.dx);
  out.I_VV = hessian_term(d.dvdv, d.dv, d.dv);
  out.I_2XV = detail::mu_mean(Field<Scalar>((dv2 * dx2 * w4).matrix()), g);
  out.I_2V = detail::mu_mean(Field<Scalar>((dv2 * dv2 * w4).matrix()), g);
  return out;
}

template <typename Scalar>
FpDissipation<Scalar> fp_dissipation_terms(const State<Scalar>& s, const PIndex& p) {
  return fp_dissipation_terms(differentiate(s, true), p);
}

/// int |grad_x log(Pi h / h)|^2 h dmu; equals I_X - I_piX in the Boltzmann case.
template <typename Scalar>
Scalar relative_log_fisher(const PhaseDerivatives<Scalar>& d) {
  using Array = Eigen::Array<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  const Grid<Scalar>& g = *d.grid;
  const Array h = d.h.array();
  const Array rho_b = d.rho.replicate(1, g.num_v()).array();
  Array acc = Array::Zero(h.rows(), h.cols());
  for (int a = 0; a < g.dim(); ++a) {
    acc += (d.drho[a].replicate(1, g.num_v()).array() / rho_b - d.dx[a].array() / h).square();
  }
  return detail::mu_mean(Field<Scalar>((acc * h).matrix()), g);
}

/// All functionals at once. The Fokker-Planck block is filled only when
/// `include_fp` is set and p is a power index.
template <typename Scalar>
FunctionalReport functional_report(const State<Scalar>& s, const PIndex& p, bool include_fp = false) {
  const bool fp = include_fp && !p.boltzmann;
  const PhaseDerivatives<Scalar> d = differentiate(s, fp);
  FunctionalReport r;
  r.time = double(s.time);
  r.p = p;
  r.tail_fraction = double(d.tail_fraction);
  r.under_resolved = d.tail_fraction > Scalar(kTailWarning);

  r.set(FunctionalName::H, double(entropy(d, p)));
  const auto fc = fisher_components(d, p);
  r.set(FunctionalName::I_X, double(fc.I_X));
  r.set(FunctionalName::I_V, double(fc.I_V));
  r.set(FunctionalName::I_M, double(fc.I_M));
  const auto pq = projected_quantities(d, p);
  r.set(FunctionalName::H_pi, double(pq.H_pi));
  r.set(FunctionalName::I_piX, double(pq.I_piX));
  r.set(FunctionalName::U_divergence_pairing, double(pq.U_divergence_pairing));
  if (pq.I_piX_over_X) r.set(FunctionalName::I_piX_over_X, double(*pq.I_piX_over_X));
  if (pq.I_piV_over_V) r.set(FunctionalName::I_piV_over_V, double(*pq.I_piV_over_V));
  if (pq.D) r.set(FunctionalName::D, double(*pq.D));
  if (!p.boltzmann) {
    const auto ct = correction_terms(d, p);
    r.set(FunctionalName::I_XF, double(ct.I_XF));
    r.set(FunctionalName::I_VF, double(ct.I_VF));
    r.set(FunctionalName::I_Vpi, double(ct.I_Vpi));
  }
  if (fp) {
    const auto ft = fp_dissipation_terms(d, p);
    r.set(FunctionalName::I_VX, double(ft.I_VX));
    r.set(FunctionalName::I_VV, double(ft.I_VV));
    r.set(FunctionalName::I_2XV, double(ft.I_2XV));
    r.set(FunctionalName::I_2V, double(ft.I_2V));
  }
  return r;
}

}  // namespace hypoflow
