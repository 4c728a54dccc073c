#pragma once

#include <cmath>
#include <complex>
#include <numbers>
#include <vector>

#include <unsupported/Eigen/FFT>

#include "hypoflow/hermite.hpp"

namespace hypoflow {

/// Trigonometric interpolation on n equispaced points of a periodic interval.
/// The Nyquist mode is treated as a cosine: its derivative is dropped and a
/// shift by s scales it by cos(pi n s / period).
template <typename Scalar>
class FourierAxis {
 public:
  using Complex = std::complex<Scalar>;

  FourierAxis(int n, Scalar period) : n_(n), period_(period), wavenumbers_(n) {
    for (int m = 0; m < n; ++m) {
      const int signed_mode = (m <= n / 2) ? m : m - n;
      wavenumbers_(m) = Scalar(2) * std::numbers::pi_v<Scalar> * Scalar(signed_mode) / period;
    }
  }

  int size() const { return n_; }
  Scalar period() const { return period_; }
  /// Signed angular wavenumbers 2 pi m / period in FFT order.
  const Vector<Scalar>& wavenumbers() const { return wavenumbers_; }

  /// In place: line <- d line / dx.
  void differentiate(std::vector<Scalar>& line, Eigen::FFT<Scalar>& fft) const {
    fft.fwd(spectrum_scratch(), line);
    auto& spec = spectrum_scratch();
    for (int m = 0; m < n_; ++m) {
      if (2 * m == n_) {
        spec[m] = Complex(0);
      } else {
        spec[m] *= Complex(0, wavenumbers_(m));
      }
    }
    fft.inv(line, spec);
  }

  /// In place: line(x) <- line(x - s).
  void shift(std::vector<Scalar>& line, Scalar s, Eigen::FFT<Scalar>& fft) const {
    using std::cos;
    using std::sin;
    fft.fwd(spectrum_scratch(), line);
    auto& spec = spectrum_scratch();
    for (int m = 0; m < n_; ++m) {
      const Scalar phase = wavenumbers_(m) * s;
      if (2 * m == n_) {
        spec[m] *= cos(phase);
      } else {
        spec[m] *= Complex(cos(phase), -sin(phase));
      }
    }
    fft.inv(line, spec);
  }

 private:
  static std::vector<Complex>& spectrum_scratch() {
    thread_local std::vector<Complex> scratch;
    return scratch;
  }

  int n_;
  Scalar period_;
  Vector<Scalar> wavenumbers_;
};

}  // namespace hypoflow
