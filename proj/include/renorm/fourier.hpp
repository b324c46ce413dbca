#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

#include "renorm/core.hpp"

namespace renorm::fourier {

using Complex = std::complex<double>;

/// Real phase on the unit circle, phi(e^{i theta}) = mean + sum_{n != 0} c_n e^{i n theta}
/// with c_{-n} = conj(c_n). Only c_1..c_{n_max} are stored.
class FourierPhase {
public:
  FourierPhase(double mean, std::vector<Complex> coeffs);
  static FourierPhase zero(std::size_t n_max);

  std::size_t n_max() const { return coeffs_.size(); }
  double mean() const { return mean_; }
  /// c_n for 1 <= n <= n_max.
  Complex coeff(std::size_t n) const { return coeffs_.at(n - 1); }
  std::span<const Complex> coeffs() const { return coeffs_; }

  double evaluate(double theta) const;

private:
  double mean_;
  std::vector<Complex> coeffs_;
};

/// gamma_n = sum_j d_j conj(z_j)^n / (i n), the Fourier coefficients of the
/// dephasing between the exterior degree-d map and the interior canonical map.
FourierPhase dephasing_coefficients(const VortexConfig& cfg, std::size_t n_max);

/// |phi|^2_{H^1/2} = pi sum_{n in Z} |n| |c_n|^2 = 2 pi sum_{n >= 1} n |c_n|^2.
double h_half_seminorm_sq(const FourierPhase& phase);

/// Half the Dirichlet energy of the harmonic extension sum c_n r^{|n|} e^{i n theta}
/// into the unit disk.
double interior_extension_energy(const FourierPhase& phase);

/// Half the Dirichlet energy of the decaying extension sum c_n r^{-|n|} e^{i n theta}
/// into the exterior of the unit disk.
double exterior_extension_energy(const FourierPhase& phase);

struct PhaseSplit {
  FourierPhase interior;  // c_{0,n}
  FourierPhase exterior;  // c_{inf,n}
};

/// Per-mode minimiser of |c_0|^2 + b^2 |c_inf|^2 subject to c_inf - c_0 = gamma:
/// c_0 = -b^2 gamma / (1 + b^2), c_inf = gamma / (1 + b^2).
PhaseSplit optimal_split(const FourierPhase& gamma, double b);

/// K = 2 pi sum_{n >= 1} n (|c_{0,n}|^2 + b^2 |c_{inf,n}|^2).
double k_functional(const FourierPhase& interior, const FourierPhase& exterior, double b);

}  // namespace renorm::fourier
