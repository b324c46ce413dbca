#include "renorm/fourier.hpp"

#include <cmath>
#include <numbers>

#include <fmt/core.h>

namespace renorm::fourier {

using std::numbers::pi;

FourierPhase::FourierPhase(double mean, std::vector<Complex> coeffs)
    : mean_(mean), coeffs_(std::move(coeffs)) {}

FourierPhase FourierPhase::zero(std::size_t n_max) {
  return FourierPhase(0.0, std::vector<Complex>(n_max));
}

double FourierPhase::evaluate(double theta) const {
  double sum = 0.0;
  for (std::size_t n = coeffs_.size(); n >= 1; --n)
    sum += (coeffs_[n - 1] * std::polar(1.0, static_cast<double>(n) * theta)).real();
  return mean_ + 2.0 * sum;
}

FourierPhase dephasing_coefficients(const VortexConfig& cfg, std::size_t n_max) {
  for (const Point& z : cfg.points())
    if (!(std::norm(z) < 1.0))
      throw Error(ErrorCode::BoundaryDegenerate, "dephasing needs every |z_j| < 1");
  std::vector<Complex> gamma(n_max);
  std::vector<Complex> power(cfg.size(), Complex(1.0, 0.0));
  const Complex i_unit(0.0, 1.0);
  for (std::size_t n = 1; n <= n_max; ++n) {
    Complex s(0.0, 0.0);
    for (std::size_t j = 0; j < cfg.size(); ++j) {
      power[j] *= std::conj(cfg.point(j));
      s += static_cast<double>(cfg.degree(j)) * power[j];
    }
    gamma[n - 1] = s / (i_unit * static_cast<double>(n));
  }
  return FourierPhase(0.0, std::move(gamma));
}

double h_half_seminorm_sq(const FourierPhase& phase) {
  // Smallest terms first.
  double sum = 0.0;
  for (std::size_t n = phase.n_max(); n >= 1; --n)
    sum += static_cast<double>(n) * std::norm(phase.coeff(n));
  return 2.0 * pi * sum;
}

double interior_extension_energy(const FourierPhase& phase) {
  // Mode n of the extension contributes (1/2) * 2 pi * 2 n^2 |c_n|^2 * int_0^1 r^{2|n|-1} dr
  // = pi |n| |c_n|^2, for n and -n alike.
  double sum = 0.0;
  for (std::size_t n = phase.n_max(); n >= 1; --n) {
    const double mode = static_cast<double>(n) * std::norm(phase.coeff(n));
    sum += mode + mode;
  }
  return pi * sum;
}

double exterior_extension_energy(const FourierPhase& phase) {
  // Same per-mode value, now from int_1^inf r^{-2|n|-1} dr = 1 / (2|n|).
  double sum = 0.0;
  for (std::size_t n = phase.n_max(); n >= 1; --n) {
    const double k = static_cast<double>(n);
    sum += 2.0 * (k * k) * std::norm(phase.coeff(n)) / k;
  }
  return pi * sum;
}

PhaseSplit optimal_split(const FourierPhase& gamma, double b) {
  if (!(b > 0.0)) throw Error(ErrorCode::DomainError, "b must be positive");
  const double b2 = b * b;
  std::vector<Complex> c0(gamma.n_max()), cinf(gamma.n_max());
  for (std::size_t n = 1; n <= gamma.n_max(); ++n) {
    const Complex g = gamma.coeff(n);
    c0[n - 1] = -b2 * g / (1.0 + b2);
    // Written as c_0 + gamma so that c_inf - c_0 == gamma holds to the last bit
    // wherever the floating-point subtraction is exact.
    cinf[n - 1] = c0[n - 1] + g;
  }
  return {FourierPhase(0.0, std::move(c0)), FourierPhase(0.0, std::move(cinf))};
}

double k_functional(const FourierPhase& interior, const FourierPhase& exterior, double b) {
  if (interior.n_max() != exterior.n_max())
    throw Error(ErrorCode::MismatchedTruncation,
                fmt::format("interior has n_max = {}, exterior has n_max = {}", interior.n_max(),
                            exterior.n_max()));
  const double b2 = b * b;
  double sum = 0.0;
  for (std::size_t n = interior.n_max(); n >= 1; --n)
    sum += static_cast<double>(n) * (std::norm(interior.coeff(n)) + b2 * std::norm(exterior.coeff(n)));
  return 2.0 * pi * sum;
}

}  // namespace renorm::fourier
