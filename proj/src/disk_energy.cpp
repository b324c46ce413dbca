#include "renorm/disk_energy.hpp"

#include <cmath>
#include <cstdlib>
#include <numbers>

#include <fmt/core.h>

#include "renorm/fourier.hpp"

namespace renorm::disk {

using std::numbers::pi;

namespace {

constexpr std::size_t kMaxTerms = 1'000'000;

void require_inside(const VortexConfig& cfg) {
  for (std::size_t i = 0; i < cfg.size(); ++i)
    if (!(std::norm(cfg.point(i)) < 1.0))
      throw Error(ErrorCode::BoundaryDegenerate,
                  fmt::format("|z_{}| = {} is not < 1", i, std::abs(cfg.point(i))));
}

void require_distinct(const VortexConfig& cfg) {
  for (std::size_t i = 0; i < cfg.size(); ++i)
    for (std::size_t j = i + 1; j < cfg.size(); ++j)
      if (cfg.point(i) == cfg.point(j))
        throw Error(ErrorCode::DuplicatePoint, fmt::format("z_{} == z_{}", i, j));
}

void require_b(double b) {
  if (!(b > 0.0) || !std::isfinite(b)) throw Error(ErrorCode::DomainError, "b must be positive");
}

// The three sums shared by W and W^micro, with ln|w| = ln(|w|^2) / 2.
struct LogSums {
  double pair = 0.0;      // sum_{i != j} d_i d_j ln|z_i - z_j|
  double self = 0.0;      // sum_j d_j^2 ln(1 - |z_j|^2)
  double reflected = 0.0; // sum_{i != j} d_i d_j ln|1 - z_i conj(z_j)|
};

LogSums log_sums(const VortexConfig& cfg) {
  LogSums s;
  for (std::size_t i = 0; i < cfg.size(); ++i) {
    const double di = cfg.degree(i);
    const Point zi = cfg.point(i);
    s.self += di * di * std::log1p(-std::norm(zi));
    for (std::size_t j = i + 1; j < cfg.size(); ++j) {
      const double dd = 2.0 * di * cfg.degree(j);  // (i, j) and (j, i)
      const Point zj = cfg.point(j);
      s.pair += dd * 0.5 * std::log(std::norm(zi - zj));
      s.reflected += dd * 0.5 * std::log(std::norm(1.0 - zi * std::conj(zj)));
    }
  }
  return s;
}

double contrast(double b) {
  const double b2 = b * b;
  return (1.0 - b2) / (1.0 + b2);
}

}  // namespace

double lr_renormalized_energy(const VortexConfig& cfg) {
  require_inside(cfg);
  require_distinct(cfg);
  const LogSums s = log_sums(cfg);
  return pi * (-s.pair + s.self + s.reflected);
}

std::size_t series_cutoff(const VortexConfig& cfg, double b, double tol) {
  require_inside(cfg);
  require_b(b);
  if (!(tol > 0.0)) throw Error(ErrorCode::DomainError, "tol must be positive");
  double abs_sum = 0.0;
  for (int d : cfg.degrees()) abs_sum += std::abs(d);
  const double r = cfg.max_modulus();
  if (abs_sum == 0.0 || r == 0.0) return 0;

  const double b2 = b * b;
  const double target = tol * (1.0 + b2) / (2.0 * pi * b2);
  const double r2 = r * r;
  const double lead = abs_sum * abs_sum / (1.0 - r2);
  double power = 1.0;
  for (std::size_t n = 1; n <= kMaxTerms; ++n) {
    power *= r2;
    if (lead * power / static_cast<double>(n) < target) return n;
  }
  throw Error(ErrorCode::TruncationOverflow,
              fmt::format("series needs more than {} terms at r = {}", kMaxTerms, r));
}

double k_min(const VortexConfig& cfg, double b, double tol) {
  const std::size_t n_max = series_cutoff(cfg, b, tol);
  if (n_max == 0) return 0.0;
  const fourier::FourierPhase gamma = fourier::dephasing_coefficients(cfg, n_max);
  const double b2 = b * b;
  return b2 / (1.0 + b2) * fourier::h_half_seminorm_sq(gamma);
}

double w_micro_closed(const VortexConfig& cfg, double b) {
  require_inside(cfg);
  require_distinct(cfg);
  require_b(b);
  const LogSums s = log_sums(cfg);
  const double c = contrast(b);
  return -b * b * pi * (s.pair + c * s.self + c * s.reflected);
}

double w_micro_series(const VortexConfig& cfg, double b, double tol) {
  require_b(b);
  return b * b * lr_renormalized_energy(cfg) + k_min(cfg, b, tol);
}

Diagnostics diagnose(const VortexConfig& cfg) {
  Diagnostics d;
  d.max_modulus = cfg.max_modulus();
  d.min_separation = cfg.min_separation();
  d.near_boundary = d.max_modulus > 1.0 - 1e-6;
  d.near_coincident = d.min_separation < 1e-4;
  return d;
}

Gradient w_micro_gradient(const VortexConfig& cfg, double b) {
  require_inside(cfg);
  require_distinct(cfg);
  require_b(b);
  const double c = contrast(b);
  const std::size_t n = cfg.size();
  Gradient g;
  g.diagnostics = diagnose(cfg);
  g.components.resize(n);
  // For f real, grad_k f = df/dx_k + i df/dy_k = 2 df/d(conj z_k).
  for (std::size_t k = 0; k < n; ++k) {
    const double dk = cfg.degree(k);
    const Point zk = cfg.point(k);
    Point pair(0.0, 0.0), refl(0.0, 0.0);
    for (std::size_t j = 0; j < n; ++j) {
      if (j == k) continue;
      const double dj = cfg.degree(j);
      const Point zj = cfg.point(j);
      const Point diff = zk - zj;
      pair += dj * diff / std::norm(diff);
      refl += dj * zj / (1.0 - std::conj(zk) * zj);
    }
    const Point self = zk / (1.0 - std::norm(zk));
    const Point grad =
        -b * b * pi * (2.0 * dk * pair - 2.0 * c * dk * dk * self - 2.0 * c * dk * refl);
    g.components[k] = {grad.real(), grad.imag()};
  }
  return g;
}

EnergyExpansion EnergyExpansion::from_total(double total, double topological, double core,
                                            double w_micro) {
  EnergyExpansion e;
  e.topological = topological;
  e.core = core;
  e.w_micro = w_micro;
  e.residual = total - ((topological + core) + w_micro);
  return e;
}

double EnergyExpansion::reconstruct() const { return ((topological + core) + w_micro) + residual; }

}  // namespace renorm::disk
