#pragma once

#include <array>
#include <cstddef>
#include <vector>

#include "renorm/core.hpp"

namespace renorm::disk {

/// Lefter-Radulescu renormalized energy of (z, d) in the unit disk.
double lr_renormalized_energy(const VortexConfig& cfg);

/// Number of series terms k_min uses for this tolerance.
std::size_t series_cutoff(const VortexConfig& cfg, double b, double tol);

/// min K = (b^2 / (1 + b^2)) 2 pi sum_{n >= 1} n |gamma_n|^2, truncated with error <= tol.
double k_min(const VortexConfig& cfg, double b, double tol);

/// Closed form of W^micro on the disk.
double w_micro_closed(const VortexConfig& cfg, double b);

/// b^2 W + min K.
double w_micro_series(const VortexConfig& cfg, double b, double tol);

struct Diagnostics {
  double max_modulus = 0.0;
  double min_separation = 0.0;
  bool near_boundary = false;   // some |z_i| > 1 - 1e-6
  bool near_coincident = false; // some |z_i - z_j| < 1e-4
};

Diagnostics diagnose(const VortexConfig& cfg);

struct Gradient {
  /// d W^micro / d(Re z_i), d W^micro / d(Im z_i).
  std::vector<std::array<double, 2>> components;
  Diagnostics diagnostics;
};

Gradient w_micro_gradient(const VortexConfig& cfg, double b);

/// I(R, rho, z, d) split as d^2 f(R) + pi b^2 sum d_i^2 |ln rho| + W^micro + residual.
struct EnergyExpansion {
  double topological = 0.0;
  double core = 0.0;
  double w_micro = 0.0;
  double residual = 0.0;

  /// Sets the residual so that reconstruct() returns `total`.
  static EnergyExpansion from_total(double total, double topological, double core, double w_micro);
  double reconstruct() const;
};

}  // namespace renorm::disk
