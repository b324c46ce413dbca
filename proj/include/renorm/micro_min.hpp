#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "renorm/core.hpp"

namespace renorm::micro {

enum class Status { Converged, UnboundedBelow, InfimumNotAttained, FlatZero };
std::string_view to_string(Status status);

/// An explicit family z(n) along which W^micro decreases without bound.
struct WitnessPath {
  std::string description;
  std::vector<long> n;
  std::vector<std::vector<Point>> points;
  std::vector<double> energies;
};

struct MinimizationResult {
  Status status = Status::Converged;
  RegimeLabel regime = RegimeLabel::ConfinedBLessOne;
  std::optional<std::vector<Point>> points;
  std::optional<double> value;
  std::optional<WitnessPath> witness_path;
  /// Open interval (lo, hi) containing the infimum when it is not attained.
  std::optional<std::pair<double, double>> infimum_bounds;
  int iterations = 0;
  std::uint64_t seed = 0;
  double gradient_norm = 0.0;
};

RegimeLabel classify_regime(std::span<const int> degrees, double b);

MinimizationResult n1_minimizer(int d, double b);

/// Intermediate quantities of the two-vortex closed form.
struct N2Parameters {
  double A = 0.0;       // min(p,q) / max(p,q)
  double B = 0.0;       // (1 - b^2) / (1 + b^2)
  double lambda = 0.0;
  double sigma0 = 0.0;
  double s0 = 0.0;
};

N2Parameters n2_parameters(int p, int q, double b);
MinimizationResult n2_positive_minimizer(int p, int q, double b);

struct SolverOptions {
  int max_iters = 2000;
  int n_starts = 32;
  std::uint64_t seed = 20240611;
  std::vector<double> barrier_schedule{1e-3, 1e-6, 0.0};
  /// Stop when sup |grad| <= grad_tol * max(1, |value|).
  double grad_tol = 1e-10;
  unsigned jobs = 1;
};

MinimizationResult minimize_numeric(std::span<const int> degrees, double b,
                                    const SolverOptions& opts = {});

/// Rotates so that the point of largest modulus sits on the positive real axis.
/// Moduli within 1e-9 relative of each other count as equal; the lowest index wins.
std::vector<Point> gauge_fix(std::span<const Point> points);

WitnessPath unboundedness_witness(std::span<const int> degrees, double b);

}  // namespace renorm::micro
