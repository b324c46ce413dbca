#pragma once

#include <cstdint>
#include <string_view>
#include <vector>

#include "renorm/core.hpp"
#include "renorm/oracle/grid.hpp"

namespace renorm::oracle {

enum class SolverKind { Pcg, Direct };
std::string_view to_string(SolverKind kind);

struct SolveOptions {
  SolverKind kind = SolverKind::Direct;
  /// Target for ||b - A phi|| / ||s||, s_i the sum of |terms| forming b_i.
  double rel_tol = 1e-10;
  int max_iters = 100000;
};

/// Nodes whose phase correction is held fixed.
struct Constraints {
  std::vector<std::int32_t> nodes;
  std::vector<double> values;
};

struct SolveReport {
  SolverKind kind = SolverKind::Direct;
  int iterations = 0;
  double relative_residual = 0.0;
  double seconds = 0.0;
};

/// Edge conductances: integral of alpha over the in-domain part of the dual
/// face divided by the edge length.
std::vector<double> conductances(const GridField& grid, const PinningWeight& w);

/// Minimises 1/2 sum_e c_e (dtheta_e + phi_to - phi_from)^2 over phi. Without
/// constraints phi has mean zero on every connected component.
SolveReport solve_phase(GridField& grid, const PinningWeight& w, const SolveOptions& opts = {},
                        const Constraints* constraints = nullptr);

/// Discrete energy of the current phi (phi = 0 if unsolved).
double discrete_energy(const GridField& grid, const std::vector<double>& conductance,
                       const std::vector<double>& phi);

/// ||b - A phi|| / ||s|| over the unconstrained nodes, where s_i adds up the
/// magnitudes of the terms that make up b_i.
double relative_residual(const GridField& grid, const std::vector<double>& conductance,
                         const std::vector<double>& phi, const Constraints* constraints = nullptr);

}  // namespace renorm::oracle
