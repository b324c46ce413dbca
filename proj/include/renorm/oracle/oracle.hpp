#pragma once

#include <span>
#include <vector>

#include "renorm/core.hpp"
#include "renorm/disk_energy.hpp"
#include "renorm/oracle/grid.hpp"
#include "renorm/oracle/solver.hpp"

namespace renorm::oracle {

struct OracleOptions {
  /// Level-0 fine spacing; 0 picks rho/8 near vortices, 1/16 near the impurity
  /// for f(R) and r/16 for the annulus.
  double h = 0.0;
  double growth = 1.08;
  /// Grid levels 0..levels-1, each halving the spacing.
  int levels = 3;
  SolveOptions solve;
};

struct LevelResult {
  int level = 0;
  double h = 0.0;
  std::size_t nodes = 0;
  double energy = 0.0;
  int iterations = 0;
  double linear_residual = 0.0;
  double seconds = 0.0;
};

/// Extrapolation of values on spacings h, h/2, h/4, ... assuming an h^2 error.
struct Extrapolation {
  std::vector<double> values;
  double extrapolated = 0.0;
  /// log2 of the ratio of successive differences; NaN with fewer than three values.
  double observed_order = 0.0;
};

Extrapolation richardson(std::span<const double> values);

/// Discrete energy of the solved grid.
double total_energy(const GridField& grid, const PinningWeight& w);

/// Degree d of the loop [x0, x1] x [y0, y1], snapped outward to grid lines.
struct LoopSpec {
  double x0, y0, x1, y1;
};
int winding_check(const GridField& grid, const LoopSpec& loop);

struct Study {
  std::vector<LevelResult> levels;
  Extrapolation extrapolation;
};

/// I(R, rho, z, d) on each level of the graded grid.
Study perforated_energy(const DomainSpec& dom, const VortexConfig& cfg, const PinningWeight& w,
                        const OracleOptions& opts = {});

/// f(R): degree-one minimum on B_R minus the impurity.
Study f_of_R(const PinningWeight& w, const Region& impurity, double R,
             const OracleOptions& opts = {});

struct ExpansionStudy {
  Study total;
  Study f;
  /// Built from the extrapolated total energy and f(R).
  disk::EnergyExpansion expansion;
  /// Residual of each level, using that level's total energy and f(R).
  std::vector<double> level_residuals;
};

ExpansionStudy expansion_residual(const DomainSpec& dom, const VortexConfig& cfg,
                                  const PinningWeight& w, const OracleOptions& opts = {});

struct AnnulusComparison {
  double mu = 0.0;
  double mu_dir = 0.0;
  /// Outer boundary rotation minimising the Dirichlet energy.
  double theta0 = 0.0;
  std::size_t nodes = 0;
};

/// mu: free-boundary degree-one minimum on r < |x| < R; mu_dir: the same with
/// phase data theta on |x| = r and theta + theta0 on |x| = R, minimised over theta0.
AnnulusComparison annulus_comparison(const PinningWeight& w, double r, double R,
                                     const OracleOptions& opts = {}, int level = 0);

}  // namespace renorm::oracle
