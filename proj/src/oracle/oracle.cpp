#include "renorm/oracle/oracle.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numbers>

#include <fmt/core.h>

namespace renorm::oracle {

Extrapolation richardson(std::span<const double> values) {
  Extrapolation ex;
  ex.values.assign(values.begin(), values.end());
  ex.observed_order = std::numeric_limits<double>::quiet_NaN();
  const std::size_t n = values.size();
  if (n == 0) throw Error(ErrorCode::DomainError, "nothing to extrapolate");
  if (n == 1) {
    ex.extrapolated = values[0];
    return ex;
  }
  ex.extrapolated = values[n - 1] + (values[n - 1] - values[n - 2]) / 3.0;
  if (n >= 3) {
    const double d0 = values[n - 3] - values[n - 2], d1 = values[n - 2] - values[n - 1];
    if (d0 != 0.0 && d1 != 0.0 && d0 / d1 > 0.0) ex.observed_order = std::log2(d0 / d1);
  }
  return ex;
}

double total_energy(const GridField& grid, const PinningWeight& w) {
  if (grid.phi.size() != grid.nodes.size())
    throw Error(ErrorCode::DomainError, "phase correction has not been solved");
  return discrete_energy(grid, conductances(grid, w), grid.phi);
}

int winding_check(const GridField& grid, const LoopSpec& loop) {
  auto snap_lo = [](const std::vector<double>& a, double v) {
    const auto it = std::upper_bound(a.begin(), a.end(), v);
    if (it == a.begin()) throw Error(ErrorCode::DomainError, "loop leaves the grid");
    return static_cast<std::size_t>(it - a.begin()) - 1;
  };
  auto snap_hi = [](const std::vector<double>& a, double v) {
    const auto it = std::lower_bound(a.begin(), a.end(), v);
    if (it == a.end()) throw Error(ErrorCode::DomainError, "loop leaves the grid");
    return static_cast<std::size_t>(it - a.begin());
  };
  const bool solved = grid.phi.size() == grid.nodes.size();
  const double circ = rectangle_circulation(grid, snap_lo(grid.xs, loop.x0), snap_lo(grid.ys, loop.y0),
                                            snap_hi(grid.xs, loop.x1), snap_hi(grid.ys, loop.y1), solved);
  const double turns = circ / (2.0 * std::numbers::pi);
  const double k = std::round(turns);
  if (std::abs(turns - k) >= 0.01)
    throw Error(ErrorCode::ComputeError, fmt::format("circulation {} is not a whole number of turns", turns));
  return static_cast<int>(k);
}

namespace {

LevelResult solve_level(const Geometry& geo, const PinningWeight& w, const OracleOptions& opts,
                        double h, int level) {
  const auto t0 = std::chrono::steady_clock::now();
  GridOptions go;
  go.h = h;
  go.growth = opts.growth;
  go.level = level;
  GridField grid = build_grid(geo, go);
  const SolveReport rep = solve_phase(grid, w, opts.solve);
  LevelResult lr;
  lr.level = level;
  lr.h = grid.h_fine;
  lr.nodes = grid.nodes.size();
  lr.energy = total_energy(grid, w);
  lr.iterations = rep.iterations;
  lr.linear_residual = rep.relative_residual;
  lr.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return lr;
}

Study run_levels(const Geometry& geo, const PinningWeight& w, const OracleOptions& opts, double h) {
  if (opts.levels < 1) throw Error(ErrorCode::DomainError, "need at least one grid level");
  Study s;
  std::vector<double> e;
  for (int l = 0; l < opts.levels; ++l) {
    s.levels.push_back(solve_level(geo, w, opts, h, l));
    e.push_back(s.levels.back().energy);
  }
  s.extrapolation = richardson(e);
  return s;
}

Point interior_point(const Region& region) {
  if (region.is_disk()) return region.disk_center();
  const BoundingBox box = region.bounding_box();
  const Point c = 0.5 * (box.lower + box.upper);
  if (!region.contains(c))
    throw Error(ErrorCode::DomainError,
                fmt::format("centre of the bounding box of {} is not inside it", region.describe()));
  return c;
}

}  // namespace

Study perforated_energy(const DomainSpec& dom, const VortexConfig& cfg, const PinningWeight& w,
                        const OracleOptions& opts) {
  const Geometry geo = perforated_geometry(dom, cfg);
  return run_levels(geo, w, opts, opts.h > 0.0 ? opts.h : dom.rho / 8.0);
}

Study f_of_R(const PinningWeight& w, const Region& impurity, double R, const OracleOptions& opts) {
  const BoundingBox box = impurity.bounding_box();
  const Point c = interior_point(impurity);
  const double reach = std::max({std::abs(box.lower - c), std::abs(box.upper - c),
                                 std::abs(Point(box.lower.real(), box.upper.imag()) - c),
                                 std::abs(Point(box.upper.real(), box.lower.imag()) - c)});
  if (!(R > reach)) throw Error(ErrorCode::RadiusOutOfRange, "R must exceed the impurity");
  Geometry geo;
  geo.R = R;
  geo.holes.push_back(impurity);
  geo.singularities.push_back({c, 1});
  geo.focus.push_back(c);
  geo.fine_halfwidth = 1.5 * reach;
  return run_levels(geo, w, opts, opts.h > 0.0 ? opts.h : 1.0 / 16.0);
}

ExpansionStudy expansion_residual(const DomainSpec& dom, const VortexConfig& cfg,
                                  const PinningWeight& w, const OracleOptions& opts) {
  if (!dom.impurity.is_unit_disk())
    throw Error(ErrorCode::DomainError, "the expansion check needs the unit-disk impurity");
  ExpansionStudy st;
  st.total = perforated_energy(dom, cfg, w, opts);
  OracleOptions fopts = opts;
  fopts.h = 0.0;
  st.f = f_of_R(w, dom.impurity, dom.R, fopts);

  const double d = static_cast<double>(total_degree(cfg));
  double sq = 0.0;
  for (int di : cfg.degrees()) sq += static_cast<double>(di) * di;
  const double b = w.b();
  const double core = std::numbers::pi * b * b * sq * std::abs(std::log(dom.rho));
  const double wm = disk::w_micro_closed(cfg, b);
  for (std::size_t l = 0; l < st.total.levels.size(); ++l)
    st.level_residuals.push_back(disk::EnergyExpansion::from_total(
                                     st.total.levels[l].energy, d * d * st.f.levels[l].energy, core, wm)
                                     .residual);
  st.expansion = disk::EnergyExpansion::from_total(st.total.extrapolation.extrapolated,
                                                   d * d * st.f.extrapolation.extrapolated, core, wm);
  return st;
}

AnnulusComparison annulus_comparison(const PinningWeight& w, double r, double R,
                                     const OracleOptions& opts, int level) {
  if (!(r > 0.0 && R > r)) throw Error(ErrorCode::DomainError, "need 0 < r < R");
  Geometry geo;
  geo.R = R;
  geo.holes.push_back(Region::disk(Point(0.0, 0.0), r));
  geo.singularities.push_back({Point(0.0, 0.0), 1});
  geo.focus.push_back(Point(0.0, 0.0));
  geo.fine_halfwidth = 1.5 * r;
  GridOptions go;
  go.h = opts.h > 0.0 ? opts.h : r / 16.0;
  go.growth = opts.growth;
  go.level = level;
  GridField grid = build_grid(geo, go);

  AnnulusComparison out;
  out.nodes = grid.nodes.size();
  solve_phase(grid, w, opts.solve);
  out.mu = total_energy(grid, w);

  // The energy is quadratic in theta0; three solves pin the parabola down.
  auto dirichlet = [&](double theta0) {
    Constraints cons;
    for (std::size_t n = 0; n < grid.nodes.size(); ++n) {
      if (grid.kind[n] == NodeKind::HoleGhost) {
        cons.nodes.push_back(static_cast<std::int32_t>(n));
        cons.values.push_back(0.0);
      } else if (grid.kind[n] == NodeKind::OuterGhost) {
        cons.nodes.push_back(static_cast<std::int32_t>(n));
        cons.values.push_back(theta0);
      }
    }
    solve_phase(grid, w, opts.solve, &cons);
    return total_energy(grid, w);
  };
  const double em = dirichlet(-1.0), e0 = dirichlet(0.0), ep = dirichlet(1.0);
  const double a = 0.5 * (ep + em) - e0, slope = 0.5 * (ep - em);
  out.theta0 = a > 0.0 ? -slope / (2.0 * a) : 0.0;
  out.mu_dir = dirichlet(out.theta0);
  return out;
}

}  // namespace renorm::oracle
