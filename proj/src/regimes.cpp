#include "renorm/regimes.hpp"

#include <cstdlib>

#include <fmt/core.h>
#include <fmt/format.h>

namespace renorm {

namespace {

std::string join_points(const std::vector<Point>& pts) {
  std::vector<std::string> parts;
  for (const Point& z : pts) parts.push_back(fmt::format("{:.10g}{:+.10g}i", z.real(), z.imag()));
  return fmt::format("({})", fmt::join(parts, ", "));
}

micro::MinimizationResult confined(const std::vector<int>& d, double b,
                                   const micro::SolverOptions& opts) {
  // Energies only see |d| when all degrees share a sign.
  if (d.size() == 1) return micro::n1_minimizer(std::abs(d[0]), b);
  if (d.size() == 2 && d[0] != 0 && d[1] != 0) {
    auto r = micro::n2_positive_minimizer(std::abs(d[0]), std::abs(d[1]), b);
    r.iterations = 0;
    return r;
  }
  return micro::minimize_numeric(d, b, opts);
}

}  // namespace

std::vector<RegimeCell> table_regimes(std::span<const double> bs,
                                      const std::vector<std::vector<int>>& patterns,
                                      const micro::SolverOptions& opts) {
  std::vector<RegimeCell> out;
  for (double b : bs)
    for (const auto& d : patterns) {
      RegimeCell cell;
      cell.b = b;
      cell.degrees = d;
      cell.label = micro::classify_regime(d, b);
      const bool closed = cell.label == RegimeLabel::ConfinedBLessOne ||
                          (cell.label == RegimeLabel::SingleActiveVortex && b < 1.0);
      cell.result = closed ? confined(d, b, opts) : micro::minimize_numeric(d, b, opts);
      const auto& r = cell.result;
      switch (r.status) {
        case micro::Status::Converged:
          cell.summary = fmt::format("minimiser {} value {:.10g}", join_points(*r.points), *r.value);
          break;
        case micro::Status::UnboundedBelow:
          cell.summary = fmt::format("{}; W^micro at n = 10, 100, 1000: {:.6g}",
                                     r.witness_path->description,
                                     fmt::join(r.witness_path->energies, ", "));
          break;
        case micro::Status::InfimumNotAttained:
          cell.summary = fmt::format("infimum in ({:.10g}, {:.10g}), not attained",
                                     r.infimum_bounds->first, r.infimum_bounds->second);
          break;
        case micro::Status::FlatZero:
          cell.summary = "W^micro = 0 for every configuration";
          break;
      }
      out.push_back(std::move(cell));
    }
  return out;
}

}  // namespace renorm
