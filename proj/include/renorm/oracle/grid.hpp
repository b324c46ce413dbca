#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "renorm/core.hpp"

namespace renorm::oracle {

/// Point source of the analytic phase Theta = sum_i d_i arg(x - c_i).
struct Singularity {
  Point center;
  int degree = 0;
};

/// Perforated domain B(outer_center, R) minus the holes, plus the data that
/// shapes the graded grid.
struct Geometry {
  Point outer_center{0.0, 0.0};
  double R = 0.0;
  std::vector<Region> holes;
  std::vector<Singularity> singularities;
  /// Fine zones are squares of half-width `fine_halfwidth` around these points.
  std::vector<Point> focus;
  double fine_halfwidth = 0.0;
  /// Square in which the level-0 spacing never exceeds h.
  struct CappedZone {
    Point center;
    double halfwidth;
    double h;
  };
  std::optional<CappedZone> capped;
};

struct GridOptions {
  /// Fine spacing at level 0.
  double h = 0.0;
  /// Spacing grows by this factor per cell away from the fine zones.
  double growth = 1.08;
  /// Every cell is bisected `level` times.
  int level = 0;
  /// Explicit axes; when both are set they replace the graded construction.
  std::optional<std::vector<double>> xs;
  std::optional<std::vector<double>> ys;
};

enum class NodeKind : std::uint8_t { Interior, HoleGhost, OuterGhost };

/// One graded axis: nodes c + m h in every fine zone, geometric grading between
/// and beyond (spacing at most cap.h on [cap.lo, cap.hi]), bisected `level`
/// times and shifted by half a fine cell so that every zone centre sits in the
/// middle of a cell.
struct SpacingCap {
  double lo = 0.0;
  double hi = -1.0;
  double h = 0.0;
};

std::vector<double> graded_axis(std::vector<double> centers, double halfwidth, double h,
                                double growth, double lo, double hi, int level,
                                const SpacingCap& cap = {});

class GridField {
public:
  struct Edge {
    std::int32_t from;
    std::int32_t to;
    /// Integral of grad Theta along the edge (exact angle increment).
    double dtheta;
  };

  std::vector<double> xs, ys;
  std::vector<Point> nodes;
  std::vector<NodeKind> kind;
  /// Hole index for HoleGhost nodes, -1 otherwise.
  std::vector<std::int32_t> hole_of;
  std::vector<Edge> edges;
  /// Edge i owns face pieces face_parts[face_offset[i] .. face_offset[i+1]).
  std::vector<std::uint32_t> face_offset;
  std::vector<Interval> face_parts;
  /// Phase correction per node; empty until solved.
  std::vector<double> phi;
  Geometry geometry;
  double h_fine = 0.0;
  double h_max = 0.0;

  std::size_t nx() const { return xs.size(); }
  std::size_t ny() const { return ys.size(); }
  /// Compact node index of lattice point (i, j), or -1.
  std::int32_t node_at(std::size_t i, std::size_t j) const { return lattice_[i * ny() + j]; }
  /// Edge index from (i, j) to (i + 1, j) or to (i, j + 1), or -1.
  std::int32_t x_edge(std::size_t i, std::size_t j) const { return x_edge_[i * ny() + j]; }
  std::int32_t y_edge(std::size_t i, std::size_t j) const { return y_edge_[i * ny() + j]; }
  /// Dual face of an edge, as a segment p -> q.
  std::pair<Point, Point> face(std::size_t edge) const;
  double edge_length(std::size_t edge) const { return std::abs(nodes[edges[edge].to] - nodes[edges[edge].from]); }

private:
  friend GridField build_grid(const Geometry&, const GridOptions&);
  std::vector<std::int32_t> lattice_, x_edge_, y_edge_;
  std::vector<std::uint8_t> edge_is_x_;
  std::vector<std::uint32_t> edge_lattice_;
};

GridField build_grid(const Geometry& geometry, const GridOptions& options);

/// Geometry of the perforated domain D_{R,z}: holes B(z_i, rho), Theta from (z, d).
Geometry perforated_geometry(const DomainSpec& dom, const VortexConfig& cfg);

/// Counter-clockwise circulation of grad Theta (plus grad phi when `with_phi`)
/// along the boundary of the lattice rectangle [i0, i1] x [j0, j1].
/// Throws LoopCrossesHole if the loop leaves the interior nodes.
double rectangle_circulation(const GridField& grid, std::size_t i0, std::size_t j0,
                             std::size_t i1, std::size_t j1, bool with_phi);

/// Circulation of grad Theta around hole `hole` along the smallest lattice
/// rectangle enclosing it.
double hole_circulation(const GridField& grid, std::size_t hole);

}  // namespace renorm::oracle
