#include "renorm/oracle/grid.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <fmt/core.h>

namespace renorm::oracle {

namespace {

// Cells filling a gap of length L between two zones of spacing h, grown from
// both ends by the same rule so the result is mirror-symmetric.
std::vector<double> fill_gap(double L, double h, double growth, double cap) {
  std::vector<double> side;
  double total = 0.0, s = h;
  for (;;) {
    const double next = std::min(s * growth, cap);
    if (total + 2.0 * next > L) break;
    side.push_back(next);
    total += 2.0 * next;
    s = next;
  }
  if (side.empty()) return {L};
  const double next = std::min(s * growth, cap);
  const double even = L / total, odd = L / (total + next);
  std::vector<double> cells(side.begin(), side.end());
  const bool with_middle = std::abs(std::log(odd)) < std::abs(std::log(even));
  if (with_middle) cells.push_back(next);
  cells.insert(cells.end(), side.rbegin(), side.rend());
  const double scale = with_middle ? odd : even;
  for (double& c : cells) c *= scale;
  return cells;
}

bool boxes_overlap(const BoundingBox& a, Point p, Point q) {
  const double x0 = std::min(p.real(), q.real()), x1 = std::max(p.real(), q.real());
  const double y0 = std::min(p.imag(), q.imag()), y1 = std::max(p.imag(), q.imag());
  return !(x1 < a.lower.real() || x0 > a.upper.real() || y1 < a.lower.imag() ||
           y0 > a.upper.imag());
}

std::vector<double> dual_edges(const std::vector<double>& a) {
  std::vector<double> e(a.size() + 1);
  e.front() = a.front();
  e.back() = a.back();
  for (std::size_t i = 1; i < a.size(); ++i) e[i] = 0.5 * (a[i - 1] + a[i]);
  return e;
}

double angle_increment(const std::vector<Singularity>& sing, Point p, Point q) {
  double s = 0.0;
  for (const Singularity& z : sing)
    if (z.degree != 0) s += z.degree * std::arg((q - z.center) / (p - z.center));
  return s;
}

}  // namespace

std::vector<double> graded_axis(std::vector<double> centers, double halfwidth, double h,
                                double growth, double lo, double hi, int level,
                                const SpacingCap& cap) {
  auto cap_at = [&](double x) { return x >= cap.lo && x <= cap.hi ? cap.h : std::numeric_limits<double>::infinity(); };
  if (!(h > 0.0) || !(growth >= 1.0) || centers.empty())
    throw Error(ErrorCode::DomainError, "graded_axis needs h > 0, growth >= 1 and a centre");
  std::sort(centers.begin(), centers.end());
  const long M = std::max(1L, static_cast<long>(std::ceil(halfwidth / h)));

  // Zones as (centre, lowest m, highest m) on the lattice c + m h.
  struct Zone {
    double c;
    long m0, m1;
    double lo() const { return c + static_cast<double>(m0) * h_; }
    double hi() const { return c + static_cast<double>(m1) * h_; }
    double h_;
  };
  std::vector<Zone> zones;
  for (double c : centers) {
    if (!zones.empty() && c - static_cast<double>(M) * h <= zones.back().hi() + 1.5 * h) {
      // Overlapping zones share the lattice of the first one.
      Zone& z = zones.back();
      z.m1 = std::max(z.m1, static_cast<long>(std::ceil((c + static_cast<double>(M) * h - z.c) / h)));
      continue;
    }
    zones.push_back({c, -M, M, h});
  }

  std::vector<double> xs;
  for (std::size_t k = 0; k < zones.size(); ++k) {
    if (k > 0) {
      double x = xs.back();
      const double gap_cap = std::max(cap_at(x), cap_at(zones[k].lo()));
      const std::vector<double> cells = fill_gap(zones[k].lo() - x, h, growth, gap_cap);
      for (std::size_t c = 0; c + 1 < cells.size(); ++c) xs.push_back(x += cells[c]);
    }
    for (long m = zones[k].m0; m <= zones[k].m1; ++m)
      xs.push_back(zones[k].c + static_cast<double>(m) * h);
  }
  std::vector<double> left;
  for (double x = xs.front(), s = h; x > lo;) {
    s = std::min(s * growth, std::max(h, cap_at(x - s * growth)));
    left.push_back(x -= s);
  }
  std::vector<double> right;
  for (double x = xs.back(), s = h; x < hi;) {
    s = std::min(s * growth, std::max(h, cap_at(x + s * growth)));
    right.push_back(x += s);
  }
  xs.insert(xs.begin(), left.rbegin(), left.rend());
  xs.insert(xs.end(), right.begin(), right.end());

  for (int l = 0; l < level; ++l) {
    std::vector<double> finer;
    finer.reserve(2 * xs.size());
    for (std::size_t i = 0; i + 1 < xs.size(); ++i) {
      finer.push_back(xs[i]);
      finer.push_back(0.5 * (xs[i] + xs[i + 1]));
    }
    finer.push_back(xs.back());
    xs.swap(finer);
  }
  const double shift = 0.5 * std::ldexp(h, -level);
  for (double& x : xs) x += shift;
  return xs;
}

std::pair<Point, Point> GridField::face(std::size_t edge) const {
  const std::size_t lat = edge_lattice_[edge];
  const std::size_t i = lat / ny(), j = lat % ny();
  if (edge_is_x_[edge]) {
    const double xm = 0.5 * (xs[i] + xs[i + 1]);
    const double y0 = j == 0 ? ys[0] : 0.5 * (ys[j - 1] + ys[j]);
    const double y1 = j + 1 == ny() ? ys[j] : 0.5 * (ys[j] + ys[j + 1]);
    return {Point(xm, y0), Point(xm, y1)};
  }
  const double ym = 0.5 * (ys[j] + ys[j + 1]);
  const double x0 = i == 0 ? xs[0] : 0.5 * (xs[i - 1] + xs[i]);
  const double x1 = i + 1 == nx() ? xs[i] : 0.5 * (xs[i] + xs[i + 1]);
  return {Point(x0, ym), Point(x1, ym)};
}

GridField build_grid(const Geometry& geo, const GridOptions& opt) {
  if (!(geo.R > 0.0)) throw Error(ErrorCode::DomainError, "outer radius must be positive");
  if (!(opt.h > 0.0)) throw Error(ErrorCode::DomainError, "grid spacing must be positive");

  for (std::size_t a = 0; a < geo.holes.size(); ++a) {
    const Region& ha = geo.holes[a];
    if (ha.is_disk()) {
      if (opt.h > ha.disk_radius() / 8.0)
        throw Error(ErrorCode::ResolutionTooCoarse,
                    fmt::format("h = {} exceeds radius/8 = {} for hole {}", opt.h,
                                ha.disk_radius() / 8.0, a));
      if (std::abs(ha.disk_center() - geo.outer_center) + ha.disk_radius() >= geo.R)
        throw Error(ErrorCode::HoleOverlap, fmt::format("hole {} reaches the outer circle", a));
    }
    for (std::size_t b = a + 1; b < geo.holes.size(); ++b) {
      const Region& hb = geo.holes[b];
      if (ha.is_disk() && hb.is_disk() &&
          std::abs(ha.disk_center() - hb.disk_center()) <= ha.disk_radius() + hb.disk_radius())
        throw Error(ErrorCode::HoleOverlap, fmt::format("holes {} and {} overlap", a, b));
    }
  }
  for (const Singularity& s : geo.singularities) {
    if (s.degree == 0) continue;
    const bool covered = std::any_of(geo.holes.begin(), geo.holes.end(),
                                     [&](const Region& h) { return h.contains(s.center); });
    if (!covered)
      throw Error(ErrorCode::DomainError, "every singularity must sit inside a hole");
  }

  GridField g;
  g.geometry = geo;
  g.h_fine = std::ldexp(opt.h, -opt.level);
  const double reach = 1.02 * geo.R;
  if (opt.xs && opt.ys) {
    g.xs = *opt.xs;
    g.ys = *opt.ys;
  } else {
    std::vector<double> cx, cy;
    for (Point f : geo.focus) {
      cx.push_back(f.real());
      cy.push_back(f.imag());
    }
    if (cx.empty()) {
      cx.push_back(geo.outer_center.real());
      cy.push_back(geo.outer_center.imag());
    }
    SpacingCap cap_x, cap_y;
    if (geo.capped) {
      cap_x = {geo.capped->center.real() - geo.capped->halfwidth,
               geo.capped->center.real() + geo.capped->halfwidth, geo.capped->h};
      cap_y = {geo.capped->center.imag() - geo.capped->halfwidth,
               geo.capped->center.imag() + geo.capped->halfwidth, geo.capped->h};
    }
    g.xs = graded_axis(cx, geo.fine_halfwidth, opt.h, opt.growth,
                       geo.outer_center.real() - reach, geo.outer_center.real() + reach, opt.level,
                       cap_x);
    g.ys = graded_axis(cy, geo.fine_halfwidth, opt.h, opt.growth,
                       geo.outer_center.imag() - reach, geo.outer_center.imag() + reach, opt.level,
                       cap_y);
  }
  for (std::size_t i = 0; i + 1 < g.xs.size(); ++i) g.h_max = std::max(g.h_max, g.xs[i + 1] - g.xs[i]);
  for (std::size_t j = 0; j + 1 < g.ys.size(); ++j) g.h_max = std::max(g.h_max, g.ys[j + 1] - g.ys[j]);

  const std::size_t nx = g.xs.size(), ny = g.ys.size();
  g.lattice_.assign(nx * ny, -1);
  g.x_edge_.assign(nx * ny, -1);
  g.y_edge_.assign(nx * ny, -1);
  const std::vector<double> ex = dual_edges(g.xs), ey = dual_edges(g.ys);

  std::vector<BoundingBox> hole_boxes;
  for (const Region& h : geo.holes) hole_boxes.push_back(h.bounding_box());

  auto node = [&](std::size_t i, std::size_t j) {
    std::int32_t& slot = g.lattice_[i * ny + j];
    if (slot < 0) {
      slot = static_cast<std::int32_t>(g.nodes.size());
      g.nodes.emplace_back(g.xs[i], g.ys[j]);
    }
    return slot;
  };

  g.face_offset.push_back(0);
  auto try_edge = [&](std::size_t i, std::size_t j, bool is_x, Point p, Point q) {
    std::vector<Interval> parts = segment_in_disk(p, q, geo.outer_center, geo.R);
    if (parts.empty()) return;
    for (std::size_t k = 0; k < geo.holes.size() && !parts.empty(); ++k)
      if (boxes_overlap(hole_boxes[k], p, q)) parts = subtract(parts, geo.holes[k].segment_inside(p, q));
    double len = 0.0;
    for (const Interval& iv : parts) len += iv.length();
    if (!(len > 0.0)) return;
    const std::size_t i2 = is_x ? i + 1 : i, j2 = is_x ? j : j + 1;
    const std::int32_t a = node(i, j), b = node(i2, j2);
    const auto e = static_cast<std::int32_t>(g.edges.size());
    g.edges.push_back({a, b, angle_increment(geo.singularities, g.nodes[a], g.nodes[b])});
    g.face_parts.insert(g.face_parts.end(), parts.begin(), parts.end());
    g.face_offset.push_back(static_cast<std::uint32_t>(g.face_parts.size()));
    g.edge_lattice_.push_back(static_cast<std::uint32_t>(i * ny + j));
    g.edge_is_x_.push_back(is_x ? 1 : 0);
    (is_x ? g.x_edge_ : g.y_edge_)[i * ny + j] = e;
  };

  for (std::size_t i = 0; i < nx; ++i)
    for (std::size_t j = 0; j < ny; ++j) {
      if (i + 1 < nx) {
        const double xm = 0.5 * (g.xs[i] + g.xs[i + 1]);
        try_edge(i, j, true, Point(xm, ey[j]), Point(xm, ey[j + 1]));
      }
      if (j + 1 < ny) {
        const double ym = 0.5 * (g.ys[j] + g.ys[j + 1]);
        try_edge(i, j, false, Point(ex[i], ym), Point(ex[i + 1], ym));
      }
    }

  g.kind.assign(g.nodes.size(), NodeKind::Interior);
  g.hole_of.assign(g.nodes.size(), -1);
  for (std::size_t n = 0; n < g.nodes.size(); ++n) {
    const Point x = g.nodes[n];
    for (std::size_t k = 0; k < geo.holes.size(); ++k)
      if (geo.holes[k].contains(x)) {
        g.kind[n] = NodeKind::HoleGhost;
        g.hole_of[n] = static_cast<std::int32_t>(k);
        break;
      }
    if (g.kind[n] == NodeKind::Interior && std::abs(x - geo.outer_center) >= geo.R)
      g.kind[n] = NodeKind::OuterGhost;
  }
  return g;
}

Geometry perforated_geometry(const DomainSpec& dom, const VortexConfig& cfg) {
  validate_config(cfg, dom, Strictness::Geometric);
  Geometry geo;
  geo.R = dom.R;
  for (std::size_t i = 0; i < cfg.size(); ++i) {
    geo.holes.push_back(Region::disk(cfg.point(i), dom.rho));
    geo.singularities.push_back({cfg.point(i), cfg.degree(i)});
    geo.focus.push_back(cfg.point(i));
  }
  geo.fine_halfwidth = 4.0 * dom.rho;
  // Keep the weight jump across the impurity boundary on moderately fine cells.
  const BoundingBox box = dom.impurity.bounding_box();
  const Point c = 0.5 * (box.lower + box.upper);
  const double half = 0.55 * std::max(box.upper.real() - box.lower.real(),
                                      box.upper.imag() - box.lower.imag());
  geo.capped = Geometry::CappedZone{c, half, std::max(dom.rho / 8.0, half / 64.0)};
  return geo;
}

double rectangle_circulation(const GridField& g, std::size_t i0, std::size_t j0, std::size_t i1,
                             std::size_t j1, bool with_phi) {
  if (!(i0 < i1 && j0 < j1 && i1 < g.nx() && j1 < g.ny()))
    throw Error(ErrorCode::DomainError, "loop rectangle is empty or off the lattice");
  if (with_phi && g.phi.size() != g.nodes.size())
    throw Error(ErrorCode::DomainError, "phase correction has not been solved");
  double sum = 0.0;
  auto add = [&](std::int32_t e, double sign) {
    if (e < 0) throw Error(ErrorCode::LoopCrossesHole, "loop uses an edge outside the domain");
    const GridField::Edge& ed = g.edges[static_cast<std::size_t>(e)];
    if (g.kind[ed.from] != NodeKind::Interior || g.kind[ed.to] != NodeKind::Interior)
      throw Error(ErrorCode::LoopCrossesHole, "loop passes through a node outside the domain");
    double v = ed.dtheta;
    if (with_phi) v += g.phi[ed.to] - g.phi[ed.from];
    sum += sign * v;
  };
  for (std::size_t i = i0; i < i1; ++i) add(g.x_edge(i, j0), 1.0);
  for (std::size_t j = j0; j < j1; ++j) add(g.y_edge(i1, j), 1.0);
  for (std::size_t i = i1; i-- > i0;) add(g.x_edge(i, j1), -1.0);
  for (std::size_t j = j1; j-- > j0;) add(g.y_edge(i0, j), -1.0);
  return sum;
}

double hole_circulation(const GridField& g, std::size_t hole) {
  const BoundingBox box = g.geometry.holes.at(hole).bounding_box();
  // Last node left of / below the box and first node right of / above it, one extra ring out.
  auto below = [](const std::vector<double>& a, double v) {
    const auto it = std::lower_bound(a.begin(), a.end(), v);
    return static_cast<std::size_t>(std::max<std::ptrdiff_t>(0, (it - a.begin()) - 2));
  };
  auto above = [](const std::vector<double>& a, double v) {
    const auto it = std::upper_bound(a.begin(), a.end(), v);
    return std::min(a.size() - 1, static_cast<std::size_t>(it - a.begin()) + 1);
  };
  return rectangle_circulation(g, below(g.xs, box.lower.real()), below(g.ys, box.lower.imag()),
                               above(g.xs, box.upper.real()), above(g.ys, box.upper.imag()),
                               false);
}

}  // namespace renorm::oracle
