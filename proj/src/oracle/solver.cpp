#include "renorm/oracle/solver.hpp"

#include <chrono>
#include <cmath>
#include <numeric>

#include <Eigen/CholmodSupport>
#include <Eigen/SparseCore>
#include <fmt/core.h>

namespace renorm::oracle {

std::string_view to_string(SolverKind kind) {
  return kind == SolverKind::Pcg ? "pcg" : "direct";
}

namespace {

using Clock = std::chrono::steady_clock;

// Connected components of the edge graph.
std::vector<std::int32_t> components(const GridField& g, std::int32_t& count) {
  std::vector<std::int32_t> parent(g.nodes.size());
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](std::int32_t a) {
    while (parent[a] != a) a = parent[a] = parent[parent[a]];
    return a;
  };
  for (const auto& e : g.edges) {
    const auto a = find(e.from), b = find(e.to);
    if (a != b) parent[std::max(a, b)] = std::min(a, b);
  }
  std::vector<std::int32_t> label(g.nodes.size(), -1), root_label(g.nodes.size(), -1);
  count = 0;
  for (std::size_t n = 0; n < g.nodes.size(); ++n) {
    const auto r = find(static_cast<std::int32_t>(n));
    if (root_label[r] < 0) root_label[r] = count++;
    label[n] = root_label[r];
  }
  return label;
}

struct System {
  std::vector<double> rhs;       // b, with constrained couplings moved over
  std::vector<double> scale;     // sum of |terms| entering each entry of b
  std::vector<double> diag;
  std::vector<std::uint8_t> fixed;
  std::vector<double> phi;       // constrained values filled in, zero elsewhere
};

System assemble(const GridField& g, const std::vector<double>& c, const Constraints* cons) {
  const std::size_t n = g.nodes.size();
  System s;
  s.rhs.assign(n, 0.0);
  s.scale.assign(n, 0.0);
  s.diag.assign(n, 0.0);
  s.fixed.assign(n, 0);
  s.phi.assign(n, 0.0);
  if (cons)
    for (std::size_t k = 0; k < cons->nodes.size(); ++k) {
      s.fixed[cons->nodes[k]] = 1;
      s.phi[cons->nodes[k]] = cons->values[k];
    }
  for (std::size_t e = 0; e < g.edges.size(); ++e) {
    const auto& ed = g.edges[e];
    const double cg = c[e] * ed.dtheta;
    s.rhs[ed.from] += cg;
    s.rhs[ed.to] -= cg;
    s.scale[ed.from] += std::abs(cg);
    s.scale[ed.to] += std::abs(cg);
    s.diag[ed.from] += c[e];
    s.diag[ed.to] += c[e];
    // Known neighbours move to the right-hand side.
    if (s.fixed[ed.to]) {
      s.rhs[ed.from] += c[e] * s.phi[ed.to];
      s.scale[ed.from] += std::abs(c[e] * s.phi[ed.to]);
    }
    if (s.fixed[ed.from]) {
      s.rhs[ed.to] += c[e] * s.phi[ed.from];
      s.scale[ed.to] += std::abs(c[e] * s.phi[ed.from]);
    }
  }
  for (std::size_t i = 0; i < n; ++i)
    if (s.fixed[i]) s.rhs[i] = 0.0;
  return s;
}

// y = A x on free rows, with x assumed zero on fixed nodes.
void apply(const GridField& g, const std::vector<double>& c, const std::vector<std::uint8_t>& fixed,
           const std::vector<double>& x, std::vector<double>& y) {
  std::fill(y.begin(), y.end(), 0.0);
  for (std::size_t e = 0; e < g.edges.size(); ++e) {
    const auto& ed = g.edges[e];
    const double f = c[e] * (x[ed.from] - x[ed.to]);
    y[ed.from] += f;
    y[ed.to] -= f;
  }
  for (std::size_t i = 0; i < y.size(); ++i)
    if (fixed[i]) y[i] = 0.0;
}

// Removes the per-component mean on components without constraints.
struct Projector {
  std::vector<std::int32_t> label;
  std::vector<std::uint8_t> floating;
  std::vector<double> count;
  void operator()(std::vector<double>& v) const {
    std::vector<double> sum(count.size(), 0.0);
    for (std::size_t i = 0; i < v.size(); ++i)
      if (floating[label[i]]) sum[label[i]] += v[i];
    for (std::size_t i = 0; i < v.size(); ++i)
      if (floating[label[i]]) v[i] -= sum[label[i]] / count[label[i]];
  }
};

Projector make_projector(const GridField& g, const std::vector<std::uint8_t>& fixed) {
  Projector p;
  std::int32_t ncomp = 0;
  p.label = components(g, ncomp);
  p.floating.assign(static_cast<std::size_t>(ncomp), 1);
  p.count.assign(static_cast<std::size_t>(ncomp), 0.0);
  for (std::size_t i = 0; i < fixed.size(); ++i) {
    p.count[p.label[i]] += 1.0;
    if (fixed[i]) p.floating[p.label[i]] = 0;
  }
  return p;
}

double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

SolveReport pcg(const GridField& g, const std::vector<double>& c, System& s, const Projector& proj,
                const SolveOptions& opts) {
  const std::size_t n = s.rhs.size();
  std::vector<double> x(n, 0.0), r = s.rhs, z(n), p(n), q(n);
  proj(r);
  const double bnorm = std::sqrt(dot(r, r));
  double snorm = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    if (!s.fixed[i]) snorm += s.scale[i] * s.scale[i];
  snorm = std::sqrt(snorm);
  SolveReport rep;
  rep.kind = SolverKind::Pcg;
  if (bnorm == 0.0) {
    for (std::size_t i = 0; i < n; ++i)
      if (!s.fixed[i]) s.phi[i] = 0.0;
    return rep;
  }
  auto precondition = [&] {
    for (std::size_t i = 0; i < n; ++i) z[i] = s.fixed[i] || s.diag[i] == 0.0 ? 0.0 : r[i] / s.diag[i];
    proj(z);
  };
  precondition();
  p = z;
  double rz = dot(r, z);
  int it = 0;
  double rel = 1.0;
  for (; it < opts.max_iters; ++it) {
    apply(g, c, s.fixed, p, q);
    const double alpha = rz / dot(p, q);
    for (std::size_t i = 0; i < n; ++i) {
      x[i] += alpha * p[i];
      r[i] -= alpha * q[i];
    }
    rel = std::sqrt(dot(r, r)) / snorm;
    if (rel <= opts.rel_tol) {
      ++it;
      break;
    }
    precondition();
    const double rz_new = dot(r, z);
    const double beta = rz_new / rz;
    rz = rz_new;
    for (std::size_t i = 0; i < n; ++i) p[i] = z[i] + beta * p[i];
  }
  rep.iterations = it;
  if (rel > opts.rel_tol)
    throw Error(ErrorCode::SolverDivergence,
                fmt::format("CG stopped at relative residual {:.3e} after {} iterations", rel, it));
  proj(x);
  for (std::size_t i = 0; i < n; ++i)
    if (!s.fixed[i]) s.phi[i] = x[i];
  return rep;
}

SolveReport direct(const GridField& g, const std::vector<double>& c, System& s,
                   const Projector& proj, const SolveOptions& opts) {
  const std::size_t n = s.rhs.size();
  // Pin the first node of every floating component; unknowns are the rest.
  std::vector<std::uint8_t> pinned(n, 0), seen(proj.count.size(), 0);
  for (std::size_t i = 0; i < n; ++i)
    if (!s.fixed[i] && proj.floating[proj.label[i]] && !seen[proj.label[i]]) {
      seen[proj.label[i]] = 1;
      pinned[i] = 1;
    }
  std::vector<std::int32_t> col(n, -1);
  std::int32_t m = 0;
  for (std::size_t i = 0; i < n; ++i)
    if (!s.fixed[i] && !pinned[i]) col[i] = m++;

  SolveReport rep;
  rep.kind = SolverKind::Direct;
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(3 * g.edges.size());
  for (std::size_t e = 0; e < g.edges.size(); ++e) {
    const auto a = col[g.edges[e].from], b = col[g.edges[e].to];
    if (a >= 0) trip.emplace_back(a, a, c[e]);
    if (b >= 0) trip.emplace_back(b, b, c[e]);
    if (a >= 0 && b >= 0) trip.emplace_back(std::max(a, b), std::min(a, b), -c[e]);
  }
  Eigen::SparseMatrix<double> A(m, m);
  A.setFromTriplets(trip.begin(), trip.end());
  trip.clear();
  trip.shrink_to_fit();
  Eigen::VectorXd b(m);
  for (std::size_t i = 0; i < n; ++i)
    if (col[i] >= 0) b[col[i]] = s.rhs[i];

  Eigen::CholmodSupernodalLLT<Eigen::SparseMatrix<double>, Eigen::Lower> chol;
  chol.compute(A);
  if (chol.info() != Eigen::Success)
    throw Error(ErrorCode::SolverDivergence, "Cholesky factorisation failed");
  Eigen::VectorXd x = chol.solve(b);
  // A few rounds of iterative refinement against round-off on large grids.
  const double bn = b.norm();
  for (int round = 0; round < 3 && bn > 0.0; ++round) {
    const Eigen::VectorXd r = b - A.selfadjointView<Eigen::Lower>() * x;
    if (r.norm() <= 1e-3 * opts.rel_tol * bn) break;
    x += chol.solve(r);
    ++rep.iterations;
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (col[i] >= 0) s.phi[i] = x[col[i]];
    else if (pinned[i]) s.phi[i] = 0.0;
  }
  std::vector<double> floating(s.phi);
  for (std::size_t i = 0; i < n; ++i)
    if (!proj.floating[proj.label[i]]) floating[i] = 0.0;
  proj(floating);
  for (std::size_t i = 0; i < n; ++i)
    if (proj.floating[proj.label[i]]) s.phi[i] = floating[i];
  return rep;
}

}  // namespace

std::vector<double> conductances(const GridField& g, const PinningWeight& w) {
  std::vector<double> c(g.edges.size());
  for (std::size_t e = 0; e < g.edges.size(); ++e) {
    const auto [p, q] = g.face(e);
    double a = 0.0;
    for (std::uint32_t k = g.face_offset[e]; k < g.face_offset[e + 1]; ++k)
      a += w.integrate(p, q, g.face_parts[k]);
    c[e] = a / g.edge_length(e);
  }
  return c;
}

double discrete_energy(const GridField& g, const std::vector<double>& c,
                       const std::vector<double>& phi) {
  double sum = 0.0;
  for (std::size_t e = 0; e < g.edges.size(); ++e) {
    const auto& ed = g.edges[e];
    double v = ed.dtheta;
    if (!phi.empty()) v += phi[ed.to] - phi[ed.from];
    sum += c[e] * v * v;
  }
  return 0.5 * sum;
}

double relative_residual(const GridField& g, const std::vector<double>& c,
                         const std::vector<double>& phi, const Constraints* cons) {
  System s = assemble(g, c, cons);
  std::vector<double> x(phi);
  for (std::size_t i = 0; i < x.size(); ++i)
    if (s.fixed[i]) x[i] = 0.0;
  std::vector<double> y(x.size());
  apply(g, c, s.fixed, x, y);
  double rn = 0.0, bn = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    if (s.fixed[i]) continue;
    const double d = s.rhs[i] - y[i];
    rn += d * d;
    bn += s.scale[i] * s.scale[i];
  }
  return bn == 0.0 ? std::sqrt(rn) : std::sqrt(rn / bn);
}

SolveReport solve_phase(GridField& g, const PinningWeight& w, const SolveOptions& opts,
                        const Constraints* cons) {
  const auto t0 = Clock::now();
  const std::vector<double> c = conductances(g, w);
  System s = assemble(g, c, cons);
  const Projector proj = make_projector(g, s.fixed);
  SolveReport rep = opts.kind == SolverKind::Pcg ? pcg(g, c, s, proj, opts) : direct(g, c, s, proj, opts);
  g.phi = std::move(s.phi);
  rep.relative_residual = relative_residual(g, c, g.phi, cons);
  if (!(rep.relative_residual <= opts.rel_tol))
    throw Error(ErrorCode::SolverDivergence,
                fmt::format("relative residual {:.3e} above target {:.1e}", rep.relative_residual,
                            opts.rel_tol));
  rep.seconds = std::chrono::duration<double>(Clock::now() - t0).count();
  return rep;
}

}  // namespace renorm::oracle
