#include "renorm/micro_min.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <numbers>
#include <functional>
#include <random>
#include <thread>

#include <Eigen/Dense>
#include <fmt/core.h>

#include "renorm/disk_energy.hpp"

namespace renorm::micro {

using std::numbers::pi;

std::string_view to_string(Status status) {
  switch (status) {
    case Status::Converged: return "Converged";
    case Status::UnboundedBelow: return "UnboundedBelow";
    case Status::InfimumNotAttained: return "InfimumNotAttained";
    case Status::FlatZero: return "FlatZero";
  }
  return "Unknown";
}

namespace {

void require_b(double b) {
  if (!(b > 0.0) || !std::isfinite(b)) throw Error(ErrorCode::DomainError, "b must be positive");
}

std::vector<std::size_t> active_indices(std::span<const int> degrees) {
  std::vector<std::size_t> idx;
  for (std::size_t i = 0; i < degrees.size(); ++i)
    if (degrees[i] != 0) idx.push_back(i);
  return idx;
}

bool mixed_signs(std::span<const int> degrees) {
  bool pos = false, neg = false;
  for (int d : degrees) {
    pos = pos || d > 0;
    neg = neg || d < 0;
  }
  return pos && neg;
}

double energy(std::span<const Point> pts, std::span<const int> degrees, double b) {
  return disk::w_micro_closed(
      VortexConfig({pts.begin(), pts.end()}, {degrees.begin(), degrees.end()}), b);
}

// Positions for vortices whose degree is zero: they do not enter W^micro.
Point parked(std::size_t k, std::size_t n) {
  return std::polar(0.5, 2.0 * pi * static_cast<double>(k) / static_cast<double>(n));
}

}  // namespace

RegimeLabel classify_regime(std::span<const int> degrees, double b) {
  require_b(b);
  const auto active = active_indices(degrees);
  if (active.empty()) return RegimeLabel::AllZeroDegrees;
  if (active.size() == 1)
    return b == 1.0 ? RegimeLabel::FlatBEqualsOne : RegimeLabel::SingleActiveVortex;
  if (mixed_signs(degrees)) return RegimeLabel::MixedSignUnbounded;
  if (b < 1.0) return RegimeLabel::ConfinedBLessOne;
  if (b == 1.0) return RegimeLabel::InfimumNotAttainedBEqualsOne;
  return RegimeLabel::BoundaryEscapeBGreaterOne;
}

std::vector<Point> gauge_fix(std::span<const Point> points) {
  if (points.empty()) return {};
  std::size_t best = 0;
  double best_mod = std::abs(points[0]);
  for (std::size_t i = 1; i < points.size(); ++i) {
    const double m = std::abs(points[i]);
    if (m > best_mod * (1.0 + 1e-9)) {
      best = i;
      best_mod = m;
    }
  }
  std::vector<Point> out(points.begin(), points.end());
  if (best_mod == 0.0) return out;
  const Point rot = std::conj(points[best]) / best_mod;
  for (Point& z : out) z *= rot;
  out[best] = Point(best_mod, 0.0);
  return out;
}

WitnessPath unboundedness_witness(std::span<const int> degrees, double b) {
  const RegimeLabel regime = classify_regime(degrees, b);
  const std::size_t N = degrees.size();
  const auto active = active_indices(degrees);
  WitnessPath path;
  std::function<std::vector<Point>(long)> family;

  if (regime == RegimeLabel::MixedSignUnbounded) {
    std::size_t k = 0, l = 0;
    for (std::size_t i = 0; i < N && k == l; ++i)
      for (std::size_t j = i + 1; j < N; ++j)
        if (degrees[i] * degrees[j] < 0) {
          k = i;
          l = j;
          break;
        }
    path.description = fmt::format(
        "z_{}(n) = -1/n, z_{}(n) = 1/n, others fixed at exp(2 pi i k / {}) / 2", k, l, N);
    family = [=](long n) {
      std::vector<Point> z(N);
      for (std::size_t i = 0; i < N; ++i) z[i] = parked(i, N);
      z[k] = Point(-1.0 / static_cast<double>(n), 0.0);
      z[l] = Point(1.0 / static_cast<double>(n), 0.0);
      return z;
    };
  } else if (regime == RegimeLabel::BoundaryEscapeBGreaterOne) {
    path.description = fmt::format("z_k(n) = (1 - 1/n) exp(2 pi i k / {})", N);
    family = [=](long n) {
      std::vector<Point> z(N);
      const double r = 1.0 - 1.0 / static_cast<double>(n);
      for (std::size_t i = 0; i < N; ++i)
        z[i] = std::polar(r, 2.0 * pi * static_cast<double>(i) / static_cast<double>(N));
      return z;
    };
  } else if (regime == RegimeLabel::SingleActiveVortex && b > 1.0) {
    const std::size_t a = active.front();
    path.description =
        fmt::format("z_{}(n) = 1 - 1/n, others fixed at exp(2 pi i k / {}) / 2", a, N);
    family = [=](long n) {
      std::vector<Point> z(N);
      for (std::size_t i = 0; i < N; ++i) z[i] = parked(i, N);
      z[a] = Point(1.0 - 1.0 / static_cast<double>(n), 0.0);
      return z;
    };
  } else {
    throw Error(ErrorCode::WrongRegime,
                fmt::format("W^micro is bounded below in regime {}", to_string(regime)));
  }

  for (long n : {10L, 100L, 1000L}) {
    auto z = family(n);
    path.energies.push_back(energy(z, degrees, b));
    path.points.push_back(std::move(z));
    path.n.push_back(n);
  }
  return path;
}

MinimizationResult n1_minimizer(int d, double b) {
  require_b(b);
  if (d == 0) throw Error(ErrorCode::ZeroDegree, "n1_minimizer needs d != 0");
  MinimizationResult r;
  const int degs[] = {d};
  r.regime = classify_regime(degs, b);
  if (b < 1.0) {
    r.status = Status::Converged;
    r.points = std::vector<Point>{Point(0.0, 0.0)};
    r.value = 0.0;
  } else if (b == 1.0) {
    r.status = Status::FlatZero;
    r.value = 0.0;
  } else {
    r.status = Status::UnboundedBelow;
    r.witness_path = unboundedness_witness(degs, b);
  }
  return r;
}

N2Parameters n2_parameters(int p, int q, double b) {
  if (p < 1 || q < 1) throw Error(ErrorCode::DomainError, "p and q must be positive");
  if (!(b > 0.0 && b < 1.0)) throw Error(ErrorCode::DomainError, "b must lie in (0, 1)");
  N2Parameters n;
  n.A = static_cast<double>(std::min(p, q)) / static_cast<double>(std::max(p, q));
  const double b2 = b * b;
  n.B = (1.0 - b2) / (1.0 + b2);
  const double A = n.A, B = n.B;
  n.lambda = (1.0 + B * (A + 1.0)) / (1.0 + B * (1.0 / A + 1.0));
  const double l = n.lambda;
  const double qa = l + (A + 1.0) * B * l * (1.0 + l);
  const double qb = 1.0 - l + (A - l) * B * (1.0 + l);
  // Positive root of qa s^2 + qb s - 1, in the form that avoids cancellation.
  const double disc = std::sqrt(qb * qb + 4.0 * qa);
  n.sigma0 = qb >= 0.0 ? 2.0 / (qb + disc) : (disc - qb) / (2.0 * qa);
  n.s0 = std::sqrt(n.sigma0);
  return n;
}

MinimizationResult n2_positive_minimizer(int p, int q, double b) {
  const N2Parameters n = n2_parameters(p, q, b);
  // The smaller degree sits at s0, the larger one at lambda s0 <= s0.
  const Point outer(n.s0, 0.0), inner(-n.lambda * n.s0, 0.0);
  std::vector<Point> z = p <= q ? std::vector<Point>{outer, inner} : std::vector<Point>{inner, outer};
  MinimizationResult r;
  r.regime = RegimeLabel::ConfinedBLessOne;
  r.status = Status::Converged;
  r.points = gauge_fix(z);
  const int degs[] = {p, q};
  r.value = energy(*r.points, degs, b);
  return r;
}

// ---------------------------------------------------------------------------
// Numerical minimisation

namespace {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

struct Problem {
  std::vector<int> degrees;
  double b;
  double mu;

  std::size_t n() const { return degrees.size(); }

  static std::vector<Point> unpack(const Vec& x) {
    std::vector<Point> z(static_cast<std::size_t>(x.size() / 2));
    for (std::size_t i = 0; i < z.size(); ++i)
      z[i] = Point(x[2 * static_cast<Eigen::Index>(i)], x[2 * static_cast<Eigen::Index>(i) + 1]);
    return z;
  }

  bool admissible(const Vec& x) const {
    const auto z = unpack(x);
    for (std::size_t i = 0; i < z.size(); ++i) {
      if (!(std::norm(z[i]) < 1.0)) return false;
      for (std::size_t j = i + 1; j < z.size(); ++j)
        if (std::abs(z[i] - z[j]) < 1e-6) return false;
    }
    return true;
  }

  double value(const Vec& x) const {
    const auto z = unpack(x);
    double v = energy(z, degrees, b);
    for (const Point& zi : z) v -= mu * std::log1p(-std::norm(zi));
    return v;
  }

  Vec gradient(const Vec& x) const {
    const auto z = unpack(x);
    const auto g = disk::w_micro_gradient(VortexConfig(z, degrees), b);
    Vec out(x.size());
    for (std::size_t i = 0; i < z.size(); ++i) {
      const double w = mu * 2.0 / (1.0 - std::norm(z[i]));
      out[2 * static_cast<Eigen::Index>(i)] = g.components[i][0] + w * z[i].real();
      out[2 * static_cast<Eigen::Index>(i) + 1] = g.components[i][1] + w * z[i].imag();
    }
    return out;
  }
};

struct Trajectory {
  Vec x;
  double value = 0.0;
  double grad_sup = std::numeric_limits<double>::infinity();
  int iterations = 0;
  bool converged = false;
};

// BFGS with backtracking; returns false if the trajectory collapsed two points.
bool bfgs(const Problem& prob, Vec& x, int max_iters, double tol, int& iters) {
  const Eigen::Index m = x.size();
  Mat H = Mat::Identity(m, m);
  double f = prob.value(x);
  Vec g = prob.gradient(x);
  for (int it = 0; it < max_iters; ++it) {
    if (g.cwiseAbs().maxCoeff() <= tol * std::max(1.0, std::abs(f))) return true;
    Vec dir = -H * g;
    if (dir.dot(g) >= 0.0) {
      H.setIdentity();
      dir = -g;
    }
    // Cap the step so a single move cannot cross the disk.
    const double cap = 0.25 / std::max(dir.cwiseAbs().maxCoeff(), 0.25);
    double t = cap;
    Vec xn;
    double fn = 0.0;
    bool accepted = false;
    for (int ls = 0; ls < 60; ++ls, t *= 0.5) {
      xn = x + t * dir;
      if (!prob.admissible(xn)) continue;
      fn = prob.value(xn);
      if (fn <= f + 1e-4 * t * g.dot(dir)) {
        accepted = true;
        break;
      }
    }
    ++iters;
    if (!accepted) {
      // Step too small to make progress: either at round-off level or stuck.
      if (!prob.admissible(x + 1e-12 * dir)) return false;
      return true;
    }
    const Vec gn = prob.gradient(xn);
    const Vec s = xn - x, y = gn - g;
    const double sy = s.dot(y);
    if (sy > 1e-16 * s.norm() * y.norm()) {
      const double rho = 1.0 / sy;
      const Mat I = Mat::Identity(m, m);
      H = (I - rho * s * y.transpose()) * H * (I - rho * y * s.transpose()) +
          rho * s * s.transpose();
    }
    x = xn;
    f = fn;
    g = gn;
  }
  return true;
}

// Newton iterations on the barrier-free energy with a finite-difference Hessian.
// Directions with tiny curvature (the rotation mode) are dropped.
void newton_polish(const Problem& prob, Vec& x, int& iters) {
  const Eigen::Index m = x.size();
  Vec g = prob.gradient(x);
  for (int it = 0; it < 20; ++it) {
    Mat Hs(m, m);
    for (Eigen::Index k = 0; k < m; ++k) {
      const double h = 1e-6;
      Vec xp = x, xm = x;
      xp[k] += h;
      xm[k] -= h;
      if (!prob.admissible(xp) || !prob.admissible(xm)) return;
      Hs.col(k) = (prob.gradient(xp) - prob.gradient(xm)) / (2.0 * h);
    }
    Hs = 0.5 * (Hs + Hs.transpose());
    Eigen::SelfAdjointEigenSolver<Mat> eig(Hs);
    const Vec& ev = eig.eigenvalues();
    const double scale = ev.cwiseAbs().maxCoeff();
    Vec coeff = eig.eigenvectors().transpose() * g;
    for (Eigen::Index k = 0; k < m; ++k)
      coeff[k] = std::abs(ev[k]) > 1e-8 * scale ? coeff[k] / std::abs(ev[k]) : 0.0;
    const Vec xn = x - eig.eigenvectors() * coeff;
    if (!prob.admissible(xn)) return;
    const Vec gn = prob.gradient(xn);
    ++iters;
    if (!(gn.cwiseAbs().maxCoeff() < g.cwiseAbs().maxCoeff())) return;
    x = xn;
    g = gn;
  }
}

Vec random_start(std::size_t n, std::size_t start, std::mt19937_64& rng) {
  static constexpr double kRings[] = {0.2, 0.4, 0.6};
  const double r = kRings[start % 3];
  std::uniform_real_distribution<double> angle(0.0, 2.0 * pi);
  for (;;) {
    Vec x(2 * static_cast<Eigen::Index>(n));
    for (std::size_t i = 0; i < n; ++i) {
      const Point z = std::polar(r, angle(rng));
      x[2 * static_cast<Eigen::Index>(i)] = z.real();
      x[2 * static_cast<Eigen::Index>(i) + 1] = z.imag();
    }
    const auto z = Problem::unpack(x);
    double sep = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j) sep = std::min(sep, std::abs(z[i] - z[j]));
    if (sep > 1e-3) return x;
  }
}

Trajectory run_start(const std::vector<int>& degrees, double b, const SolverOptions& opts,
                     std::size_t start) {
  std::seed_seq seq{static_cast<std::uint32_t>(opts.seed & 0xffffffffu),
                    static_cast<std::uint32_t>(opts.seed >> 32),
                    static_cast<std::uint32_t>(start)};
  std::mt19937_64 rng(seq);
  Trajectory tr;
  for (int attempt = 0; attempt < 5; ++attempt) {
    Vec x = random_start(degrees.size(), start, rng);
    int iters = 0;
    bool ok = true;
    for (double mu : opts.barrier_schedule) {
      const Problem prob{degrees, b, mu};
      // Newton polishing takes the last stage from 1e-8 down to grad_tol.
      const double tol = std::max(opts.grad_tol, mu > 0.0 ? 1e-6 : 1e-8);
      if (!bfgs(prob, x, opts.max_iters, tol, iters)) {
        ok = false;
        break;
      }
    }
    if (!ok) continue;  // two points collapsed: restart from a fresh sample
    const Problem final_prob{degrees, b, 0.0};
    newton_polish(final_prob, x, iters);
    tr.x = x;
    tr.value = final_prob.value(x);
    tr.grad_sup = final_prob.gradient(x).cwiseAbs().maxCoeff();
    tr.iterations = iters;
    tr.converged = tr.grad_sup <= opts.grad_tol * std::max(1.0, std::abs(tr.value));
    for (const Point& z : Problem::unpack(x)) tr.converged = tr.converged && std::abs(z) <= 1.0 - 1e-6;
    return tr;
  }
  return tr;
}

bool lex_less(const std::vector<Point>& a, const std::vector<Point>& b) {
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i].real() != b[i].real()) return a[i].real() < b[i].real();
    if (a[i].imag() != b[i].imag()) return a[i].imag() < b[i].imag();
  }
  return false;
}

// Minimise over the active vortices only.
MinimizationResult numeric_core(const std::vector<int>& degrees, double b,
                                const SolverOptions& opts) {
  const std::size_t starts = static_cast<std::size_t>(std::max(1, opts.n_starts));
  std::vector<Trajectory> runs(starts);
  const unsigned jobs = std::max(1u, std::min<unsigned>(opts.jobs, static_cast<unsigned>(starts)));
  if (jobs == 1) {
    for (std::size_t s = 0; s < starts; ++s) runs[s] = run_start(degrees, b, opts, s);
  } else {
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < jobs; ++t)
      pool.emplace_back([&, t] {
        for (std::size_t s = t; s < starts; s += jobs) runs[s] = run_start(degrees, b, opts, s);
      });
    for (auto& th : pool) th.join();
  }

  const Trajectory* best = nullptr;
  std::vector<Point> best_pts;
  for (const Trajectory& tr : runs) {
    if (!tr.converged) continue;
    auto pts = gauge_fix(Problem::unpack(tr.x));
    if (best) {
      const double tie = 1e-12 * std::max(1.0, std::abs(best->value));
      if (tr.value > best->value + tie) continue;
      if (tr.value >= best->value - tie && !lex_less(pts, best_pts)) continue;
    }
    best = &tr;
    best_pts = std::move(pts);
  }
  if (!best)
    throw Error(ErrorCode::NoConvergence,
                fmt::format("none of {} starts reached the gradient tolerance {}", starts,
                            opts.grad_tol));
  MinimizationResult r;
  r.status = Status::Converged;
  r.points = best_pts;
  r.value = energy(best_pts, degrees, b);
  r.iterations = best->iterations;
  r.seed = opts.seed;
  r.gradient_norm = best->grad_sup;
  return r;
}

}  // namespace

MinimizationResult minimize_numeric(std::span<const int> degrees, double b,
                                    const SolverOptions& opts) {
  const RegimeLabel regime = classify_regime(degrees, b);
  const std::size_t N = degrees.size();
  const auto active = active_indices(degrees);
  MinimizationResult r;

  switch (regime) {
    case RegimeLabel::AllZeroDegrees:
    case RegimeLabel::FlatBEqualsOne:
      r.status = Status::FlatZero;
      r.value = 0.0;
      break;
    case RegimeLabel::MixedSignUnbounded:
    case RegimeLabel::BoundaryEscapeBGreaterOne:
      r.status = Status::UnboundedBelow;
      r.witness_path = unboundedness_witness(degrees, b);
      break;
    case RegimeLabel::InfimumNotAttainedBEqualsOne: {
      double s = 0.0;
      for (std::size_t i = 0; i < N; ++i)
        for (std::size_t j = 0; j < N; ++j)
          if (i != j) s += static_cast<double>(degrees[i]) * degrees[j];
      r.status = Status::InfimumNotAttained;
      r.infimum_bounds = std::pair{-pi * s * std::log(2.0), 0.0};
      break;
    }
    case RegimeLabel::SingleActiveVortex:
      if (b > 1.0) {
        r.status = Status::UnboundedBelow;
        r.witness_path = unboundedness_witness(degrees, b);
        break;
      }
      [[fallthrough]];
    case RegimeLabel::ConfinedBLessOne: {
      std::vector<int> reduced;
      for (std::size_t i : active) reduced.push_back(degrees[i]);
      const MinimizationResult sub = numeric_core(reduced, b, opts);
      std::vector<Point> pts(N);
      for (std::size_t i = 0; i < N; ++i) pts[i] = parked(i, N);
      for (std::size_t k = 0; k < active.size(); ++k) pts[active[k]] = (*sub.points)[k];
      r = sub;
      if (active.size() != N) {
        // Zero-degree vortices are free; nudge any parked point that collides.
        for (std::size_t i = 0; i < N; ++i)
          if (degrees[i] == 0)
            for (std::size_t k : active)
              if (std::abs(pts[i] - pts[k]) < 1e-3) pts[i] *= 0.9;
        r.points = pts;
      }
      break;
    }
  }
  r.regime = regime;
  r.seed = opts.seed;
  return r;
}

}  // namespace renorm::micro
