#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "reference_values.hpp"
#include "renorm/disk_energy.hpp"
#include "renorm/fourier.hpp"

using namespace renorm;
using namespace renorm::disk;
using std::numbers::pi;

namespace {

VortexConfig random_config(std::mt19937_64& rng, int n, double rmax = 0.9) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::uniform_int_distribution<int> dd(-3, 3);
  std::vector<Point> z;
  std::vector<int> d;
  for (int i = 0; i < n; ++i) {
    z.push_back(std::polar(rmax * std::sqrt(u(rng)), 2.0 * pi * u(rng)));
    d.push_back(dd(rng));
  }
  return VortexConfig(z, d);
}

VortexConfig map_points(const VortexConfig& c, auto&& f, int sign = 1) {
  std::vector<Point> z;
  std::vector<int> d;
  for (std::size_t i = 0; i < c.size(); ++i) {
    z.push_back(f(c.point(i)));
    d.push_back(sign * c.degree(i));
  }
  return VortexConfig(z, d);
}

bool close(double a, double b, double rel) { return std::abs(a - b) <= rel * std::max(1.0, std::abs(b)); }

}  // namespace

TEST_SUITE("disk_energy") {

TEST_CASE("renormalized energy examples") {
  CHECK(lr_renormalized_energy(VortexConfig({{0.0, 0.0}}, {5})) == 0.0);
  for (double t : {0.1, 0.5, 0.9, 0.99})
    CHECK(lr_renormalized_energy(VortexConfig({{t, 0.0}}, {1})) ==
          doctest::Approx(pi * std::log(1.0 - t * t)).epsilon(1e-14));
  const VortexConfig pair({{0.3, 0.0}, {-0.3, 0.0}}, {1, 1});
  CHECK(lr_renormalized_energy(pair) ==
        doctest::Approx(2.0 * pi * (-std::log(0.6) + std::log(0.91) + std::log(1.09))).epsilon(1e-14));
  CHECK(lr_renormalized_energy(pair) == doctest::Approx(ref::pair_w).epsilon(1e-14));
}

TEST_CASE("k_min examples") {
  for (int k : {1, -2, 5}) CHECK(k_min(VortexConfig({{0.0, 0.0}}, {k}), 0.5, 1e-12) == 0.0);
  for (double t : {0.2, 0.5, 0.8, 0.9})
    for (double b : {0.3, 0.7, 1.5}) {
      const double expected = -2.0 * pi * b * b / (1.0 + b * b) * std::log(1.0 - t * t);
      CHECK(std::abs(k_min(VortexConfig({{t, 0.0}}, {1}), b, 1e-12) - expected) <= 1e-11);
    }
  const VortexConfig pair({{0.3, 0.0}, {-0.3, 0.0}}, {1, 1});
  CHECK(k_min(pair, 0.5, 1e-14) == doctest::Approx(ref::pair_kmin_b05).epsilon(1e-12));
}

TEST_CASE("k_min at b = 1 is half the seminorm") {
  std::mt19937_64 rng(21);
  for (int k = 0; k < 20; ++k) {
    const auto cfg = random_config(rng, 3, 0.8);
    const auto g = fourier::dephasing_coefficients(cfg, series_cutoff(cfg, 1.0, 1e-14));
    CHECK(k_min(cfg, 1.0, 1e-14) == doctest::Approx(0.5 * fourier::h_half_seminorm_sq(g)).epsilon(1e-12));
  }
}

TEST_CASE("W micro closed form examples") {
  for (double b : {0.2, 0.5, 0.9, 1.3})
    for (int d : {1, 2, -3})
      for (Point z : {Point(0.4, 0.0), Point(0.2, -0.6)}) {
        const double expected = -(b * b * (1.0 - b * b) / (1.0 + b * b)) * pi * d * d * std::log(1.0 - std::norm(z));
        CHECK(w_micro_closed(VortexConfig({z}, {d}), b) == doctest::Approx(expected).epsilon(1e-13));
      }
  CHECK(w_micro_closed(VortexConfig({{0.0, 0.0}}, {4}), 0.5) == 0.0);
  CHECK(w_micro_closed(VortexConfig({{0.7, 0.1}}, {2}), 1.0) == 0.0);
  const VortexConfig pair({{0.3, 0.0}, {-0.3, 0.0}}, {1, 1});
  CHECK(w_micro_closed(pair, 0.5) == doctest::Approx(ref::pair_wmicro_b05).epsilon(1e-13));
  CHECK(w_micro_closed(pair, 1.0) == doctest::Approx(-2.0 * pi * std::log(0.6)).epsilon(1e-14));
  CHECK(w_micro_closed(VortexConfig({{0.2, 0.0}, {-0.4, 0.0}}, {1, 2}), 0.6) ==
        doctest::Approx(ref::mixed_wmicro_b06).epsilon(1e-13));
  CHECK(w_micro_closed(VortexConfig({{0.1, 0.5}, {-0.6, 0.2}, {0.3, -0.7}}, {2, -1, 3}), 0.7) ==
        doctest::Approx(ref::triple_wmicro_b07).epsilon(1e-13));
}

TEST_CASE("W micro series route") {
  const VortexConfig one({{0.5, 0.0}}, {1});
  CHECK(std::abs(w_micro_series(one, 0.5, 1e-10) - w_micro_closed(one, 0.5)) <= 1e-9);
  CHECK(w_micro_series(VortexConfig({{0.0, 0.0}}, {3}), 0.4, 1e-10) == 0.0);
  const VortexConfig pair({{0.3, 0.0}, {-0.3, 0.0}}, {1, 1});
  CHECK(std::abs(w_micro_series(pair, 1.0, 1e-12) - ref::pair_wmicro_b1) <= 1e-11);
  CHECK(std::abs(w_micro_series(pair, 0.5, 1e-12) - ref::pair_wmicro_b05) <= 1e-11);
}

TEST_CASE("dual-route identity on random configurations") {
  std::mt19937_64 rng(22);
  std::uniform_real_distribution<double> bd(0.2, 0.9);
  std::uniform_int_distribution<int> nd(1, 5);
  for (int k = 0; k < 300; ++k) {
    const auto cfg = random_config(rng, nd(rng));
    const double b = bd(rng), tol = 1e-10;
    CHECK(std::abs(w_micro_series(cfg, b, tol) - w_micro_closed(cfg, b)) <= tol + 1e-10);
  }
}

TEST_CASE("rotation, conjugation and degree negation leave the energies unchanged") {
  std::mt19937_64 rng(23);
  std::uniform_real_distribution<double> bd(0.2, 1.5), th(0.0, 2.0 * pi);
  for (int k = 0; k < 100; ++k) {
    const auto cfg = random_config(rng, 1 + k % 5);
    const double b = bd(rng);
    const Point rot = std::polar(1.0, th(rng));
    const auto rotated = map_points(cfg, [&](Point z) { return rot * z; });
    const auto conj = map_points(cfg, [](Point z) { return std::conj(z); });
    const auto neg = map_points(cfg, [](Point z) { return z; }, -1);
    const double w = lr_renormalized_energy(cfg), km = k_min(cfg, b, 1e-13), wm = w_micro_closed(cfg, b);
    CHECK(close(w_micro_closed(rotated, b), wm, 1e-12));
    CHECK(close(lr_renormalized_energy(rotated), w, 1e-12));
    CHECK(close(k_min(rotated, b, 1e-13), km, 1e-11));
    for (const auto* other : {&conj, &neg}) {
      CHECK(close(lr_renormalized_energy(*other), w, 1e-13));
      CHECK(close(k_min(*other, b, 1e-13), km, 1e-12));
      CHECK(close(w_micro_closed(*other, b), wm, 1e-13));
    }
  }
}

TEST_CASE("k_min is non-negative and vanishes only without dephasing") {
  std::mt19937_64 rng(24);
  for (int k = 0; k < 100; ++k) {
    const auto cfg = random_config(rng, 1 + k % 4);
    const double km = k_min(cfg, 0.7, 1e-12);
    CHECK(km >= 0.0);
    bool all_zero = true;
    for (std::size_t i = 0; i < cfg.size(); ++i) all_zero = all_zero && cfg.degree(i) == 0;
    if (all_zero) CHECK(km == 0.0);
  }
  CHECK(k_min(VortexConfig({{0.0, 0.0}, {0.5, 0.0}}, {3, 0}), 0.7, 1e-12) == 0.0);
}

TEST_CASE("series cutoff and its cap") {
  const VortexConfig cfg({{0.9, 0.0}}, {1});
  const std::size_t n = series_cutoff(cfg, 0.5, 1e-10);
  // The geometric tail bound at the cutoff is below the scaled tolerance, and not at n - 1.
  auto bound = [](std::size_t m) { return std::pow(0.81, double(m)) / (m * (1.0 - 0.81)); };
  const double target = 1e-10 * 1.25 / (2.0 * pi * 0.25);
  CHECK(bound(n) < target);
  CHECK(bound(n - 1) >= target);
  try {
    k_min(VortexConfig({{1.0 - 1e-9, 0.0}}, {1}), 0.5, 1e-14);
    FAIL("expected TruncationOverflow");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::TruncationOverflow);
  }
}

TEST_CASE("boundary and coincidence handling") {
  for (auto f : {+[] { lr_renormalized_energy(VortexConfig({{1.0, 0.0}}, {1})); },
                 +[] { k_min(VortexConfig({{0.0, 1.2}}, {1}), 0.5, 1e-10); },
                 +[] { w_micro_closed(VortexConfig({{-1.0, 0.0}}, {1}), 0.5); }}) {
    try {
      f();
      FAIL("expected BoundaryDegenerate");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::BoundaryDegenerate);
    }
  }
  const auto d = diagnose(VortexConfig({{1.0 - 1e-7, 0.0}, {0.2, 0.0}, {0.2 + 1e-5, 0.0}}, {1, 1, 1}));
  CHECK(d.near_boundary);
  CHECK(d.near_coincident);
  const auto ok = diagnose(VortexConfig({{0.5, 0.0}, {-0.5, 0.0}}, {1, 1}));
  CHECK_FALSE(ok.near_boundary);
  CHECK_FALSE(ok.near_coincident);
}

TEST_CASE("gradient") {
  const auto g0 = w_micro_gradient(VortexConfig({{0.0, 0.0}}, {1}), 0.5);
  CHECK(g0.components[0][0] == 0.0);
  CHECK(g0.components[0][1] == 0.0);

  auto fd_check = [](const VortexConfig& cfg, double b) {
    const auto g = w_micro_gradient(cfg, b);
    std::vector<Point> z(cfg.points().begin(), cfg.points().end());
    const std::vector<int> d(cfg.degrees().begin(), cfg.degrees().end());
    const double h = 1e-5;
    double scale = 0.0;
    for (const auto& c : g.components) scale = std::max({scale, std::abs(c[0]), std::abs(c[1])});
    for (std::size_t i = 0; i < z.size(); ++i)
      for (int axis = 0; axis < 2; ++axis) {
        const Point step = axis == 0 ? Point(h, 0.0) : Point(0.0, h);
        auto zp = z, zm = z;
        zp[i] += step;
        zm[i] -= step;
        const double fd = (w_micro_closed(VortexConfig(zp, d), b) - w_micro_closed(VortexConfig(zm, d), b)) / (2.0 * h);
        CHECK(std::abs(fd - g.components[i][axis]) <= 1e-6 * std::max(scale, 1e-3));
      }
  };
  fd_check(VortexConfig({{0.2, 0.0}, {-0.4, 0.0}}, {1, 2}), 0.6);
  std::mt19937_64 rng(25);
  for (int k = 0; k < 100; ++k) {
    const auto cfg = random_config(rng, 1 + k % 5, 0.85);
    if (cfg.min_separation() < 0.05) continue;
    fd_check(cfg, 0.2 + 0.007 * k);
  }
}

TEST_CASE("gradient is rotation equivariant") {
  std::mt19937_64 rng(26);
  for (int k = 0; k < 30; ++k) {
    const auto cfg = random_config(rng, 3, 0.8);
    const Point rot = std::polar(1.0, 0.1 + k);
    const auto g = w_micro_gradient(cfg, 0.5);
    const auto gr = w_micro_gradient(map_points(cfg, [&](Point z) { return rot * z; }), 0.5);
    for (std::size_t i = 0; i < cfg.size(); ++i) {
      const Point a = rot * Point(g.components[i][0], g.components[i][1]);
      const Point b(gr.components[i][0], gr.components[i][1]);
      CHECK(std::abs(a - b) <= 1e-11 * std::max(1.0, std::abs(a)));
    }
  }
}

TEST_CASE("energy expansion round-trips") {
  std::mt19937_64 rng(27);
  std::uniform_real_distribution<double> u(-50.0, 50.0);
  for (int k = 0; k < 1000; ++k) {
    const double total = u(rng), top = std::abs(u(rng)), core = std::abs(u(rng)), w = u(rng);
    const auto e = EnergyExpansion::from_total(total, top, core, w);
    CHECK(std::abs(e.reconstruct() - total) <= 1e-12 * std::max(1.0, std::abs(total)));
    CHECK(e.core >= 0.0);
  }
}

}
