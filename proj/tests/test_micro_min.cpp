#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "reference_values.hpp"
#include "renorm/disk_energy.hpp"
#include "renorm/micro_min.hpp"
#include "renorm/regimes.hpp"

using namespace renorm;
using namespace renorm::micro;
using std::numbers::pi;

namespace {

ErrorCode code_of(auto&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("no error raised");
  return ErrorCode::ComputeError;
}

double wm(const std::vector<Point>& z, const std::vector<int>& d, double b) {
  return disk::w_micro_closed(VortexConfig(z, d), b);
}

}  // namespace

TEST_SUITE("micro_min") {

TEST_CASE("regime classification") {
  const std::vector<int> mixed{1, -1}, ones{1, 1}, zeros{0, 0, 0}, single{0, 2, 0}, triple{1, 2, 3};
  for (double b : {0.3, 1.0, 2.0}) CHECK(classify_regime(mixed, b) == RegimeLabel::MixedSignUnbounded);
  CHECK(classify_regime(ones, 1.0) == RegimeLabel::InfimumNotAttainedBEqualsOne);
  CHECK(classify_regime(zeros, 0.5) == RegimeLabel::AllZeroDegrees);
  CHECK(classify_regime(single, 0.5) == RegimeLabel::SingleActiveVortex);
  CHECK(classify_regime(single, 1.0) == RegimeLabel::FlatBEqualsOne);
  CHECK(classify_regime(triple, 0.5) == RegimeLabel::ConfinedBLessOne);
  CHECK(classify_regime(triple, 1.5) == RegimeLabel::BoundaryEscapeBGreaterOne);
  const std::vector<int> neg{-1, -2};
  CHECK(classify_regime(neg, 0.5) == RegimeLabel::ConfinedBLessOne);
}

TEST_CASE("labels are exclusive and cover every input") {
  std::mt19937_64 rng(31);
  std::uniform_int_distribution<int> dd(-2, 2), nd(1, 4);
  for (int k = 0; k < 500; ++k) {
    std::vector<int> d(nd(rng));
    for (int& x : d) x = dd(rng);
    for (double b : {0.5, 1.0, 2.0}) {
      const RegimeLabel l = classify_regime(d, b);
      int active = 0, pos = 0, neg = 0;
      for (int x : d) {
        active += x != 0;
        pos += x > 0;
        neg += x < 0;
      }
      if (active == 0) CHECK(l == RegimeLabel::AllZeroDegrees);
      else if (active == 1) CHECK((l == RegimeLabel::SingleActiveVortex || l == RegimeLabel::FlatBEqualsOne));
      else if (pos && neg) CHECK(l == RegimeLabel::MixedSignUnbounded);
      else if (b < 1) CHECK(l == RegimeLabel::ConfinedBLessOne);
      else if (b == 1) CHECK(l == RegimeLabel::InfimumNotAttainedBEqualsOne);
      else CHECK(l == RegimeLabel::BoundaryEscapeBGreaterOne);
    }
  }
}

TEST_CASE("single vortex") {
  const auto a = n1_minimizer(1, 0.5);
  CHECK(a.status == Status::Converged);
  REQUIRE(a.points);
  CHECK(std::abs((*a.points)[0]) == 0.0);
  CHECK(*a.value == 0.0);
  CHECK(n1_minimizer(3, 1.0).status == Status::FlatZero);
  const auto c = n1_minimizer(1, 2.0);
  CHECK(c.status == Status::UnboundedBelow);
  REQUIRE(c.witness_path);
  const auto& e = c.witness_path->energies;
  CHECK(e.size() == 3);
  CHECK(e[0] > e[1]);
  CHECK(e[1] > e[2]);
  CHECK(code_of([] { n1_minimizer(0, 0.5); }) == ErrorCode::ZeroDegree);
}

TEST_CASE("two positive vortices with equal degrees") {
  for (double b : {0.1, 0.3, 0.5, std::sqrt(0.5), 0.9}) {
    const auto par = n2_parameters(2, 2, b);
    const double s0 = std::pow(1.0 + 4.0 * (1.0 - b * b) / (1.0 + b * b), -0.25);
    CHECK(par.lambda == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(std::abs(par.s0 - s0) <= 1e-12);
    const auto r = n2_positive_minimizer(2, 2, b);
    REQUIRE(r.points);
    CHECK(std::abs((*r.points)[0] - Point(s0, 0.0)) <= 1e-12);
    CHECK(std::abs((*r.points)[1] - Point(-s0, 0.0)) <= 1e-12);
  }
  CHECK(n2_parameters(1, 1, std::sqrt(0.5)).s0 == doctest::Approx(ref::pp_s0_half).epsilon(1e-14));
  // B -> 0 pushes the pair to the boundary.
  CHECK(n2_parameters(1, 1, 1.0 - 1e-9).s0 == doctest::Approx(1.0).epsilon(1e-8));
}

TEST_CASE("two positive vortices with unequal degrees match a direct minimisation") {
  const auto r = n2_positive_minimizer(1, 2, std::sqrt(0.5));
  REQUIRE(r.points);
  CHECK(std::abs((*r.points)[0] - Point(ref::n2_p1q2_s, 0.0)) <= 1e-10);
  CHECK(std::abs((*r.points)[1] - Point(-ref::n2_p1q2_t, 0.0)) <= 1e-10);
  CHECK(*r.value == doctest::Approx(ref::n2_p1q2_value).epsilon(1e-12));
}

TEST_CASE("sigma0 lies in (0, 1) and the larger degree sits closer to the centre") {
  for (int p = 1; p <= 6; ++p)
    for (int q = 1; q <= 6; ++q)
      for (double b = 0.05; b < 1.0; b += 0.05) {
        const auto par = n2_parameters(p, q, b);
        CHECK(par.sigma0 > 0.0);
        CHECK(par.sigma0 < 1.0);
        const auto r = n2_positive_minimizer(p, q, b);
        const double m1 = std::abs((*r.points)[0]), m2 = std::abs((*r.points)[1]);
        if (p == q) CHECK(m1 == doctest::Approx(m2).epsilon(1e-14));
        else CHECK((m1 < m2) == (p > q));
        CHECK(*r.value == doctest::Approx(wm(*r.points, {p, q}, b)).epsilon(1e-14));
      }
}

TEST_CASE("closed form preconditions") {
  CHECK(code_of([] { n2_positive_minimizer(1, 1, 1.0); }) == ErrorCode::DomainError);
  CHECK(code_of([] { n2_positive_minimizer(1, -1, 0.5); }) == ErrorCode::DomainError);
  CHECK(code_of([] { n2_positive_minimizer(0, 1, 0.5); }) == ErrorCode::DomainError);
}

TEST_CASE("numeric minimiser agrees with the closed forms") {
  const std::vector<int> one{1};
  const auto a = minimize_numeric(one, 0.5);
  CHECK(a.status == Status::Converged);
  CHECK(std::abs((*a.points)[0]) <= 1e-8);

  const double b = std::sqrt(0.5);  // B = 1/3
  const std::vector<int> pair{1, 1};
  const auto n = minimize_numeric(pair, b);
  REQUIRE(n.status == Status::Converged);
  const double s0 = std::pow(7.0 / 3.0, -0.25);
  CHECK(std::abs((*n.points)[0] - Point(s0, 0.0)) <= 1e-6);
  CHECK(std::abs((*n.points)[1] - Point(-s0, 0.0)) <= 1e-6);

  for (auto [p, q] : {std::pair{1, 2}, {3, 1}, {2, 3}}) {
    const std::vector<int> d{p, q};
    const auto num = minimize_numeric(d, 0.5);
    const auto cf = n2_positive_minimizer(p, q, 0.5);
    for (int i = 0; i < 2; ++i) CHECK(std::abs((*num.points)[i] - (*cf.points)[i]) <= 1e-6);
    CHECK(num.gradient_norm <= 1e-10 * std::max(1.0, std::abs(*num.value)));
  }
}

TEST_CASE("three unit vortices settle on a symmetric triangle") {
  const std::vector<int> d{1, 1, 1};
  const auto r = minimize_numeric(d, 0.5);
  REQUIRE(r.status == Status::Converged);
  const auto& z = *r.points;
  for (int i = 0; i < 3; ++i) {
    CHECK(std::abs(z[i]) == doctest::Approx(std::abs(z[0])).epsilon(1e-7));
    CHECK(std::abs(z[i]) <= 1.0 - 1e-6);
    const double gap = std::arg(z[(i + 1) % 3] / z[i]);
    CHECK(std::abs(std::abs(gap) - 2.0 * pi / 3.0) <= 1e-7);
  }
  // Below the collinear start and below every sampled configuration.
  CHECK(*r.value < wm({{0.4, 0.0}, {0.0, 0.0}, {-0.4, 0.0}}, d, 0.5));
  std::mt19937_64 rng(32);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double best = INFINITY;
  for (int k = 0; k < 100000; ++k) {
    std::vector<Point> s;
    for (int i = 0; i < 3; ++i) s.push_back(std::polar(0.99 * std::sqrt(u(rng)), 2.0 * pi * u(rng)));
    best = std::min(best, wm(s, d, 0.5));
  }
  CHECK(*r.value <= best);
  // A 1000-start run finds nothing lower.
  SolverOptions many;
  many.n_starts = 1000;
  const auto wide = minimize_numeric(d, 0.5, many);
  CHECK(*wide.value >= *r.value - 1e-10);
}

TEST_CASE("numeric results do not depend on the thread count") {
  const std::vector<int> d{1, 2, 1};
  SolverOptions one, four;
  one.n_starts = four.n_starts = 12;
  four.jobs = 4;
  const auto a = minimize_numeric(d, 0.4, one), b = minimize_numeric(d, 0.4, four);
  CHECK(*a.value == *b.value);
  CHECK(*a.points == *b.points);
  CHECK(a.seed == one.seed);
}

TEST_CASE("numeric minimiser delegates outside the confined regime") {
  const std::vector<int> mixed{1, -1}, pair{1, 1}, zeros{0, 0};
  CHECK(minimize_numeric(mixed, 0.5).status == Status::UnboundedBelow);
  const auto flat = minimize_numeric(pair, 1.0);
  CHECK(flat.status == Status::InfimumNotAttained);
  REQUIRE(flat.infimum_bounds);
  CHECK(flat.infimum_bounds->first == doctest::Approx(-2.0 * pi * std::log(2.0)).epsilon(1e-14));
  CHECK(flat.infimum_bounds->second == 0.0);
  CHECK(minimize_numeric(pair, 2.0).status == Status::UnboundedBelow);
  CHECK(minimize_numeric(zeros, 0.5).status == Status::FlatZero);
}

TEST_CASE("gauge fixing") {
  const std::vector<Point> quarter{{0.0, 0.5}};
  CHECK(std::abs(gauge_fix(quarter)[0] - Point(0.5, 0.0)) <= 1e-16);
  const std::vector<Point> pair{{0.3, 0.0}, {-0.3, 0.0}};
  CHECK(gauge_fix(pair) == pair);

  std::mt19937_64 rng(33);
  std::uniform_real_distribution<double> u(-0.6, 0.6);
  for (int k = 0; k < 200; ++k) {
    std::vector<Point> z{{u(rng), u(rng)}, {u(rng), u(rng)}, {u(rng), u(rng)}};
    const auto g = gauge_fix(z);
    const auto gg = gauge_fix(g);
    for (int i = 0; i < 3; ++i) CHECK(std::abs(gg[i] - g[i]) <= 1e-15);
    const std::vector<int> d{1, 2, -1};
    CHECK(wm(g, d, 0.6) == doctest::Approx(wm(z, d, 0.6)).epsilon(1e-12));
  }
}

TEST_CASE("witness paths") {
  const std::vector<int> mixed{1, -1}, pair{1, 1};
  for (const auto& [d, b] : {std::pair{mixed, 0.5}, {pair, 2.0}}) {
    const auto w = unboundedness_witness(d, b);
    REQUIRE(w.energies.size() == 3);
    CHECK(w.n == std::vector<long>{10, 100, 1000});
    CHECK(w.energies[0] > w.energies[1]);
    CHECK(w.energies[1] > w.energies[2]);
    for (std::size_t k = 0; k < 3; ++k) CHECK(w.energies[k] == doctest::Approx(wm(w.points[k], d, b)).epsilon(1e-14));
  }
  const auto m = unboundedness_witness(mixed, 0.5);
  CHECK(std::abs(m.points[0][0] - Point(-0.1, 0.0)) <= 1e-16);
  CHECK(std::abs(m.points[0][1] - Point(0.1, 0.0)) <= 1e-16);
  const auto e = unboundedness_witness(pair, 2.0);
  CHECK(std::abs(e.points[1][1] - Point(-0.99, 0.0)) <= 1e-15);
  CHECK(code_of([&] { unboundedness_witness(pair, 0.5); }) == ErrorCode::WrongRegime);
}

TEST_CASE("regime table cells") {
  const std::vector<double> bs{0.5, 1.0, 2.0};
  const std::vector<std::vector<int>> patterns{{1}, {1, 1}};
  SolverOptions opts;
  opts.n_starts = 8;
  const auto cells = table_regimes(bs, patterns, opts);
  REQUIRE(cells.size() == 6);
  auto find = [&](double b, std::vector<int> d) {
    for (const auto& c : cells)
      if (c.b == b && c.degrees == d) return c;
    FAIL("missing cell");
    return cells[0];
  };
  const auto c1 = find(0.5, {1});
  CHECK(c1.label == RegimeLabel::SingleActiveVortex);
  CHECK(std::abs((*c1.result.points)[0]) == 0.0);
  const auto c2 = find(2.0, {1, 1});
  CHECK(c2.label == RegimeLabel::BoundaryEscapeBGreaterOne);
  CHECK(c2.result.witness_path.has_value());
  const auto c3 = find(1.0, {1, 1});
  CHECK(c3.label == RegimeLabel::InfimumNotAttainedBEqualsOne);
  CHECK(c3.result.infimum_bounds->first == doctest::Approx(-2.0 * pi * std::log(2.0)));
}

}
