#include "renorm/cli/scenario.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <limits>
#include <mutex>
#include <numbers>
#include <random>
#include <sstream>
#include <thread>
#include <variant>

#include <Eigen/Core>
#include <fmt/core.h>
#include <fmt/format.h>

#include "renorm/core.hpp"
#include "renorm/disk_energy.hpp"
#include "renorm/micro_min.hpp"
#include "renorm/oracle/oracle.hpp"
#include "renorm/regimes.hpp"

#ifndef RENORM_VERSION
#define RENORM_VERSION "0.0.0"
#endif

namespace renorm::cli {

using nlohmann::json;

std::string_view to_string(Kind kind) {
  switch (kind) {
    case Kind::WMicro: return "wmicro";
    case Kind::Minimize: return "minimize";
    case Kind::Oracle: return "oracle";
    case Kind::Sweep: return "sweep";
    case Kind::Annulus: return "annulus";
  }
  return "unknown";
}

namespace {

[[noreturn]] void invalid(const std::string& where, const std::string& what) {
  throw Error(ErrorCode::ValidationError, fmt::format("{}: {}", where, what));
}

const json& field(const json& obj, const char* key, const std::string& where) {
  if (!obj.is_object()) invalid(where, "expected an object");
  const auto it = obj.find(key);
  if (it == obj.end()) invalid(where, fmt::format("missing field '{}'", key));
  return *it;
}

double number(const json& v, const std::string& where) {
  if (!v.is_number()) invalid(where, "expected a number");
  return v.get<double>();
}

double number_or(const json& obj, const char* key, double fallback, const std::string& where) {
  return obj.contains(key) ? number(obj.at(key), where + "." + key) : fallback;
}

int integer(const json& v, const std::string& where) {
  if (!v.is_number_integer()) invalid(where, "expected an integer");
  return v.get<int>();
}

double positive(const json& v, const std::string& where) {
  const double x = number(v, where);
  if (!(x > 0.0) || !std::isfinite(x)) invalid(where, "expected a positive number");
  return x;
}

// A number or a non-empty list of numbers.
std::vector<double> positive_list(const json& v, const std::string& where) {
  if (v.is_number()) return {positive(v, where)};
  if (!v.is_array() || v.empty()) invalid(where, "expected a positive number or a non-empty list");
  std::vector<double> out;
  for (std::size_t i = 0; i < v.size(); ++i) out.push_back(positive(v[i], fmt::format("{}[{}]", where, i)));
  return out;
}

std::vector<int> degree_list(const json& v, const std::string& where) {
  if (!v.is_array() || v.empty()) invalid(where, "expected a non-empty list of integers");
  std::vector<int> d;
  for (std::size_t i = 0; i < v.size(); ++i) d.push_back(integer(v[i], fmt::format("{}[{}]", where, i)));
  return d;
}

std::vector<Point> point_list(const json& v, const std::string& where) {
  if (!v.is_array() || v.empty()) invalid(where, "expected a non-empty list of [re, im] pairs");
  std::vector<Point> pts;
  for (std::size_t i = 0; i < v.size(); ++i) {
    const std::string w = fmt::format("{}[{}]", where, i);
    if (!v[i].is_array() || v[i].size() != 2) invalid(w, "expected [re, im]");
    pts.emplace_back(number(v[i][0], w), number(v[i][1], w));
  }
  return pts;
}

struct ConfigSpec {
  std::vector<Point> points;
  std::vector<int> degrees;
};

ConfigSpec config_spec(const json& obj, const std::string& where) {
  ConfigSpec c;
  c.points = point_list(field(obj, "points", where), where + ".points");
  c.degrees = degree_list(field(obj, "degrees", where), where + ".degrees");
  if (c.points.size() != c.degrees.size())
    invalid(where, fmt::format("{} points but {} degrees", c.points.size(), c.degrees.size()));
  return c;
}

std::shared_ptr<const ExteriorWeight> weight_spec(const json& w, const std::string& where) {
  if (w.is_number()) return constant_weight(positive(w, where));
  const json& t = field(w, "type", where);
  if (!t.is_string()) invalid(where + ".type", "expected a string");
  const std::string type = t.get<std::string>();
  if (type == "constant") return constant_weight(positive(field(w, "value", where), where + ".value"));
  if (type == "checkerboard")
    return checkerboard_weight(positive(field(w, "low", where), where + ".low"),
                               positive(field(w, "high", where), where + ".high"),
                               positive(field(w, "cell", where), where + ".cell"));
  if (type == "radial_stripes")
    return radial_stripes_weight(positive(field(w, "low", where), where + ".low"),
                                 positive(field(w, "high", where), where + ".high"),
                                 positive(field(w, "r0", where), where + ".r0"),
                                 positive(field(w, "ratio", where), where + ".ratio"));
  invalid(where + ".type", fmt::format("unknown weight type '{}'", type));
}

Region impurity_spec(const json& v, const std::string& where) {
  if (v.is_string()) {
    if (v.get<std::string>() != "disk") invalid(where, "expected \"disk\" or an object");
    return Region::unit_disk();
  }
  const json& t = field(v, "type", where);
  if (!t.is_string()) invalid(where + ".type", "expected a string");
  const std::string type = t.get<std::string>();
  if (type == "disk") {
    const auto c = v.contains("center") ? point_list(json::array({v.at("center")}), where + ".center")[0]
                                        : Point(0.0, 0.0);
    return Region::disk(c, positive(field(v, "radius", where), where + ".radius"));
  }
  if (type == "ellipse") {
    const Point c = point_list(json::array({field(v, "center", where)}), where + ".center")[0];
    const json& ax = field(v, "semi_axes", where);
    if (!ax.is_array() || ax.size() != 2) invalid(where + ".semi_axes", "expected [a, b]");
    const double a = positive(ax[0], where + ".semi_axes[0]"), b = positive(ax[1], where + ".semi_axes[1]");
    auto sdf = [c, a, b](Point x) {
      const Point d = x - c;
      return (std::hypot(d.real() / a, d.imag() / b) - 1.0) * std::min(a, b);
    };
    return Region::mask(sdf, {c - Point(a, b), c + Point(a, b)},
                        fmt::format("ellipse(center={}{:+}i, a={}, b={})", c.real(), c.imag(), a, b));
  }
  invalid(where + ".type", fmt::format("unknown impurity type '{}'", type));
}

oracle::SolverKind solver_spec(const json& p, const std::string& where) {
  if (!p.contains("solver")) return oracle::SolverKind::Direct;
  const json& s = p.at("solver");
  if (s == "direct") return oracle::SolverKind::Direct;
  if (s == "pcg") return oracle::SolverKind::Pcg;
  invalid(where + ".solver", "expected \"direct\" or \"pcg\"");
}

// ---------------------------------------------------------------------------
// Plans: everything checked before any computation starts.

struct WMicroCase {
  ConfigSpec cfg;
  double b;
};
struct WMicroPlan {
  std::vector<WMicroCase> cases;
  double tol;
};
struct MinimizePlan {
  std::vector<std::vector<int>> patterns;
  std::vector<double> bs;
  micro::SolverOptions opts;
  bool closed = false;
};
struct OraclePlan {
  ConfigSpec cfg;
  double b;
  PinningWeight weight;
  Region impurity;
  std::string impurity_label;
  std::vector<double> Rs, rhos;
  oracle::OracleOptions opts;
};
struct AnnulusPlan {
  PinningWeight weight;
  std::string weight_label;
  double r;
  std::vector<double> Rs;
  int level;
  oracle::OracleOptions opts;
};
struct SweepPlan {
  std::vector<Scenario> children;
};
using Plan = std::variant<WMicroPlan, MinimizePlan, OraclePlan, AnnulusPlan, SweepPlan>;

WMicroPlan plan_wmicro(const Scenario& sc) {
  const json& p = sc.payload;
  WMicroPlan plan;
  plan.tol = p.contains("tol") ? positive(p.at("tol"), "payload.tol") : 1e-10;
  if (p.contains("random")) {
    const json& r = p.at("random");
    const std::string w = "payload.random";
    const int count = integer(field(r, "count", w), w + ".count");
    const int max_n = r.contains("max_n") ? integer(r.at("max_n"), w + ".max_n") : 5;
    const double max_mod = number_or(r, "max_modulus", 0.9, w);
    int dlo = -3, dhi = 3;
    if (r.contains("degree_range")) {
      const auto d = degree_list(r.at("degree_range"), w + ".degree_range");
      if (d.size() != 2 || d[0] > d[1]) invalid(w + ".degree_range", "expected [lo, hi]");
      dlo = d[0];
      dhi = d[1];
    }
    double blo = 0.2, bhi = 0.9;
    if (r.contains("b_range")) {
      const auto br = positive_list(r.at("b_range"), w + ".b_range");
      if (br.size() != 2 || br[0] > br[1]) invalid(w + ".b_range", "expected [lo, hi]");
      blo = br[0];
      bhi = br[1];
    }
    if (count < 1 || max_n < 1 || !(max_mod > 0.0 && max_mod < 1.0))
      invalid(w, "need count >= 1, max_n >= 1 and 0 < max_modulus < 1");
    std::mt19937_64 rng(sc.seed);
    std::uniform_int_distribution<int> nd(1, max_n), dd(dlo, dhi);
    std::uniform_real_distribution<double> u(0.0, 1.0), bd(blo, bhi);
    for (int k = 0; k < count; ++k) {
      WMicroCase c;
      const int n = nd(rng);
      for (int i = 0; i < n; ++i) {
        c.cfg.points.push_back(std::polar(max_mod * std::sqrt(u(rng)), 2.0 * std::numbers::pi * u(rng)));
        c.cfg.degrees.push_back(dd(rng));
      }
      c.b = bd(rng);
      plan.cases.push_back(std::move(c));
    }
    return plan;
  }
  const json& cfgs = field(p, "configs", "payload");
  if (!cfgs.is_array() || cfgs.empty()) invalid("payload.configs", "expected a non-empty list");
  const auto bs = positive_list(field(p, "b", "payload"), "payload.b");
  for (std::size_t i = 0; i < cfgs.size(); ++i) {
    const ConfigSpec c = config_spec(cfgs[i], fmt::format("payload.configs[{}]", i));
    for (double b : bs) plan.cases.push_back({c, b});
  }
  return plan;
}

MinimizePlan plan_minimize(const Scenario& sc) {
  const json& p = sc.payload;
  MinimizePlan plan;
  const json& d = field(p, "degrees", "payload");
  if (d.is_array() && !d.empty() && d[0].is_array()) {
    for (std::size_t i = 0; i < d.size(); ++i)
      plan.patterns.push_back(degree_list(d[i], fmt::format("payload.degrees[{}]", i)));
  } else {
    plan.patterns.push_back(degree_list(d, "payload.degrees"));
  }
  plan.bs = positive_list(field(p, "b", "payload"), "payload.b");
  plan.opts.seed = sc.seed;
  if (p.contains("n_starts")) plan.opts.n_starts = integer(p.at("n_starts"), "payload.n_starts");
  if (p.contains("max_iters")) plan.opts.max_iters = integer(p.at("max_iters"), "payload.max_iters");
  if (p.contains("grad_tol")) plan.opts.grad_tol = positive(p.at("grad_tol"), "payload.grad_tol");
  if (p.contains("barrier")) {
    const json& bar = p.at("barrier");
    if (!bar.is_array() || bar.empty()) invalid("payload.barrier", "expected a non-empty list");
    plan.opts.barrier_schedule.clear();
    for (std::size_t i = 0; i < bar.size(); ++i) {
      const double mu = number(bar[i], fmt::format("payload.barrier[{}]", i));
      if (mu < 0.0) invalid(fmt::format("payload.barrier[{}]", i), "expected mu >= 0");
      plan.opts.barrier_schedule.push_back(mu);
    }
  }
  if (plan.opts.n_starts < 1 || plan.opts.max_iters < 1)
    invalid("payload", "n_starts and max_iters must be at least 1");
  if (p.contains("method")) {
    const json& m = p.at("method");
    if (m == "closed") plan.closed = true;
    else if (m != "numeric") invalid("payload.method", "expected \"numeric\" or \"closed\"");
  }
  return plan;
}

oracle::OracleOptions oracle_options(const json& p) {
  oracle::OracleOptions o;
  if (p.contains("levels")) {
    o.levels = integer(p.at("levels"), "payload.levels");
    if (o.levels < 1 || o.levels > 4) invalid("payload.levels", "expected 1..4");
  }
  if (p.contains("growth")) {
    o.growth = number(p.at("growth"), "payload.growth");
    if (!(o.growth >= 1.0 && o.growth <= 2.0)) invalid("payload.growth", "expected 1 <= growth <= 2");
  }
  if (p.contains("h")) o.h = positive(p.at("h"), "payload.h");
  o.solve.kind = solver_spec(p, "payload");
  return o;
}

PinningWeight pinning(double b, const json& p, const Region& impurity, const char* key) {
  const auto ext = p.contains(key) ? weight_spec(p.at(key), std::string("payload.") + key)
                                   : constant_weight(1.0);
  const double B = p.contains("B") ? positive(p.at("B"), "payload.B")
                                   : 0.5 * std::min({b, 1.0 / b, std::sqrt(ext->lower_bound()),
                                                     1.0 / std::sqrt(ext->upper_bound())});
  try {
    return PinningWeight(b, B, impurity, ext);
  } catch (const Error& e) {
    invalid("payload", e.what());
  }
}

OraclePlan plan_oracle(const Scenario& sc) {
  const json& p = sc.payload;
  ConfigSpec cfg = config_spec(p, "payload");
  const double b = positive(field(p, "b", "payload"), "payload.b");
  Region imp = p.contains("impurity") ? impurity_spec(p.at("impurity"), "payload.impurity")
                                      : Region::unit_disk();
  OraclePlan plan{cfg, b, pinning(b, p, imp, "exterior"), imp, imp.describe(),
                  positive_list(field(p, "R", "payload"), "payload.R"),
                  positive_list(field(p, "rho", "payload"), "payload.rho"), oracle_options(p)};
  for (double R : plan.Rs)
    for (double rho : plan.rhos) {
      DomainSpec dom{imp, R, rho};
      try {
        validate_config(VortexConfig(cfg.points, cfg.degrees), dom, Strictness::Geometric);
      } catch (const Error& e) {
        invalid(fmt::format("payload (R={}, rho={})", R, rho), e.what());
      }
    }
  return plan;
}

AnnulusPlan plan_annulus(const Scenario& sc) {
  const json& p = sc.payload;
  const double r = positive(field(p, "r", "payload"), "payload.r");
  AnnulusPlan plan{pinning(1.0, p, Region::disk(Point(0.0, 0.0), 0.5 * r), "weight"), "", r,
                   positive_list(field(p, "R", "payload"), "payload.R"), 0, oracle_options(p)};
  plan.weight_label = plan.weight.exterior().describe();
  if (p.contains("level")) plan.level = integer(p.at("level"), "payload.level");
  if (plan.level < 0 || plan.level > 4) invalid("payload.level", "expected 0..4");
  for (double R : plan.Rs)
    if (!(R > r)) invalid("payload.R", "every R must exceed r");
  return plan;
}

Plan make_plan(const Scenario& sc);

SweepPlan plan_sweep(const Scenario& sc) {
  const json& list = field(sc.payload, "scenarios", "payload");
  if (!list.is_array() || list.empty()) invalid("payload.scenarios", "expected a non-empty list");
  SweepPlan plan;
  for (std::size_t i = 0; i < list.size(); ++i) {
    json child = list[i];
    const std::string where = fmt::format("payload.scenarios[{}]", i);
    if (!child.is_object()) invalid(where, "expected an object");
    if (!child.contains("seed")) child["seed"] = sc.seed;
    if (!child.contains("output")) child["output"] = "";
    Scenario c = parse_scenario(child.dump(), sc.seed_from_env ? std::optional(sc.seed) : std::nullopt);
    if (c.kind == Kind::Sweep) invalid(where, "sweeps do not nest");
    for (const Scenario& other : plan.children)
      if (other.name == c.name) invalid(where, fmt::format("duplicate scenario name '{}'", c.name));
    plan.children.push_back(std::move(c));
  }
  return plan;
}

Plan make_plan(const Scenario& sc) {
  switch (sc.kind) {
    case Kind::WMicro: return plan_wmicro(sc);
    case Kind::Minimize: return plan_minimize(sc);
    case Kind::Oracle: return plan_oracle(sc);
    case Kind::Annulus: return plan_annulus(sc);
    case Kind::Sweep: return plan_sweep(sc);
  }
  invalid("kind", "unknown");
}

// ---------------------------------------------------------------------------
// Formatting

std::string points_field(const std::vector<Point>& pts) {
  std::vector<std::string> parts;
  for (const Point& z : pts) parts.push_back(format_number(z.real()) + ":" + format_number(z.imag()));
  return fmt::format("{}", fmt::join(parts, ";"));
}

std::string degrees_field(const std::vector<int>& d) { return fmt::format("{}", fmt::join(d, ";")); }

std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

// Runs f(0..n-1) on up to `jobs` threads; the first error wins.
template <class F>
void parallel_for(std::size_t n, unsigned jobs, F&& f) {
  jobs = std::max(1u, std::min<unsigned>(jobs, static_cast<unsigned>(n)));
  if (jobs == 1) {
    for (std::size_t i = 0; i < n; ++i) f(i);
    return;
  }
  std::mutex m;
  std::exception_ptr first;
  std::vector<std::thread> pool;
  for (unsigned t = 0; t < jobs; ++t)
    pool.emplace_back([&, t] {
      for (std::size_t i = t; i < n; i += jobs) {
        try {
          f(i);
        } catch (...) {
          std::lock_guard lock(m);
          if (!first) first = std::current_exception();
        }
      }
    });
  for (auto& th : pool) th.join();
  if (first) std::rethrow_exception(first);
}

// ---------------------------------------------------------------------------
// Execution

Table run_wmicro(const Scenario& sc, const WMicroPlan& plan) {
  Table t;
  t.header = {"scenario", "case", "n", "points", "degrees", "b", "tol", "w_lr", "k_min",
              "series_terms", "w_micro_closed", "w_micro_series", "abs_difference",
              "near_boundary", "near_coincident"};
  for (std::size_t k = 0; k < plan.cases.size(); ++k) {
    const auto& c = plan.cases[k];
    const VortexConfig cfg(c.cfg.points, c.cfg.degrees);
    const double w = disk::lr_renormalized_energy(cfg);
    const double km = disk::k_min(cfg, c.b, plan.tol);
    const double closed = disk::w_micro_closed(cfg, c.b);
    const double series = c.b * c.b * w + km;
    const auto diag = disk::diagnose(cfg);
    t.rows.push_back({sc.name, std::to_string(k), std::to_string(cfg.size()), points_field(c.cfg.points),
                      degrees_field(c.cfg.degrees), format_number(c.b), format_number(plan.tol),
                      format_number(w), format_number(km),
                      std::to_string(disk::series_cutoff(cfg, c.b, plan.tol)), format_number(closed),
                      format_number(series), format_number(std::abs(series - closed)),
                      diag.near_boundary ? "1" : "0", diag.near_coincident ? "1" : "0"});
  }
  return t;
}

micro::MinimizationResult closed_or_numeric(const std::vector<int>& d, double b,
                                            const micro::SolverOptions& opts, bool closed) {
  if (closed) {
    const RegimeLabel label = micro::classify_regime(d, b);
    if (d.size() == 1 && d[0] != 0) return micro::n1_minimizer(d[0], b);
    if (label == RegimeLabel::ConfinedBLessOne && d.size() == 2 && d[0] > 0 && d[1] > 0) {
      auto r = micro::n2_positive_minimizer(d[0], d[1], b);
      r.seed = opts.seed;
      return r;
    }
  }
  return micro::minimize_numeric(d, b, opts);
}

Table run_minimize(const Scenario& sc, const MinimizePlan& plan, unsigned jobs) {
  Table t;
  t.header = {"scenario", "degrees", "b", "seed", "n_starts", "method", "regime", "status",
              "points", "value", "gradient_norm", "iterations", "infimum_lo", "infimum_hi",
              "witness_n", "witness_energies", "witness_path"};
  std::vector<std::pair<std::vector<int>, double>> cases;
  for (const auto& d : plan.patterns)
    for (double b : plan.bs) cases.emplace_back(d, b);
  std::vector<micro::MinimizationResult> results(cases.size());
  parallel_for(cases.size(), jobs, [&](std::size_t i) {
    results[i] = closed_or_numeric(cases[i].first, cases[i].second, plan.opts, plan.closed);
  });
  for (std::size_t i = 0; i < cases.size(); ++i) {
    const auto& r = results[i];
    std::vector<std::string> row = {sc.name, degrees_field(cases[i].first), format_number(cases[i].second),
                                    std::to_string(plan.opts.seed), std::to_string(plan.opts.n_starts),
                                    plan.closed ? "closed" : "numeric", std::string(to_string(r.regime)),
                                    std::string(micro::to_string(r.status)),
                                    r.points ? points_field(*r.points) : "",
                                    r.value ? format_number(*r.value) : "",
                                    format_number(r.gradient_norm), std::to_string(r.iterations),
                                    r.infimum_bounds ? format_number(r.infimum_bounds->first) : "",
                                    r.infimum_bounds ? format_number(r.infimum_bounds->second) : ""};
    if (r.witness_path) {
      std::vector<std::string> e;
      for (double v : r.witness_path->energies) e.push_back(format_number(v));
      row.push_back(fmt::format("{}", fmt::join(r.witness_path->n, ";")));
      row.push_back(fmt::format("{}", fmt::join(e, ";")));
      row.push_back(r.witness_path->description);
    } else {
      row.insert(row.end(), {"", "", ""});
    }
    t.rows.push_back(std::move(row));
  }
  return t;
}

Table run_oracle(const Scenario& sc, const OraclePlan& plan, unsigned jobs, json& timings) {
  Table t;
  t.header = {"scenario", "points", "degrees", "b", "impurity", "R", "rho", "level", "h",
              "growth", "nodes", "total_energy", "f_R", "topological", "core", "w_micro",
              "residual", "order_total", "order_f", "linear_iterations", "linear_residual", "solver"};
  const VortexConfig cfg(plan.cfg.points, plan.cfg.degrees);
  const bool expansion = plan.impurity.is_unit_disk();
  std::vector<std::pair<double, double>> runs;
  for (double R : plan.Rs)
    for (double rho : plan.rhos) runs.emplace_back(R, rho);
  std::vector<oracle::ExpansionStudy> studies(runs.size());
  parallel_for(runs.size(), jobs, [&](std::size_t i) {
    const DomainSpec dom{plan.impurity, runs[i].first, runs[i].second};
    auto& st = studies[i];
    if (expansion) {
      st = oracle::expansion_residual(dom, cfg, plan.weight, plan.opts);
    } else {
      st.total = oracle::perforated_energy(dom, cfg, plan.weight, plan.opts);
      oracle::OracleOptions fo = plan.opts;
      fo.h = 0.0;
      st.f = oracle::f_of_R(plan.weight, plan.impurity, dom.R, fo);
    }
  });

  const double d = static_cast<double>(total_degree(cfg));
  double sq = 0.0;
  for (int di : plan.cfg.degrees) sq += static_cast<double>(di) * di;
  const std::string pts = points_field(plan.cfg.points), degs = degrees_field(plan.cfg.degrees);
  const std::string solver(oracle::to_string(plan.opts.solve.kind));
  for (std::size_t i = 0; i < runs.size(); ++i) {
    const auto [R, rho] = runs[i];
    const auto& st = studies[i];
    const double core = std::numbers::pi * plan.b * plan.b * sq * std::abs(std::log(rho));
    auto base = [&](const std::string& level, double h, std::size_t nodes) {
      return std::vector<std::string>{sc.name, pts, degs, format_number(plan.b), plan.impurity_label,
                                      format_number(R), format_number(rho), level, format_number(h),
                                      format_number(plan.opts.growth), std::to_string(nodes)};
    };
    for (std::size_t l = 0; l < st.total.levels.size(); ++l) {
      const auto& lv = st.total.levels[l];
      auto row = base(std::to_string(lv.level), lv.h, lv.nodes);
      const double f = st.f.levels[l].energy;
      row.insert(row.end(), {format_number(lv.energy), format_number(f), format_number(d * d * f),
                             format_number(core),
                             expansion ? format_number(st.expansion.w_micro) : "",
                             expansion ? format_number(st.level_residuals[l]) : "", "", "",
                             std::to_string(lv.iterations), format_number(lv.linear_residual), solver});
      t.rows.push_back(std::move(row));
      timings.push_back({{"R", R}, {"rho", rho}, {"level", lv.level}, {"total_seconds", lv.seconds},
                         {"f_seconds", st.f.levels[l].seconds}});
    }
    auto row = base("richardson", 0.0, 0);
    const double f = st.f.extrapolation.extrapolated;
    row.insert(row.end(), {format_number(st.total.extrapolation.extrapolated), format_number(f),
                           format_number(d * d * f), format_number(core),
                           expansion ? format_number(st.expansion.w_micro) : "",
                           expansion ? format_number(st.expansion.residual) : "",
                           format_number(st.total.extrapolation.observed_order),
                           format_number(st.f.extrapolation.observed_order), "", "", solver});
    t.rows.push_back(std::move(row));
  }
  return t;
}

Table run_annulus(const Scenario& sc, const AnnulusPlan& plan, unsigned jobs, json& timings) {
  Table t;
  t.header = {"scenario", "weight", "B", "r", "R", "ratio", "level", "h", "nodes", "mu", "mu_dir",
              "gap", "theta0"};
  std::vector<oracle::AnnulusComparison> res(plan.Rs.size());
  std::vector<double> secs(plan.Rs.size());
  parallel_for(plan.Rs.size(), jobs, [&](std::size_t i) {
    const auto t0 = std::chrono::steady_clock::now();
    res[i] = oracle::annulus_comparison(plan.weight, plan.r, plan.Rs[i], plan.opts, plan.level);
    secs[i] = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  });
  const double h = std::ldexp(plan.opts.h > 0.0 ? plan.opts.h : plan.r / 16.0, -plan.level);
  for (std::size_t i = 0; i < plan.Rs.size(); ++i) {
    const auto& a = res[i];
    t.rows.push_back({sc.name, plan.weight_label, format_number(plan.weight.bound()),
                      format_number(plan.r), format_number(plan.Rs[i]),
                      format_number(plan.Rs[i] / plan.r), std::to_string(plan.level), format_number(h),
                      std::to_string(a.nodes), format_number(a.mu), format_number(a.mu_dir),
                      format_number(a.mu_dir - a.mu), format_number(a.theta0)});
    timings.push_back({{"R", plan.Rs[i]}, {"seconds", secs[i]}});
  }
  return t;
}

Table run_sweep(const Scenario& sc, const SweepPlan& plan, const std::string& prefix, unsigned jobs,
                json& timings) {
  Table t;
  t.header = {"scenario", "child", "kind", "rows"};
  std::vector<RunOutcome> out(plan.children.size());
  parallel_for(plan.children.size(), jobs, [&](std::size_t i) {
    out[i] = run_scenario(plan.children[i], prefix + "." + plan.children[i].name, 1);
  });
  for (std::size_t i = 0; i < plan.children.size(); ++i) {
    t.rows.push_back({sc.name, plan.children[i].name, std::string(to_string(plan.children[i].kind)),
                      std::to_string(out[i].rows)});
    timings.push_back({{"child", plan.children[i].name}, {"meta", out[i].meta.filename().string()}});
  }
  return t;
}

std::string utc_timestamp() {
  const std::time_t now = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

}  // namespace

std::optional<std::uint64_t> seed_from_environment() {
  const char* s = std::getenv("RENORM_MICRO_SEED");
  if (!s || !*s) return std::nullopt;
  char* end = nullptr;
  const unsigned long long v = std::strtoull(s, &end, 10);
  if (*end != '\0')
    throw Error(ErrorCode::ValidationError, fmt::format("RENORM_MICRO_SEED='{}' is not an integer", s));
  return static_cast<std::uint64_t>(v);
}

Scenario parse_scenario(const std::string& text, std::optional<std::uint64_t> env_seed) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::ParseError, e.what());
  }
  if (!doc.is_object()) invalid("scenario", "expected an object");
  Scenario sc;
  sc.source = doc;
  const json& name = field(doc, "name", "scenario");
  if (!name.is_string() || name.get<std::string>().empty()) invalid("name", "expected a non-empty string");
  sc.name = name.get<std::string>();
  if (sc.name.find_first_of("/\\") != std::string::npos) invalid("name", "must not contain path separators");
  const json& kind = field(doc, "kind", "scenario");
  const std::string k = kind.is_string() ? kind.get<std::string>() : "";
  if (k == "wmicro") sc.kind = Kind::WMicro;
  else if (k == "minimize") sc.kind = Kind::Minimize;
  else if (k == "oracle") sc.kind = Kind::Oracle;
  else if (k == "sweep") sc.kind = Kind::Sweep;
  else if (k == "annulus") sc.kind = Kind::Annulus;
  else invalid("kind", "expected one of wmicro, minimize, oracle, sweep, annulus");
  if (doc.contains("seed")) {
    if (!doc.at("seed").is_number_unsigned() && !(doc.at("seed").is_number_integer() && doc.at("seed").get<long long>() >= 0))
      invalid("seed", "expected a non-negative integer");
    sc.seed = doc.at("seed").get<std::uint64_t>();
  }
  if (env_seed) {
    sc.seed = *env_seed;
    sc.seed_from_env = true;
  }
  if (doc.contains("output")) {
    if (!doc.at("output").is_string()) invalid("output", "expected a string");
    sc.output = doc.at("output").get<std::string>();
  }
  sc.payload = field(doc, "payload", "scenario");
  if (!sc.payload.is_object()) invalid("payload", "expected an object");
  // Validate now so that a bad payload never starts a computation.
  (void)make_plan(sc);
  return sc;
}

std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  if (v == 0.0) return "0";
  return fmt::format("{:.17g}", v);
}

std::string to_csv(const Table& table) {
  std::string out;
  auto line = [&](const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i) out += ',';
      out += csv_escape(cells[i]);
    }
    out += '\n';
  };
  line(table.header);
  for (const auto& r : table.rows) line(r);
  return out;
}

Table execute(const Scenario& sc, const std::string& prefix, unsigned jobs, json& timings) {
  const Plan plan = make_plan(sc);
  try {
    return std::visit(
        [&](const auto& p) -> Table {
          using P = std::decay_t<decltype(p)>;
          if constexpr (std::is_same_v<P, WMicroPlan>) return run_wmicro(sc, p);
          else if constexpr (std::is_same_v<P, MinimizePlan>) return run_minimize(sc, p, jobs);
          else if constexpr (std::is_same_v<P, OraclePlan>) return run_oracle(sc, p, jobs, timings);
          else if constexpr (std::is_same_v<P, AnnulusPlan>) return run_annulus(sc, p, jobs, timings);
          else return run_sweep(sc, p, prefix, jobs, timings);
        },
        plan);
  } catch (const Error& e) {
    if (e.code() == ErrorCode::ComputeError) throw;
    throw Error(ErrorCode::ComputeError,
                fmt::format("scenario '{}': {}: {}", sc.name, to_string(e.code()), e.what()));
  }
}

void write_atomic(const std::filesystem::path& path, const std::string& content) {
  namespace fs = std::filesystem;
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  fs::path tmp = path;
  tmp += fmt::format(".tmp.{}", static_cast<unsigned long>(std::hash<std::thread::id>{}(std::this_thread::get_id())));
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw Error(ErrorCode::ComputeError, fmt::format("cannot write {}", tmp.string()));
    f << content;
    f.flush();
    if (!f) throw Error(ErrorCode::ComputeError, fmt::format("short write to {}", tmp.string()));
  }
  fs::rename(tmp, path);
}

RunOutcome run_scenario(const Scenario& sc, const std::optional<std::string>& out_prefix, unsigned jobs) {
  const std::string prefix = out_prefix && !out_prefix->empty() ? *out_prefix
                             : !sc.output.empty()               ? sc.output
                                                                : sc.name;
  const auto t0 = std::chrono::steady_clock::now();
  json timings = json::array();
  const Table table = execute(sc, prefix, jobs, timings);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  RunOutcome out;
  out.csv = prefix + ".csv";
  out.meta = prefix + ".meta.json";
  out.rows = table.rows.size();
  write_atomic(out.csv, to_csv(table));

  json meta;
  meta["scenario"] = sc.name;
  meta["kind"] = std::string(to_string(sc.kind));
  meta["seed"] = sc.seed;
  meta["seed_source"] = sc.seed_from_env ? "RENORM_MICRO_SEED" : "scenario";
  meta["input"] = sc.source;
  meta["csv"] = out.csv.filename().string();
  meta["rows"] = out.rows;
  meta["jobs"] = jobs;
  meta["versions"] = {{"renorm-micro", RENORM_VERSION},
                      {"compiler", __VERSION__},
                      {"eigen", fmt::format("{}.{}.{}", EIGEN_WORLD_VERSION, EIGEN_MAJOR_VERSION, EIGEN_MINOR_VERSION)},
                      {"fmt", FMT_VERSION},
                      {"nlohmann_json", fmt::format("{}.{}.{}", NLOHMANN_JSON_VERSION_MAJOR,
                                                    NLOHMANN_JSON_VERSION_MINOR, NLOHMANN_JSON_VERSION_PATCH)}};
  meta["timings"] = timings;
  meta["wall_seconds"] = secs;
  meta["timestamp"] = utc_timestamp();
  write_atomic(out.meta, meta.dump(2) + "\n");
  return out;
}

RunOutcome run(const std::filesystem::path& file, const std::optional<std::string>& out_prefix, unsigned jobs) {
  std::ifstream f(file, std::ios::binary);
  if (!f) throw Error(ErrorCode::ParseError, fmt::format("cannot read {}", file.string()));
  std::stringstream ss;
  ss << f.rdbuf();
  const Scenario sc = parse_scenario(ss.str(), seed_from_environment());
  return run_scenario(sc, out_prefix, jobs);
}

std::string error_record(const Error& e, const std::string& scenario) {
  json j;
  j["error"] = std::string(to_string(e.code()));
  j["scenario"] = scenario;
  j["message"] = e.what();
  return j.dump();
}

Table regimes_table(const json& config, std::optional<std::uint64_t> env_seed) {
  const auto bs = positive_list(field(config, "b", "config"), "config.b");
  const json& d = field(config, "degrees", "config");
  if (!d.is_array() || d.empty()) invalid("config.degrees", "expected a non-empty list of lists");
  std::vector<std::vector<int>> patterns;
  for (std::size_t i = 0; i < d.size(); ++i)
    patterns.push_back(degree_list(d[i], fmt::format("config.degrees[{}]", i)));
  micro::SolverOptions opts;
  if (config.contains("seed")) opts.seed = config.at("seed").get<std::uint64_t>();
  if (env_seed) opts.seed = *env_seed;
  if (config.contains("n_starts")) opts.n_starts = integer(config.at("n_starts"), "config.n_starts");

  Table t;
  t.header = {"b", "degrees", "regime", "status", "summary"};
  for (const RegimeCell& c : table_regimes(bs, patterns, opts))
    t.rows.push_back({format_number(c.b), degrees_field(c.degrees), std::string(to_string(c.label)),
                      std::string(micro::to_string(c.result.status)), c.summary});
  return t;
}

}  // namespace renorm::cli
