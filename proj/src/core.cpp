#include "renorm/core.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <fmt/core.h>

namespace renorm {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::DuplicatePoint: return "DuplicatePoint";
    case ErrorCode::PointOutsideImpurity: return "PointOutsideImpurity";
    case ErrorCode::RadiusOutOfRange: return "RadiusOutOfRange";
    case ErrorCode::BoundaryDegenerate: return "BoundaryDegenerate";
    case ErrorCode::TruncationOverflow: return "TruncationOverflow";
    case ErrorCode::MismatchedTruncation: return "MismatchedTruncation";
    case ErrorCode::ZeroDegree: return "ZeroDegree";
    case ErrorCode::DomainError: return "DomainError";
    case ErrorCode::WrongRegime: return "WrongRegime";
    case ErrorCode::NoConvergence: return "NoConvergence";
    case ErrorCode::ResolutionTooCoarse: return "ResolutionTooCoarse";
    case ErrorCode::HoleOverlap: return "HoleOverlap";
    case ErrorCode::SolverDivergence: return "SolverDivergence";
    case ErrorCode::LoopCrossesHole: return "LoopCrossesHole";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::ValidationError: return "ValidationError";
    case ErrorCode::ComputeError: return "ComputeError";
  }
  return "Unknown";
}

std::string_view to_string(RegimeLabel label) {
  switch (label) {
    case RegimeLabel::AllZeroDegrees: return "AllZeroDegrees";
    case RegimeLabel::SingleActiveVortex: return "SingleActiveVortex";
    case RegimeLabel::MixedSignUnbounded: return "MixedSignUnbounded";
    case RegimeLabel::FlatBEqualsOne: return "FlatBEqualsOne";
    case RegimeLabel::InfimumNotAttainedBEqualsOne: return "InfimumNotAttainedBEqualsOne";
    case RegimeLabel::BoundaryEscapeBGreaterOne: return "BoundaryEscapeBGreaterOne";
    case RegimeLabel::ConfinedBLessOne: return "ConfinedBLessOne";
  }
  return "Unknown";
}

// ---------------------------------------------------------------------------
// Segment intervals

std::vector<Interval> subtract(const std::vector<Interval>& base,
                               const std::vector<Interval>& holes) {
  std::vector<Interval> out;
  for (Interval piece : base) {
    double lo = piece.lo;
    for (const Interval& h : holes) {
      if (h.hi <= lo || h.lo >= piece.hi) continue;
      if (h.lo > lo) out.push_back({lo, h.lo});
      lo = std::max(lo, h.hi);
      if (lo >= piece.hi) break;
    }
    if (lo < piece.hi) out.push_back({lo, piece.hi});
  }
  return out;
}

std::vector<Interval> segment_in_disk(Point p, Point q, Point center, double radius) {
  const Point d = q - p;
  const Point w = p - center;
  const double a = std::norm(d);
  if (a == 0.0) return {};
  const double half_b = (w * std::conj(d)).real();
  const double c = std::norm(w) - radius * radius;
  const double disc = half_b * half_b - a * c;
  if (disc <= 0.0) return {};
  const double s = std::sqrt(disc);
  // Stable roots of a t^2 + 2 half_b t + c.
  const double qq = -(half_b + std::copysign(s, half_b));
  double t0 = qq / a;
  double t1 = qq != 0.0 ? c / qq : t0;
  if (t0 > t1) std::swap(t0, t1);
  const double lo = std::max(t0, 0.0);
  const double hi = std::min(t1, 1.0);
  if (hi <= lo) return {};
  return {{lo, hi}};
}

// ---------------------------------------------------------------------------
// VortexConfig

VortexConfig::VortexConfig(std::vector<Point> points, std::vector<int> degrees)
    : points_(std::move(points)), degrees_(std::move(degrees)) {
  if (points_.empty()) throw Error(ErrorCode::ValidationError, "configuration needs N >= 1 points");
  if (points_.size() != degrees_.size())
    throw Error(ErrorCode::ValidationError,
                fmt::format("{} points but {} degrees", points_.size(), degrees_.size()));
  for (const Point& z : points_)
    if (!std::isfinite(z.real()) || !std::isfinite(z.imag()))
      throw Error(ErrorCode::ValidationError, "non-finite vortex position");
}

double VortexConfig::max_modulus() const {
  double r = 0.0;
  for (const Point& z : points_) r = std::max(r, std::abs(z));
  return r;
}

double VortexConfig::min_separation() const {
  double m = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < points_.size(); ++i)
    for (std::size_t j = i + 1; j < points_.size(); ++j)
      m = std::min(m, std::abs(points_[i] - points_[j]));
  return m;
}

long long total_degree(const VortexConfig& cfg) {
  return std::accumulate(cfg.degrees().begin(), cfg.degrees().end(), 0LL);
}

// ---------------------------------------------------------------------------
// Region

Region Region::unit_disk() { return Region(Disk{Point(0.0, 0.0), 1.0}); }

Region Region::disk(Point center, double radius) {
  if (!(radius > 0.0)) throw Error(ErrorCode::ValidationError, "disk radius must be positive");
  return Region(Disk{center, radius});
}

Region Region::mask(std::function<double(Point)> signed_distance, BoundingBox box,
                    std::string label) {
  if (!signed_distance) throw Error(ErrorCode::ValidationError, "mask needs a membership function");
  if (!(box.upper.real() > box.lower.real() && box.upper.imag() > box.lower.imag()))
    throw Error(ErrorCode::ValidationError, "mask bounding box is empty");
  return Region(Mask{std::move(signed_distance), box, std::move(label)});
}

bool Region::is_unit_disk() const {
  const auto* d = std::get_if<Disk>(&shape_);
  return d != nullptr && d->center == Point(0.0, 0.0) && d->radius == 1.0;
}

double Region::signed_distance(Point x) const {
  if (const auto* d = std::get_if<Disk>(&shape_)) return std::abs(x - d->center) - d->radius;
  return std::get<Mask>(shape_).sdf(x);
}

double Region::diameter() const {
  if (const auto* d = std::get_if<Disk>(&shape_)) return 2.0 * d->radius;
  const auto& box = std::get<Mask>(shape_).box;
  return std::abs(box.upper - box.lower);
}

BoundingBox Region::bounding_box() const {
  if (const auto* d = std::get_if<Disk>(&shape_))
    return {d->center - Point(d->radius, d->radius), d->center + Point(d->radius, d->radius)};
  return std::get<Mask>(shape_).box;
}

std::vector<Interval> Region::segment_inside(Point p, Point q) const {
  if (const auto* d = std::get_if<Disk>(&shape_)) return segment_in_disk(p, q, d->center, d->radius);

  // Sample the membership function and refine every sign change by bisection.
  const auto& sdf = std::get<Mask>(shape_).sdf;
  constexpr int kSamples = 64;
  auto at = [&](double t) { return sdf(p + t * (q - p)); };
  std::vector<Interval> out;
  double t_prev = 0.0;
  double f_prev = at(0.0);
  double start = f_prev < 0.0 ? 0.0 : -1.0;
  for (int k = 1; k <= kSamples; ++k) {
    const double t = static_cast<double>(k) / kSamples;
    const double f = at(t);
    if ((f_prev < 0.0) != (f < 0.0)) {
      double lo = t_prev, hi = t;
      for (int it = 0; it < 60; ++it) {
        const double mid = 0.5 * (lo + hi);
        if ((at(mid) < 0.0) == (f_prev < 0.0)) lo = mid; else hi = mid;
      }
      const double root = 0.5 * (lo + hi);
      if (f_prev < 0.0) {
        out.push_back({start, root});
        start = -1.0;
      } else {
        start = root;
      }
    }
    t_prev = t;
    f_prev = f;
  }
  if (start >= 0.0) out.push_back({start, 1.0});
  return out;
}

std::string Region::describe() const {
  if (const auto* d = std::get_if<Disk>(&shape_))
    return fmt::format("disk(center=({:.17g},{:.17g}),radius={:.17g})", d->center.real(),
                       d->center.imag(), d->radius);
  return std::get<Mask>(shape_).label;
}

Point Region::disk_center() const {
  const auto* d = std::get_if<Disk>(&shape_);
  if (d == nullptr) throw Error(ErrorCode::DomainError, "impurity is not a disk");
  return d->center;
}

double Region::disk_radius() const {
  const auto* d = std::get_if<Disk>(&shape_);
  if (d == nullptr) throw Error(ErrorCode::DomainError, "impurity is not a disk");
  return d->radius;
}

// ---------------------------------------------------------------------------
// Exterior weights

namespace {

class ConstantWeight final : public ExteriorWeight {
public:
  explicit ConstantWeight(double v) : v_(v) {}
  double at(Point) const override { return v_; }
  double integrate(Point p, Point q, Interval part) const override {
    return v_ * std::abs(q - p) * part.length();
  }
  double lower_bound() const override { return v_; }
  double upper_bound() const override { return v_; }
  std::string describe() const override { return fmt::format("constant({:.17g})", v_); }

private:
  double v_;
};

// Piecewise-constant weights: split the parameter range at every crossing and
// evaluate at piece midpoints.
double integrate_piecewise(const ExteriorWeight& w, Point p, Point q, Interval part,
                           std::vector<double> cuts) {
  cuts.push_back(part.lo);
  cuts.push_back(part.hi);
  std::sort(cuts.begin(), cuts.end());
  const double len = std::abs(q - p);
  double sum = 0.0;
  for (std::size_t k = 0; k + 1 < cuts.size(); ++k) {
    const double a = std::max(cuts[k], part.lo);
    const double b = std::min(cuts[k + 1], part.hi);
    if (b <= a) continue;
    sum += w.at(p + 0.5 * (a + b) * (q - p)) * (b - a) * len;
  }
  return sum;
}

class CheckerboardWeight final : public ExteriorWeight {
public:
  CheckerboardWeight(double low, double high, double cell) : low_(low), high_(high), cell_(cell) {}
  double at(Point x) const override {
    const auto i = static_cast<long long>(std::floor(x.real() / cell_));
    const auto j = static_cast<long long>(std::floor(x.imag() / cell_));
    return ((i + j) % 2 == 0) ? low_ : high_;
  }
  double integrate(Point p, Point q, Interval part) const override {
    std::vector<double> cuts;
    auto add_axis = [&](double a, double b) {
      if (a == b) return;
      const double lo = std::min(a, b), hi = std::max(a, b);
      for (double k = std::ceil(lo / cell_); k * cell_ < hi; k += 1.0)
        cuts.push_back((k * cell_ - a) / (b - a));
    };
    add_axis(p.real(), q.real());
    add_axis(p.imag(), q.imag());
    return integrate_piecewise(*this, p, q, part, std::move(cuts));
  }
  double lower_bound() const override { return std::min(low_, high_); }
  double upper_bound() const override { return std::max(low_, high_); }
  std::string describe() const override {
    return fmt::format("checkerboard(low={:.17g},high={:.17g},cell={:.17g})", low_, high_, cell_);
  }

private:
  double low_, high_, cell_;
};

class RadialStripesWeight final : public ExteriorWeight {
public:
  RadialStripesWeight(double low, double high, double r0, double ratio)
      : low_(low), high_(high), r0_(r0), ratio_(ratio) {}
  double at(Point x) const override {
    const double r = std::abs(x);
    if (r < r0_) return low_;
    const auto k = static_cast<long long>(std::floor(std::log(r / r0_) / std::log(ratio_)));
    return (k % 2 == 0) ? low_ : high_;
  }
  double integrate(Point p, Point q, Interval part) const override {
    // |x(t)| is convex in t, so every ring radius is crossed at most twice.
    const double rmax = std::max(std::abs(p), std::abs(q));
    std::vector<double> cuts;
    for (double r = r0_; r <= rmax; r *= ratio_)
      for (const Interval& iv : segment_in_disk(p, q, Point(0.0, 0.0), r)) {
        cuts.push_back(iv.lo);
        cuts.push_back(iv.hi);
      }
    return integrate_piecewise(*this, p, q, part, std::move(cuts));
  }
  double lower_bound() const override { return std::min(low_, high_); }
  double upper_bound() const override { return std::max(low_, high_); }
  std::string describe() const override {
    return fmt::format("radial_stripes(low={:.17g},high={:.17g},r0={:.17g},ratio={:.17g})", low_,
                       high_, r0_, ratio_);
  }

private:
  double low_, high_, r0_, ratio_;
};

}  // namespace

std::shared_ptr<const ExteriorWeight> constant_weight(double value) {
  if (!(value > 0.0)) throw Error(ErrorCode::ValidationError, "weight must be positive");
  return std::make_shared<ConstantWeight>(value);
}

std::shared_ptr<const ExteriorWeight> checkerboard_weight(double low, double high, double cell) {
  if (!(low > 0.0 && high > 0.0 && cell > 0.0))
    throw Error(ErrorCode::ValidationError, "checkerboard needs positive values and cell size");
  return std::make_shared<CheckerboardWeight>(low, high, cell);
}

std::shared_ptr<const ExteriorWeight> radial_stripes_weight(double low, double high, double r0,
                                                            double ratio) {
  if (!(low > 0.0 && high > 0.0 && r0 > 0.0 && ratio > 1.0))
    throw Error(ErrorCode::ValidationError, "radial stripes need positive values, r0 > 0, ratio > 1");
  return std::make_shared<RadialStripesWeight>(low, high, r0, ratio);
}

// ---------------------------------------------------------------------------
// PinningWeight

PinningWeight::PinningWeight(double b, double bound, Region impurity,
                             std::shared_ptr<const ExteriorWeight> exterior)
    : b_(b), bound_(bound), impurity_(std::move(impurity)), exterior_(std::move(exterior)) {
  if (!exterior_) throw Error(ErrorCode::ValidationError, "missing exterior weight");
  if (!(bound_ > 0.0 && bound_ < 1.0))
    throw Error(ErrorCode::ValidationError, fmt::format("B = {} must lie in (0, 1)", bound_));
  if (!(b_ >= bound_ && b_ <= 1.0 / bound_))
    throw Error(ErrorCode::ValidationError,
                fmt::format("b = {} must lie in [B, 1/B] = [{}, {}]", b_, bound_, 1.0 / bound_));
  const double lo = bound_ * bound_, hi = 1.0 / lo;
  // Relative slack so that a weight equal to B^{-2} computed as 1/B^2 passes.
  constexpr double kSlack = 1e-12;
  if (exterior_->lower_bound() < lo * (1.0 - kSlack) ||
      exterior_->upper_bound() > hi * (1.0 + kSlack))
    throw Error(ErrorCode::ValidationError,
                fmt::format("exterior weight range [{}, {}] leaves [B^2, B^-2] = [{}, {}]",
                            exterior_->lower_bound(), exterior_->upper_bound(), lo, hi));
}

PinningWeight PinningWeight::disk_contrast(double b) {
  if (!(b > 0.0)) throw Error(ErrorCode::DomainError, "b must be positive");
  // Any B < min(b, 1/b) admits this weight; stay strictly inside (0, 1).
  const double bound = 0.5 * std::min(b, 1.0 / b);
  return PinningWeight(b, bound, Region::unit_disk(), constant_weight(1.0));
}

double PinningWeight::alpha(Point x) const {
  return impurity_.contains(x) ? b_ * b_ : exterior_->at(x);
}

double PinningWeight::integrate(Point p, Point q, Interval part) const {
  const double len = std::abs(q - p);
  std::vector<Interval> inside = impurity_.segment_inside(p, q);
  std::vector<Interval> clipped;
  for (const Interval& iv : inside) {
    const double lo = std::max(iv.lo, part.lo), hi = std::min(iv.hi, part.hi);
    if (hi > lo) clipped.push_back({lo, hi});
  }
  double sum = 0.0;
  for (const Interval& iv : clipped) sum += b_ * b_ * iv.length() * len;
  for (const Interval& iv : subtract({part}, clipped)) sum += exterior_->integrate(p, q, iv);
  return sum;
}

std::string PinningWeight::describe() const {
  return fmt::format("b={:.17g};B={:.17g};impurity={};exterior={}", b_, bound_,
                     impurity_.describe(), exterior_->describe());
}

// ---------------------------------------------------------------------------
// Validation

double outer_threshold(const Region& impurity) {
  return std::max(1.0, 100.0 * impurity.diameter());
}

double core_threshold(const VortexConfig& cfg, const Region& impurity) {
  double m = std::min(1.0, cfg.min_separation());
  for (const Point& z : cfg.points()) m = std::min(m, -impurity.signed_distance(z));
  return 1e-2 * m;
}

ValidatedConfig validate_config(const VortexConfig& cfg, const DomainSpec& dom,
                                Strictness strictness) {
  const auto pts = cfg.points();
  for (std::size_t i = 0; i < pts.size(); ++i)
    for (std::size_t j = i + 1; j < pts.size(); ++j)
      if (pts[i] == pts[j])
        throw Error(ErrorCode::DuplicatePoint,
                    fmt::format("z_{} and z_{} coincide at ({}, {})", i + 1, j + 1, pts[i].real(),
                                pts[i].imag()));
  for (std::size_t i = 0; i < pts.size(); ++i)
    if (!dom.impurity.contains(pts[i]))
      throw Error(ErrorCode::PointOutsideImpurity,
                  fmt::format("z_{} = ({}, {}) is not inside {}", i + 1, pts[i].real(),
                              pts[i].imag(), dom.impurity.describe()));

  const double R0 = outer_threshold(dom.impurity);
  const double rho0 = core_threshold(cfg, dom.impurity);
  if (!(dom.rho > 0.0))
    throw Error(ErrorCode::RadiusOutOfRange, fmt::format("rho = {} must be positive", dom.rho));

  if (strictness == Strictness::Asymptotic) {
    if (!(dom.rho < rho0))
      throw Error(ErrorCode::RadiusOutOfRange,
                  fmt::format("rho = {} must be below rho0 = {}", dom.rho, rho0));
    if (!(dom.R > R0))
      throw Error(ErrorCode::RadiusOutOfRange,
                  fmt::format("R = {} must exceed R0 = {}", dom.R, R0));
  } else {
    for (std::size_t i = 0; i < pts.size(); ++i)
      if (!(-dom.impurity.signed_distance(pts[i]) > dom.rho))
        throw Error(ErrorCode::RadiusOutOfRange,
                    fmt::format("core B(z_{}, {}) is not inside the impurity", i + 1, dom.rho));
    if (!(cfg.min_separation() > 2.0 * dom.rho))
      throw Error(ErrorCode::HoleOverlap,
                  fmt::format("cores of radius {} overlap (min separation {})", dom.rho,
                              cfg.min_separation()));
    const BoundingBox box = dom.impurity.bounding_box();
    const double reach = std::max({std::abs(box.lower), std::abs(box.upper),
                                   std::abs(Point(box.lower.real(), box.upper.imag())),
                                   std::abs(Point(box.upper.real(), box.lower.imag()))});
    if (!(dom.R > reach))
      throw Error(ErrorCode::RadiusOutOfRange,
                  fmt::format("R = {} does not enclose the impurity (reach {})", dom.R, reach));
  }
  return ValidatedConfig(cfg, dom, R0, rho0, strictness);
}

ValidatedConfig validate_config(const ValidatedConfig& handle) {
  return validate_config(handle.config(), handle.domain(), handle.strictness());
}

}  // namespace renorm
