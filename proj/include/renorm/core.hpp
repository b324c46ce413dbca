#pragma once

#include <complex>
#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "renorm/error.hpp"

namespace renorm {

using Point = std::complex<double>;

/// Sub-interval [lo, hi] of the parameter range [0, 1] of a segment p + t (q - p).
struct Interval {
  double lo = 0.0;
  double hi = 0.0;
  double length() const { return hi - lo; }
};

/// Removes `holes` from `base`. Both lists must be sorted and internally disjoint.
std::vector<Interval> subtract(const std::vector<Interval>& base,
                               const std::vector<Interval>& holes);

/// Parameter interval of the segment p -> q lying inside the disk B(center, radius).
std::vector<Interval> segment_in_disk(Point p, Point q, Point center, double radius);

struct BoundingBox {
  Point lower;
  Point upper;
};

/// Vortex positions z_1..z_N with integer degrees d_1..d_N.
class VortexConfig {
public:
  VortexConfig(std::vector<Point> points, std::vector<int> degrees);

  std::span<const Point> points() const { return points_; }
  std::span<const int> degrees() const { return degrees_; }
  std::size_t size() const { return points_.size(); }
  Point point(std::size_t i) const { return points_[i]; }
  int degree(std::size_t i) const { return degrees_[i]; }

  /// Largest modulus among the points.
  double max_modulus() const;
  /// Smallest pairwise distance (infinity for N = 1).
  double min_separation() const;

  friend bool operator==(const VortexConfig&, const VortexConfig&) = default;

private:
  std::vector<Point> points_;
  std::vector<int> degrees_;
};

/// d = sum of the degrees, exact.
long long total_degree(const VortexConfig& cfg);

/// Region occupied by the impurity. Closed-form modules only accept the unit
/// disk; the grid oracle accepts any signed-distance-like membership function.
class Region {
public:
  static Region unit_disk();
  static Region disk(Point center, double radius);
  /// `signed_distance` is negative inside; `box` must enclose the region.
  static Region mask(std::function<double(Point)> signed_distance, BoundingBox box,
                     std::string label);

  bool is_unit_disk() const;
  bool is_disk() const { return std::holds_alternative<Disk>(shape_); }
  bool contains(Point x) const { return signed_distance(x) < 0.0; }
  double signed_distance(Point x) const;
  double diameter() const;
  BoundingBox bounding_box() const;
  /// Parts of the segment p -> q inside the region, sorted.
  std::vector<Interval> segment_inside(Point p, Point q) const;
  std::string describe() const;

  Point disk_center() const;
  double disk_radius() const;

private:
  struct Disk {
    Point center;
    double radius;
  };
  struct Mask {
    std::function<double(Point)> sdf;
    BoundingBox box;
    std::string label;
  };
  explicit Region(std::variant<Disk, Mask> shape) : shape_(std::move(shape)) {}

  std::variant<Disk, Mask> shape_;
};

/// Weight outside the impurity. Implementations integrate exactly along
/// straight segments where they can.
class ExteriorWeight {
public:
  virtual ~ExteriorWeight() = default;
  virtual double at(Point x) const = 0;
  /// Integral of the weight along the segment p -> q restricted to the
  /// parameter interval `part` (arc-length measure).
  virtual double integrate(Point p, Point q, Interval part) const = 0;
  virtual double lower_bound() const = 0;
  virtual double upper_bound() const = 0;
  virtual std::string describe() const = 0;
};

std::shared_ptr<const ExteriorWeight> constant_weight(double value);
/// Squares of side `cell`: `low` where floor(x/cell) + floor(y/cell) is even,
/// `high` otherwise.
std::shared_ptr<const ExteriorWeight> checkerboard_weight(double low, double high, double cell);
/// Rings r in [r0 * ratio^k, r0 * ratio^(k+1)) alternate between `low` (k even)
/// and `high` (k odd); inside r0 the value is `low`.
std::shared_ptr<const ExteriorWeight> radial_stripes_weight(double low, double high, double r0,
                                                            double ratio);

/// alpha = b^2 inside the impurity and `exterior` elsewhere, with
/// B^2 <= alpha <= B^-2.
class PinningWeight {
public:
  PinningWeight(double b, double bound, Region impurity,
                std::shared_ptr<const ExteriorWeight> exterior);

  /// The circular-impurity weight: b^2 in the unit disk, 1 outside.
  static PinningWeight disk_contrast(double b);

  double b() const { return b_; }
  double bound() const { return bound_; }
  const Region& impurity() const { return impurity_; }
  const ExteriorWeight& exterior() const { return *exterior_; }

  double alpha(Point x) const;
  /// Integral of alpha along p -> q over the parameter interval `part`.
  double integrate(Point p, Point q, Interval part) const;
  std::string describe() const;

private:
  double b_;
  double bound_;
  Region impurity_;
  std::shared_ptr<const ExteriorWeight> exterior_;
};

struct DomainSpec {
  Region impurity = Region::unit_disk();
  double R = 0.0;
  double rho = 0.0;
};

/// How much of the asymptotic setting validation enforces. `Asymptotic`
/// applies the R > R0 and rho < rho0 thresholds; `Geometric` only requires
/// holes that fit inside the impurity without touching each other, which is
/// what a finite-size grid computation needs.
enum class Strictness { Asymptotic, Geometric };

class ValidatedConfig {
public:
  const VortexConfig& config() const { return cfg_; }
  const DomainSpec& domain() const { return dom_; }
  double R0() const { return R0_; }
  double rho0() const { return rho0_; }
  Strictness strictness() const { return strictness_; }

  friend bool operator==(const ValidatedConfig& a, const ValidatedConfig& b) {
    return a.cfg_ == b.cfg_ && a.dom_.R == b.dom_.R && a.dom_.rho == b.dom_.rho &&
           a.R0_ == b.R0_ && a.rho0_ == b.rho0_ && a.strictness_ == b.strictness_;
  }

private:
  friend ValidatedConfig validate_config(const VortexConfig&, const DomainSpec&, Strictness);
  ValidatedConfig(VortexConfig cfg, DomainSpec dom, double R0, double rho0, Strictness s)
      : cfg_(std::move(cfg)), dom_(std::move(dom)), R0_(R0), rho0_(rho0), strictness_(s) {}

  VortexConfig cfg_;
  DomainSpec dom_;
  double R0_;
  double rho0_;
  Strictness strictness_;
};

/// R0 = max{1, 100 diam(omega)}.
double outer_threshold(const Region& impurity);
/// rho0 = 1e-2 min{1, min_{i != j} |z_i - z_j|, min_i dist(z_i, boundary)}.
double core_threshold(const VortexConfig& cfg, const Region& impurity);

ValidatedConfig validate_config(const VortexConfig& cfg, const DomainSpec& dom,
                                Strictness strictness = Strictness::Asymptotic);
ValidatedConfig validate_config(const ValidatedConfig& handle);

enum class RegimeLabel {
  AllZeroDegrees,
  SingleActiveVortex,
  MixedSignUnbounded,
  FlatBEqualsOne,
  InfimumNotAttainedBEqualsOne,
  BoundaryEscapeBGreaterOne,
  ConfinedBLessOne,
};

std::string_view to_string(RegimeLabel label);

}  // namespace renorm
