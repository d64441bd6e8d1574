#pragma once

// Closed planar curves parametrised over phi in [0, 2pi), counterclockwise.
//
// A Curve is an analytic base curve (ellipse, "flower" or stadium) composed with an
// ordered list of displacement fields, position = F_L o ... o F_1 o gamma,
// F_l(x) = x + g_l(x). Tangents of the composed curve are obtained by pushing
// the base tangent through the Jacobians (I + Dg_l).

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <memory>
#include <numbers>
#include <span>
#include <type_traits>
#include <variant>
#include <vector>

#include "wnf/error.hpp"
#include "wnf/expansion.hpp"
#include "wnf/kernel.hpp"

namespace wnf {

inline constexpr double two_pi = 2.0 * std::numbers::pi;

struct Ellipse {
  Point center{0.0, 0.0};
  double a = 1.0;
  double b = 1.0;
};

/// gamma(phi) = (a cos phi, b sin phi + c sin 3phi)
struct Flower {
  double a = 1.4;
  double b = 0.8;
  double c = 0.3;
};

/// Two straight sides of length 2 half_length joined by half circles of the
/// given radius, at constant speed. Only C^1: the curvature jumps from 0 to
/// 1/radius where the pieces meet.
struct Stadium {
  Point center{0.0, 0.0};
  double half_length = 1.0;
  double radius = 1.0;

  [[nodiscard]] double perimeter() const { return 4.0 * half_length + two_pi * radius; }

  /// Arc-length position along the curve, starting at the rightmost point.
  /// Sets `arc` to the angle on a half circle, or NaN on a straight piece with
  /// `dir` = +1 (bottom, moving right) or -1 (top, moving left).
  void locate(double phi, double& arc, double& along, int& dir, Point& p) const {
    const double r = radius, l = half_length;
    double s = std::fmod(phi, two_pi);
    if (s < 0.0) s += two_pi;
    s *= perimeter() / two_pi;
    const double quarter = 0.5 * std::numbers::pi * r;
    arc = std::numeric_limits<double>::quiet_NaN();
    along = 0.0;
    dir = 0;
    if (s < quarter) {
      arc = s / r;
      p = {l + r * std::cos(arc), r * std::sin(arc)};
    } else if ((s -= quarter) < 2.0 * l) {
      along = s;
      dir = -1;
      p = {l - s, r};
    } else if ((s -= 2.0 * l) < 2.0 * quarter) {
      arc = 0.5 * std::numbers::pi + s / r;
      p = {-l + r * std::cos(arc), r * std::sin(arc)};
    } else if ((s -= 2.0 * quarter) < 2.0 * l) {
      along = s;
      dir = 1;
      p = {-l + s, -r};
    } else {
      s -= 2.0 * l;
      arc = 1.5 * std::numbers::pi + s / r;
      p = {l + r * std::cos(arc), r * std::sin(arc)};
    }
    p += center;
  }
};

class AnalyticCurve {
 public:
  using Shape = std::variant<Ellipse, Flower, Stadium>;

  AnalyticCurve(Shape shape) : shape_(shape) {  // NOLINT(google-explicit-constructor)
    std::visit(
        [](const auto& s) {
          using T = std::decay_t<decltype(s)>;
          if constexpr (std::is_same_v<T, Stadium>) {
            if (!(s.radius > 0.0) || !(s.half_length >= 0.0))
              throw Error(Errc::invalid_argument, "stadium needs radius > 0 and half_length >= 0");
          } else if (!(s.a > 0.0) || !(s.b > 0.0)) {
            throw Error(Errc::invalid_argument, "semi-axes must be positive");
          }
        },
        shape_);
  }

  static AnalyticCurve circle(double radius, Point center = Point::Zero()) {
    return AnalyticCurve(Ellipse{center, radius, radius});
  }

  [[nodiscard]] const Shape& shape() const noexcept { return shape_; }

  [[nodiscard]] Point position(double phi) const {
    return std::visit(
        [phi](const auto& s) -> Point {
          using T = std::decay_t<decltype(s)>;
          if constexpr (std::is_same_v<T, Ellipse>) {
            return s.center + Point(s.a * std::cos(phi), s.b * std::sin(phi));
          } else if constexpr (std::is_same_v<T, Stadium>) {
            double arc, along;
            int dir;
            Point p;
            s.locate(phi, arc, along, dir, p);
            return p;
          } else {
            return {s.a * std::cos(phi), s.b * std::sin(phi) + s.c * std::sin(3.0 * phi)};
          }
        },
        shape_);
  }

  [[nodiscard]] Vec2 derivative(double phi) const {
    return std::visit(
        [phi](const auto& s) -> Vec2 {
          using T = std::decay_t<decltype(s)>;
          if constexpr (std::is_same_v<T, Ellipse>) {
            return {-s.a * std::sin(phi), s.b * std::cos(phi)};
          } else if constexpr (std::is_same_v<T, Stadium>) {
            double arc, along;
            int dir;
            Point p;
            s.locate(phi, arc, along, dir, p);
            const double c = s.perimeter() / two_pi;
            if (dir != 0) return {c * dir, 0.0};
            return {-c * std::sin(arc), c * std::cos(arc)};
          } else {
            return {-s.a * std::sin(phi), s.b * std::cos(phi) + 3.0 * s.c * std::cos(3.0 * phi)};
          }
        },
        shape_);
  }

  [[nodiscard]] Vec2 second_derivative(double phi) const {
    return std::visit(
        [phi](const auto& s) -> Vec2 {
          using T = std::decay_t<decltype(s)>;
          if constexpr (std::is_same_v<T, Ellipse>) {
            return {-s.a * std::cos(phi), -s.b * std::sin(phi)};
          } else if constexpr (std::is_same_v<T, Stadium>) {
            double arc, along;
            int dir;
            Point p;
            s.locate(phi, arc, along, dir, p);
            if (dir != 0) return Vec2::Zero();
            const double c = s.perimeter() / two_pi;
            return {-c * c / s.radius * std::cos(arc), -c * c / s.radius * std::sin(arc)};
          } else {
            return {-s.a * std::cos(phi), -s.b * std::sin(phi) - 9.0 * s.c * std::sin(3.0 * phi)};
          }
        },
        shape_);
  }

 private:
  Shape shape_;
};

/// Local data of a curve at one parameter value.
struct Frame {
  double phi = 0.0;
  Point point = Point::Zero();
  Vec2 tangent = Vec2::Zero();  // unit
  Vec2 normal = Vec2::Zero();   // unit, outward: (t2, -t1)
  double speed = 0.0;           // |gamma'(phi)|
};

inline Frame make_frame(double phi, const Point& p, const Vec2& d) {
  const double speed = d.norm();
  if (!(speed >= 1e-12))
    throw Error(Errc::degenerate_tangent, "tangent vanishes at phi = " + std::to_string(phi));
  const Vec2 t = d / speed;
  return {phi, p, t, Vec2(t.y(), -t.x()), speed};
}

/// Frames on the uniform periodic grid phi_q = 2 pi q / Q.
struct CurveSamples {
  std::vector<double> phi;
  PointList points;
  PointList tangents;
  PointList normals;
  std::vector<double> speed;

  [[nodiscard]] std::size_t size() const noexcept { return phi.size(); }
  [[nodiscard]] double weight() const noexcept { return two_pi / static_cast<double>(size()); }
  [[nodiscard]] Frame frame(std::size_t q) const {
    return {phi[q], points[q], tangents[q], normals[q], speed[q]};
  }
};

class Curve {
 public:
  Curve(AnalyticCurve base)  // NOLINT(google-explicit-constructor)
      : base_(std::move(base)) {
    validate();
  }

  [[nodiscard]] const AnalyticCurve& base() const noexcept { return base_; }
  [[nodiscard]] bool is_analytic() const noexcept { return updates_.empty(); }
  [[nodiscard]] std::size_t update_count() const noexcept { return updates_.size(); }
  [[nodiscard]] const std::vector<std::shared_ptr<const DisplacementField>>& updates()
      const noexcept {
    return updates_;
  }

  /// The curve F(this) with F(x) = x + g(x). Validated on a quadrature grid:
  /// the pushed tangent may not vanish and the orientation must stay positive.
  [[nodiscard]] Curve deformed(std::shared_ptr<const DisplacementField> g) const {
    Curve out = *this;
    out.updates_.push_back(std::move(g));
    out.validate();
    return out;
  }

  [[nodiscard]] Point position(double phi) const {
    Point p = base_.position(phi);
    for (const auto& g : updates_) p += (*g)(p);
    return p;
  }

  /// Position and gamma'(phi) of the composed parametrisation.
  void position_and_derivative(double phi, Point& p, Vec2& d) const {
    p = base_.position(phi);
    d = base_.derivative(phi);
    Vec2 gv;
    Mat2 jac;
    for (const auto& g : updates_) {
      g->evaluate(p, gv, jac);
      d += jac * d;
      p += gv;
    }
  }

  [[nodiscard]] Frame frame(double phi) const {
    Point p;
    Vec2 d;
    position_and_derivative(phi, p, d);
    return make_frame(phi, p, d);
  }

  /// Signed curvature (x'y'' - y'x'') / |gamma'|^3; analytic curves only.
  [[nodiscard]] double curvature(double phi) const {
    if (!is_analytic())
      throw Error(Errc::unsupported_curve, "curvature is only available on analytic curves");
    const Vec2 d1 = base_.derivative(phi);
    const Vec2 d2 = base_.second_derivative(phi);
    const double speed = d1.norm();
    if (!(speed >= 1e-12)) throw Error(Errc::degenerate_tangent, "tangent vanishes");
    return (d1.x() * d2.y() - d1.y() * d2.x()) / (speed * speed * speed);
  }

  [[nodiscard]] CurveSamples sample(std::size_t count) const {
    CurveSamples s;
    s.phi.resize(count);
    s.points.resize(count);
    s.tangents.resize(count);
    s.normals.resize(count);
    s.speed.resize(count);
    for (std::size_t q = 0; q < count; ++q) {
      const double phi = two_pi * static_cast<double>(q) / static_cast<double>(count);
      const Frame f = frame(phi);
      s.phi[q] = phi;
      s.points[q] = f.point;
      s.tangents[q] = f.tangent;
      s.normals[q] = f.normal;
      s.speed[q] = f.speed;
    }
    return s;
  }

  /// 1/2 closed integral of (x dy - y dx) on a uniform grid.
  [[nodiscard]] double signed_area(std::size_t count = 4096) const {
    double acc = 0.0;
    for (std::size_t q = 0; q < count; ++q) {
      const double phi = two_pi * static_cast<double>(q) / static_cast<double>(count);
      Point p;
      Vec2 d;
      position_and_derivative(phi, p, d);
      acc += p.x() * d.y() - p.y() * d.x();
    }
    return 0.5 * acc * two_pi / static_cast<double>(count);
  }

 private:
  void validate() const {
    constexpr std::size_t grid = 1024;
    for (std::size_t q = 0; q < grid; ++q) {
      Point p;
      Vec2 d;
      position_and_derivative(two_pi * static_cast<double>(q) / grid, p, d);
      if (!(d.norm() >= 1e-12))
        throw Error(Errc::degenerate_tangent, "curve parametrisation is not regular");
    }
    if (!(signed_area(grid) > 0.0))
      throw Error(Errc::invalid_argument, "curve must be counterclockwise (positive signed area)");
  }

  AnalyticCurve base_;
  std::vector<std::shared_ptr<const DisplacementField>> updates_;
};

// ---------------------------------------------------------------------------
// Boundary quadrature

namespace detail {
template <class F>
double integrand_at(const Curve& curve, F& integrand, double phi) {
  if constexpr (std::is_invocable_r_v<double, F&, const Frame&>) {
    const Frame fr = curve.frame(phi);
    return integrand(fr) * fr.speed;
  } else {
    return integrand(phi) * curve.frame(phi).speed;
  }
}
}  // namespace detail

/// Composite trapezoid rule for the closed integral of `integrand` ds on the
/// grid phi_q = 2 pi q / Q. The integrand is called with either the parameter
/// phi or the full Frame at phi.
template <class F>
double quadrature(const Curve& curve, F&& integrand, std::size_t resolution) {
  if (resolution < 4) throw Error(Errc::invalid_argument, "quadrature needs Q >= 4");
  double acc = 0.0;
  for (std::size_t q = 0; q < resolution; ++q)
    acc += detail::integrand_at(curve, integrand,
                                two_pi * static_cast<double>(q) / static_cast<double>(resolution));
  return acc * two_pi / static_cast<double>(resolution);
}

struct QuadratureOptions {
  std::size_t initial = std::size_t{1} << 13;
  std::size_t cap = std::size_t{1} << 17;
  double rtol = 1e-10;
};

struct QuadratureResult {
  double value = 0.0;
  std::size_t resolution = 0;
  bool converged = false;
};

/// Trapezoid rule doubled from `initial` until two successive values agree to
/// `rtol` (relative) or `cap` is reached. Each doubling only evaluates the new
/// midpoints.
template <class F>
QuadratureResult adaptive_quadrature(const Curve& curve, F&& integrand,
                                     const QuadratureOptions& opt = {}) {
  if (opt.initial < 4 || opt.cap < opt.initial)
    throw Error(Errc::invalid_argument, "invalid adaptive quadrature range");
  std::size_t q_count = opt.initial;
  double sum = 0.0;
  for (std::size_t q = 0; q < q_count; ++q)
    sum += detail::integrand_at(curve, integrand,
                                two_pi * static_cast<double>(q) / static_cast<double>(q_count));
  double value = sum * two_pi / static_cast<double>(q_count);
  while (q_count < opt.cap) {
    double mid = 0.0;
    for (std::size_t q = 0; q < q_count; ++q)
      mid += detail::integrand_at(
          curve, integrand, two_pi * (static_cast<double>(q) + 0.5) / static_cast<double>(q_count));
    sum += mid;
    q_count *= 2;
    const double refined = sum * two_pi / static_cast<double>(q_count);
    const bool agree = std::abs(refined - value) <= opt.rtol * std::abs(refined) ||
                       refined == value;
    value = refined;
    if (agree) return {value, q_count, true};
  }
  return {value, q_count, false};
}

// ---------------------------------------------------------------------------
// Collocation sets and fill distances

inline constexpr std::size_t default_fill_samples = std::size_t{1} << 15;

/// Geodesic fill distance sup_y min_x d(x, y) of the points at parameters
/// `params` on `curve`. Arc length comes from a cumulative trapezoid rule on a
/// uniform phi grid; `samples` points are spread uniformly in arc length.
inline double geodesic_fill_distance(const Curve& curve, std::span<const double> params,
                                     std::size_t samples,
                                     std::size_t grid = default_fill_samples) {
  if (params.empty()) throw Error(Errc::invalid_argument, "empty collocation set");
  if (samples < 8 * params.size())
    throw Error(Errc::invalid_argument, "fill distance oversampling must be at least 8N");
  grid = std::max(grid, samples);
  std::vector<double> cumulative(grid + 1, 0.0);
  const double dphi = two_pi / static_cast<double>(grid);
  double prev = curve.frame(0.0).speed;
  const double first = prev;
  for (std::size_t q = 1; q <= grid; ++q) {
    const double cur = q == grid ? first : curve.frame(dphi * static_cast<double>(q)).speed;
    cumulative[q] = cumulative[q - 1] + 0.5 * (prev + cur) * dphi;
    prev = cur;
  }
  const double length = cumulative[grid];
  auto arc_at = [&](double phi) {
    phi = std::fmod(phi, two_pi);
    if (phi < 0.0) phi += two_pi;
    const double u = phi / dphi;
    const auto k = std::min(static_cast<std::size_t>(u), grid - 1);
    const double w = u - static_cast<double>(k);
    return (1.0 - w) * cumulative[k] + w * cumulative[k + 1];
  };
  std::vector<double> arcs;
  arcs.reserve(params.size());
  for (double p : params) arcs.push_back(arc_at(p));
  std::sort(arcs.begin(), arcs.end());

  double worst = 0.0;
  for (std::size_t j = 0; j < samples; ++j) {
    const double s = length * static_cast<double>(j) / static_cast<double>(samples);
    auto it = std::lower_bound(arcs.begin(), arcs.end(), s);
    const double above = it == arcs.end() ? arcs.front() + length : *it;
    const double below = it == arcs.begin() ? arcs.back() - length : *std::prev(it);
    worst = std::max(worst, std::min(above - s, s - below));
  }
  return worst;
}

/// Euclidean fill distance sup_y min_x |x - y| with y on a uniform phi grid.
inline double euclidean_fill_distance(const Curve& curve, std::span<const Point> points,
                                      std::size_t samples = default_fill_samples) {
  if (points.empty()) throw Error(Errc::invalid_argument, "empty collocation set");
  double worst = 0.0;
  for (std::size_t j = 0; j < samples; ++j) {
    const Point y = curve.position(two_pi * static_cast<double>(j) / static_cast<double>(samples));
    double best = std::numeric_limits<double>::infinity();
    for (const Point& x : points) best = std::min(best, (x - y).squaredNorm());
    worst = std::max(worst, best);
  }
  return std::sqrt(worst);
}

class CollocationSet {
 public:
  CollocationSet(Curve curve, std::vector<double> params)
      : curve_(std::move(curve)), params_(std::move(params)) {
    if (params_.empty()) throw Error(Errc::invalid_argument, "empty collocation set");
    PointList pts, tans, nors;
    pts.reserve(params_.size());
    for (double phi : params_) {
      const Frame f = curve_.frame(phi);
      pts.push_back(f.point);
      tans.push_back(f.tangent);
      nors.push_back(f.normal);
    }
    double scale = 0.0;
    for (const auto& p : pts) scale = std::max(scale, p.lpNorm<Eigen::Infinity>());
    const double tol = 1e-12 * std::max(1.0, scale);
    for (std::size_t i = 0; i < pts.size(); ++i)
      for (std::size_t j = 0; j < i; ++j)
        if ((pts[i] - pts[j]).norm() <= tol)
          throw Error(Errc::duplicate_points, "collocation points must be pairwise distinct");
    points_ = std::make_shared<const PointList>(std::move(pts));
    tangents_ = std::move(tans);
    normals_ = std::move(nors);
    const std::size_t samples = std::max(default_fill_samples, 8 * params_.size());
    fill_distance_ = geodesic_fill_distance(curve_, params_, samples);
  }

  [[nodiscard]] const Curve& curve() const noexcept { return curve_; }
  [[nodiscard]] std::size_t size() const noexcept { return params_.size(); }
  [[nodiscard]] const std::vector<double>& params() const noexcept { return params_; }
  [[nodiscard]] const PointList& points() const noexcept { return *points_; }
  [[nodiscard]] const std::shared_ptr<const PointList>& shared_points() const noexcept {
    return points_;
  }
  [[nodiscard]] const PointList& tangents() const noexcept { return tangents_; }
  [[nodiscard]] const PointList& normals() const noexcept { return normals_; }
  /// Geodesic fill distance.
  [[nodiscard]] double fill_distance() const noexcept { return fill_distance_; }
  [[nodiscard]] double fill_distance(std::size_t oversampling) const {
    return geodesic_fill_distance(curve_, params_, oversampling);
  }
  [[nodiscard]] double euclidean_fill_distance(
      std::size_t samples = default_fill_samples) const {
    return wnf::euclidean_fill_distance(curve_, *points_, samples);
  }
  [[nodiscard]] Frame frame(std::size_t i) const {
    return {params_[i], (*points_)[i], tangents_[i], normals_[i], curve_.frame(params_[i]).speed};
  }

 private:
  Curve curve_;
  std::vector<double> params_;
  std::shared_ptr<const PointList> points_;
  PointList tangents_;
  PointList normals_;
  double fill_distance_ = 0.0;
};

/// X_N = { gamma(2 pi l / N) : l = 1..N }.
inline CollocationSet uniform_collocation(const Curve& curve, std::size_t n) {
  if (n < 4) throw Error(Errc::invalid_argument, "uniform collocation needs N >= 4");
  std::vector<double> params(n);
  for (std::size_t l = 1; l <= n; ++l)
    params[l - 1] = two_pi * static_cast<double>(l) / static_cast<double>(n);
  return CollocationSet(curve, std::move(params));
}

/// Collocation set on F(curve), F(x) = x + g(x), at the same parameters; the
/// points are F(x_i) and frames are recomputed on the deformed curve.
inline CollocationSet transport(const CollocationSet& set,
                                std::shared_ptr<const DisplacementField> update) {
  return CollocationSet(set.curve().deformed(std::move(update)), set.params());
}

}  // namespace wnf
