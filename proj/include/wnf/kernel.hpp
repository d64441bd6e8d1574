#pragma once

// Compactly supported Wendland kernels k_p^sigma, p in {4, 6, 8}, on the plane.
// All three are normalised so that k(x, x) = 1 and vanish for |x - y| >= sigma.

#include <Eigen/Dense>

#include <cmath>
#include <span>
#include <vector>

#include "wnf/error.hpp"

namespace wnf {

using Point = Eigen::Vector2d;
using Vec2 = Eigen::Vector2d;
using Mat2 = Eigen::Matrix2d;
using PointList = std::vector<Point, Eigen::aligned_allocator<Point>>;

class Kernel {
 public:
  Kernel(int order, double sigma) : order_(order), sigma_(sigma) {
    if (order != 4 && order != 6 && order != 8)
      throw Error(Errc::invalid_argument, "kernel order must be 4, 6 or 8");
    if (!(sigma > 0.0) || !std::isfinite(sigma))
      throw Error(Errc::invalid_argument, "kernel support radius must be positive");
  }

  [[nodiscard]] int order() const noexcept { return order_; }
  [[nodiscard]] double sigma() const noexcept { return sigma_; }

  /// Radial profile phi(s), s = |x - y| / sigma.
  [[nodiscard]] double profile(double s) const noexcept {
    if (s >= 1.0) return 0.0;
    const double t = 1.0 - s;
    switch (order_) {
      case 4: {
        const double t2 = t * t;
        return t2 * t2 * (4.0 * s + 1.0);
      }
      case 6: {
        const double t3 = t * t * t;
        return t3 * t3 * (35.0 * s * s + 18.0 * s + 3.0) / 3.0;
      }
      default: {
        const double t2 = t * t;
        const double t4 = t2 * t2;
        return t4 * t4 * (((32.0 * s + 25.0) * s + 8.0) * s + 1.0);
      }
    }
  }

  /// phi'(s) / s, which stays finite at s = 0 for every supported order.
  [[nodiscard]] double profile_slope_over_s(double s) const noexcept {
    if (s >= 1.0) return 0.0;
    const double t = 1.0 - s;
    switch (order_) {
      case 4:
        return -20.0 * t * t * t;
      case 6: {
        const double t5 = t * t * t * t * t;
        return -(56.0 / 3.0) * t5 * (5.0 * s + 1.0);
      }
      default: {
        const double t3 = t * t * t;
        return -22.0 * t3 * t3 * t * ((16.0 * s + 7.0) * s + 1.0);
      }
    }
  }

  [[nodiscard]] double operator()(const Point& x, const Point& y) const noexcept {
    return profile(std::sqrt((x - y).squaredNorm()) / sigma_);
  }

  /// Gradient of y -> k(x, y).
  [[nodiscard]] Vec2 grad_y(const Point& x, const Point& y) const noexcept {
    const Vec2 d = y - x;
    const double s = std::sqrt(d.squaredNorm()) / sigma_;
    return (profile_slope_over_s(s) / (sigma_ * sigma_)) * d;
  }

 private:
  int order_;
  double sigma_;
};

/// Symmetric matrix of kernel values on a point list; positive-definite for
/// pairwise distinct points.
class GramMatrix {
 public:
  GramMatrix(const Kernel& kernel, std::span<const Point> points)
      : points_(points.begin(), points.end()) {
    const auto n = static_cast<Eigen::Index>(points_.size());
    entries_.resize(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
      entries_(i, i) = 1.0;
      for (Eigen::Index j = 0; j < i; ++j) {
        if (points_[i] == points_[j])
          throw Error(Errc::duplicate_points, "Gram matrix needs pairwise distinct points");
        const double v = kernel(points_[i], points_[j]);
        entries_(i, j) = v;
        entries_(j, i) = v;
      }
    }
  }

  [[nodiscard]] const Eigen::MatrixXd& entries() const noexcept { return entries_; }
  [[nodiscard]] const PointList& points() const noexcept { return points_; }
  [[nodiscard]] Eigen::Index size() const noexcept { return entries_.rows(); }

 private:
  PointList points_;
  Eigen::MatrixXd entries_;
};

inline GramMatrix gram(const Kernel& kernel, std::span<const Point> points) {
  return GramMatrix(kernel, points);
}

/// H-inner product of two kernel combinations over the Gram points: a^T G b.
/// Vector-valued combinations stack both coordinate blocks (length 2n) and
/// the product sums over the components.
inline double rkhs_inner(const GramMatrix& g, const Eigen::VectorXd& a,
                         const Eigen::VectorXd& b) {
  const Eigen::Index n = g.size();
  if (a.size() != b.size() || (a.size() != n && a.size() != 2 * n))
    throw Error(Errc::dimension_mismatch, "coefficient vectors do not match the Gram matrix");
  if (a.size() == n) return a.dot(g.entries() * b);
  return a.head(n).dot(g.entries() * b.head(n)) + a.tail(n).dot(g.entries() * b.tail(n));
}

/// Rectangular kernel matrix K(i, j) = k(centers[j], targets[i]).
inline Eigen::MatrixXd kernel_matrix(const Kernel& kernel, std::span<const Point> targets,
                                     std::span<const Point> centers) {
  Eigen::MatrixXd k(static_cast<Eigen::Index>(targets.size()),
                    static_cast<Eigen::Index>(centers.size()));
  for (Eigen::Index j = 0; j < k.cols(); ++j)
    for (Eigen::Index i = 0; i < k.rows(); ++i) k(i, j) = kernel(centers[j], targets[i]);
  return k;
}

}  // namespace wnf
