#pragma once

#include <Eigen/Dense>

#include <memory>
#include <span>

#include "wnf/kernel.hpp"

namespace wnf {

/// Finite kernel combination y -> sum_i c_i k(x_i, y) with c_i in R^Cols.
/// Centers are shared so that many expansions over one point set stay cheap.
template <int Cols>
class KernelExpansion {
 public:
  using Value = Eigen::Matrix<double, Cols, 1>;
  using Jacobian = Eigen::Matrix<double, Cols, 2>;
  using Coefficients = Eigen::Matrix<double, Eigen::Dynamic, Cols>;

  KernelExpansion(Kernel kernel, std::shared_ptr<const PointList> centers, Coefficients coeffs)
      : kernel_(kernel), centers_(std::move(centers)), coeffs_(std::move(coeffs)) {
    if (!centers_ || static_cast<Eigen::Index>(centers_->size()) != coeffs_.rows())
      throw Error(Errc::dimension_mismatch, "one coefficient row per center is required");
  }

  [[nodiscard]] const Kernel& kernel() const noexcept { return kernel_; }
  [[nodiscard]] const PointList& centers() const noexcept { return *centers_; }
  [[nodiscard]] const std::shared_ptr<const PointList>& shared_centers() const noexcept {
    return centers_;
  }
  [[nodiscard]] const Coefficients& coefficients() const noexcept { return coeffs_; }
  [[nodiscard]] Eigen::Index size() const noexcept { return coeffs_.rows(); }

  [[nodiscard]] Value operator()(const Point& y) const {
    Value v = Value::Zero();
    const double sigma2 = kernel_.sigma() * kernel_.sigma();
    const auto& xs = *centers_;
    for (Eigen::Index i = 0; i < coeffs_.rows(); ++i) {
      const double d2 = (y - xs[i]).squaredNorm();
      if (d2 >= sigma2) continue;
      v += kernel_.profile(std::sqrt(d2) / kernel_.sigma()) * coeffs_.row(i).transpose();
    }
    return v;
  }

  /// Spatial Jacobian: sum_i c_i (grad_y k(x_i, y))^T.
  [[nodiscard]] Jacobian jacobian(const Point& y) const {
    Jacobian j = Jacobian::Zero();
    const double sigma2 = kernel_.sigma() * kernel_.sigma();
    const auto& xs = *centers_;
    for (Eigen::Index i = 0; i < coeffs_.rows(); ++i) {
      const Vec2 d = y - xs[i];
      const double d2 = d.squaredNorm();
      if (d2 >= sigma2) continue;
      const double w = kernel_.profile_slope_over_s(std::sqrt(d2) / kernel_.sigma()) / sigma2;
      j += coeffs_.row(i).transpose() * (w * d).transpose();
    }
    return j;
  }

  /// Value and Jacobian in one sweep over the centers.
  void evaluate(const Point& y, Value& value, Jacobian& jac) const {
    value.setZero();
    jac.setZero();
    const double sigma = kernel_.sigma();
    const double sigma2 = sigma * sigma;
    const auto& xs = *centers_;
    for (Eigen::Index i = 0; i < coeffs_.rows(); ++i) {
      const Vec2 d = y - xs[i];
      const double d2 = d.squaredNorm();
      if (d2 >= sigma2) continue;
      const double s = std::sqrt(d2) / sigma;
      const auto c = coeffs_.row(i).transpose();
      value += kernel_.profile(s) * c;
      jac += c * ((kernel_.profile_slope_over_s(s) / sigma2) * d).transpose();
    }
  }

  [[nodiscard]] KernelExpansion scaled(double factor) const {
    return KernelExpansion(kernel_, centers_, factor * coeffs_);
  }

 private:
  Kernel kernel_;
  std::shared_ptr<const PointList> centers_;
  Coefficients coeffs_;
};

using ScalarExpansion = KernelExpansion<1>;
using VectorExpansion = KernelExpansion<2>;

/// A displacement x -> g(x) built from kernel sections; the deformation it
/// drives is F(x) = x + g(x).
using DisplacementField = VectorExpansion;

inline std::shared_ptr<const PointList> share_points(std::span<const Point> pts) {
  return std::make_shared<const PointList>(pts.begin(), pts.end());
}

}  // namespace wnf
