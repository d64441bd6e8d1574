#pragma once

// J(Omega) = int_Omega f dx and its boundary shape derivatives restricted to
// normal perturbations X = u nu, Y = v nu:
//
//   DJ(X)      = int f u ds
//   D^2J(X)(Y) = int (grad f . nu + [kappa f]) u v ds
//
// The curvature term in brackets is optional; it needs second derivatives of
// the boundary and is therefore only available on analytic curves.

#include <cmath>
#include <functional>
#include <optional>
#include <type_traits>

#include "wnf/error.hpp"
#include "wnf/geometry.hpp"
#include "wnf/kernel.hpp"

namespace wnf {

struct ScalarField {
  std::function<double(const Point&)> value;
  std::function<Vec2(const Point&)> gradient;
  /// F with div F = value, used to evaluate J through the divergence theorem.
  std::optional<std::function<Vec2(const Point&)>> divergence_potential;
};

/// f(x) = |x|^2 - 1; its minimiser over domains is the unit disc.
inline ScalarField unit_disc_integrand() {
  return {
      [](const Point& x) { return x.squaredNorm() - 1.0; },
      [](const Point& x) -> Vec2 { return 2.0 * x; },
      [](const Point& x) -> Vec2 {
        return {x.x() * x.x() * x.x() / 3.0 + x.x() * x.y() * x.y() - x.x(), 0.0};
      },
  };
}

namespace detail {
template <class F>
double normal_component(F& v, const Frame& fr) {
  if constexpr (std::is_invocable_r_v<double, F&, const Frame&>)
    return v(fr);
  else
    return v(fr.phi);
}
}  // namespace detail

/// Weight of the Hessian form at one frame: grad f . nu (+ kappa f).
inline double hessian_weight(const Curve& curve, const ScalarField& f, const Frame& fr,
                             bool curvature_term) {
  double w = f.gradient(fr.point).dot(fr.normal);
  if (curvature_term) w += curve.curvature(fr.phi) * f.value(fr.point);
  return w;
}

/// DJ applied to the normal field v nu; v takes phi or a Frame.
template <class V>
double shape_gradient(const Curve& curve, const ScalarField& f, V&& v_normal,
                      std::size_t resolution) {
  return quadrature(
      curve,
      [&](const Frame& fr) { return f.value(fr.point) * detail::normal_component(v_normal, fr); },
      resolution);
}

template <class U, class V>
double shape_hessian(const Curve& curve, const ScalarField& f, U&& u_normal, V&& v_normal,
                     bool curvature_term, std::size_t resolution) {
  if (curvature_term && !curve.is_analytic())
    throw Error(Errc::unsupported_curve, "curvature term requested on a deformed curve");
  return quadrature(
      curve,
      [&](const Frame& fr) {
        return hessian_weight(curve, f, fr, curvature_term) *
               detail::normal_component(u_normal, fr) * detail::normal_component(v_normal, fr);
      },
      resolution);
}

/// The Newton field X_nu = -f / (grad f . nu + [kappa f]) nu on an analytic curve.
class ExactNewtonField {
 public:
  ExactNewtonField(Curve curve, ScalarField f, bool curvature_term)
      : curve_(std::move(curve)), f_(std::move(f)), curvature_term_(curvature_term) {
    if (curvature_term_ && !curve_.is_analytic())
      throw Error(Errc::unsupported_curve, "curvature term requested on a deformed curve");
  }

  [[nodiscard]] double normal_component(const Frame& fr) const {
    const double den = hessian_weight(curve_, f_, fr, curvature_term_);
    if (!(den > 0.0))
      throw Error(Errc::non_elliptic_hessian, "grad f . nu + kappa f must be positive");
    return -f_.value(fr.point) / den;
  }

  [[nodiscard]] Vec2 operator()(const Frame& fr) const { return normal_component(fr) * fr.normal; }
  [[nodiscard]] Vec2 operator()(double phi) const { return (*this)(curve_.frame(phi)); }

  [[nodiscard]] const Curve& curve() const noexcept { return curve_; }

 private:
  Curve curve_;
  ScalarField f_;
  bool curvature_term_;
};

/// Builds X_nu after checking ellipticity on the grid of `resolution` nodes.
inline ExactNewtonField exact_newton_field(const Curve& curve, const ScalarField& f,
                                           bool curvature_term,
                                           std::size_t resolution = std::size_t{1} << 13) {
  ExactNewtonField field(curve, f, curvature_term);
  for (std::size_t q = 0; q < resolution; ++q) {
    const Frame fr = curve.frame(two_pi * static_cast<double>(q) / static_cast<double>(resolution));
    (void)field.normal_component(fr);
  }
  return field;
}

/// J(Omega) = closed integral of F . nu ds with div F = f.
inline double objective(const Curve& curve, const ScalarField& f, std::size_t resolution) {
  if (!f.divergence_potential)
    throw Error(Errc::missing_potential, "objective needs a divergence potential");
  const auto& potential = *f.divergence_potential;
  return quadrature(
      curve, [&](const Frame& fr) { return potential(fr.point).dot(fr.normal); }, resolution);
}

}  // namespace wnf
