#pragma once

// Approximate weakly-normal basis fields (r_x^h, p_x^h).
//
// With coefficients a = (alpha^1, alpha^2) in R^{2N} and b in R^M the discrete
// problem reads
//
//   [ A   B^T ] [a]   [L]        A = diag(G, G),  G_nm = k(x_n, x_m)
//   [ B   0   ] [b] = [0],       L^l_n = nu^l(x) k(x_n, x)
//
// and B^l_mn = k(x_n, y_m) tau^l(y_m) tests the tangential component of
// r_x^h = sum_n alpha_n k(x_n, .) against k(y_m, .), i.e. B a = 0 is
// r_x^h(y_m) . tau(y_m) = 0. The matrix only depends on X and Y, so one
// factorisation serves every anchor x.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "wnf/error.hpp"
#include "wnf/expansion.hpp"
#include "wnf/geometry.hpp"
#include "wnf/kernel.hpp"

namespace wnf {

/// Where the tangent in the constraint block is evaluated. `constraint_point`
/// (tau(y_m)) is the exact Galerkin form of the tangential constraint;
/// `basis_center` (tau(x_n)) forces every coefficient alpha_n onto nu(x_n)
/// instead and is kept for comparison.
enum class TangentPlacement { constraint_point, basis_center };

struct Anchor {
  Point point = Point::Zero();
  Vec2 normal = Vec2::Zero();

  static Anchor on(const Curve& curve, double phi) {
    const Frame f = curve.frame(phi);
    return {f.point, f.normal};
  }
  static Anchor at(const CollocationSet& set, std::size_t i) {
    return {set.points()[i], set.normals()[i]};
  }
};

/// Y as a subset of X given by indices into X; empty optional means Y = X.
struct YSelection {
  std::optional<std::vector<std::size_t>> indices;

  static YSelection all() { return {}; }
  static YSelection subset(std::vector<std::size_t> idx) { return {std::move(idx)}; }

  /// Locates every y in X (exact match up to 1e-14 relative), else YNotSubsetOfX.
  static YSelection from_points(const CollocationSet& set, std::span<const Point> ys) {
    std::vector<std::size_t> idx;
    for (const Point& y : ys) {
      const auto& xs = set.points();
      auto it = std::find_if(xs.begin(), xs.end(), [&](const Point& x) {
        return (x - y).norm() <= 1e-14 * std::max(1.0, y.norm());
      });
      if (it == xs.end()) throw Error(Errc::y_not_subset_of_x, "a point of Y is not in X");
      idx.push_back(static_cast<std::size_t>(it - xs.begin()));
    }
    return subset(std::move(idx));
  }

  [[nodiscard]] std::vector<std::size_t> resolve(std::size_t n) const {
    if (!indices) {
      std::vector<std::size_t> all(n);
      for (std::size_t i = 0; i < n; ++i) all[i] = i;
      return all;
    }
    std::vector<std::size_t> idx = *indices;
    if (idx.empty()) throw Error(Errc::invalid_argument, "Y must not be empty");
    std::vector<std::size_t> sorted = idx;
    std::sort(sorted.begin(), sorted.end());
    if (sorted.back() >= n) throw Error(Errc::y_not_subset_of_x, "Y index outside X");
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
      throw Error(Errc::duplicate_points, "Y must contain pairwise distinct points");
    return idx;
  }
};

struct SaddleSystem {
  Eigen::MatrixXd gram;                // N x N, G_nm = k(x_n, x_m)
  Eigen::MatrixXd constraint;          // M x 2N, (B^1 B^2)
  Eigen::VectorXd rhs;                 // 2N, (L^1, L^2)
  std::vector<std::size_t> y_indices;  // Y = X[y_indices]
  std::shared_ptr<const PointList> x_points;
  Anchor anchor;
  Kernel kernel;

  [[nodiscard]] Eigen::Index n() const noexcept { return gram.rows(); }
  [[nodiscard]] Eigen::Index m() const noexcept { return constraint.rows(); }

  /// The full (2N + M) x (2N + M) symmetric indefinite matrix.
  [[nodiscard]] Eigen::MatrixXd matrix() const {
    const Eigen::Index n2 = 2 * n();
    Eigen::MatrixXd s = Eigen::MatrixXd::Zero(n2 + m(), n2 + m());
    s.topLeftCorner(n(), n()) = gram;
    s.block(n(), n(), n(), n()) = gram;
    s.bottomLeftCorner(m(), n2) = constraint;
    s.topRightCorner(n2, m()) = constraint.transpose();
    return s;
  }

  [[nodiscard]] Eigen::VectorXd full_rhs() const {
    Eigen::VectorXd r = Eigen::VectorXd::Zero(2 * n() + m());
    r.head(2 * n()) = rhs;
    return r;
  }
};

namespace detail {

inline Eigen::MatrixXd constraint_block(const CollocationSet& set,
                                        const Eigen::MatrixXd& gram,
                                        const std::vector<std::size_t>& y_idx,
                                        TangentPlacement placement) {
  const auto n = static_cast<Eigen::Index>(set.size());
  const auto m = static_cast<Eigen::Index>(y_idx.size());
  Eigen::MatrixXd b(m, 2 * n);
  for (Eigen::Index row = 0; row < m; ++row) {
    const std::size_t ym = y_idx[static_cast<std::size_t>(row)];
    for (Eigen::Index col = 0; col < n; ++col) {
      const double kv = gram(col, static_cast<Eigen::Index>(ym));
      const Vec2& t = placement == TangentPlacement::constraint_point
                          ? set.tangents()[ym]
                          : set.tangents()[static_cast<std::size_t>(col)];
      b(row, col) = kv * t.x();
      b(row, n + col) = kv * t.y();
    }
  }
  return b;
}

inline Eigen::VectorXd load_vector(const Kernel& kernel, const PointList& xs,
                                   const Anchor& anchor) {
  const auto n = static_cast<Eigen::Index>(xs.size());
  Eigen::VectorXd l(2 * n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double kv = kernel(xs[static_cast<std::size_t>(i)], anchor.point);
    l(i) = anchor.normal.x() * kv;
    l(n + i) = anchor.normal.y() * kv;
  }
  return l;
}

inline Eigen::MatrixXd full_gram(const Kernel& kernel, const PointList& xs) {
  return GramMatrix(kernel, xs).entries();
}

}  // namespace detail

inline SaddleSystem assemble(const Kernel& kernel, const CollocationSet& set,
                             const Anchor& anchor, const YSelection& y = YSelection::all(),
                             TangentPlacement placement = TangentPlacement::constraint_point) {
  SaddleSystem sys{detail::full_gram(kernel, set.points()), {}, {}, y.resolve(set.size()),
                   set.shared_points(), anchor, kernel};
  sys.constraint = detail::constraint_block(set, sys.gram, sys.y_indices, placement);
  sys.rhs = detail::load_vector(kernel, set.points(), anchor);
  return sys;
}

/// r_x^h and p_x^h as kernel expansions, evaluable anywhere in the plane.
class WeaklyNormalField {
 public:
  WeaklyNormalField(VectorExpansion r, ScalarExpansion p, Anchor anchor,
                    std::shared_ptr<const Eigen::MatrixXd> gram_x,
                    std::shared_ptr<const Eigen::MatrixXd> gram_y)
      : r_(std::move(r)),
        p_(std::move(p)),
        anchor_(anchor),
        gram_x_(std::move(gram_x)),
        gram_y_(std::move(gram_y)) {}

  [[nodiscard]] const VectorExpansion& r() const noexcept { return r_; }
  [[nodiscard]] const ScalarExpansion& p() const noexcept { return p_; }
  [[nodiscard]] const Anchor& anchor() const noexcept { return anchor_; }
  [[nodiscard]] const Eigen::MatrixXd& gram_x() const noexcept { return *gram_x_; }
  [[nodiscard]] const Eigen::MatrixXd& gram_y() const noexcept { return *gram_y_; }

  /// alpha_i in R^2 as an N x 2 matrix.
  [[nodiscard]] const VectorExpansion::Coefficients& alpha() const noexcept {
    return r_.coefficients();
  }
  [[nodiscard]] const ScalarExpansion::Coefficients& beta() const noexcept {
    return p_.coefficients();
  }

  [[nodiscard]] Vec2 operator()(const Point& y) const { return r_(y); }

 private:
  VectorExpansion r_;
  ScalarExpansion p_;
  Anchor anchor_;
  std::shared_ptr<const Eigen::MatrixXd> gram_x_;
  std::shared_ptr<const Eigen::MatrixXd> gram_y_;
};

struct FieldValue {
  Vec2 r = Vec2::Zero();
  double p = 0.0;
};

inline FieldValue eval_field(const WeaklyNormalField& field, const Point& y) {
  return {field.r()(y), field.p()(y)(0)};
}

inline Mat2 field_jacobian(const WeaklyNormalField& field, const Point& y) {
  return field.r().jacobian(y);
}

struct FieldNorms {
  double r = 0.0;
  double p = 0.0;
};

/// ||r||^2 = sum_ij (alpha_i . alpha_j) k(x_i, x_j), ||p||^2 = beta^T G_Y beta.
inline FieldNorms rkhs_norm(const WeaklyNormalField& field) {
  const auto& a = field.alpha();
  const auto& g = field.gram_x();
  const double r2 = a.col(0).dot(g * a.col(0)) + a.col(1).dot(g * a.col(1));
  const auto& b = field.beta();
  const double p2 = b.col(0).dot(field.gram_y() * b.col(0));
  return {std::sqrt(std::max(r2, 0.0)), std::sqrt(std::max(p2, 0.0))};
}

/// H-norm of an arbitrary vector expansion, via its own Gram matrix.
inline double rkhs_norm(const VectorExpansion& g, const Eigen::MatrixXd& gram_of_centers) {
  const auto& c = g.coefficients();
  const double v = c.col(0).dot(gram_of_centers * c.col(0)) + c.col(1).dot(gram_of_centers * c.col(1));
  return std::sqrt(std::max(v, 0.0));
}

/// Basis fields for several anchors over one X, Y: column j of alpha1/alpha2/beta
/// belongs to anchor j.
struct BasisSet {
  Kernel kernel;
  std::shared_ptr<const PointList> x_points;
  std::shared_ptr<const PointList> y_points;
  std::shared_ptr<const Eigen::MatrixXd> gram_x;
  std::shared_ptr<const Eigen::MatrixXd> gram_y;
  Eigen::MatrixXd alpha1;  // N x K
  Eigen::MatrixXd alpha2;  // N x K
  Eigen::MatrixXd beta;    // M x K
  std::vector<Anchor> anchors;
  double residual = 0.0;  // max relative residual of the saddle solves

  [[nodiscard]] std::size_t size() const noexcept { return anchors.size(); }

  [[nodiscard]] WeaklyNormalField field(std::size_t j) const {
    const auto col = static_cast<Eigen::Index>(j);
    VectorExpansion::Coefficients a(alpha1.rows(), 2);
    a.col(0) = alpha1.col(col);
    a.col(1) = alpha2.col(col);
    ScalarExpansion::Coefficients b = beta.col(col);
    return {VectorExpansion(kernel, x_points, std::move(a)),
            ScalarExpansion(kernel, y_points, std::move(b)), anchors[j], gram_x, gram_y};
  }

  /// The expansion sum_j c_j r_j.
  [[nodiscard]] VectorExpansion combination(const Eigen::VectorXd& c) const {
    if (c.size() != static_cast<Eigen::Index>(size()))
      throw Error(Errc::dimension_mismatch, "one coefficient per basis field is required");
    VectorExpansion::Coefficients a(alpha1.rows(), 2);
    a.col(0) = alpha1 * c;
    a.col(1) = alpha2 * c;
    return {kernel, x_points, std::move(a)};
  }
};

/// Factorises the saddle matrix of (X, Y) once (LU with partial pivoting) and
/// solves for any number of anchors. Solving is const and may be shared
/// read-only across threads.
class SaddleSolver {
 public:
  SaddleSolver(const Kernel& kernel, const CollocationSet& set,
               const YSelection& y = YSelection::all(),
               TangentPlacement placement = TangentPlacement::constraint_point)
      : kernel_(kernel), x_points_(set.shared_points()) {
    auto gx = std::make_shared<Eigen::MatrixXd>(detail::full_gram(kernel, set.points()));
    y_idx_ = y.resolve(set.size());
    constraint_ = detail::constraint_block(set, *gx, y_idx_, placement);
    PointList ys;
    ys.reserve(y_idx_.size());
    for (auto i : y_idx_) ys.push_back(set.points()[i]);
    y_points_ = std::make_shared<const PointList>(std::move(ys));
    auto gy = std::make_shared<Eigen::MatrixXd>(y_idx_.size(), y_idx_.size());
    for (std::size_t i = 0; i < y_idx_.size(); ++i)
      for (std::size_t j = 0; j < y_idx_.size(); ++j)
        (*gy)(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
            (*gx)(static_cast<Eigen::Index>(y_idx_[i]), static_cast<Eigen::Index>(y_idx_[j]));
    gram_x_ = std::move(gx);
    gram_y_ = std::move(gy);
    matrix_ = assemble_matrix();
    lu_.compute(matrix_);
    const auto& u = lu_.matrixLU();
    for (Eigen::Index i = 0; i < u.rows(); ++i)
      if (!(std::abs(u(i, i)) > 0.0) || !std::isfinite(u(i, i)))
        throw Error(Errc::singular_system, "saddle matrix is singular");
  }

  [[nodiscard]] const Eigen::MatrixXd& matrix() const noexcept { return matrix_; }
  [[nodiscard]] const Eigen::MatrixXd& gram() const noexcept { return *gram_x_; }
  [[nodiscard]] const Eigen::MatrixXd& constraint() const noexcept { return constraint_; }
  [[nodiscard]] const std::vector<std::size_t>& y_indices() const noexcept { return y_idx_; }
  [[nodiscard]] const Kernel& kernel() const noexcept { return kernel_; }

  [[nodiscard]] BasisSet solve(std::span<const Anchor> anchors) const {
    const auto n = static_cast<Eigen::Index>(x_points_->size());
    const auto m = static_cast<Eigen::Index>(y_idx_.size());
    const auto k = static_cast<Eigen::Index>(anchors.size());
    Eigen::MatrixXd rhs = Eigen::MatrixXd::Zero(2 * n + m, k);
    for (Eigen::Index j = 0; j < k; ++j)
      rhs.col(j).head(2 * n) = detail::load_vector(kernel_, *x_points_, anchors[static_cast<std::size_t>(j)]);
    Eigen::MatrixXd z = lu_.solve(rhs);
    if (!z.allFinite()) throw Error(Errc::singular_system, "non-finite saddle solution");
    const Eigen::MatrixXd res = matrix_ * z - rhs;
    double worst = 0.0;
    for (Eigen::Index j = 0; j < k; ++j)
      worst = std::max(worst, res.col(j).lpNorm<Eigen::Infinity>() /
                                  (1.0 + rhs.col(j).lpNorm<Eigen::Infinity>()));
    return {kernel_,
            x_points_,
            y_points_,
            gram_x_,
            gram_y_,
            z.topRows(n),
            z.middleRows(n, n),
            z.bottomRows(m),
            std::vector<Anchor>(anchors.begin(), anchors.end()),
            worst};
  }

  [[nodiscard]] WeaklyNormalField solve(const Anchor& anchor) const {
    return solve(std::span<const Anchor>(&anchor, 1)).field(0);
  }

  /// Basis fields anchored at every collocation point.
  [[nodiscard]] BasisSet collocation_basis(const CollocationSet& set) const {
    std::vector<Anchor> anchors;
    anchors.reserve(set.size());
    for (std::size_t i = 0; i < set.size(); ++i) anchors.push_back(Anchor::at(set, i));
    return solve(anchors);
  }

 private:
  [[nodiscard]] Eigen::MatrixXd assemble_matrix() const {
    const auto n = gram_x_->rows();
    const auto m = constraint_.rows();
    Eigen::MatrixXd s = Eigen::MatrixXd::Zero(2 * n + m, 2 * n + m);
    s.topLeftCorner(n, n) = *gram_x_;
    s.block(n, n, n, n) = *gram_x_;
    s.bottomLeftCorner(m, 2 * n) = constraint_;
    s.topRightCorner(2 * n, m) = constraint_.transpose();
    return s;
  }

  Kernel kernel_;
  std::shared_ptr<const PointList> x_points_;
  std::shared_ptr<const PointList> y_points_;
  std::shared_ptr<const Eigen::MatrixXd> gram_x_;
  std::shared_ptr<const Eigen::MatrixXd> gram_y_;
  std::vector<std::size_t> y_idx_;
  Eigen::MatrixXd constraint_;
  Eigen::MatrixXd matrix_;
  Eigen::PartialPivLU<Eigen::MatrixXd> lu_;
};

/// Solves one assembled system directly.
inline WeaklyNormalField solve(const SaddleSystem& sys) {
  const Eigen::MatrixXd s = sys.matrix();
  Eigen::PartialPivLU<Eigen::MatrixXd> lu(s);
  const auto& u = lu.matrixLU();
  for (Eigen::Index i = 0; i < u.rows(); ++i)
    if (!(std::abs(u(i, i)) > 0.0) || !std::isfinite(u(i, i)))
      throw Error(Errc::singular_system, "saddle matrix is singular");
  const Eigen::VectorXd rhs = sys.full_rhs();
  const Eigen::VectorXd z = lu.solve(rhs);
  if (!z.allFinite()) throw Error(Errc::singular_system, "non-finite saddle solution");
  const Eigen::Index n = sys.n();
  VectorExpansion::Coefficients a(n, 2);
  a.col(0) = z.head(n);
  a.col(1) = z.segment(n, n);
  ScalarExpansion::Coefficients b = z.tail(sys.m());
  PointList ys;
  for (auto i : sys.y_indices) ys.push_back((*sys.x_points)[i]);
  auto gx = std::make_shared<const Eigen::MatrixXd>(sys.gram);
  Eigen::MatrixXd gy(sys.m(), sys.m());
  for (Eigen::Index i = 0; i < sys.m(); ++i)
    for (Eigen::Index j = 0; j < sys.m(); ++j)
      gy(i, j) = sys.gram(static_cast<Eigen::Index>(sys.y_indices[static_cast<std::size_t>(i)]),
                          static_cast<Eigen::Index>(sys.y_indices[static_cast<std::size_t>(j)]));
  return {VectorExpansion(sys.kernel, sys.x_points, std::move(a)),
          ScalarExpansion(sys.kernel, std::make_shared<const PointList>(std::move(ys)), std::move(b)),
          sys.anchor, gx, std::make_shared<const Eigen::MatrixXd>(std::move(gy))};
}

/// sqrt( closed integral of |a - b|^2 ds ) at fixed resolution.
template <class A, class B>
double l2_boundary_error(const Curve& curve, const A& field_a, const B& field_b,
                         std::size_t resolution) {
  const double v = quadrature(
      curve,
      [&](const Frame& f) { return (Vec2(field_a(f.point)) - Vec2(field_b(f.point))).squaredNorm(); },
      resolution);
  return std::sqrt(std::max(v, 0.0));
}

/// Same with adaptive resolution; fields are called with the Frame when they
/// accept one (useful for reference fields defined through the curve frame).
template <class A, class B>
QuadratureResult l2_boundary_error(const Curve& curve, const A& field_a, const B& field_b,
                                   const QuadratureOptions& opt) {
  auto value_of = [](const auto& fld, const Frame& f) -> Vec2 {
    if constexpr (std::is_invocable_v<decltype(fld), const Frame&>)
      return fld(f);
    else
      return fld(f.point);
  };
  QuadratureResult res = adaptive_quadrature(
      curve, [&](const Frame& f) { return (value_of(field_a, f) - value_of(field_b, f)).squaredNorm(); },
      opt);
  res.value = std::sqrt(std::max(res.value, 0.0));
  return res;
}

/// Kernel interpolant on X of per-point values (N x Cols): G c = values.
template <int Cols>
KernelExpansion<Cols> interpolate(const Kernel& kernel, std::span<const Point> points,
                                  const Eigen::Matrix<double, Eigen::Dynamic, Cols>& values) {
  if (values.rows() != static_cast<Eigen::Index>(points.size()))
    throw Error(Errc::dimension_mismatch, "one value per interpolation point is required");
  const GramMatrix g(kernel, points);
  Eigen::LLT<Eigen::MatrixXd> llt(g.entries());
  if (llt.info() != Eigen::Success)
    throw Error(Errc::singular_system, "Gram matrix is not numerically positive-definite");
  typename KernelExpansion<Cols>::Coefficients c = llt.solve(values);
  return KernelExpansion<Cols>(kernel, share_points(points), std::move(c));
}

/// 2-norm condition number sigma_max / sigma_min.
inline double condition_number(const Eigen::MatrixXd& m) {
  if (m.rows() != m.cols() || m.rows() == 0)
    throw Error(Errc::dimension_mismatch, "condition number needs a square matrix");
  const Eigen::VectorXd sv = Eigen::BDCSVD<Eigen::MatrixXd>(m).singularValues();
  const double smax = sv.maxCoeff();
  const double smin = sv.minCoeff();
  if (!(smin > 0.0)) throw Error(Errc::singular_system, "matrix is singular");
  return smax / smin;
}

}  // namespace wnf
