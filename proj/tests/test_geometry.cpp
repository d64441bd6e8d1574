#include <cmath>
#include <numbers>

#include "support.hpp"
#include "wnf/geometry.hpp"
#include "wnf/rkhs_basis.hpp"

using namespace wnf;
using std::numbers::pi;
using test::uniform;

namespace {

Curve stadium() { return Curve(AnalyticCurve(Stadium{{0.3, -0.2}, 2.0, 0.5})); }

/// Small smooth bump displacement centred at c.
std::shared_ptr<const DisplacementField> bump(Point c, Vec2 amp, double sigma = 1.5) {
  VectorExpansion::Coefficients a(1, 2);
  a.row(0) = amp.transpose();
  return std::make_shared<const DisplacementField>(Kernel(8, sigma), share_points(PointList{c}), a);
}

std::vector<Curve> all_curves() {
  return {test::circle(), test::circle(2.0, {0.5, -1.0}), test::ellipse(), test::flower(), stadium(),
          test::ellipse().deformed(bump({1.4, 0.0}, {0.05, 0.02}))};
}

}  // namespace

TEST(Frame, UnitTangentAndNormalOnEveryCurve) {
  for (const Curve& c : all_curves())
    for (int q = 0; q < 200; ++q) {
      const Frame f = c.frame(uniform(0, two_pi));
      EXPECT_NEAR(f.tangent.norm(), 1.0, 1e-12);
      EXPECT_NEAR(f.normal.norm(), 1.0, 1e-12);
      EXPECT_NEAR(f.tangent.dot(f.normal), 0.0, 1e-12);
      EXPECT_NEAR(f.normal.x(), f.tangent.y(), 0.0);
    }
}

TEST(Frame, SignedAreaIsPositive) {
  for (const Curve& c : all_curves()) EXPECT_GT(c.signed_area(), 0.0);
  EXPECT_NEAR(test::ellipse().signed_area(), pi * 1.4 * 0.8, 1e-12);
  EXPECT_NEAR(stadium().signed_area(1 << 16), 4 * 2.0 * 0.5 + pi * 0.25, 1e-6);
}

TEST(Frame, NormalPointsOutward) {
  const Curve c = test::ellipse();
  for (int q = 0; q < 64; ++q) {
    const Frame f = c.frame(two_pi * q / 64);
    EXPECT_GT(f.point.dot(f.normal), 0.0);
  }
  const Frame f = test::circle().frame(0.0);
  EXPECT_NEAR((f.normal - Vec2(1, 0)).norm(), 0.0, 1e-15);
  EXPECT_NEAR((f.tangent - Vec2(0, 1)).norm(), 0.0, 1e-15);
}

TEST(Frame, ClockwiseCurveRejected) {
  EXPECT_ERRC(Curve(AnalyticCurve(Ellipse{{0, 0}, -1.0, 1.0})), invalid_argument);
  EXPECT_ERRC(Curve(AnalyticCurve(Stadium{{0, 0}, 1.0, 0.0})), invalid_argument);
}

TEST(Curvature, Examples) {
  for (double phi : {0.0, 0.7, 3.0}) {
    EXPECT_NEAR(test::circle().curvature(phi), 1.0, 1e-14);
    EXPECT_NEAR(test::circle(2.5).curvature(phi), 0.4, 1e-14);
  }
  EXPECT_NEAR(test::ellipse().curvature(0.0), 2.1875, 1e-13);
  const double phi = 1.1, a = 1.4, b = 0.8;
  const double s = std::sin(phi), c = std::cos(phi);
  EXPECT_NEAR(test::ellipse().curvature(phi), a * b / std::pow(a * a * s * s + b * b * c * c, 1.5),
              1e-13);
}

TEST(Curvature, StadiumPieces) {
  const Curve c = stadium();
  EXPECT_NEAR(c.curvature(pi / 2), 0.0, 1e-14);       // middle of the top side
  EXPECT_NEAR(c.curvature(3 * pi / 2), 0.0, 1e-14);   // middle of the bottom side
  EXPECT_NEAR(c.curvature(0.0), 2.0, 1e-12);          // rightmost point
  EXPECT_NEAR(c.curvature(pi), 2.0, 1e-12);           // leftmost point
}

TEST(Curvature, DeformedCurveUnsupported) {
  const Curve d = test::circle().deformed(bump({1, 0}, {0.01, 0}));
  EXPECT_FALSE(d.is_analytic());
  EXPECT_ERRC((void)d.curvature(0.3), unsupported_curve);
}

TEST(Quadrature, Perimeters) {
  auto one = [](double) { return 1.0; };
  EXPECT_NEAR(quadrature(test::circle(), one, 64), two_pi, 1e-12);
  EXPECT_NEAR(quadrature(test::circle(2.0), one, 64), 2 * two_pi, 1e-12);
  const double coarse = quadrature(test::ellipse(), one, 1 << 13);
  const double fine = quadrature(test::ellipse(), one, 1 << 15);
  EXPECT_LE(std::abs(coarse - fine), 1e-10 * fine);
  const double e = std::sqrt(1 - 0.8 * 0.8 / (1.4 * 1.4));
  EXPECT_NEAR(fine, 4 * 1.4 * std::comp_ellint_2(e), 1e-12);
}

TEST(Quadrature, TrigPolynomialsExactOnCircle) {
  const std::size_t q = 32;
  for (int k = 0; k < 16; ++k)
    for (int m = 0; m < 16; ++m) {
      const double v = quadrature(
          test::circle(), [&](double phi) { return std::cos(k * phi) * std::sin(m * phi + 0.25); }, q);
      double expect = 0.0;
      if (k == m) expect = (k == 0 ? two_pi : pi) * std::sin(0.25);
      EXPECT_NEAR(v, expect, 1e-12) << k << ',' << m;
    }
}

TEST(Quadrature, FrameIntegrandAndResolutionCheck) {
  const double v = quadrature(
      test::circle(1.5), [](const Frame& f) { return f.point.dot(f.normal); }, 128);
  EXPECT_NEAR(v, 1.5 * 1.5 * two_pi, 1e-12);
  EXPECT_ERRC(quadrature(test::circle(), [](double) { return 1.0; }, 3), invalid_argument);
}

TEST(Quadrature, AdaptiveConverges) {
  const QuadratureResult r = adaptive_quadrature(test::flower(), [](double) { return 1.0; });
  EXPECT_TRUE(r.converged);
  EXPECT_GE(r.resolution, std::size_t{1} << 14);
  EXPECT_NEAR(r.value, quadrature(test::flower(), [](double) { return 1.0; }, 1 << 17), 1e-9);
}

TEST(Collocation, UniformCircleN4) {
  const CollocationSet s = uniform_collocation(test::circle(), 4);
  const PointList expect{{0, 1}, {-1, 0}, {0, -1}, {1, 0}};
  ASSERT_EQ(s.size(), 4u);
  for (int i = 0; i < 4; ++i) EXPECT_LE((s.points()[i] - expect[i]).norm(), 1e-15);
  EXPECT_NEAR(s.params()[3], two_pi, 0.0);
  EXPECT_ERRC(uniform_collocation(test::circle(), 3), invalid_argument);
}

TEST(Collocation, DuplicateParametersRejected) {
  EXPECT_ERRC(CollocationSet(test::circle(), {0.0, 1.0, two_pi}), duplicate_points);
}

TEST(FillDistance, CircleExamples) {
  for (std::size_t n : {4u, 16u, 64u, 256u}) {
    const CollocationSet s = uniform_collocation(test::circle(), n);
    EXPECT_NEAR(s.fill_distance(), pi / static_cast<double>(n), 1e-3 * pi / static_cast<double>(n));
    EXPECT_NEAR(s.euclidean_fill_distance(), 2 * std::sin(pi / (2.0 * static_cast<double>(n))),
                1e-6 / static_cast<double>(n));
  }
  EXPECT_NEAR(CollocationSet(test::circle(), {0.3}).fill_distance(), pi, 1e-2 * pi);
  EXPECT_ERRC((void)uniform_collocation(test::circle(), 16).fill_distance(64), invalid_argument);
}

TEST(FillDistance, MatchesSortedGapOracleOnCircle) {
  for (int trial = 0; trial < 10; ++trial) {
    std::vector<double> params;
    for (int i = 0; i < 12; ++i) params.push_back(uniform(0, two_pi));
    const CollocationSet s(test::circle(), params);
    std::sort(params.begin(), params.end());
    double gap = params.front() + two_pi - params.back();
    for (std::size_t i = 1; i < params.size(); ++i) gap = std::max(gap, params[i] - params[i - 1]);
    EXPECT_NEAR(s.fill_distance(), gap / 2, 2 * two_pi / default_fill_samples);
  }
}

TEST(FillDistance, EllipseMatchesBruteForce) {
  const Curve c = test::ellipse();
  const CollocationSet s = uniform_collocation(c, 16);
  // independent arc length by fine midpoint rule, then nearest-point search
  const int grid = 1 << 16;
  std::vector<double> arc(grid + 1, 0.0);
  for (int q = 0; q < grid; ++q) {
    const double phi = two_pi * (q + 0.5) / grid;
    arc[q + 1] = arc[q] + std::hypot(1.4 * std::sin(phi), 0.8 * std::cos(phi)) * two_pi / grid;
  }
  const double length = arc[grid];
  std::vector<double> xs;
  for (double phi : s.params()) xs.push_back(arc[static_cast<int>(std::lround(phi / two_pi * grid)) % grid]);
  double worst = 0.0;
  for (int q = 0; q < grid; ++q) {
    double best = length;
    for (double x : xs) {
      const double d = std::abs(arc[q] - x);
      best = std::min(best, std::min(d, length - d));
    }
    worst = std::max(worst, best);
  }
  EXPECT_NEAR(s.fill_distance(), worst, 1e-3 * worst);
  for (std::size_t i = 0; i < s.size(); ++i)
    for (std::size_t j = 0; j < i; ++j) EXPECT_GT((s.points()[i] - s.points()[j]).norm(), 1e-3);
}

TEST(FillDistance, HalvesUnderDoubling) {
  for (const Curve& c : {test::ellipse(), test::flower(), stadium()}) {
    // uniform in phi, not in arc length: coarse grids on a curve of varying speed are pre-asymptotic
    double prev = uniform_collocation(c, 32).fill_distance();
    for (std::size_t n = 64; n <= 1024; n *= 2) {
      const double h = uniform_collocation(c, n).fill_distance();
      EXPECT_LT(h, prev * 1.05);
      EXPECT_NEAR(h / prev, 0.5, 0.05 * 0.5) << n;
      prev = h;
    }
  }
}

TEST(Stadium, ArcLengthParametrisation) {
  const Curve c = stadium();
  const double perimeter = 4 * 2.0 + two_pi * 0.5;
  for (int q = 0; q < 100; ++q) {
    const double phi = uniform(0, two_pi);
    EXPECT_NEAR(c.frame(phi).speed, perimeter / two_pi, 1e-13);
  }
  EXPECT_NEAR(quadrature(c, [](double) { return 1.0; }, 1024), perimeter, 1e-12);
  const Frame top = c.frame(pi / 2);
  EXPECT_LE((top.point - Point(0.3, 0.3)).norm(), 1e-14);
  EXPECT_LE((top.normal - Vec2(0, 1)).norm(), 1e-14);
  const Frame right = c.frame(0.0);
  EXPECT_LE((right.point - Point(2.8, -0.2)).norm(), 1e-14);
}

TEST(Stadium, DerivativesMatchFiniteDifferences) {
  const AnalyticCurve c(Stadium{{0.0, 0.0}, 1.0, 0.7});
  const double step = 1e-6;
  for (int q = 0; q < 200; ++q) {
    const double phi = uniform(0, two_pi);
    const Vec2 fd = (c.position(phi + step) - c.position(phi - step)) / (2 * step);
    const Vec2 fd2 = (c.derivative(phi + step) - c.derivative(phi - step)) / (2 * step);
    const Vec2 d = c.derivative(phi);
    EXPECT_LE((fd - d).norm(), 1e-6 * d.norm());
    // second derivative is discontinuous at the joints; skip those stencils
    if ((c.second_derivative(phi + step) - c.second_derivative(phi - step)).norm() < 1e-3)
      EXPECT_LE((fd2 - c.second_derivative(phi)).norm(), 1e-5 * (1 + c.second_derivative(phi).norm()));
  }
}

TEST(DeformedCurve, TangentMatchesFiniteDifferences) {
  auto g1 = bump({1.4, 0.0}, {0.05, 0.03});
  auto g2 = bump({0.0, 0.8}, {-0.02, 0.04}, 1.0);
  const Curve d = test::ellipse().deformed(g1).deformed(g2);
  EXPECT_EQ(d.update_count(), 2u);
  const double step = 1e-6;
  for (int q = 0; q < 100; ++q) {
    const double phi = uniform(0, two_pi);
    const Vec2 fd = (d.position(phi + step) - d.position(phi - step)) / (2 * step);
    const Frame f = d.frame(phi);
    EXPECT_LE((fd - f.speed * f.tangent).norm(), 1e-6 * fd.norm());
    // composed map by hand
    const Point base = test::ellipse().position(phi);
    const Point once = base + (*g1)(base);
    EXPECT_LE((d.position(phi) - (once + (*g2)(once))).norm(), 1e-15);
  }
}

TEST(Transport, ZeroDisplacementKeepsSet) {
  const CollocationSet s = uniform_collocation(test::flower(), 32);
  const CollocationSet t = transport(s, bump({0, 0}, {0, 0}));
  ASSERT_EQ(t.size(), s.size());
  EXPECT_EQ(t.params(), s.params());
  for (std::size_t i = 0; i < s.size(); ++i) {
    EXPECT_EQ(t.points()[i], s.points()[i]);
    EXPECT_LE((t.normals()[i] - s.normals()[i]).norm(), 1e-15);
  }
  EXPECT_NEAR(t.fill_distance(), s.fill_distance(), 1e-14);
}

TEST(Transport, NearlyConstantFieldShiftsRigidly) {
  const CollocationSet s = uniform_collocation(test::ellipse(), 32);
  const Vec2 shift(0.1, -0.05);
  const CollocationSet t = transport(s, bump({0, 0}, shift, 1e4));
  for (std::size_t i = 0; i < s.size(); ++i) {
    EXPECT_LE((t.points()[i] - s.points()[i] - shift).norm(), 1e-6);
    EXPECT_LE((t.tangents()[i] - s.tangents()[i]).norm(), 1e-6);
    EXPECT_LE((t.normals()[i] - s.normals()[i]).norm(), 1e-6);
  }
  EXPECT_NEAR(t.fill_distance(), s.fill_distance(), 1e-5);
}
