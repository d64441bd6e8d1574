#include <Eigen/Eigenvalues>

#include "support.hpp"
#include "wnf/kernel.hpp"
#include "wnf/rkhs_basis.hpp"

using namespace wnf;
using wnf::test::uniform;

TEST(Kernel, Examples) {
  const Kernel k(4, 1.0);
  EXPECT_EQ(k(Point(0, 0), Point(0, 0)), 1.0);
  EXPECT_EQ(k(Point(0, 0), Point(1.5, 0)), 0.0);
  EXPECT_NEAR(k(Point(0, 0), Point(0.5, 0)), 0.1875, 1e-15);
}

TEST(Kernel, ProfilesMatchClosedForms) {
  for (int p : {4, 6, 8})
    for (double sigma : {0.3, 0.7, 1.2}) {
      const Kernel k(p, sigma);
      for (int i = 0; i < 50; ++i) {
        const Point x(uniform(-1, 1), uniform(-1, 1));
        const Point y = x + Vec2(uniform(-1, 1), uniform(-1, 1)) * sigma;
        EXPECT_NEAR(k(x, y), test::kval(p, sigma, x, y), 1e-14);
      }
    }
}

TEST(Kernel, InvariantsOnRandomPairs) {
  for (int p : {4, 6, 8}) {
    const Kernel k(p, 0.8);
    for (int i = 0; i < 200; ++i) {
      const Point x(uniform(-2, 2), uniform(-2, 2));
      const Point y(uniform(-2, 2), uniform(-2, 2));
      const double v = k(x, y);
      EXPECT_EQ(v, k(y, x));
      EXPECT_GE(v, 0.0);
      EXPECT_LE(v, 1.0);
      EXPECT_EQ(k(x, x), 1.0);
      if ((x - y).norm() >= 0.8) EXPECT_EQ(v, 0.0);
    }
  }
}

TEST(Kernel, RejectsBadParameters) {
  EXPECT_ERRC(Kernel(5, 1.0), invalid_argument);
  EXPECT_ERRC(Kernel(4, 0.0), invalid_argument);
  EXPECT_ERRC(Kernel(4, -1.0), invalid_argument);
}

TEST(KernelGradient, Examples) {
  const Kernel k(4, 1.0);
  const Vec2 g = k.grad_y(Point(0, 0), Point(0.5, 0));
  EXPECT_NEAR(g.x(), -1.25, 1e-14);
  EXPECT_EQ(g.y(), 0.0);
  for (int p : {4, 6, 8}) {
    const Kernel kp(p, 0.9);
    EXPECT_EQ(kp.grad_y(Point(0.3, 0.1), Point(0.3, 0.1)), Vec2::Zero());
    EXPECT_EQ(kp.grad_y(Point(0, 0), Point(0.9, 0)), Vec2::Zero());
    EXPECT_EQ(kp.grad_y(Point(0, 0), Point(1.0, 0.5)), Vec2::Zero());
  }
}

TEST(KernelGradient, MatchesCentralDifferences) {
  for (int p : {4, 6, 8}) {
    const double sigma = 0.7;
    const Kernel k(p, sigma);
    const double step = 1e-5 * sigma;
    for (int i = 0; i < 100; ++i) {
      const Point x(uniform(-1, 1), uniform(-1, 1));
      const double r = uniform(0.05, 0.95) * sigma;
      const double a = uniform(0, two_pi);
      const Point y = x + r * Vec2(std::cos(a), std::sin(a));
      Vec2 fd;
      for (int c = 0; c < 2; ++c) {
        Point yp = y, ym = y;
        yp(c) += step;
        ym(c) -= step;
        fd(c) = (test::kval(p, sigma, x, yp) - test::kval(p, sigma, x, ym)) / (2 * step);
      }
      const Vec2 g = k.grad_y(x, y);
      EXPECT_LE((g - fd).norm(), 1e-6 * g.norm()) << "p=" << p << " s=" << r / sigma;
    }
  }
}

TEST(Gram, Examples) {
  const Kernel k(4, 1.0);
  const PointList far{{0, 0}, {2, 0}, {0, 3}};
  EXPECT_EQ(gram(k, far).entries(), Eigen::MatrixXd::Identity(3, 3));
  const PointList one{{0.2, 0.4}};
  EXPECT_EQ(gram(k, one).entries(), Eigen::MatrixXd::Ones(1, 1));
  const PointList two{{0, 0}, {0.5, 0}};
  Eigen::Matrix2d expect;
  expect << 1, 0.1875, 0.1875, 1;
  EXPECT_LE((gram(k, two).entries() - expect).norm(), 1e-15);
}

TEST(Gram, DuplicatePointsRejected) {
  const Kernel k(6, 1.0);
  const PointList dup{{0, 0}, {0.3, 0.1}, {0, 0}};
  EXPECT_ERRC(gram(k, dup), duplicate_points);
}

TEST(Gram, PositiveDefiniteOnCurvePoints) {
  const Curve c = test::ellipse();
  for (int p : {4, 6, 8})
    for (int trial = 0; trial < 20; ++trial) {
      const int n = 2 + trial % 11;
      PointList pts;
      for (int i = 0; i < n; ++i) pts.push_back(c.position(uniform(0, two_pi)));
      const GramMatrix g(Kernel(p, 1.2), pts);
      EXPECT_EQ((g.entries() - g.entries().transpose()).norm(), 0.0);
      const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(g.entries());
      EXPECT_GT(es.eigenvalues().minCoeff(), 0.0) << "p=" << p << " n=" << n;
    }
}

TEST(Gram, FarPointsAreWellConditioned) {
  const PointList far{{0, 0}, {2, 0}, {0, 3}, {5, 5}};
  EXPECT_NEAR(condition_number(gram(Kernel(8, 1.0), far).entries()), 1.0, 1e-14);
}

TEST(RkhsInner, Examples) {
  const Kernel k(4, 1.0);
  const PointList two{{0, 0}, {0.5, 0}};
  const GramMatrix g(k, two);
  const Eigen::Vector2d e1(1, 0), e2(0, 1);
  EXPECT_EQ(rkhs_inner(g, e1, e1), 1.0);
  EXPECT_NEAR(rkhs_inner(g, e1, e2), 0.1875, 1e-15);
  const PointList far{{0, 0}, {3, 0}};
  EXPECT_EQ(rkhs_inner(GramMatrix(k, far), e1, e2), 0.0);
}

TEST(RkhsInner, VectorFieldsSumComponents) {
  const Kernel k(4, 1.0);
  const PointList two{{0, 0}, {0.5, 0}};
  const GramMatrix g(k, two);
  Eigen::VectorXd a(4), b(4);
  a << 1, 0, 0, 2;  // component 1 at x1, component 2 at x2
  b << 0, 1, 1, 0;
  EXPECT_NEAR(rkhs_inner(g, a, b), 0.1875 + 2 * 0.1875, 1e-15);
  EXPECT_ERRC(rkhs_inner(g, Eigen::VectorXd::Ones(3), Eigen::VectorXd::Ones(3)),
              dimension_mismatch);
  EXPECT_ERRC(rkhs_inner(g, Eigen::VectorXd::Ones(2), Eigen::VectorXd::Ones(4)),
              dimension_mismatch);
}

TEST(RkhsInner, PositiveForNonzeroCoefficients) {
  const Curve c = test::flower();
  PointList pts;
  for (int i = 0; i < 10; ++i) pts.push_back(c.position(two_pi * i / 10.0));
  const GramMatrix g(Kernel(6, 1.5), pts);
  EXPECT_EQ(rkhs_inner(g, Eigen::VectorXd::Zero(10), Eigen::VectorXd::Zero(10)), 0.0);
  for (int t = 0; t < 50; ++t) {
    Eigen::VectorXd a(10);
    for (int i = 0; i < 10; ++i) a(i) = uniform(-1, 1);
    EXPECT_GT(rkhs_inner(g, a, a), 0.0);
  }
}
