#pragma once

#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "wnf/geometry.hpp"
#include "wnf/kernel.hpp"

namespace wnf::test {

inline Curve ellipse() { return Curve(AnalyticCurve(Ellipse{{0.0, 0.0}, 1.4, 0.8})); }
inline Curve flower() { return Curve(AnalyticCurve(Flower{1.4, 0.8, 0.3})); }
inline Curve circle(double r = 1.0, Point c = Point::Zero()) {
  return Curve(AnalyticCurve::circle(r, c));
}

inline std::mt19937_64& rng() {
  static std::mt19937_64 gen(20260214);
  return gen;
}

inline double uniform(double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng());
}

/// Hand-coded Wendland profiles, independent of the library.
inline double wendland(int p, double s) {
  if (s >= 1.0) return 0.0;
  const double t = 1.0 - s;
  if (p == 4) return std::pow(t, 4) * (4 * s + 1);
  if (p == 6) return std::pow(t, 6) * (35 * s * s + 18 * s + 3) / 3.0;
  return std::pow(t, 8) * (32 * s * s * s + 25 * s * s + 8 * s + 1);
}

inline double kval(int p, double sigma, const Point& x, const Point& y) {
  return wendland(p, (x - y).norm() / sigma);
}

}  // namespace wnf::test

#define EXPECT_ERRC(stmt, errc)                                   \
  do {                                                            \
    try {                                                         \
      stmt;                                                       \
      ADD_FAILURE() << "expected wnf::Error " #errc;              \
    } catch (const ::wnf::Error& e) {                             \
      EXPECT_EQ(e.code(), ::wnf::Errc::errc) << e.what();         \
    }                                                             \
  } while (0)
