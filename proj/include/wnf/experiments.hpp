#pragma once

// Convergence and conditioning studies over N = 2^k collocation levels.

#include <Eigen/Dense>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "wnf/error.hpp"
#include "wnf/geometry.hpp"
#include "wnf/kernel.hpp"
#include "wnf/newton.hpp"
#include "wnf/rkhs_basis.hpp"
#include "wnf/shape_calculus.hpp"

namespace wnf {

inline constexpr std::string_view tool_version = "0.3.0";

// ---------------------------------------------------------------- levels

/// Powers of two 2^min_exp, ..., 2^max_exp.
struct LevelRange {
  int min_exp = 4;
  int max_exp = 8;

  [[nodiscard]] std::vector<std::size_t> sizes() const {
    std::vector<std::size_t> out;
    for (int k = min_exp; k <= max_exp; ++k) out.push_back(std::size_t{1} << k);
    return out;
  }

  /// "4..10" or a single exponent "6".
  static LevelRange parse(std::string_view text) {
    auto to_int = [&](std::string_view s) {
      int v = 0;
      const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
      if (ec != std::errc{} || ptr != s.data() + s.size())
        throw Error(Errc::invalid_argument, "bad level exponent '" + std::string(s) + "'");
      return v;
    };
    LevelRange r;
    if (const auto dots = text.find(".."); dots != std::string_view::npos) {
      r.min_exp = to_int(text.substr(0, dots));
      r.max_exp = to_int(text.substr(dots + 2));
    } else {
      r.min_exp = r.max_exp = to_int(text);
    }
    r.validate();
    return r;
  }

  void validate() const {
    if (min_exp < 2 || max_exp > 20 || min_exp > max_exp)
      throw Error(Errc::invalid_argument, "levels must satisfy 2 <= min <= max <= 20");
  }
};

// ---------------------------------------------------------------- fitting

struct RatePoint {
  double h = 0.0;
  double error = 0.0;
  bool failed = false;
};

/// Levels with h <= min_h are treated as saturated.
struct RateGuard {
  double min_h = 0.0;
};

/// Guard used by the Newton-direction study: k8 is fitted on h > 2^-4 only.
inline RateGuard newton_direction_guard(int order) {
  return {order == 8 ? 0.0625 : 0.0};
}

/// Points are ordered from coarse to fine. A point is saturated when it failed,
/// fails the guard, or its error exceeds the last unsaturated error before it.
/// Exact zeros (the reference level) are neither saturated nor fitted.
inline std::vector<bool> saturation_flags(std::span<const RatePoint> pts, const RateGuard& guard) {
  std::vector<bool> sat(pts.size(), false);
  std::optional<double> last;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    const RatePoint& p = pts[i];
    if (p.failed || !std::isfinite(p.error) || p.error < 0.0 || !(p.h > 0.0) ||
        p.h <= guard.min_h) {
      sat[i] = true;
      continue;
    }
    if (p.error == 0.0) continue;
    if (last && p.error > *last) {
      sat[i] = true;
      continue;
    }
    last = p.error;
  }
  return sat;
}

struct RateFit {
  double rate = 0.0;
  double intercept = 0.0;
  std::size_t used = 0;
  std::vector<bool> saturated;
};

/// Ordinary least squares slope of log2 e against log2 h on unsaturated points.
inline RateFit fit_rate(std::span<const RatePoint> pts, const RateGuard& guard = {}) {
  RateFit fit;
  fit.saturated = saturation_flags(pts, guard);
  std::vector<double> xs, ys;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    if (fit.saturated[i] || !(pts[i].error > 0.0)) continue;
    xs.push_back(std::log2(pts[i].h));
    ys.push_back(std::log2(pts[i].error));
  }
  if (xs.size() < 2)
    throw Error(Errc::insufficient_data, "rate fit needs at least two unsaturated levels");
  const auto n = static_cast<double>(xs.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    mx += xs[i];
    my += ys[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxx += (xs[i] - mx) * (xs[i] - mx);
    sxy += (xs[i] - mx) * (ys[i] - my);
  }
  if (!(sxx > 0.0)) throw Error(Errc::insufficient_data, "rate fit needs distinct h values");
  fit.rate = sxy / sxx;
  fit.intercept = my - fit.rate * mx;
  fit.used = xs.size();
  return fit;
}

// ---------------------------------------------------------------- studies

inline Curve reference_ellipse() { return Curve(AnalyticCurve(Ellipse{{0.0, 0.0}, 1.4, 0.8})); }
inline Curve newton_start_curve() { return Curve(AnalyticCurve(Ellipse{{0.2, 0.15}, 1.15, 0.9})); }

struct ConvergenceRecord {
  std::size_t n = 0;
  double h = 0.0;  // Euclidean fill distance
  double error = std::numeric_limits<double>::quiet_NaN();
  std::string norm = "L2";
  bool saturated = false;
  bool reference = false;
  std::size_t quad = 0;  // nodes used by the error quadrature
  std::string failure;
};

struct ConvergenceStudy {
  std::string experiment;
  int p = 0;
  double sigma = 0.0;
  std::vector<ConvergenceRecord> records;
  std::optional<double> rate;
  std::string fit_note;

  [[nodiscard]] bool partial() const {
    for (const auto& r : records)
      if (!r.failure.empty()) return true;
    return false;
  }
};

namespace detail {
inline void fit_study(ConvergenceStudy& study, const RateGuard& guard) {
  std::vector<RatePoint> pts;
  for (const auto& r : study.records) pts.push_back({r.h, r.error, !r.failure.empty()});
  try {
    const RateFit fit = fit_rate(pts, guard);
    study.rate = fit.rate;
    for (std::size_t i = 0; i < pts.size(); ++i) study.records[i].saturated = fit.saturated[i];
  } catch (const Error& e) {
    const auto flags = saturation_flags(pts, guard);
    for (std::size_t i = 0; i < pts.size(); ++i) study.records[i].saturated = flags[i];
    study.fit_note = e.what();
  }
}
}  // namespace detail

struct ConvRxConfig {
  int p = 4;
  double sigma = 1.2;
  Curve curve = reference_ellipse();
  LevelRange levels{4, 10};
  double anchor_phi = 0.0;
  QuadratureOptions quad{};
  RateGuard guard{};
};

/// r^h at gamma(anchor_phi) per level against the finest level.
inline ConvergenceStudy conv_rx(const ConvRxConfig& cfg) {
  cfg.levels.validate();
  const Kernel kernel(cfg.p, cfg.sigma);
  const Anchor anchor = Anchor::on(cfg.curve, cfg.anchor_phi);
  const auto sizes = cfg.levels.sizes();

  ConvergenceStudy study{"conv-rx", cfg.p, cfg.sigma, {}, std::nullopt, {}};
  std::optional<VectorExpansion> ref;
  std::string ref_failure;
  ConvergenceRecord ref_row;
  ref_row.n = sizes.back();
  ref_row.reference = true;
  try {
    const CollocationSet set = uniform_collocation(cfg.curve, sizes.back());
    ref_row.h = set.euclidean_fill_distance();
    ref = SaddleSolver(kernel, set, YSelection::all()).solve(anchor).r();
    ref_row.error = 0.0;
  } catch (const Error& e) {
    ref_failure = e.what();
    ref_row.failure = ref_failure;
  }

  for (std::size_t i = 0; i + 1 < sizes.size(); ++i) {
    ConvergenceRecord row;
    row.n = sizes[i];
    try {
      const CollocationSet set = uniform_collocation(cfg.curve, sizes[i]);
      row.h = set.euclidean_fill_distance();
      if (!ref) throw Error(Errc::singular_system, "reference level failed: " + ref_failure);
      const WeaklyNormalField r = SaddleSolver(kernel, set, YSelection::all()).solve(anchor);
      const QuadratureResult e = l2_boundary_error(cfg.curve, r.r(), *ref, cfg.quad);
      row.error = e.value;
      row.quad = e.resolution;
    } catch (const Error& e) {
      row.failure = e.what();
    }
    study.records.push_back(std::move(row));
  }
  study.records.push_back(std::move(ref_row));
  detail::fit_study(study, cfg.guard);
  return study;
}

struct ConvNewtonDirConfig {
  int p = 4;
  double sigma = 0.7;
  Curve curve = reference_ellipse();
  ScalarField f = unit_disc_integrand();
  LevelRange levels{4, 8};
  bool curvature_term = true;
  std::size_t quad = std::size_t{1} << 13;  // nodes for H and b
  QuadratureOptions error_quad{};
  std::optional<RateGuard> guard;  // defaults to newton_direction_guard(p)
  double pivot_tolerance = default_pivot_tolerance;
};

/// Errors below this are treated as an exactly representable (zero) field.
inline constexpr double degenerate_error = 1e-10;

inline ConvergenceStudy conv_newton_dir(const ConvNewtonDirConfig& cfg) {
  cfg.levels.validate();
  const Kernel kernel(cfg.p, cfg.sigma);
  const ExactNewtonField exact = exact_newton_field(cfg.curve, cfg.f, cfg.curvature_term);

  ConvergenceStudy study{"conv-newton-dir", cfg.p, cfg.sigma, {}, std::nullopt, {}};
  for (const std::size_t n : cfg.levels.sizes()) {
    ConvergenceRecord row;
    row.n = n;
    try {
      const CollocationSet set = uniform_collocation(cfg.curve, n);
      row.h = set.euclidean_fill_distance();
      const BasisSet basis = SaddleSolver(kernel, set, YSelection::all()).collocation_basis(set);
      const NewtonDirection dir = newton_direction(cfg.curve, cfg.f, basis, cfg.curvature_term,
                                                   cfg.quad, cfg.pivot_tolerance);
      const QuadratureResult e = l2_boundary_error(cfg.curve, *dir.update, exact, cfg.error_quad);
      row.error = e.value;
      row.quad = e.resolution;
    } catch (const Error& e) {
      row.failure = e.what();
    }
    study.records.push_back(std::move(row));
  }

  bool degenerate = true;
  for (const auto& r : study.records)
    if (r.failure.empty() && !(r.error <= degenerate_error)) degenerate = false;
  if (degenerate) {
    study.fit_note = "fit skipped: all errors below 1e-10";
    return study;
  }
  detail::fit_study(study, cfg.guard.value_or(newton_direction_guard(cfg.p)));
  return study;
}

// ---------------------------------------------------------------- conditioning

struct CondConfig {
  int p = 4;
  std::vector<double> sigmas{0.4, 0.5, 0.6, 0.7, 0.8, 1.0, 1.2};
  LevelRange levels{6, 8};
  Curve curve = reference_ellipse();
  ScalarField f = unit_disc_integrand();
  bool curvature_term = true;
  std::size_t quad = std::size_t{1} << 13;
  double saturation = 1e14;  // estimates above this count as saturated
};

struct CondRecord {
  std::string matrix;  // "saddle" or "hessian"
  int p = 0;
  double sigma = 0.0;
  std::size_t n = 0;
  double h = 0.0;
  double cond = std::numeric_limits<double>::quiet_NaN();
  bool saturated = false;
  std::string failure;
};

/// log cond = c + h_exponent log h [+ sigma_exponent log sigma].
struct PowerLaw {
  double intercept = 0.0;
  double h_exponent = 0.0;
  std::optional<double> sigma_exponent;
  std::size_t used = 0;
};

struct CondStudy {
  int p = 0;
  std::vector<CondRecord> records;
  std::optional<PowerLaw> saddle;
  std::optional<PowerLaw> hessian;
  std::string fit_note;

  [[nodiscard]] bool partial() const {
    for (const auto& r : records)
      if (!r.failure.empty()) return true;
    return false;
  }
};

inline PowerLaw fit_power_law(std::span<const CondRecord> rows, std::string_view matrix) {
  std::vector<const CondRecord*> use;
  for (const auto& r : rows)
    if (r.matrix == matrix && !r.saturated && r.failure.empty()) use.push_back(&r);
  bool several_sigma = false;
  for (const auto* r : use)
    if (r->sigma != use.front()->sigma) several_sigma = true;
  const Eigen::Index cols = several_sigma ? 3 : 2;
  if (static_cast<Eigen::Index>(use.size()) < cols + 1)
    throw Error(Errc::insufficient_data, "too few unsaturated rows for a power-law fit");
  Eigen::MatrixXd a(static_cast<Eigen::Index>(use.size()), cols);
  Eigen::VectorXd y(a.rows());
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    const CondRecord& r = *use[static_cast<std::size_t>(i)];
    a(i, 0) = 1.0;
    a(i, 1) = std::log(r.h);
    if (several_sigma) a(i, 2) = std::log(r.sigma);
    y(i) = std::log(r.cond);
  }
  const Eigen::VectorXd c = a.colPivHouseholderQr().solve(y);
  PowerLaw out{c(0), c(1), std::nullopt, use.size()};
  if (several_sigma) out.sigma_exponent = c(2);
  return out;
}

inline CondStudy cond_study(const CondConfig& cfg) {
  cfg.levels.validate();
  if (cfg.sigmas.empty()) throw Error(Errc::invalid_argument, "cond study needs at least one sigma");
  CondStudy study;
  study.p = cfg.p;
  for (const double sigma : cfg.sigmas) {
    const Kernel kernel(cfg.p, sigma);
    for (const std::size_t n : cfg.levels.sizes()) {
      CondRecord saddle{"saddle", cfg.p, sigma, n};
      CondRecord hess{"hessian", cfg.p, sigma, n};
      auto estimate = [&](CondRecord& row, const Eigen::MatrixXd& m) {
        try {
          row.cond = condition_number(m);
          row.saturated = !(row.cond <= cfg.saturation);
        } catch (const Error&) {
          row.cond = std::numeric_limits<double>::infinity();
          row.saturated = true;
        }
      };
      try {
        const CollocationSet set = uniform_collocation(cfg.curve, n);
        saddle.h = hess.h = set.euclidean_fill_distance();
        const SaddleSolver solver(kernel, set, YSelection::all());
        estimate(saddle, solver.matrix());
        const BasisSet basis = solver.collocation_basis(set);
        estimate(hess,
                 assemble_newton_system(cfg.curve, cfg.f, basis, cfg.curvature_term, cfg.quad).hessian);
      } catch (const Error& e) {
        for (CondRecord* r : {&saddle, &hess}) {
          if (std::isnan(r->cond)) {
            r->failure = e.what();
            r->saturated = true;
          }
        }
      }
      study.records.push_back(std::move(saddle));
      study.records.push_back(std::move(hess));
    }
  }
  std::string notes;
  try {
    study.saddle = fit_power_law(study.records, "saddle");
  } catch (const Error& e) {
    notes += std::string("saddle: ") + e.what();
  }
  try {
    study.hessian = fit_power_law(study.records, "hessian");
  } catch (const Error& e) {
    if (!notes.empty()) notes += "; ";
    notes += std::string("hessian: ") + e.what();
  }
  study.fit_note = notes;
  return study;
}

// ---------------------------------------------------------------- newton runs

/// Centred circle test: mean radius after each step sqrt(|area| / pi).
inline double effective_radius(const Curve& c, std::size_t samples = 8192) {
  return std::sqrt(std::abs(c.signed_area(samples)) / std::numbers::pi);
}

/// max_phi | |gamma(phi) - center| - radius | on a uniform grid.
inline double radial_deviation(const Curve& c, double radius = 1.0,
                               const Point& center = Point::Zero(), std::size_t samples = 4096) {
  double dev = 0.0;
  for (std::size_t q = 0; q < samples; ++q) {
    const double phi = two_pi * static_cast<double>(q) / static_cast<double>(samples);
    dev = std::max(dev, std::abs((c.position(phi) - center).norm() - radius));
  }
  return dev;
}

}  // namespace wnf
