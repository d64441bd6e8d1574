#pragma once

// Shape Newton method discretised over the span of weakly-normal basis fields.
//
// At step l the update g_l = sum_i c_i r_i solves H c = b with
//   H_ij = D^2J(r_i . nu, r_j . nu),  b_j = -DJ(r_j . nu),
// the domain moves by F_l(x) = x + g_l(x) and the basis is rebuilt on the new
// curve at the images F_l(x_i) of the collocation points.

#include <Eigen/Dense>

#include <cmath>
#include <limits>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "wnf/error.hpp"
#include "wnf/geometry.hpp"
#include "wnf/kernel.hpp"
#include "wnf/rkhs_basis.hpp"
#include "wnf/shape_calculus.hpp"

namespace wnf {

// LDL^T pivots of a numerically semidefinite H scatter around zero at about
// sqrt(eps) relative; anything more negative is a genuine loss of ellipticity.
inline const double default_pivot_tolerance = std::sqrt(std::numeric_limits<double>::epsilon());

struct NewtonConfig {
  Kernel kernel{4, 0.7};
  std::size_t n = 64;
  int max_steps = 5;
  bool curvature_term = false;
  std::size_t quad = std::size_t{1} << 13;
  double early_stop = 1e-13;
  /// Relative size of a negative LDL^T pivot that is still treated as round-off.
  double pivot_tolerance = default_pivot_tolerance;
  TangentPlacement placement = TangentPlacement::constraint_point;

  void validate() const {
    if (n < 4) throw Error(Errc::invalid_argument, "Newton needs N >= 4");
    if (max_steps < 1) throw Error(Errc::invalid_argument, "Newton needs at least one step");
    if (quad < 4) throw Error(Errc::invalid_argument, "quadrature needs Q >= 4");
  }
};

struct NewtonDirection {
  Eigen::VectorXd coefficients;
  std::shared_ptr<const DisplacementField> update;
  Eigen::MatrixXd hessian;
  Eigen::VectorXd rhs;
};

/// Normal components r_j(y_q) . nu(y_q) of every basis field at the sample nodes (Q x K).
inline Eigen::MatrixXd normal_components(const BasisSet& basis, const CurveSamples& samples) {
  const Eigen::MatrixXd k = kernel_matrix(basis.kernel, samples.points, *basis.x_points);
  Eigen::MatrixXd r1 = k * basis.alpha1;
  const Eigen::MatrixXd r2 = k * basis.alpha2;
  for (Eigen::Index q = 0; q < r1.rows(); ++q) {
    const Vec2& nu = samples.normals[static_cast<std::size_t>(q)];
    r1.row(q) = nu.x() * r1.row(q) + nu.y() * r2.row(q);
  }
  return r1;
}

struct NewtonSystem {
  Eigen::MatrixXd hessian;
  Eigen::VectorXd rhs;
};

/// H and b of the Newton equation over the basis span, by Q-node quadrature.
inline NewtonSystem assemble_newton_system(const Curve& curve, const ScalarField& f,
                                           const BasisSet& basis, bool curvature_term,
                                           std::size_t resolution) {
  if (curvature_term && !curve.is_analytic())
    throw Error(Errc::unsupported_curve, "curvature term requested on a deformed curve");
  const CurveSamples samples = curve.sample(resolution);
  const Eigen::MatrixXd rn = normal_components(basis, samples);
  Eigen::VectorXd w(rn.rows());
  Eigen::VectorXd fw(rn.rows());
  for (std::size_t q = 0; q < samples.size(); ++q) {
    const Frame fr = samples.frame(q);
    const double ds = fr.speed * samples.weight();
    w(static_cast<Eigen::Index>(q)) = hessian_weight(curve, f, fr, curvature_term) * ds;
    fw(static_cast<Eigen::Index>(q)) = f.value(fr.point) * ds;
  }
  NewtonSystem sys;
  sys.hessian = rn.transpose() * w.asDiagonal() * rn;
  sys.hessian = 0.5 * (sys.hessian + sys.hessian.transpose()).eval();
  sys.rhs = -(rn.transpose() * fw);
  return sys;
}

inline NewtonDirection newton_direction(const Curve& curve, const ScalarField& f,
                                        const BasisSet& basis, bool curvature_term,
                                        std::size_t resolution,
                                        double pivot_tolerance = default_pivot_tolerance) {
  NewtonSystem sys = assemble_newton_system(curve, f, basis, curvature_term, resolution);
  NewtonDirection dir;
  dir.hessian = std::move(sys.hessian);
  dir.rhs = std::move(sys.rhs);

  Eigen::LDLT<Eigen::MatrixXd> ldlt(dir.hessian);
  if (ldlt.info() != Eigen::Success)
    throw Error(Errc::non_elliptic_hessian, "LDL^T factorisation of the shape Hessian failed");
  const Eigen::VectorXd d = ldlt.vectorD();
  const double dmax = d.cwiseAbs().maxCoeff();
  if (!(dmax > 0.0)) {
    if (dir.rhs.lpNorm<Eigen::Infinity>() == 0.0) {
      dir.coefficients = Eigen::VectorXd::Zero(dir.rhs.size());
      dir.update = std::make_shared<const DisplacementField>(basis.combination(dir.coefficients));
      return dir;
    }
    throw Error(Errc::singular_system, "shape Hessian vanishes");
  }
  if (d.minCoeff() < -pivot_tolerance * dmax)
    throw Error(Errc::non_elliptic_hessian, "shape Hessian has a negative pivot");
  dir.coefficients = ldlt.solve(dir.rhs);
  if (!dir.coefficients.allFinite())
    throw Error(Errc::singular_system, "shape Hessian solve produced non-finite values");
  dir.update = std::make_shared<const DisplacementField>(basis.combination(dir.coefficients));
  return dir;
}

struct NewtonState {
  int step = 0;
  CollocationSet set;
  BasisSet basis;
  NewtonDirection direction;
  double g_norm = 0.0;     // ||g_l|| in [H]^2
  double hess_cond = 0.0;  // 2-norm condition of H
  double objective = std::numeric_limits<double>::quiet_NaN();

  [[nodiscard]] const Curve& curve() const noexcept { return set.curve(); }
};

/// Basis, Newton direction and diagnostics on a given collocation set.
inline NewtonState make_newton_state(CollocationSet set, const ScalarField& f,
                                     const NewtonConfig& config, int step = 0) {
  const SaddleSolver solver(config.kernel, set, YSelection::all(), config.placement);
  BasisSet basis = solver.collocation_basis(set);
  NewtonDirection dir = newton_direction(set.curve(), f, basis, config.curvature_term,
                                         config.quad, config.pivot_tolerance);
  const double g_norm = rkhs_norm(*dir.update, *basis.gram_x);
  double cond = std::numeric_limits<double>::infinity();
  try {
    cond = condition_number(dir.hessian);
  } catch (const Error&) {
  }
  const double obj = f.divergence_potential ? objective(set.curve(), f, config.quad)
                                            : std::numeric_limits<double>::quiet_NaN();
  return {step, std::move(set), std::move(basis), std::move(dir), g_norm, cond, obj};
}

/// Applies g_l: deforms the curve, transports the collocation points and
/// rebuilds the basis and direction on the new curve.
inline NewtonState newton_step(const NewtonState& state, const ScalarField& f,
                               const NewtonConfig& config) {
  CollocationSet moved = transport(state.set, state.direction.update);
  return make_newton_state(std::move(moved), f, config, state.step + 1);
}

struct StepRecord {
  int step = 0;
  double g_norm = 0.0;
  double quad_ratio = std::numeric_limits<double>::quiet_NaN();  // ||g_{l+1}|| / ||g_l||^2
  double objective = std::numeric_limits<double>::quiet_NaN();
  double hess_cond = std::numeric_limits<double>::quiet_NaN();
};

struct NewtonRun {
  std::vector<StepRecord> records;
  std::vector<NewtonState> states;
  /// Omega_0, ..., Omega_L with Omega_{l+1} = F_l(Omega_l).
  std::vector<Curve> curves;
  std::optional<std::string> abort_reason;

  [[nodiscard]] const Curve& final_curve() const { return curves.back(); }
};

inline NewtonRun run(const ScalarField& f, const Curve& initial, const NewtonConfig& config) {
  config.validate();
  NewtonRun out;
  out.curves.push_back(initial);
  auto record = [&](const NewtonState& s) {
    out.records.push_back({s.step, s.g_norm, std::numeric_limits<double>::quiet_NaN(),
                           s.objective, s.hess_cond});
    if (out.records.size() >= 2) {
      auto& prev = out.records[out.records.size() - 2];
      prev.quad_ratio = s.g_norm / (prev.g_norm * prev.g_norm);
    }
  };
  try {
    out.states.push_back(make_newton_state(uniform_collocation(initial, config.n), f, config, 0));
    record(out.states.back());
    for (int l = 0; l < config.max_steps; ++l) {
      const NewtonState& cur = out.states.back();
      out.curves.push_back(cur.curve().deformed(cur.direction.update));
      if (cur.g_norm < config.early_stop || l + 1 == config.max_steps) break;
      out.states.push_back(newton_step(cur, f, config));
      record(out.states.back());
    }
  } catch (const Error& e) {
    out.abort_reason = e.what();
  }
  return out;
}

}  // namespace wnf
