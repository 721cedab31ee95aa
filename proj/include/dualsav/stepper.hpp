#pragma once

#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dualsav/assembly.hpp"
#include "dualsav/config.hpp"
#include "dualsav/curve.hpp"
#include "dualsav/linsolve.hpp"

namespace dualsav {

/// Geometric and mesh scalar auxiliary variables.
struct SavState {
  double r_g = 0.0;
  double r_m = 0.0;

  /// r_g = S_g(curve), r_m = S_m(curve).
  static SavState initial(const PolygonalCurve& curve, const FlowConfig& cfg) {
    const FrozenFrame frame = build_frame(curve);
    return {std::sqrt(geometric_energy(frame, cfg) + cfg.shift_geom),
            std::sqrt(mesh_energy(frame, cfg) + cfg.shift_mesh)};
  }
};

/// Initial values C_i(gamma^0) the constraints hold the curve to.
struct ConstraintTargets {
  std::vector<Constraint> kinds;
  std::vector<double> values;

  static ConstraintTargets from_curve(const PolygonalCurve& curve, const FlowConfig& cfg) {
    ConstraintTargets t;
    t.kinds = cfg.constraints;
    for (Constraint c : cfg.constraints) t.values.push_back(constraint_value(curve.vertices(), c));
    return t;
  }

  std::size_t size() const noexcept { return kinds.size(); }
};

struct ResponseSet {
  Vector geometric;                 // V_g
  std::vector<Vector> constraints;  // V_i
  Vector mesh;                      // V_m
  int solves = 0;
};

/// Xi = (r, lambda_1, ..., lambda_K).
struct ReducedUnknowns {
  Vector values;

  ReducedUnknowns() = default;
  explicit ReducedUnknowns(Vector v) : values(std::move(v)) {}
  ReducedUnknowns(double r, std::span<const double> lambdas) : values(lambdas.size() + 1) {
    values[0] = r;
    for (std::size_t i = 0; i < lambdas.size(); ++i) values[i + 1] = lambdas[i];
  }

  double r() const { return values[0]; }
  double lambda(std::size_t i) const { return values[i + 1]; }
  std::size_t num_constraints() const { return static_cast<std::size_t>(values.size()) - 1; }
  std::vector<double> lambdas() const { return {values.data() + 1, values.data() + values.size()}; }
};

struct StepReport {
  int newton_iterations = 0;
  double final_residual_norm = 0.0;
  int response_solves = 0;
  Vector normal_velocity;
  Vector tangential_velocity;
  std::vector<double> multipliers;
  double mesh_denominator = 1.0;
  // (r^{n+1})^2 - (r^n)^2 and its bound -dt (V^T A V + dt V^T D V)
  double geom_energy_change = 0.0;
  double geom_dissipation_bound = 0.0;
  double mesh_energy_change = 0.0;
  double mesh_dissipation_bound = 0.0;
  bool dissipation_check_g = true;
  bool dissipation_check_m = true;
};

inline ResponseSet compute_responses(const AssembledStep& step, const FlowConfig& cfg) {
  ResponseSet resp;
  if (cfg.metric == NormalMetric::L2) {
    const SpdFactorization normal(step.stabilized_normal());
    resp.geometric = -normal.solve(step.geometric_load);
    for (const Vector& g : step.constraint_loads) resp.constraints.push_back(-normal.solve(g));
  } else {
    const ZeroMeanResponseSolver normal(step.stabilized_normal(), ZeroMeanContext(step.masses));
    resp.geometric = -normal.solve(step.geometric_load);
    for (const Vector& g : step.constraint_loads) resp.constraints.push_back(-normal.solve(g));
  }
  const SpdFactorization tangential(step.stabilized_tangential());
  resp.mesh = -tangential.solve(step.mesh_load);
  resp.solves = 2 + static_cast<int>(step.constraint_loads.size());
  return resp;
}

/// Denominator of the explicit mesh SAV update; never smaller than one.
inline double mesh_sav_denominator(double shift_mesh, const Vector& mesh_load, const Vector& mesh_response,
                                   double dt) {
  return 1.0 - dt / (2.0 * shift_mesh * shift_mesh) * mesh_load.dot(mesh_response);
}

inline double mesh_sav_update(double r_m, const AssembledStep& step, const Vector& mesh_response, double dt) {
  return r_m / mesh_sav_denominator(step.shift_mesh, step.mesh_load, mesh_response, dt);
}

/// V_nu(Xi) = (r / S_g) V_g + sum_i lambda_i V_i.
inline Vector synthesize_normal(const ReducedUnknowns& xi, const ResponseSet& resp, const AssembledStep& step) {
  Vector v = (xi.r() / step.shift_geom) * resp.geometric;
  for (std::size_t i = 0; i < resp.constraints.size(); ++i) v += xi.lambda(i) * resp.constraints[i];
  return v;
}

inline std::vector<Vec2> displaced_vertices(std::span<const Vec2> x, const FrozenFrame& frame,
                                            const Vector& normal_velocity, const Vector& tangential_velocity,
                                            double dt) {
  std::vector<Vec2> out(x.size());
  for (std::size_t j = 0; j < x.size(); ++j)
    out[j] = x[j] + dt * (normal_velocity[j] * frame.normals[j] + tangential_velocity[j] * frame.tangents[j]);
  return out;
}

inline PolygonalCurve checked_curve(std::vector<Vec2> vertices) {
  if (auto err = check_curve(vertices)) throw Error(ErrorKind::DegenerateUpdate, err->what());
  return PolygonalCurve(std::move(vertices));
}

inline PolygonalCurve intermediate_curve(const ReducedUnknowns& xi, const ResponseSet& resp,
                                         const AssembledStep& step, const PolygonalCurve& curve,
                                         const Vector& tangential_velocity, double dt) {
  return checked_curve(
      displaced_vertices(curve.vertices(), step.frame, synthesize_normal(xi, resp, step), tangential_velocity, dt));
}

/// The (K+1)-dimensional nonlinear system left after the response solves, with
/// every Xi-independent inner product computed once.
class ReducedSystem {
 public:
  ReducedSystem(const AssembledStep& step, const ResponseSet& resp, const PolygonalCurve& curve,
                const Vector& tangential_velocity, double dt, double r_prev, const ConstraintTargets& targets)
      : step_(step), resp_(resp), curve_(curve), vtau_(tangential_velocity), dt_(dt), r_prev_(r_prev),
        targets_(targets) {
    const std::size_t k = targets.size();
    const Vector& f = step.geometric_load;
    fv_g_ = f.dot(resp.geometric);
    fv_.resize(k);
    gv_g_.resize(k);
    gv_.resize(k, k);
    for (std::size_t j = 0; j < k; ++j) {
      fv_[j] = f.dot(resp.constraints[j]);
      gv_g_[j] = step.constraint_loads[j].dot(resp.geometric);
      for (std::size_t i = 0; i < k; ++i) gv_(i, j) = step.constraint_loads[i].dot(resp.constraints[j]);
    }
  }

  std::size_t dimension() const noexcept { return targets_.size() + 1; }
  double r_prev() const noexcept { return r_prev_; }

  std::vector<Vec2> vertices_at(const ReducedUnknowns& xi) const {
    return displaced_vertices(curve_.vertices(), step_.frame, synthesize_normal(xi, resp_, step_), vtau_, dt_);
  }

  /// B_i(Xi) = G_i^T V_nu(Xi), from the precomputed inner products.
  Vector constraint_powers(const ReducedUnknowns& xi) const {
    const std::size_t k = targets_.size();
    Vector b(k);
    for (std::size_t i = 0; i < k; ++i) {
      double s = xi.r() / step_.shift_geom * gv_g_[i];
      for (std::size_t j = 0; j < k; ++j) s += xi.lambda(j) * gv_(i, j);
      b[i] = s;
    }
    return b;
  }

  Vector residual(const ReducedUnknowns& xi) const {
    const double r = xi.r();
    if (r == 0.0) throw Error(ErrorKind::ZeroGeometricSav, "reduced residual evaluated at r = 0");
    const std::size_t k = targets_.size();
    const double s = step_.shift_geom;
    double fv = r / s * fv_g_;
    for (std::size_t j = 0; j < k; ++j) fv += xi.lambda(j) * fv_[j];
    const Vector b = constraint_powers(xi);
    Vector out(k + 1);
    out[0] = (r - r_prev_) / dt_ - fv / (2.0 * s);
    for (std::size_t i = 0; i < k; ++i) out[0] -= xi.lambda(i) / (2.0 * r) * b[i];
    if (k > 0) {
      const std::vector<Vec2> x = vertices_at(xi);
      for (std::size_t i = 0; i < k; ++i) out[i + 1] = constraint_value(x, targets_.kinds[i]) - targets_.values[i];
    }
    return out;
  }

  Matrix jacobian(const ReducedUnknowns& xi) const {
    const double r = xi.r();
    if (r == 0.0) throw Error(ErrorKind::ZeroGeometricSav, "reduced Jacobian evaluated at r = 0");
    const std::size_t k = targets_.size();
    const double s = step_.shift_geom;
    const Vector b = constraint_powers(xi);
    Matrix jac = Matrix::Zero(k + 1, k + 1);
    jac(0, 0) = 1.0 / dt_ - fv_g_ / (2.0 * s * s);
    for (std::size_t i = 0; i < k; ++i) {
      jac(0, 0) += xi.lambda(i) / (2.0 * r * r) * b[i] - xi.lambda(i) / (2.0 * r * s) * gv_g_[i];
    }
    for (std::size_t j = 0; j < k; ++j) {
      double v = -fv_[j] / (2.0 * s) - b[j] / (2.0 * r);
      for (std::size_t i = 0; i < k; ++i) v -= xi.lambda(i) / (2.0 * r) * gv_(i, j);
      jac(0, j + 1) = v;
    }
    if (k > 0) {
      const std::vector<Vec2> x = vertices_at(xi);
      for (std::size_t i = 0; i < k; ++i) {
        const Vector gt = projected_constraint_gradient(x, step_.frame.normals, targets_.kinds[i]);
        jac(i + 1, 0) = dt_ / s * gt.dot(resp_.geometric);
        for (std::size_t j = 0; j < k; ++j) jac(i + 1, j + 1) = dt_ * gt.dot(resp_.constraints[j]);
      }
    }
    return jac;
  }

 private:
  const AssembledStep& step_;
  const ResponseSet& resp_;
  const PolygonalCurve& curve_;
  const Vector& vtau_;
  double dt_;
  double r_prev_;
  const ConstraintTargets& targets_;
  double fv_g_ = 0.0;  // F_g^T V_g
  Vector fv_;          // F_g^T V_j
  Vector gv_g_;        // G_i^T V_g
  Matrix gv_;          // G_i^T V_j
};

inline Vector reduced_residual(const ReducedUnknowns& xi, const ResponseSet& resp, const AssembledStep& step,
                               const PolygonalCurve& curve, const Vector& tangential_velocity, double dt,
                               const SavState& sav, const ConstraintTargets& targets) {
  return ReducedSystem(step, resp, curve, tangential_velocity, dt, sav.r_g, targets).residual(xi);
}

inline Matrix reduced_jacobian(const ReducedUnknowns& xi, const ResponseSet& resp, const AssembledStep& step,
                               const PolygonalCurve& curve, const Vector& tangential_velocity, double dt,
                               const SavState& sav, const ConstraintTargets& targets) {
  return ReducedSystem(step, resp, curve, tangential_velocity, dt, sav.r_g, targets).jacobian(xi);
}

struct NewtonResult {
  ReducedUnknowns xi;
  int iterations = 0;
  double residual_norm = 0.0;
};

inline constexpr int kMaxStepHalvings = 30;

/// Newton on the reduced system. A trial step is halved while it would bring
/// |r| below 1e-12 |r^n|, flip the sign of r, or grow ||R|| more than 1e3-fold.
inline NewtonResult newton_solve(const ReducedSystem& system, const NewtonSettings& settings,
                                 std::span<const double> warm_lambdas = {}) {
  const std::size_t k = system.dimension() - 1;
  const double r_prev = system.r_prev();
  NewtonResult out;
  std::vector<double> lambdas(k, 0.0);
  if (settings.warm_start && warm_lambdas.size() == k) lambdas.assign(warm_lambdas.begin(), warm_lambdas.end());
  out.xi = ReducedUnknowns(r_prev, lambdas);
  Vector res = system.residual(out.xi);
  for (int it = 0;; ++it) {
    out.residual_norm = res.norm();
    out.iterations = it;
    if (out.residual_norm <= settings.tolerance) return out;
    if (it >= settings.max_iterations)
      throw Error(ErrorKind::NewtonDivergence, "no convergence after " + std::to_string(it) +
                                                   " iterations, ||R|| = " + std::to_string(out.residual_norm));
    const Matrix jac = system.jacobian(out.xi);
    const Eigen::FullPivLU<Matrix> lu(jac);
    if (!lu.isInvertible()) throw Error(ErrorKind::SingularJacobian, "reduced Jacobian is singular");
    Vector delta = lu.solve(-res);
    if (!delta.allFinite()) throw Error(ErrorKind::SingularJacobian, "Newton increment is not finite");

    ReducedUnknowns trial;
    Vector trial_res;
    bool accepted = false;
    for (int h = 0; h <= kMaxStepHalvings; ++h) {
      trial = ReducedUnknowns(out.xi.values + delta);
      const double r = trial.r();
      const bool keeps_sign = std::abs(r) >= 1e-12 * std::abs(r_prev) && (r > 0.0) == (out.xi.r() > 0.0);
      if (keeps_sign) {
        trial_res = system.residual(trial);
        if (trial_res.allFinite() && trial_res.norm() <= 1e3 * out.residual_norm) {
          accepted = true;
          break;
        }
      }
      delta *= 0.5;
    }
    if (!accepted) throw Error(ErrorKind::NewtonDivergence, "step halving could not keep r away from zero");

    const double increment = delta.norm() / (1.0 + out.xi.values.norm());
    out.xi = trial;
    res = trial_res;
    if (increment <= settings.tolerance) {
      out.iterations = it + 1;
      out.residual_norm = res.norm();
      return out;
    }
  }
}

inline NewtonResult newton_solve(const AssembledStep& step, const ResponseSet& resp, const PolygonalCurve& curve,
                                 const Vector& tangential_velocity, const SavState& sav,
                                 const ConstraintTargets& targets, const FlowConfig& cfg,
                                 std::span<const double> warm_lambdas = {}) {
  const ReducedSystem system(step, resp, curve, tangential_velocity, cfg.dt, sav.r_g, targets);
  return newton_solve(system, cfg.newton, warm_lambdas);
}

struct StepResult {
  PolygonalCurve curve;
  SavState sav;
  StepReport report;
};

/// Relative round-off budget for the per-step dissipation inequalities.
inline double dissipation_slack(double r_prev) { return 1e-10 * std::max(1.0, r_prev * r_prev); }

/// One time step: assembly, response solves, explicit mesh SAV update,
/// reduced Newton solve, velocity synthesis and node update.
inline StepResult advance(const PolygonalCurve& curve, const SavState& sav, const FlowConfig& cfg,
                          const ConstraintTargets& targets, std::span<const double> warm_lambdas = {}) {
  const double dt = cfg.dt;
  const AssembledStep step = assemble_step(curve, cfg);
  const ResponseSet resp = compute_responses(step, cfg);

  StepReport report;
  report.response_solves = resp.solves;
  report.mesh_denominator = mesh_sav_denominator(step.shift_mesh, step.mesh_load, resp.mesh, dt);
  SavState next;
  next.r_m = sav.r_m / report.mesh_denominator;
  report.tangential_velocity = (next.r_m / step.shift_mesh) * resp.mesh;

  const NewtonResult newton = newton_solve(step, resp, curve, report.tangential_velocity, sav, targets, cfg,
                                           warm_lambdas);
  next.r_g = newton.xi.r();
  if (next.r_g == 0.0) throw Error(ErrorKind::ZeroGeometricSav, "accepted step has r_g = 0");
  report.newton_iterations = newton.iterations;
  report.final_residual_norm = newton.residual_norm;
  report.multipliers = newton.xi.lambdas();
  report.normal_velocity = synthesize_normal(newton.xi, resp, step);

  PolygonalCurve updated = checked_curve(
      displaced_vertices(curve.vertices(), step.frame, report.normal_velocity, report.tangential_velocity, dt));

  const Vector& vn = report.normal_velocity;
  const Vector& vt = report.tangential_velocity;
  report.geom_energy_change = next.r_g * next.r_g - sav.r_g * sav.r_g;
  report.geom_dissipation_bound =
      -dt * (vn.dot(step.normal_metric * vn) + dt * vn.dot(step.stab.normal * vn));
  report.mesh_energy_change = next.r_m * next.r_m - sav.r_m * sav.r_m;
  report.mesh_dissipation_bound =
      -dt * (vt.dot(step.tangential_metric * vt) + dt * vt.dot(step.stab.tangential * vt));
  report.dissipation_check_g =
      report.geom_energy_change <= report.geom_dissipation_bound + dissipation_slack(sav.r_g);
  report.dissipation_check_m =
      report.mesh_energy_change <= report.mesh_dissipation_bound + dissipation_slack(sav.r_m) &&
      report.mesh_denominator >= 1.0;
  if (!report.dissipation_check_g || !report.dissipation_check_m)
    throw Error(ErrorKind::DissipationViolation,
                "modified energy increased beyond round-off: geometric " + std::to_string(report.geom_energy_change) +
                    " vs bound " + std::to_string(report.geom_dissipation_bound) + ", mesh " +
                    std::to_string(report.mesh_energy_change) + " vs bound " +
                    std::to_string(report.mesh_dissipation_bound));

  return {std::move(updated), next, std::move(report)};
}

}  // namespace dualsav
