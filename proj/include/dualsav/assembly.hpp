#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "dualsav/config.hpp"
#include "dualsav/curve.hpp"
#include "dualsav/linsolve.hpp"

namespace dualsav {

/// Periodic piecewise-linear stiffness matrix (dense storage, tridiagonal pattern).
inline Matrix stiffness_matrix(const FrozenFrame& frame) {
  const std::size_t n = frame.size();
  Matrix k = Matrix::Zero(n, n);
  for (std::size_t j = 0; j < n; ++j) {
    const std::size_t jp = (j + 1) % n;
    const double w = 1.0 / frame.edge_lengths[j];
    k(j, j) += w;
    k(jp, jp) += w;
    k(j, jp) -= w;
    k(jp, j) -= w;
  }
  return k;
}

struct MassStiffness {
  Vector masses;  // diagonal of M_L
  Matrix stiffness;
};

inline MassStiffness assemble_mass_stiffness(const FrozenFrame& frame) {
  for (std::size_t j = 0; j < frame.size(); ++j)
    if (!(frame.edge_lengths[j] > 0.0)) throw Error(ErrorKind::DegenerateEdge, "zero edge length in frame");
  return {frame.masses, stiffness_matrix(frame)};
}

/// K applied to a nodal vector without forming K.
inline Vector apply_stiffness(const FrozenFrame& frame, const Vector& u) {
  const std::size_t n = frame.size();
  Vector out = Vector::Zero(n);
  for (std::size_t j = 0; j < n; ++j) {
    const std::size_t jp = (j + 1) % n;
    const double flux = (u[j] - u[jp]) / frame.edge_lengths[j];
    out[j] += flux;
    out[jp] -= flux;
  }
  return out;
}

/// K M_L^{-1} K, accumulated row by row from the three nonzeros of each row of K.
inline Matrix biharmonic_matrix(const FrozenFrame& frame) {
  const std::size_t n = frame.size();
  Matrix d = Matrix::Zero(n, n);
  for (std::size_t k = 0; k < n; ++k) {
    const std::size_t km = (k + n - 1) % n;
    const std::size_t kp = (k + 1) % n;
    const double a = 1.0 / frame.edge_lengths[km];
    const double b = 1.0 / frame.edge_lengths[k];
    const std::array<std::pair<std::size_t, double>, 3> row{{{km, -a}, {k, a + b}, {kp, -b}}};
    const double inv_m = 1.0 / frame.masses[k];
    for (const auto& [i, ki] : row)
      for (const auto& [j, kj] : row) d(i, j) += ki * kj * inv_m;
  }
  return d;
}

inline Matrix assemble_normal_metric(const FrozenFrame& frame, const Matrix& stiffness, const FlowConfig& cfg) {
  if (cfg.metric == NormalMetric::L2) return Matrix(frame.masses.asDiagonal());
  return hminus1_metric(stiffness, ZeroMeanContext(frame.masses));
}

struct Stabilizers {
  Matrix normal;             // D_nu
  Matrix tangential;         // D_tau
  Matrix stabilized_normal;  // M_nu = A_nu + dt D_nu
  Matrix stabilized_tangential;
};

inline Stabilizers assemble_stabilizers(const FrozenFrame& frame, const Matrix& stiffness,
                                        const Matrix& normal_metric, const FlowConfig& cfg, double dt) {
  const std::size_t n = frame.size();
  Stabilizers s;
  s.normal = Matrix::Zero(n, n);
  const bool laplacian =
      cfg.stabilizer == NormalStabilizer::Laplacian || cfg.stabilizer == NormalStabilizer::Hybrid;
  const bool biharmonic =
      cfg.stabilizer == NormalStabilizer::Biharmonic || cfg.stabilizer == NormalStabilizer::Hybrid;
  if (biharmonic && cfg.beta_nu4 != 0.0) s.normal += cfg.beta_nu4 * biharmonic_matrix(frame);
  if (laplacian && cfg.beta_nu2 != 0.0) s.normal += cfg.beta_nu2 * stiffness;
  s.tangential = cfg.beta_tau * stiffness;
  s.stabilized_normal = normal_metric + dt * s.normal;
  s.stabilized_tangential = Matrix(frame.masses.asDiagonal()) + dt * s.tangential;
  return s;
}

/// Nodal vectors dotted with a frozen direction field.
inline Vector project_onto(std::span<const Vec2> vectors, std::span<const Vec2> directions) {
  Vector out(vectors.size());
  for (std::size_t j = 0; j < vectors.size(); ++j) out[j] = vectors[j].dot(directions[j]);
  return out;
}

inline double geometric_energy(const FrozenFrame& frame, const FlowConfig& cfg) {
  if (cfg.energy == EnergyKind::Length) return frame.edge_lengths.sum();
  const double c0 = cfg.spontaneous_curvature;
  return 0.5 * (frame.masses.array() * (frame.curvatures.array() - c0).square()).sum();
}

inline double mesh_energy(const FrozenFrame& frame, const FlowConfig& cfg) {
  if (cfg.mesh_weight == MeshWeight::LagrangianReference) return 0.5 * frame.edge_lengths.sum();
  const double n = static_cast<double>(frame.size());
  return 0.5 * n * frame.edge_lengths.squaredNorm();
}

inline Vector geometric_force(const FrozenFrame& frame, std::span<const Vec2> x, const FlowConfig& cfg) {
  if (cfg.energy == EnergyKind::Length) return project_onto(length_gradient(x), frame.normals);
  const double c0 = cfg.spontaneous_curvature;
  const Vector& kappa = frame.curvatures;
  const Vector cubic = kappa.array() * (kappa.array().square() - c0 * c0);
  return -apply_stiffness(frame, kappa) + 0.5 * Vector(frame.masses.array() * cubic.array());
}

inline Vector mesh_force(const FrozenFrame& frame, std::span<const Vec2> x, const FlowConfig& cfg) {
  const std::size_t n = x.size();
  if (cfg.mesh_weight == MeshWeight::LagrangianReference)
    return 0.5 * project_onto(length_gradient(x), frame.tangents);
  Vector f(n);
  const double scale = static_cast<double>(n);
  for (std::size_t j = 0; j < n; ++j) {
    const Vec2 g = scale * (2.0 * x[j] - x[(j + n - 1) % n] - x[(j + 1) % n]);
    f[j] = g.dot(frame.tangents[j]);
  }
  return f;
}

inline std::vector<Vec2> constraint_gradient(std::span<const Vec2> x, Constraint c) {
  return c == Constraint::Area ? area_gradient(x) : length_gradient(x);
}

inline double constraint_value(std::span<const Vec2> x, Constraint c) {
  return c == Constraint::Area ? polygon_area(x) : polygon_length(x);
}

/// Nodal constraint gradients on the curve x projected onto the given normals.
/// With x the frozen curve this is the load G_i; with x an intermediate curve it
/// is the Jacobian vector G~_i.
inline Vector projected_constraint_gradient(std::span<const Vec2> x, std::span<const Vec2> normals,
                                            Constraint c) {
  return project_onto(constraint_gradient(x, c), normals);
}

inline std::vector<Vector> constraint_loads(const FrozenFrame& frame, std::span<const Vec2> x,
                                            const FlowConfig& cfg) {
  std::vector<Vector> g;
  g.reserve(cfg.constraints.size());
  for (Constraint c : cfg.constraints) g.push_back(projected_constraint_gradient(x, frame.normals, c));
  return g;
}

/// All frozen matrices and loads for one step on the known curve.
struct AssembledStep {
  FrozenFrame frame;
  Vector masses;
  Matrix stiffness;
  Matrix normal_metric;      // A_nu
  Matrix tangential_metric;  // A_tau = M_L
  Stabilizers stab;
  Vector geometric_load;  // F_g
  Vector mesh_load;       // F_m
  std::vector<Vector> constraint_loads;
  double geometric_energy = 0.0;
  double mesh_energy = 0.0;
  double shift_geom = 0.0;  // S_g = sqrt(E_geom + C_g)
  double shift_mesh = 0.0;  // S_m = sqrt(E_mesh + C_m)
  NormalMetric metric = NormalMetric::L2;

  const Matrix& stabilized_normal() const noexcept { return stab.stabilized_normal; }
  const Matrix& stabilized_tangential() const noexcept { return stab.stabilized_tangential; }
};

inline AssembledStep assemble_step(const PolygonalCurve& curve, const FlowConfig& cfg) {
  AssembledStep s;
  s.frame = build_frame(curve);
  auto [m, k] = assemble_mass_stiffness(s.frame);
  s.masses = std::move(m);
  s.stiffness = std::move(k);
  s.metric = cfg.metric;
  s.normal_metric = assemble_normal_metric(s.frame, s.stiffness, cfg);
  s.tangential_metric = Matrix(s.masses.asDiagonal());
  s.stab = assemble_stabilizers(s.frame, s.stiffness, s.normal_metric, cfg, cfg.dt);
  s.geometric_load = geometric_force(s.frame, curve.vertices(), cfg);
  s.mesh_load = mesh_force(s.frame, curve.vertices(), cfg);
  s.constraint_loads = constraint_loads(s.frame, curve.vertices(), cfg);
  s.geometric_energy = geometric_energy(s.frame, cfg);
  s.mesh_energy = mesh_energy(s.frame, cfg);
  s.shift_geom = std::sqrt(s.geometric_energy + cfg.shift_geom);
  s.shift_mesh = std::sqrt(s.mesh_energy + cfg.shift_mesh);
  return s;
}

}  // namespace dualsav
