#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <string_view>
#include <vector>

#include "dualsav/error.hpp"

namespace dualsav {

enum class EnergyKind { Length, Helfrich };
enum class NormalMetric { L2, Hminus1 };
enum class NormalStabilizer { Laplacian, Biharmonic, Hybrid };
enum class MeshWeight { Uniform, LagrangianReference };
enum class Constraint { Area, Length };

struct NewtonSettings {
  double tolerance = 1e-12;
  int max_iterations = 20;
  bool warm_start = false;
};

/// Everything one time step needs besides the state itself.
struct FlowConfig {
  EnergyKind energy = EnergyKind::Length;
  double spontaneous_curvature = 0.0;  // c0, Helfrich only

  NormalMetric metric = NormalMetric::L2;
  NormalStabilizer stabilizer = NormalStabilizer::Laplacian;
  double beta_nu2 = 0.0;  // Laplacian part
  double beta_nu4 = 0.0;  // biharmonic part
  double beta_tau = 0.0;

  MeshWeight mesh_weight = MeshWeight::Uniform;
  std::vector<Constraint> constraints;

  double shift_geom = 1.0;  // C_g
  double shift_mesh = 1.0;  // C_m

  NewtonSettings newton;
  double dt = 1e-3;

  std::size_t num_constraints() const noexcept { return constraints.size(); }

  bool has_constraint(Constraint c) const {
    return std::find(constraints.begin(), constraints.end(), c) != constraints.end();
  }

  void validate() const {
    auto fail = [](const std::string& msg) { throw Error(ErrorKind::InvalidConfig, msg); };
    if (!(dt > 0.0) || !std::isfinite(dt)) fail("dt must be positive");
    if (beta_nu2 < 0.0 || beta_nu4 < 0.0 || beta_tau < 0.0) fail("stabilization coefficients must be >= 0");
    if (!(shift_geom > 0.0) || !(shift_mesh > 0.0)) fail("SAV shifts C_g and C_m must be positive");
    if (!(newton.tolerance > 0.0)) fail("Newton tolerance must be positive");
    if (newton.max_iterations < 1) fail("Newton needs at least one iteration");
    if (metric == NormalMetric::Hminus1 && has_constraint(Constraint::Area))
      fail("the H^-1 metric cannot enforce an area constraint by a Lagrange multiplier");
    for (std::size_t i = 0; i < constraints.size(); ++i)
      for (std::size_t k = i + 1; k < constraints.size(); ++k)
        if (constraints[i] == constraints[k]) fail("duplicate constraint");
  }
};

constexpr std::string_view to_string(EnergyKind k) { return k == EnergyKind::Length ? "length" : "helfrich"; }
constexpr std::string_view to_string(NormalMetric k) { return k == NormalMetric::L2 ? "L2" : "Hminus1"; }
constexpr std::string_view to_string(MeshWeight k) {
  return k == MeshWeight::Uniform ? "uniform" : "lagrangian";
}
constexpr std::string_view to_string(Constraint k) { return k == Constraint::Area ? "area" : "length"; }
constexpr std::string_view to_string(NormalStabilizer k) {
  switch (k) {
    case NormalStabilizer::Laplacian: return "laplacian";
    case NormalStabilizer::Biharmonic: return "biharmonic";
    case NormalStabilizer::Hybrid: return "hybrid";
  }
  return "";
}

}  // namespace dualsav
