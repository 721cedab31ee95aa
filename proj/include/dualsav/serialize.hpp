#pragma once

#include <array>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "dualsav/config.hpp"
#include "dualsav/diagnostics.hpp"
#include "dualsav/flows.hpp"

namespace dualsav {

using json = nlohmann::json;

namespace detail {

template <typename Enum, std::size_t N>
Enum parse_enum(const std::string& s, const std::array<Enum, N>& values, ErrorKind kind, const char* what) {
  for (Enum v : values)
    if (to_string(v) == s) return v;
  throw Error(kind, std::string("unknown ") + what + " '" + s + "'");
}

}  // namespace detail

inline EnergyKind energy_from_string(const std::string& s) {
  return detail::parse_enum(s, std::array{EnergyKind::Length, EnergyKind::Helfrich}, ErrorKind::InvalidConfig,
                            "energy");
}
inline NormalMetric metric_from_string(const std::string& s) {
  return detail::parse_enum(s, std::array{NormalMetric::L2, NormalMetric::Hminus1}, ErrorKind::InvalidConfig,
                            "metric");
}
inline NormalStabilizer stabilizer_from_string(const std::string& s) {
  return detail::parse_enum(
      s, std::array{NormalStabilizer::Laplacian, NormalStabilizer::Biharmonic, NormalStabilizer::Hybrid},
      ErrorKind::InvalidConfig, "stabilizer");
}
inline MeshWeight weight_from_string(const std::string& s) {
  return detail::parse_enum(s, std::array{MeshWeight::Uniform, MeshWeight::LagrangianReference},
                            ErrorKind::InvalidConfig, "mesh weight");
}
inline Constraint constraint_from_string(const std::string& s) {
  return detail::parse_enum(s, std::array{Constraint::Area, Constraint::Length}, ErrorKind::InvalidConfig,
                            "constraint");
}

inline json to_json(const FlowConfig& c) {
  json cons = json::array();
  for (Constraint k : c.constraints) cons.push_back(std::string(to_string(k)));
  return {
      {"energy", std::string(to_string(c.energy))},
      {"spontaneous_curvature", c.spontaneous_curvature},
      {"metric", std::string(to_string(c.metric))},
      {"stabilizer", std::string(to_string(c.stabilizer))},
      {"beta_nu2", c.beta_nu2},
      {"beta_nu4", c.beta_nu4},
      {"beta_tau", c.beta_tau},
      {"mesh_weight", std::string(to_string(c.mesh_weight))},
      {"constraints", cons},
      {"shift_geom", c.shift_geom},
      {"shift_mesh", c.shift_mesh},
      {"newton", {{"tolerance", c.newton.tolerance},
                  {"max_iterations", c.newton.max_iterations},
                  {"warm_start", c.newton.warm_start}}},
      {"dt", c.dt},
  };
}

inline FlowConfig flow_config_from_json(const json& j) {
  FlowConfig c;
  c.energy = energy_from_string(j.at("energy").get<std::string>());
  c.spontaneous_curvature = j.at("spontaneous_curvature").get<double>();
  c.metric = metric_from_string(j.at("metric").get<std::string>());
  c.stabilizer = stabilizer_from_string(j.at("stabilizer").get<std::string>());
  c.beta_nu2 = j.at("beta_nu2").get<double>();
  c.beta_nu4 = j.at("beta_nu4").get<double>();
  c.beta_tau = j.at("beta_tau").get<double>();
  c.mesh_weight = weight_from_string(j.at("mesh_weight").get<std::string>());
  for (const auto& s : j.at("constraints")) c.constraints.push_back(constraint_from_string(s.get<std::string>()));
  c.shift_geom = j.at("shift_geom").get<double>();
  c.shift_mesh = j.at("shift_mesh").get<double>();
  const json& n = j.at("newton");
  c.newton.tolerance = n.at("tolerance").get<double>();
  c.newton.max_iterations = n.at("max_iterations").get<int>();
  c.newton.warm_start = n.at("warm_start").get<bool>();
  c.dt = j.at("dt").get<double>();
  c.validate();
  return c;
}

inline json to_json(const InitialCurveSpec& s) {
  return {{"kind", std::string(to_string(s.kind))}, {"vertices", s.vertices},   {"redistribute", s.redistribute},
          {"radius", s.radius},                     {"semi_axis_x", s.semi_axis_x}, {"semi_axis_y", s.semi_axis_y}};
}

inline InitialCurveSpec initial_curve_from_json(const json& j) {
  InitialCurveSpec s;
  s.kind = curve_kind_from_string(j.at("kind").get<std::string>());
  s.vertices = j.at("vertices").get<std::size_t>();
  s.redistribute = j.at("redistribute").get<bool>();
  s.radius = j.at("radius").get<double>();
  s.semi_axis_x = j.at("semi_axis_x").get<double>();
  s.semi_axis_y = j.at("semi_axis_y").get<double>();
  return s;
}

inline json to_json(const FlowPreset& p) {
  return {{"name", p.name},
          {"config", to_json(p.config)},
          {"initial_curve", to_json(p.initial)},
          {"final_time", p.final_time}};
}

inline FlowPreset flow_preset_from_json(const json& j) {
  FlowPreset p;
  p.name = j.at("name").get<std::string>();
  p.config = flow_config_from_json(j.at("config"));
  p.initial = initial_curve_from_json(j.at("initial_curve"));
  p.final_time = j.at("final_time").get<double>();
  return p;
}

/// Reads the "overrides" object of a run configuration. Unknown keys are
/// rejected so that a typo cannot silently fall back to a default.
inline PresetOverrides overrides_from_json(const json& j) {
  PresetOverrides o;
  if (j.is_null()) return o;
  if (!j.is_object()) throw Error(ErrorKind::InvalidOverride, "overrides must be a JSON object");
  for (const auto& [key, v] : j.items()) {
    if (key == "dt") o.dt = v.get<double>();
    else if (key == "final_time") o.final_time = v.get<double>();
    else if (key == "vertices") o.vertices = v.get<std::size_t>();
    else if (key == "mesh_weight") o.mesh_weight = weight_from_string(v.get<std::string>());
    else if (key == "metric") o.metric = metric_from_string(v.get<std::string>());
    else if (key == "constraints") {
      std::vector<Constraint> cs;
      for (const auto& s : v) cs.push_back(constraint_from_string(s.get<std::string>()));
      o.constraints = cs;
    } else if (key == "spontaneous_curvature") o.spontaneous_curvature = v.get<double>();
    else if (key == "beta_nu2") o.beta_nu2 = v.get<double>();
    else if (key == "beta_nu4") o.beta_nu4 = v.get<double>();
    else if (key == "beta_tau") o.beta_tau = v.get<double>();
    else if (key == "shift_geom") o.shift_geom = v.get<double>();
    else if (key == "shift_mesh") o.shift_mesh = v.get<double>();
    else if (key == "newton_tolerance") o.newton_tolerance = v.get<double>();
    else if (key == "newton_max_iterations") o.newton_max_iterations = v.get<int>();
    else if (key == "warm_start") o.warm_start = v.get<bool>();
    else throw Error(ErrorKind::InvalidOverride, "unknown override '" + key + "'");
  }
  return o;
}

inline json to_json(const RunSummary& s) {
  return {{"steps", s.steps},
          {"max_q_mesh", s.max_q},
          {"final_q_mesh", s.final_q},
          {"max_e_area", s.max_e_area},
          {"max_e_length", s.max_e_length},
          {"min_edge", s.min_edge},
          {"avg_newton_iterations", s.avg_newton_iterations},
          {"initial_gap_g", s.initial_gap},
          {"final_gap_g", s.final_gap},
          {"initial_e_geom", s.initial_e_geom},
          {"final_e_geom", s.final_e_geom},
          {"final_iso_deficit", s.final_iso_deficit},
          {"r_g_sq_monotone", s.r_g_sq_monotone},
          {"r_m_sq_monotone", s.r_m_sq_monotone}};
}

}  // namespace dualsav
