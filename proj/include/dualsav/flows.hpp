#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <numbers>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "dualsav/config.hpp"
#include "dualsav/curve.hpp"

namespace dualsav {

enum class CurveKind {
  Circle,     // radius * (cos t, sin t)
  Star,       // r(t) = 1 + 0.9 cos 5t
  Perturbed,  // r(t) = 1 + 0.2 cos 3t + 0.1 sin 5t
  Ellipse,    // (a cos t, b sin t)
};

constexpr std::string_view to_string(CurveKind k) {
  switch (k) {
    case CurveKind::Circle: return "circle";
    case CurveKind::Star: return "star";
    case CurveKind::Perturbed: return "perturbed";
    case CurveKind::Ellipse: return "ellipse";
  }
  return "";
}

inline CurveKind curve_kind_from_string(std::string_view s) {
  if (s == "circle") return CurveKind::Circle;
  if (s == "star") return CurveKind::Star;
  if (s == "perturbed") return CurveKind::Perturbed;
  if (s == "ellipse") return CurveKind::Ellipse;
  throw Error(ErrorKind::UnknownCurveKind, "unknown curve kind '" + std::string(s) + "'");
}

struct InitialCurveSpec {
  CurveKind kind = CurveKind::Circle;
  std::size_t vertices = 256;
  bool redistribute = false;  // equal chord lengths before t = 0
  double radius = 1.0;        // circle
  double semi_axis_x = 4.0;   // ellipse
  double semi_axis_y = 1.0;
};

inline Vec2 curve_point(const InitialCurveSpec& spec, double t) {
  const Vec2 dir(std::cos(t), std::sin(t));
  switch (spec.kind) {
    case CurveKind::Circle: return spec.radius * dir;
    case CurveKind::Star: return (1.0 + 0.9 * std::cos(5.0 * t)) * dir;
    case CurveKind::Perturbed: return (1.0 + 0.2 * std::cos(3.0 * t) + 0.1 * std::sin(5.0 * t)) * dir;
    case CurveKind::Ellipse: return Vec2(spec.semi_axis_x * std::cos(t), spec.semi_axis_y * std::sin(t));
  }
  throw Error(ErrorKind::UnknownCurveKind, "unknown curve kind");
}

namespace detail {

/// Closed polyline with cumulative arclength, used as a fine surrogate of a
/// smooth parametric curve.
struct ArclengthPolyline {
  std::vector<Vec2> points;  // points.back() == points.front()
  std::vector<double> s;

  Vec2 at(std::size_t seg, double local) const { return points[seg] + local * (points[seg + 1] - points[seg]); }
  double length() const { return s.back(); }
};

/// Marches from arclength position `from` to the first point at Euclidean
/// distance `chord`. Returns the arclength of that point, or +inf past the end.
inline double march_chord(const ArclengthPolyline& p, double from, double chord, std::size_t& seg) {
  const double local0 = (from - p.s[seg]) / (p.s[seg + 1] - p.s[seg]);
  const Vec2 origin = p.at(seg, local0);
  for (std::size_t k = seg; k + 1 < p.points.size(); ++k) {
    const Vec2 a = p.points[k];
    const Vec2 b = p.points[k + 1];
    if ((b - origin).norm() < chord) continue;
    // |a + u (b - a) - origin| = chord, largest root in [0, 1]
    const Vec2 d = b - a;
    const Vec2 w = a - origin;
    const double qa = d.squaredNorm();
    const double qb = 2.0 * d.dot(w);
    const double qc = w.squaredNorm() - chord * chord;
    const double disc = std::max(0.0, qb * qb - 4.0 * qa * qc);
    const double u = std::clamp((-qb + std::sqrt(disc)) / (2.0 * qa), 0.0, 1.0);
    seg = k;
    return p.s[k] + u * (p.s[k + 1] - p.s[k]);
  }
  return std::numeric_limits<double>::infinity();
}

}  // namespace detail

/// Places n vertices with equal chord lengths along a fine polyline
/// approximation of the curve, starting at parameter 0. The common chord is
/// found by bisection on the closure mismatch of the last chord.
inline std::vector<Vec2> redistribute_equal_chords(const InitialCurveSpec& spec, std::size_t n,
                                                   std::size_t samples_per_vertex = 1024) {
  detail::ArclengthPolyline p;
  const std::size_t fine = n * samples_per_vertex;
  p.points.reserve(fine + 1);
  for (std::size_t i = 0; i < fine; ++i)
    p.points.push_back(curve_point(spec, 2.0 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(fine)));
  p.points.push_back(p.points.front());
  p.s.resize(p.points.size());
  p.s[0] = 0.0;
  for (std::size_t i = 1; i < p.points.size(); ++i) p.s[i] = p.s[i - 1] + (p.points[i] - p.points[i - 1]).norm();
  const double total = p.length();

  // arclength reached after n-1 chords
  auto march = [&](double chord, std::vector<double>* out) {
    std::size_t seg = 0;
    double pos = 0.0;
    if (out) out->assign(1, 0.0);
    for (std::size_t k = 1; k < n; ++k) {
      pos = detail::march_chord(p, pos, chord, seg);
      if (!std::isfinite(pos)) return std::numeric_limits<double>::infinity();
      if (out) out->push_back(pos);
    }
    return pos;
  };
  auto closing_gap = [&](double chord) {
    std::vector<double> pos;
    const double last = march(chord, &pos);
    if (!std::isfinite(last)) return -std::numeric_limits<double>::infinity();
    std::size_t seg = static_cast<std::size_t>(std::upper_bound(p.s.begin(), p.s.end(), last) - p.s.begin()) - 1;
    seg = std::min(seg, p.points.size() - 2);
    const Vec2 end = p.at(seg, (last - p.s[seg]) / (p.s[seg + 1] - p.s[seg]));
    return (end - p.points.front()).norm() - chord;
  };

  double lo = 0.5 * total / static_cast<double>(n);
  double hi = total / static_cast<double>(n);
  for (int it = 0; it < 200 && hi - lo > 1e-15 * hi; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (closing_gap(mid) > 0.0) lo = mid;
    else hi = mid;
  }
  std::vector<double> pos;
  march(0.5 * (lo + hi), &pos);
  std::vector<Vec2> out;
  out.reserve(n);
  for (double sk : pos) {
    std::size_t seg = static_cast<std::size_t>(std::upper_bound(p.s.begin(), p.s.end(), sk) - p.s.begin()) - 1;
    seg = std::min(seg, p.points.size() - 2);
    out.push_back(p.at(seg, (sk - p.s[seg]) / (p.s[seg + 1] - p.s[seg])));
  }
  return out;
}

inline PolygonalCurve make_initial_curve(const InitialCurveSpec& spec) {
  const std::size_t n = spec.vertices;
  if (n < 3) throw Error(ErrorKind::InvalidCurve, "initial curve needs at least 3 vertices");
  std::vector<Vec2> x;
  if (spec.redistribute) {
    x = redistribute_equal_chords(spec, n);
  } else {
    x.reserve(n);
    for (std::size_t j = 0; j < n; ++j)
      x.push_back(curve_point(spec, 2.0 * std::numbers::pi * static_cast<double>(j) / static_cast<double>(n)));
  }
  return PolygonalCurve::counterclockwise(std::move(x));
}

/// A named experiment: flow configuration, initial data and final time.
struct FlowPreset {
  std::string name;
  FlowConfig config;
  InitialCurveSpec initial;
  double final_time = 0.0;

  /// Exact radius for flows with a known shrinking-circle solution.
  std::optional<double> exact_radius(double t) const {
    if (name != "csf" || initial.kind != CurveKind::Circle) return std::nullopt;
    const double r2 = initial.radius * initial.radius - 2.0 * t;
    return r2 > 0.0 ? std::optional<double>(std::sqrt(r2)) : std::nullopt;
  }
  std::size_t num_steps() const { return static_cast<std::size_t>(std::llround(final_time / config.dt)); }
};

/// Optional replacements for preset defaults.
struct PresetOverrides {
  std::optional<double> dt;
  std::optional<double> final_time;
  std::optional<std::size_t> vertices;
  std::optional<MeshWeight> mesh_weight;
  std::optional<std::vector<Constraint>> constraints;
  std::optional<NormalMetric> metric;
  std::optional<double> spontaneous_curvature;
  std::optional<double> beta_nu2;
  std::optional<double> beta_nu4;
  std::optional<double> beta_tau;
  std::optional<double> shift_geom;
  std::optional<double> shift_mesh;
  std::optional<double> newton_tolerance;
  std::optional<int> newton_max_iterations;
  std::optional<bool> warm_start;
};

inline const std::vector<std::string>& preset_names() {
  static const std::vector<std::string> names{"csf", "apcsf", "cdf", "helfrich"};
  return names;
}

inline FlowPreset default_preset(std::string_view name) {
  FlowPreset p;
  p.name = std::string(name);
  FlowConfig& c = p.config;
  c.shift_geom = 1.0;
  c.shift_mesh = 1.0;
  c.mesh_weight = MeshWeight::Uniform;
  c.newton = {1e-12, 20, false};
  if (name == "csf") {
    c.energy = EnergyKind::Length;
    c.metric = NormalMetric::L2;
    c.stabilizer = NormalStabilizer::Laplacian;
    c.beta_nu2 = 10.0;
    c.beta_tau = 100.0;
    c.dt = 1e-3;
    p.final_time = 0.25;
    p.initial = {CurveKind::Circle, 512, false};
  } else if (name == "apcsf") {
    c.energy = EnergyKind::Length;
    c.metric = NormalMetric::L2;
    c.stabilizer = NormalStabilizer::Laplacian;
    c.beta_nu2 = 10.0;
    c.beta_tau = 100.0;
    c.constraints = {Constraint::Area};
    c.dt = 5e-4;
    p.final_time = 0.5;
    p.initial = {CurveKind::Star, 256, false};
  } else if (name == "cdf") {
    c.energy = EnergyKind::Length;
    c.metric = NormalMetric::Hminus1;
    c.stabilizer = NormalStabilizer::Hybrid;
    c.beta_nu4 = 10.0;
    c.beta_nu2 = 10.0;
    c.beta_tau = 10.0;
    c.dt = 1e-5;
    p.final_time = 0.1;
    p.initial = {CurveKind::Perturbed, 256, true};
  } else if (name == "helfrich") {
    c.energy = EnergyKind::Helfrich;
    c.spontaneous_curvature = 0.5;
    c.metric = NormalMetric::L2;
    c.stabilizer = NormalStabilizer::Biharmonic;
    c.beta_nu4 = 10.0;
    c.beta_tau = 10.0;
    c.constraints = {Constraint::Area, Constraint::Length};
    c.newton.tolerance = 1e-10;
    c.dt = 1e-4;
    p.final_time = 0.5;
    p.initial = {CurveKind::Ellipse, 256, false};
  } else {
    throw Error(ErrorKind::UnknownPreset, "unknown preset '" + std::string(name) + "'");
  }
  return p;
}

inline FlowPreset preset(std::string_view name, const PresetOverrides& o = {}) {
  FlowPreset p = default_preset(name);
  FlowConfig& c = p.config;
  if (o.dt) c.dt = *o.dt;
  if (o.final_time) p.final_time = *o.final_time;
  if (o.vertices) p.initial.vertices = *o.vertices;
  if (o.mesh_weight) c.mesh_weight = *o.mesh_weight;
  if (o.constraints) c.constraints = *o.constraints;
  if (o.metric) c.metric = *o.metric;
  if (o.spontaneous_curvature) c.spontaneous_curvature = *o.spontaneous_curvature;
  if (o.beta_nu2) c.beta_nu2 = *o.beta_nu2;
  if (o.beta_nu4) c.beta_nu4 = *o.beta_nu4;
  if (o.beta_tau) c.beta_tau = *o.beta_tau;
  if (o.shift_geom) c.shift_geom = *o.shift_geom;
  if (o.shift_mesh) c.shift_mesh = *o.shift_mesh;
  if (o.newton_tolerance) c.newton.tolerance = *o.newton_tolerance;
  if (o.newton_max_iterations) c.newton.max_iterations = *o.newton_max_iterations;
  if (o.warm_start) c.newton.warm_start = *o.warm_start;
  try {
    c.validate();
  } catch (const Error& e) {
    throw Error(ErrorKind::InvalidOverride, e.what());
  }
  if (p.initial.vertices < 3) throw Error(ErrorKind::InvalidOverride, "at least 3 vertices required");
  if (!(p.final_time > 0.0)) throw Error(ErrorKind::InvalidOverride, "final time must be positive");
  return p;
}

}  // namespace dualsav
