#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numbers>
#include <optional>
#include <vector>

#include "dualsav/assembly.hpp"
#include "dualsav/config.hpp"
#include "dualsav/curve.hpp"
#include "dualsav/stepper.hpp"

namespace dualsav {

struct Baseline {
  double area = 0.0;
  double length = 0.0;

  static Baseline of(const PolygonalCurve& c) { return {c.area(), c.length()}; }
};

struct StepDiagnostics {
  std::size_t step = 0;
  double time = 0.0;
  double q_mesh = 1.0;
  double e_area = 0.0;
  double e_length = 0.0;
  double r_g_sq = 0.0;
  double r_m_sq = 0.0;
  double e_geom = 0.0;  // original geometric energy, unshifted
  double gap_g = 0.0;
  double iso_deficit = 0.0;
  int newton_iterations = 0;
  double min_edge = 0.0;
  std::vector<double> lambdas;
};

inline double mesh_ratio(std::span<const Vec2> x) {
  const std::vector<double> l = edge_lengths(x);
  const auto [lo, hi] = std::minmax_element(l.begin(), l.end());
  return *hi / *lo;
}

/// L^2 / (4 pi A) - 1, zero for a disk.
inline double isoperimetric_deficit(double length, double area) {
  return length * length / (4.0 * std::numbers::pi * area) - 1.0;
}

inline StepDiagnostics step_diagnostics(const PolygonalCurve& curve, const SavState& sav, const FlowConfig& cfg,
                                        const Baseline& baseline, const StepReport* report = nullptr,
                                        std::size_t step = 0, double time = 0.0) {
  StepDiagnostics d;
  d.step = step;
  d.time = time;
  const FrozenFrame frame = build_frame(curve);
  const double area = curve.area();
  const double length = curve.length();
  d.min_edge = frame.edge_lengths.minCoeff();
  d.q_mesh = frame.edge_lengths.maxCoeff() / d.min_edge;
  d.e_area = std::abs(area - baseline.area) / std::abs(baseline.area);
  d.e_length = std::abs(length - baseline.length) / std::abs(baseline.length);
  d.r_g_sq = sav.r_g * sav.r_g;
  d.r_m_sq = sav.r_m * sav.r_m;
  d.e_geom = geometric_energy(frame, cfg);
  d.gap_g = std::abs(d.r_g_sq - (d.e_geom + cfg.shift_geom));
  d.iso_deficit = isoperimetric_deficit(length, area);
  if (report) {
    d.newton_iterations = report->newton_iterations;
    d.lambdas = report->multipliers;
  } else {
    d.lambdas.assign(cfg.num_constraints(), 0.0);
  }
  return d;
}

struct RunSummary {
  std::size_t steps = 0;
  double max_q = 0.0;
  double final_q = 0.0;
  double max_e_area = 0.0;
  double max_e_length = 0.0;
  double min_edge = std::numeric_limits<double>::infinity();
  double avg_newton_iterations = 0.0;
  double initial_gap = 0.0;
  double final_gap = 0.0;
  double initial_e_geom = 0.0;
  double final_e_geom = 0.0;
  double final_iso_deficit = 0.0;
  bool r_g_sq_monotone = true;
  bool r_m_sq_monotone = true;
};

/// Run-level statistics over the full history; the first entry is t = 0 and
/// does not count towards the Newton average.
inline RunSummary run_summary(const std::vector<StepDiagnostics>& history) {
  if (history.empty()) throw Error(ErrorKind::InvalidRunSpec, "run_summary needs a nonempty history");
  RunSummary s;
  s.steps = history.size() - 1;
  double iters = 0.0;
  for (std::size_t n = 0; n < history.size(); ++n) {
    const StepDiagnostics& d = history[n];
    s.max_q = std::max(s.max_q, d.q_mesh);
    s.max_e_area = std::max(s.max_e_area, d.e_area);
    s.max_e_length = std::max(s.max_e_length, d.e_length);
    s.min_edge = std::min(s.min_edge, d.min_edge);
    if (n > 0) {
      iters += d.newton_iterations;
      if (d.r_g_sq > history[n - 1].r_g_sq) s.r_g_sq_monotone = false;
      if (d.r_m_sq > history[n - 1].r_m_sq) s.r_m_sq_monotone = false;
    }
  }
  const StepDiagnostics& first = history.front();
  const StepDiagnostics& last = history.back();
  s.avg_newton_iterations = s.steps > 0 ? iters / static_cast<double>(s.steps) : 0.0;
  s.final_q = last.q_mesh;
  s.initial_gap = first.gap_g;
  s.final_gap = last.gap_g;
  s.initial_e_geom = first.e_geom;
  s.final_e_geom = last.e_geom;
  s.final_iso_deficit = last.iso_deficit;
  return s;
}

}  // namespace dualsav
