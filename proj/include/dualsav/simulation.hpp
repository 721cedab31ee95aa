#pragma once

#include <chrono>
#include <cmath>
#include <cstddef>
#include <functional>
#include <optional>
#include <vector>

#include "dualsav/diagnostics.hpp"
#include "dualsav/flows.hpp"
#include "dualsav/stepper.hpp"

namespace dualsav {

struct Snapshot {
  double time = 0.0;
  std::vector<Vec2> vertices;
};

struct RunResult {
  std::vector<StepDiagnostics> history;
  RunSummary summary;
  PolygonalCurve final_curve;
  std::vector<Snapshot> snapshots;
  std::vector<double> step_seconds;
  int response_solves_per_step = 0;
  double min_mesh_denominator = std::numeric_limits<double>::infinity();
  bool all_dissipation_checks = true;
  std::optional<double> radius_error;  // max_j | |x_j| - R(T) | when an exact solution exists
};

/// Called after every accepted step with the new curve and its report.
using StepObserver = std::function<void(std::size_t step, const PolygonalCurve&, const StepReport&)>;

/// Steps per final time; the final time must be an integer multiple of dt.
inline std::size_t step_count(double final_time, double dt) {
  const double ratio = final_time / dt;
  const double rounded = std::round(ratio);
  if (std::abs(ratio - rounded) > 1e-9 * std::max(1.0, ratio) || rounded < 1.0)
    throw Error(ErrorKind::InvalidRunSpec, "final time is not an integer multiple of dt");
  return static_cast<std::size_t>(rounded);
}

inline RunResult simulate(const FlowPreset& preset, std::vector<double> snapshot_times = {},
                          const StepObserver& observer = {}) {
  const FlowConfig& cfg = preset.config;
  cfg.validate();
  const std::size_t steps = step_count(preset.final_time, cfg.dt);
  std::sort(snapshot_times.begin(), snapshot_times.end());
  std::vector<std::size_t> snapshot_steps;
  for (double t : snapshot_times) {
    if (t < -1e-12 || t > preset.final_time + 1e-12)
      throw Error(ErrorKind::InvalidRunSpec, "snapshot time outside [0, T]");
    snapshot_steps.push_back(static_cast<std::size_t>(std::llround(t / cfg.dt)));
  }

  PolygonalCurve curve = make_initial_curve(preset.initial);
  SavState sav = SavState::initial(curve, cfg);
  const ConstraintTargets targets = ConstraintTargets::from_curve(curve, cfg);
  const Baseline baseline = Baseline::of(curve);

  RunResult out{.final_curve = curve};
  out.history.reserve(steps + 1);
  out.history.push_back(step_diagnostics(curve, sav, cfg, baseline));
  out.step_seconds.reserve(steps);
  auto snap = [&](std::size_t n) {
    for (std::size_t s : snapshot_steps)
      if (s == n) out.snapshots.push_back({static_cast<double>(n) * cfg.dt, {curve.vertices().begin(), curve.vertices().end()}});
  };
  snap(0);

  std::vector<double> lambdas;
  for (std::size_t n = 1; n <= steps; ++n) {
    const auto t0 = std::chrono::steady_clock::now();
    StepResult r = advance(curve, sav, cfg, targets, lambdas);
    const auto t1 = std::chrono::steady_clock::now();
    out.step_seconds.push_back(std::chrono::duration<double>(t1 - t0).count());
    curve = std::move(r.curve);
    sav = r.sav;
    lambdas = r.report.multipliers;
    out.response_solves_per_step = r.report.response_solves;
    out.min_mesh_denominator = std::min(out.min_mesh_denominator, r.report.mesh_denominator);
    out.all_dissipation_checks =
        out.all_dissipation_checks && r.report.dissipation_check_g && r.report.dissipation_check_m;
    out.history.push_back(step_diagnostics(curve, sav, cfg, baseline, &r.report, n, static_cast<double>(n) * cfg.dt));
    if (observer) observer(n, curve, r.report);
    snap(n);
  }
  out.summary = run_summary(out.history);
  if (auto radius = preset.exact_radius(static_cast<double>(steps) * cfg.dt)) {
    double err = 0.0;
    for (const Vec2& x : curve.vertices()) err = std::max(err, std::abs(x.norm() - *radius));
    out.radius_error = err;
  }
  out.final_curve = std::move(curve);
  return out;
}

}  // namespace dualsav
