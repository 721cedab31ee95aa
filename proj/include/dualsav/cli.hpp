#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "dualsav/serialize.hpp"
#include "dualsav/simulation.hpp"

namespace dualsav {

namespace fs = std::filesystem;

struct EmitFlags {
  bool diagnostics = true;
  bool snapshots = true;
  bool summary = true;
};

struct RunSpec {
  std::string preset_name = "csf";
  PresetOverrides overrides;
  fs::path output_dir = "out";
  std::vector<double> snapshot_times;
  EmitFlags emit;
  std::optional<std::vector<double>> sweep;
  std::optional<std::vector<MeshWeight>> compare;

  FlowPreset resolve() const { return preset(preset_name, overrides); }
};

/// Checks the snapshot grid against the resolved preset: every time must lie in
/// [0, T] and on a step boundary.
inline void validate_snapshot_times(const std::vector<double>& times, const FlowPreset& p) {
  step_count(p.final_time, p.config.dt);
  for (double t : times) {
    if (t < 0.0 || t > p.final_time * (1.0 + 1e-12))
      throw Error(ErrorKind::InvalidRunSpec, "snapshot time " + std::to_string(t) + " outside [0, T]");
    const double k = t / p.config.dt;
    if (std::abs(k - std::round(k)) > 1e-9 * std::max(1.0, k))
      throw Error(ErrorKind::InvalidRunSpec, "snapshot time " + std::to_string(t) + " is not on the step grid");
  }
}

inline RunSpec run_spec_from_json(const json& j) {
  if (!j.is_object()) throw Error(ErrorKind::InvalidRunSpec, "run configuration must be a JSON object");
  RunSpec s;
  try {
    for (const auto& [key, v] : j.items()) {
      if (key == "preset") s.preset_name = v.get<std::string>();
      else if (key == "overrides") s.overrides = overrides_from_json(v);
      else if (key == "output_dir") s.output_dir = v.get<std::string>();
      else if (key == "snapshot_times") s.snapshot_times = v.get<std::vector<double>>();
      else if (key == "emit") {
        s.emit.diagnostics = v.value("diagnostics", true);
        s.emit.snapshots = v.value("snapshots", true);
        s.emit.summary = v.value("summary", true);
      } else if (key == "sweep") s.sweep = v.get<std::vector<double>>();
      else if (key == "compare") {
        std::vector<MeshWeight> w;
        for (const auto& name : v) w.push_back(weight_from_string(name.get<std::string>()));
        s.compare = w;
      } else throw Error(ErrorKind::InvalidRunSpec, "unknown key '" + key + "'");
    }
  } catch (const json::exception& e) {
    throw Error(ErrorKind::InvalidRunSpec, e.what());
  }
  const FlowPreset p = s.resolve();
  validate_snapshot_times(s.snapshot_times, p);
  return s;
}

inline RunSpec load_run_spec(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Io, "cannot open " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw Error(ErrorKind::InvalidRunSpec, e.what());
  }
  return run_spec_from_json(j);
}

inline std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline void write_diagnostics_csv(std::ostream& os, const std::vector<StepDiagnostics>& history,
                                  std::size_t num_constraints) {
  os << "step,time,Q_mesh,e_A,e_L,r_g_sq,r_m_sq,E_geom,gap_g,iso_deficit,newton_iters,min_edge";
  for (std::size_t i = 1; i <= num_constraints; ++i) os << ",lambda_" << i;
  os << '\n';
  for (const StepDiagnostics& d : history) {
    os << d.step << ',' << format_double(d.time) << ',' << format_double(d.q_mesh) << ',' << format_double(d.e_area)
       << ',' << format_double(d.e_length) << ',' << format_double(d.r_g_sq) << ',' << format_double(d.r_m_sq) << ','
       << format_double(d.e_geom) << ',' << format_double(d.gap_g) << ',' << format_double(d.iso_deficit) << ','
       << d.newton_iterations << ',' << format_double(d.min_edge);
    for (std::size_t i = 0; i < num_constraints; ++i)
      os << ',' << format_double(i < d.lambdas.size() ? d.lambdas[i] : 0.0);
    os << '\n';
  }
}

inline void write_snapshots_csv(std::ostream& os, const std::vector<Snapshot>& snapshots) {
  os << "time,vertex,x,y\n";
  for (const Snapshot& s : snapshots)
    for (std::size_t j = 0; j < s.vertices.size(); ++j)
      os << format_double(s.time) << ',' << j << ',' << format_double(s.vertices[j].x()) << ','
         << format_double(s.vertices[j].y()) << '\n';
}

/// Mean wall-clock per step, the first (warm-up) step excluded.
inline double mean_step_seconds(const std::vector<double>& seconds) {
  if (seconds.size() < 2) return seconds.empty() ? 0.0 : seconds.front();
  double total = 0.0;
  for (std::size_t i = 1; i < seconds.size(); ++i) total += seconds[i];
  return total / static_cast<double>(seconds.size() - 1);
}

inline json summary_json(const FlowPreset& p, const RunResult& r) {
  json j = to_json(r.summary);
  j["response_solves_per_step"] = r.response_solves_per_step;
  j["min_mesh_denominator"] = r.min_mesh_denominator;
  j["all_dissipation_checks"] = r.all_dissipation_checks;
  j["radius_error"] = r.radius_error ? json(*r.radius_error) : json(nullptr);
  j["wall_clock"] = {{"mean_step_seconds", mean_step_seconds(r.step_seconds)},
                     {"timed_steps", r.step_seconds.size() > 1 ? r.step_seconds.size() - 1 : r.step_seconds.size()},
                     {"warmup_steps_excluded", r.step_seconds.size() > 1 ? 1 : 0}};
  j["config"] = to_json(p);
  return j;
}

inline json error_record(ErrorKind kind, const std::string& message) {
  return {{"error", {{"kind", std::string(to_string(kind))}, {"message", message}}}};
}

namespace detail {

inline void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::Io, "cannot write " + path.string());
  out << text;
  if (!out) throw Error(ErrorKind::Io, "write failed for " + path.string());
}

inline void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error(ErrorKind::Io, "cannot create " + dir.string() + ": " + ec.message());
}

}  // namespace detail

/// One simulation written to its own directory.
inline RunResult run_job(const FlowPreset& p, const std::vector<double>& snapshot_times, const EmitFlags& emit,
                         const fs::path& dir) {
  validate_snapshot_times(snapshot_times, p);
  detail::ensure_dir(dir);
  RunResult r = simulate(p, snapshot_times);
  if (emit.diagnostics) {
    std::ostringstream os;
    write_diagnostics_csv(os, r.history, p.config.constraints.size());
    detail::write_text(dir / "diagnostics.csv", os.str());
  }
  if (emit.snapshots) {
    std::ostringstream os;
    write_snapshots_csv(os, r.snapshots);
    detail::write_text(dir / "snapshots.csv", os.str());
  }
  if (emit.summary) detail::write_text(dir / "summary.json", summary_json(p, r).dump(2) + "\n");
  return r;
}

/// EOC_k = log(e_k / e_{k+1}) / log 2 for successively halved step sizes.
inline std::vector<double> measure_convergence(const std::vector<std::pair<double, double>>& errors) {
  if (errors.size() < 2) throw Error(ErrorKind::MismatchedSweep, "need at least two (dt, error) pairs");
  std::vector<double> eoc;
  for (std::size_t k = 0; k + 1 < errors.size(); ++k) {
    const auto [dt0, e0] = errors[k];
    const auto [dt1, e1] = errors[k + 1];
    if (!(dt0 > 0.0) || !(dt1 > 0.0) || std::abs(dt0 / dt1 - 2.0) > 1e-9)
      throw Error(ErrorKind::MismatchedSweep, "step sizes do not halve successively");
    if (!(e0 > 0.0) || !(e1 > 0.0) || !std::isfinite(e0) || !std::isfinite(e1))
      throw Error(ErrorKind::MismatchedSweep, "errors must be positive and finite");
    eoc.push_back(std::log(e0 / e1) / std::log(2.0));
  }
  return eoc;
}

/// Worker count for sweep/compare jobs, read from DUALSAV_THREADS.
inline unsigned job_threads() {
  if (const char* env = std::getenv("DUALSAV_THREADS")) {
    char* end = nullptr;
    const long n = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && n > 0) return static_cast<unsigned>(n);
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

struct JobOutcome {
  std::optional<RunResult> result;
  std::optional<json> error;
};

struct Job {
  FlowPreset preset;
  fs::path dir;
};

namespace detail {

inline JobOutcome guarded_job(const Job& job, const RunSpec& spec) {
  JobOutcome out;
  try {
    out.result = run_job(job.preset, spec.snapshot_times, spec.emit, job.dir);
  } catch (const Error& e) {
    out.error = error_record(e.kind(), e.what());
  } catch (const std::exception& e) {
    out.error = error_record(ErrorKind::Io, e.what());
  }
  if (out.error) {
    std::error_code ec;
    fs::create_directories(job.dir, ec);
    if (!ec) std::ofstream(job.dir / "error.json", std::ios::binary) << out.error->dump() << '\n';
  }
  return out;
}

}  // namespace detail

/// Runs independent jobs on a small worker pool; outcomes keep the job order.
inline std::vector<JobOutcome> run_jobs(const std::vector<Job>& jobs, const RunSpec& spec,
                                        unsigned threads = job_threads()) {
  std::vector<JobOutcome> out(jobs.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < jobs.size(); i = next++) out[i] = detail::guarded_job(jobs[i], spec);
  };
  const unsigned n = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(jobs.size())));
  std::vector<std::thread> pool;
  for (unsigned t = 1; t < n; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  return out;
}

inline int report_error(const json& record, std::ostream& err = std::cerr) {
  err << record.dump() << '\n';
  return 1;
}

inline int report_error(const Error& e, std::ostream& err = std::cerr) {
  return report_error(error_record(e.kind(), e.what()), err);
}

inline int run(const RunSpec& spec, std::ostream& err = std::cerr) {
  try {
    const FlowPreset p = spec.resolve();
    const auto outcome = detail::guarded_job({p, spec.output_dir}, spec);
    if (outcome.error) return report_error(*outcome.error, err);
    return 0;
  } catch (const Error& e) {
    return report_error(e, err);
  }
}

inline std::string dt_label(double dt) {
  std::string s = format_double(dt);
  std::replace(s.begin(), s.end(), '+', 'p');
  return "dt_" + s;
}

/// One job per dt; writes sweep.csv with the error column (when the preset has
/// an exact solution), the EOC per halving and the final SAV gap.
inline int sweep(const RunSpec& spec, std::ostream& err = std::cerr) {
  try {
    if (!spec.sweep || spec.sweep->empty()) throw Error(ErrorKind::InvalidRunSpec, "sweep needs a list of dt values");
    std::vector<Job> jobs;
    for (double dt : *spec.sweep) {
      PresetOverrides o = spec.overrides;
      o.dt = dt;
      jobs.push_back({preset(spec.preset_name, o), spec.output_dir / dt_label(dt)});
    }
    const auto outcomes = run_jobs(jobs, spec);
    for (const auto& o : outcomes)
      if (o.error) return report_error(*o.error, err);

    std::vector<std::pair<double, double>> errs, gaps;
    bool have_errors = true;
    for (std::size_t k = 0; k < jobs.size(); ++k) {
      const RunResult& r = *outcomes[k].result;
      have_errors = have_errors && r.radius_error.has_value();
      if (r.radius_error) errs.emplace_back(jobs[k].preset.config.dt, *r.radius_error);
      gaps.emplace_back(jobs[k].preset.config.dt, r.summary.final_gap);
    }
    std::vector<double> eoc, eoc_gap;
    // EOC columns stay empty unless the dt list halves successively.
    auto try_eoc = [](const std::vector<std::pair<double, double>>& e) {
      try {
        return measure_convergence(e);
      } catch (const Error&) {
        return std::vector<double>{};
      }
    };
    if (jobs.size() > 1) {
      if (have_errors) eoc = try_eoc(errs);
      eoc_gap = try_eoc(gaps);
    }
    std::ostringstream os;
    os << "dt,steps,error,eoc,gap_g,eoc_gap,max_Q,final_Q,max_e_A,max_e_L,avg_newton_iters,response_solves\n";
    for (std::size_t k = 0; k < jobs.size(); ++k) {
      const RunResult& r = *outcomes[k].result;
      os << format_double(jobs[k].preset.config.dt) << ',' << r.summary.steps << ','
         << (r.radius_error ? format_double(*r.radius_error) : "") << ','
         << (k > 0 && !eoc.empty() ? format_double(eoc[k - 1]) : "") << ',' << format_double(r.summary.final_gap)
         << ',' << (k > 0 && !eoc_gap.empty() ? format_double(eoc_gap[k - 1]) : "") << ','
         << format_double(r.summary.max_q) << ',' << format_double(r.summary.final_q) << ','
         << format_double(r.summary.max_e_area) << ',' << format_double(r.summary.max_e_length) << ','
         << format_double(r.summary.avg_newton_iterations) << ',' << r.response_solves_per_step << '\n';
    }
    detail::write_text(spec.output_dir / "sweep.csv", os.str());
    return 0;
  } catch (const Error& e) {
    return report_error(e, err);
  }
}

/// One job per mesh-weight strategy; writes compare.csv with paired summaries.
inline int compare(const RunSpec& spec, std::ostream& err = std::cerr) {
  try {
    if (!spec.compare || spec.compare->empty())
      throw Error(ErrorKind::InvalidRunSpec, "compare needs a list of mesh weights");
    std::vector<Job> jobs;
    for (MeshWeight w : *spec.compare) {
      PresetOverrides o = spec.overrides;
      o.mesh_weight = w;
      jobs.push_back({preset(spec.preset_name, o), spec.output_dir / std::string(to_string(w))});
    }
    const auto outcomes = run_jobs(jobs, spec);
    for (const auto& o : outcomes)
      if (o.error) return report_error(*o.error, err);
    std::ostringstream os;
    os << "mesh_weight,max_Q,final_Q,min_edge,max_e_A,max_e_L,avg_newton_iters,final_E_geom,final_gap_g\n";
    for (std::size_t k = 0; k < jobs.size(); ++k) {
      const RunSummary& s = outcomes[k].result->summary;
      os << to_string(jobs[k].preset.config.mesh_weight) << ',' << format_double(s.max_q) << ','
         << format_double(s.final_q) << ',' << format_double(s.min_edge) << ',' << format_double(s.max_e_area) << ','
         << format_double(s.max_e_length) << ',' << format_double(s.avg_newton_iterations) << ','
         << format_double(s.final_e_geom) << ',' << format_double(s.final_gap) << '\n';
    }
    detail::write_text(spec.output_dir / "compare.csv", os.str());
    return 0;
  } catch (const Error& e) {
    return report_error(e, err);
  }
}

}  // namespace dualsav
