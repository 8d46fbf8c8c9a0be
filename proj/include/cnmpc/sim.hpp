/// \file cnmpc/sim.hpp
/// \brief Closed-loop receding-horizon simulation of the TfC problem, CSV
///        logging and run comparison.

#pragma once

#include <algorithm>
#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <functional>
#include <iomanip>
#include <limits>
#include <optional>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "cnmpc/continuation.hpp"
#include "cnmpc/krylov.hpp"
#include "cnmpc/precond.hpp"
#include "cnmpc/tfc.hpp"

namespace cnmpc::sim {

struct SimConfig {
  /// 1-4 for the reference experiments, 0 for a custom setup.
  int case_preset = 0;
  double dt = 0.02;
  std::size_t N = 10;
  double h = 1e-5;
  double tol = 1e-5;
  int k_max = 10;
  bool precond_enabled = false;
  double t_p = 0.2;
  bool symmetrize = false;
  KrylovMethod solver = KrylovMethod::gmres;
  /// Simulated-time cap in seconds.
  double t_end = 2.0;
  /// Distance to the target that counts as arrival.
  double stop_radius = 1e-2;
  double newton_tol = 1e-6;
  int newton_max = 50;
  /// Worker threads for preconditioner assembly (1 = sequential).
  unsigned threads = 1;
  tfc::TfcConstants constants{};

  void validate() const {
    auto bad = [](const std::string& what) { throw std::invalid_argument("SimConfig: " + what); };
    if (case_preset < 0 || case_preset > 4) bad("case must be 1-4 (or 0 for custom)");
    if (!(dt > 0.0)) bad("dt must be positive");
    if (N < 1) bad("N must be >= 1");
    if (!(h > 0.0)) bad("h must be positive");
    if (!(tol >= 0.0)) bad("tol must be nonnegative");
    if (k_max < 1) bad("k_max must be >= 1");
    if (precond_enabled && !(t_p > 0.0)) bad("t_p must be positive");
    if (!(t_end >= 0.0)) bad("t_end must be nonnegative");
    if (!(stop_radius >= 0.0)) bad("stop_radius must be nonnegative");
    if (!(newton_tol >= 0.0)) bad("newton_tol must be nonnegative");
    if (newton_max < 0) bad("newton_max must be >= 0");
    if (!(constants.r_u > 0.0)) bad("r_u must be positive");
    if (!(constants.w_d > 0.0)) bad("w_d must be positive");
  }
};

/// The four reference experiments:
/// (1) no preconditioning, k_max = 10; (2) t_p = 0.2, k_max = 1;
/// (3) t_p = 0.4, k_max = 2; (4) t_p = 0.4, k_max = 10.
inline SimConfig preset(int case_number) {
  SimConfig cfg;
  cfg.case_preset = case_number;
  switch (case_number) {
    case 1:
      cfg.precond_enabled = false;
      cfg.k_max = 10;
      break;
    case 2:
      cfg.precond_enabled = true;
      cfg.t_p = 0.2;
      cfg.k_max = 1;
      break;
    case 3:
      cfg.precond_enabled = true;
      cfg.t_p = 0.4;
      cfg.k_max = 2;
      break;
    case 4:
      cfg.precond_enabled = true;
      cfg.t_p = 0.4;
      cfg.k_max = 10;
      break;
    default:
      throw std::invalid_argument("preset: case must be 1, 2, 3 or 4");
  }
  return cfg;
}

struct StepRecord {
  std::size_t step = 0;
  double t = 0.0;
  double x = 0.0;
  double y = 0.0;
  double u = 0.0;
  double u_d = 0.0;
  /// Time-to-go after the update.
  double p = 0.0;
  /// ||F|| before the update.
  double norm_F = 0.0;
  double krylov_residual = 0.0;
  int iterations = 0;
  bool rebuilt = false;

  bool operator==(const StepRecord&) const = default;
};

struct SimResult {
  std::vector<StepRecord> records;
  std::optional<double> arrival_time;
  std::size_t total_map_evals = 0;
  std::size_t total_rebuild_evals = 0;
  /// Dimension of the decision vector.
  std::size_t m = 0;
  double cold_start_norm_F = 0.0;
  int cold_start_iterations = 0;
  int degraded_steps = 0;
  std::vector<std::string> warnings;
};

/// Supplies the next measured state in place of the model prediction.
/// Receives the step index, its time, the current state, the applied
/// control and the model prediction.
using StateHook = std::function<Vec(std::size_t, double, ConstSpan, ConstSpan, ConstSpan)>;

class ColdStartFailure : public std::runtime_error {
 public:
  ColdStartFailure(const std::string& what, double norm_F) : std::runtime_error(what), norm_F_(norm_F) {}
  double norm_F() const noexcept { return norm_F_; }

 private:
  double norm_F_;
};

/// Cold start at t0, then per step: rebuild the preconditioner on schedule,
/// take one continuation step, record, and advance the state by an Euler
/// step of the model. Stops on arrival (distance to the target within
/// stop_radius, or time-to-go at most one sample) or at t_end.
inline SimResult run_simulation(const SimConfig& cfg, const StateHook& measure = {}) {
  cfg.validate();
  const tfc::TfcConstants& c = cfg.constants;
  const OcpSpec spec = tfc::make_tfc_spec(c, cfg.N);

  SimResult result;
  result.m = spec.dims.m();

  Vec x{c.x0, c.y0};
  NewtonOptions newton;
  newton.tol = cfg.newton_tol;
  newton.max_iterations = cfg.newton_max;
  newton.h = cfg.h;
  newton.assembly.threads = cfg.threads;
  InitialSolveResult cold;
  try {
    cold = initial_solve(spec, x, c.t0, tfc::tfc_initial_guess(c, cfg.N), newton);
  } catch (const ColdStartError& e) {
    throw ColdStartFailure(std::string("cold start failed (||F|| = ") + std::to_string(e.best().norm_F) +
                               "): " + e.what(),
                           e.best().norm_F);
  }
  result.cold_start_norm_F = cold.norm_F;
  result.cold_start_iterations = cold.iterations;
  if (!cold.converged) {
    std::ostringstream msg;
    msg << "cold start did not reach ||F|| <= " << cfg.newton_tol << " in " << cold.iterations
        << " Newton steps (achieved ||F|| = " << cold.norm_F << ")";
    throw ColdStartFailure(msg.str(), cold.norm_F);
  }

  ContinuationSettings settings;
  settings.h = cfg.h;
  settings.dt = cfg.dt;
  settings.method = cfg.solver;
  settings.krylov.k_max = cfg.k_max;
  settings.krylov.tol = cfg.tol;
  ContinuationEngine engine(cold.U, settings);

  PrecondConfig pcfg;
  pcfg.enabled = cfg.precond_enabled;
  pcfg.t_p = cfg.t_p;
  pcfg.symmetrize_before_factor = cfg.symmetrize;
  pcfg.assembly.threads = cfg.threads;
  PrecondState pstate;

  for (std::size_t k = 0;; ++k) {
    const double t = c.t0 + static_cast<double>(k) * cfg.dt;
    if (t >= c.t0 + cfg.t_end - 1e-9 * cfg.dt) break;

    StepRecord rec;
    rec.step = k;
    rec.t = t;
    rec.x = x[0];
    rec.y = x[1];

    if (should_rebuild(pcfg, pstate, t, cfg.dt)) {
      const int before = pstate.rebuild_count;
      pstate = rebuild(spec, engine.U(), x, t, cfg.h, pcfg, std::move(pstate));
      result.total_rebuild_evals += result.m;
      rec.rebuilt = pstate.rebuild_count > before;
      if (!rec.rebuilt) result.warnings.push_back(pstate.last_warning);
    }

    const StepOutcome out = continuation_step(engine, spec, x, t, LuPreconditioner(pcfg, pstate));
    const StepDiagnostics& d = out.diagnostics;
    rec.u = out.u_applied[0];
    rec.u_d = out.u_applied[1];
    rec.p = engine.U().p()[0];
    rec.norm_F = d.norm_F;
    rec.krylov_residual = d.krylov_residual;
    rec.iterations = d.iterations;
    result.total_map_evals += d.map_evaluations;
    if (d.degraded) {
      ++result.degraded_steps;
      result.warnings.push_back("step " + std::to_string(k) + ": Krylov solve failed, U kept");
    }
    result.records.push_back(rec);

    const double dist = std::hypot(x[0] - c.x_f, x[1] - c.y_f);
    if (dist <= cfg.stop_radius || rec.p <= cfg.dt) {
      result.arrival_time = t;
      break;
    }

    const auto rate = tfc::tfc_dynamics(c, x, out.u_applied, 1.0);
    Vec predicted{x[0] + cfg.dt * rate[0], x[1] + cfg.dt * rate[1]};
    x = measure ? measure(k, t, x, out.u_applied, predicted) : std::move(predicted);
    if (x.size() != 2 || !all_finite(x)) throw std::runtime_error("run_simulation: invalid state at step " + std::to_string(k + 1));
  }
  return result;
}

inline constexpr const char* kCsvHeader = "step,t,x,y,u,u_d,p,norm_F,krylov_residual,iterations,rebuilt";

/// Round-trip exact decimal (17 significant digits).
inline std::string format_real(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline void write_csv(const SimResult& result, std::ostream& os) {
  os << kCsvHeader << '\n';
  for (const StepRecord& r : result.records) {
    os << r.step << ',' << format_real(r.t) << ',' << format_real(r.x) << ',' << format_real(r.y) << ','
       << format_real(r.u) << ',' << format_real(r.u_d) << ',' << format_real(r.p) << ',' << format_real(r.norm_F)
       << ',' << format_real(r.krylov_residual) << ',' << r.iterations << ',' << (r.rebuilt ? 1 : 0) << '\n';
  }
}

inline void write_csv(const SimResult& result, const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot open '" + path + "' for writing: " + std::strerror(errno));
  write_csv(result, os);
  os.flush();
  if (!os) throw std::runtime_error("write to '" + path + "' failed");
}

namespace detail {
inline double parse_csv_real(const std::string& cell) {
  char* end = nullptr;
  const double v = std::strtod(cell.c_str(), &end);
  if (cell.empty() || end != cell.c_str() + cell.size()) throw std::invalid_argument(cell);
  return v;
}
}  // namespace detail

inline std::vector<StepRecord> read_csv(std::istream& is, const std::string& source = "<stream>") {
  std::string line;
  if (!std::getline(is, line) || line != kCsvHeader)
    throw std::runtime_error(source + ": missing or unexpected CSV header");
  std::vector<StepRecord> out;
  std::size_t lineno = 1;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    for (std::string cell; std::getline(ss, cell, ',');) cells.push_back(cell);
    if (cells.size() != 11) throw std::runtime_error(source + ":" + std::to_string(lineno) + ": expected 11 fields");
    try {
      StepRecord r;
      r.step = std::stoul(cells[0]);
      r.t = detail::parse_csv_real(cells[1]);
      r.x = detail::parse_csv_real(cells[2]);
      r.y = detail::parse_csv_real(cells[3]);
      r.u = detail::parse_csv_real(cells[4]);
      r.u_d = detail::parse_csv_real(cells[5]);
      r.p = detail::parse_csv_real(cells[6]);
      r.norm_F = detail::parse_csv_real(cells[7]);
      r.krylov_residual = detail::parse_csv_real(cells[8]);
      r.iterations = std::stoi(cells[9]);
      r.rebuilt = std::stoi(cells[10]) != 0;
      out.push_back(r);
    } catch (const std::logic_error&) {
      throw std::runtime_error(source + ":" + std::to_string(lineno) + ": malformed field");
    }
  }
  return out;
}

inline std::vector<StepRecord> read_csv(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open '" + path + "': " + std::strerror(errno));
  return read_csv(is, path);
}

/// Rebuilds a SimResult from logged records. Map-evaluation totals assume
/// one evaluation per Krylov iteration and m per rebuild.
inline SimResult result_from_records(std::vector<StepRecord> records, std::size_t m) {
  SimResult r;
  r.m = m;
  r.records = std::move(records);
  for (const StepRecord& s : r.records) {
    r.total_map_evals += static_cast<std::size_t>(s.iterations);
    if (s.rebuilt) r.total_rebuild_evals += m;
  }
  return r;
}

struct ComparisonReport {
  std::size_t common_steps = 0;
  std::size_t baseline_steps = 0;
  std::size_t candidate_steps = 0;
  double baseline_iterations = 0, candidate_iterations = 0;
  double baseline_solver_evals = 0, candidate_solver_evals = 0;
  double baseline_total_evals = 0, candidate_total_evals = 0;
  double baseline_max_F = 0, candidate_max_F = 0;
  double baseline_median_F = 0, candidate_median_F = 0;
  /// candidate / baseline; empty when there are no common steps.
  std::optional<double> iteration_ratio;
  std::optional<double> solver_eval_ratio;
  std::optional<double> total_eval_ratio;
  std::optional<double> max_F_ratio;
  std::optional<double> median_F_ratio;
  std::vector<std::string> warnings;
};

inline double median(std::vector<double> v) {
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

namespace detail {
inline double ratio(double candidate, double baseline) {
  if (baseline == 0.0) return candidate == 0.0 ? 1.0 : std::numeric_limits<double>::infinity();
  return candidate / baseline;
}
}  // namespace detail

/// Compares two runs over their common prefix of steps (same index and
/// time). All sums and statistics are taken over that prefix.
inline ComparisonReport compare_runs(const SimResult& baseline, const SimResult& candidate) {
  ComparisonReport rep;
  rep.baseline_steps = baseline.records.size();
  rep.candidate_steps = candidate.records.size();
  std::size_t n = 0;
  const std::size_t limit = std::min(rep.baseline_steps, rep.candidate_steps);
  while (n < limit) {
    const StepRecord& a = baseline.records[n];
    const StepRecord& b = candidate.records[n];
    if (a.step != b.step || std::abs(a.t - b.t) > 1e-9 * std::max(1.0, std::abs(a.t))) break;
    ++n;
  }
  rep.common_steps = n;
  if (n == 0) {
    rep.warnings.push_back("runs share no common steps; nothing to compare");
    return rep;
  }
  if (n < rep.baseline_steps || n < rep.candidate_steps)
    rep.warnings.push_back("step grids differ; compared the first " + std::to_string(n) + " steps only");

  auto summarize = [n](const SimResult& r, double& iters, double& solver, double& total, double& fmax, double& fmed) {
    std::vector<double> fs;
    for (std::size_t i = 0; i < n; ++i) {
      const StepRecord& s = r.records[i];
      iters += s.iterations;
      fs.push_back(s.norm_F);
      if (s.rebuilt) total += static_cast<double>(r.m);
    }
    solver = iters;
    total += solver;
    fmax = *std::max_element(fs.begin(), fs.end());
    fmed = median(fs);
  };
  summarize(baseline, rep.baseline_iterations, rep.baseline_solver_evals, rep.baseline_total_evals,
            rep.baseline_max_F, rep.baseline_median_F);
  summarize(candidate, rep.candidate_iterations, rep.candidate_solver_evals, rep.candidate_total_evals,
            rep.candidate_max_F, rep.candidate_median_F);
  rep.iteration_ratio = detail::ratio(rep.candidate_iterations, rep.baseline_iterations);
  rep.solver_eval_ratio = detail::ratio(rep.candidate_solver_evals, rep.baseline_solver_evals);
  rep.total_eval_ratio = detail::ratio(rep.candidate_total_evals, rep.baseline_total_evals);
  rep.max_F_ratio = detail::ratio(rep.candidate_max_F, rep.baseline_max_F);
  rep.median_F_ratio = detail::ratio(rep.candidate_median_F, rep.baseline_median_F);
  return rep;
}

inline void write_report_text(const ComparisonReport& r, std::ostream& os) {
  os << "common steps: " << r.common_steps << " (baseline " << r.baseline_steps << ", candidate "
     << r.candidate_steps << ")\n";
  for (const std::string& w : r.warnings) os << "warning: " << w << '\n';
  if (r.common_steps == 0) return;
  auto line = [&os](const char* name, double b, double c, const std::optional<double>& ratio) {
    os << std::left << std::setw(28) << name << std::right << std::setw(14) << b << std::setw(14) << c
       << std::setw(12) << ratio.value_or(std::numeric_limits<double>::quiet_NaN()) << '\n';
  };
  os << std::left << std::setw(28) << "metric" << std::right << std::setw(14) << "baseline" << std::setw(14)
     << "candidate" << std::setw(12) << "ratio" << '\n';
  line("krylov iterations", r.baseline_iterations, r.candidate_iterations, r.iteration_ratio);
  line("map evals (solver)", r.baseline_solver_evals, r.candidate_solver_evals, r.solver_eval_ratio);
  line("map evals (solver+precond)", r.baseline_total_evals, r.candidate_total_evals, r.total_eval_ratio);
  line("max ||F||", r.baseline_max_F, r.candidate_max_F, r.max_F_ratio);
  line("median ||F||", r.baseline_median_F, r.candidate_median_F, r.median_F_ratio);
}

inline void write_report_csv(const ComparisonReport& r, std::ostream& os) {
  os << "metric,baseline,candidate,ratio\n";
  if (r.common_steps == 0) return;
  auto line = [&os](const char* name, double b, double c, const std::optional<double>& ratio) {
    os << name << ',' << format_real(b) << ',' << format_real(c) << ',' << format_real(ratio.value_or(NAN)) << '\n';
  };
  line("iterations", r.baseline_iterations, r.candidate_iterations, r.iteration_ratio);
  line("solver_map_evals", r.baseline_solver_evals, r.candidate_solver_evals, r.solver_eval_ratio);
  line("total_map_evals", r.baseline_total_evals, r.candidate_total_evals, r.total_eval_ratio);
  line("max_norm_F", r.baseline_max_F, r.candidate_max_F, r.max_F_ratio);
  line("median_norm_F", r.baseline_median_F, r.candidate_median_F, r.median_F_ratio);
}

}  // namespace cnmpc::sim
