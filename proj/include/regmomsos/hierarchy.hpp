#pragma once

// Runs over relaxation levels: epsilon schedules, penalized runs with
// Bernstein-Markov constants, bound series and power-law fits.

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "regmomsos/bm_constants.hpp"
#include "regmomsos/conic/solver.hpp"
#include "regmomsos/moment_sos.hpp"

namespace regmomsos {

class NoConstant : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InsufficientData : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class SolverFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class VerificationFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// schedules

enum class ScheduleKind { FixedGrid, DefaultDecay, Penalized, Standard };

struct Schedule {
  ScheduleKind kind = ScheduleKind::Penalized;
  std::vector<double> epsilons;  ///< FixedGrid only

  static Schedule fixed_grid(std::vector<double> eps) { return {ScheduleKind::FixedGrid, std::move(eps)}; }
  static Schedule default_decay() { return {ScheduleKind::DefaultDecay, {}}; }
  static Schedule penalized() { return {ScheduleKind::Penalized, {}}; }
  static Schedule standard() { return {ScheduleKind::Standard, {}}; }

  void validate() const {
    if (kind != ScheduleKind::FixedGrid) return;
    if (epsilons.empty()) throw std::invalid_argument("Schedule: fixed grid needs at least one epsilon");
    for (std::size_t i = 0; i < epsilons.size(); ++i) {
      if (!(epsilons[i] > 0.0 && std::isfinite(epsilons[i]))) {
        throw std::invalid_argument("Schedule: grid epsilons must be positive and finite");
      }
      if (i > 0 && !(epsilons[i] < epsilons[i - 1])) {
        throw std::invalid_argument("Schedule: grid epsilons must be strictly decreasing");
      }
    }
  }
};

/// epsilon_d = min(1/d, 1/(d c_2d)).
inline double default_decay_epsilon(int d, double c2d) {
  if (d < 1) throw std::invalid_argument("default_decay_epsilon: d must be >= 1");
  return std::min(1.0 / d, 1.0 / (d * c2d));
}

// ---------------------------------------------------------------------------
// options and records

struct RunOptions {
  conic::SolverSettings solver;
  VerifyTolerances verify;
  /// Relative gap under which SlowProgress / IterationLimit results are kept.
  double accept_relgap = 1e-5;
  /// Long-double iterations; defaults to on for instances without Slater points.
  std::optional<bool> extended_precision;
  /// Certify with grid-estimated BM constants.
  bool allow_estimated_constant = false;
  int jobs = 1;
};

/// Worker count from REGMOMSOS_JOBS, or `fallback` when unset or invalid.
inline int jobs_from_env(int fallback = 1) {
  const char* s = std::getenv("REGMOMSOS_JOBS");
  if (!s || !*s) return fallback;
  char* end = nullptr;
  const long v = std::strtol(s, &end, 10);
  if (*end != '\0' || v < 1 || v > 1024) return fallback;
  return static_cast<int>(v);
}

struct BoundRecord {
  int d = 0;
  RelaxationMode mode;
  std::optional<double> c2d;
  bool c2d_estimate = false;
  double primal_value = 0.0;   ///< u*, moment side
  double dual_value = 0.0;     ///< v*, the SOS variable v (penalized objective is v* - c_2d t*)
  double residual_norm = 0.0;  ///< t* = ||r*||, recomputed from the certificate
  std::optional<double> certified_bound;
  conic::SolveStatus status = conic::SolveStatus::Optimal;
  double relative_gap = 0.0;
  int iterations = 0;
  bool retried = false;          ///< solved again with a looser gap tolerance
  bool accepted_slow = false;    ///< non-optimal status kept under accept_relgap
  bool extended_precision = false;
  bool slater_absent = false;
  /// |SOC head - ||r||| exceeds 1e-6 on the raw solver output.
  bool soc_head_mismatch = false;
  double verify_residual = 0.0;  ///< identity residual of the raw certificate
  VerificationReport verification;
  Certificate certificate;       ///< polished certificate the bound is computed from
  double wall_ms = 0.0;

  bool accepted() const {
    return status == conic::SolveStatus::Optimal || accepted_slow;
  }

  /// Solver status plus flags, e.g. "SlowProgress|accepted|retried".
  std::string status_label() const {
    std::string s(conic::to_string(status));
    if (accepted_slow) s += "|accepted";
    if (retried) s += "|retried";
    if (slater_absent) s += "|no-slater";
    if (soc_head_mismatch) s += "|t-mismatch";
    return s;
  }
};

struct PowerLawFit {
  double kappa = 0.0;
  double exponent = 0.0;
  double residual = 0.0;  ///< root-mean-square log residual
  std::size_t points = 0;
};

struct RunResult {
  std::vector<BoundRecord> records;
  std::optional<PowerLawFit> fit;
};

// ---------------------------------------------------------------------------
// single level

/// c_2d for the instance, honouring the estimate policy. nullopt when no
/// usable constant exists.
inline std::optional<BMConstant> usable_constant(const POPInstance& inst, int d, bool allow_estimate) {
  auto c = bm_constant(inst.bm_domain, inst.measure, d);
  if (c && c->estimate && !allow_estimate) return std::nullopt;
  return c;
}

inline BoundRecord solve_level(const POPInstance& inst, int d, const RelaxationMode& mode,
                               const RunOptions& opts = {}) {
  const auto t0 = std::chrono::steady_clock::now();
  const Relaxation rel = assemble(inst, d, mode, AssemblyForm::GramStandard);

  BoundRecord rec;
  rec.d = d;
  rec.mode = mode;
  rec.c2d = mode.c2d;
  rec.slater_absent = inst.slater_absent;

  conic::SolverSettings settings = opts.solver;
  settings.extended_precision = opts.extended_precision.value_or(inst.slater_absent);
  rec.extended_precision = settings.extended_precision;

  const auto usable = [&](const conic::ConicSolution& s) {
    if (s.status == conic::SolveStatus::Optimal) return true;
    return (s.status == conic::SolveStatus::SlowProgress || s.status == conic::SolveStatus::IterationLimit) &&
           s.relative_gap <= opts.accept_relgap && s.x.allFinite() && s.s.allFinite();
  };
  conic::ConicSolution sol = conic::solve(rel.program, settings);
  if (sol.status != conic::SolveStatus::Optimal && !usable(sol)) {
    conic::SolverSettings loose = settings;
    loose.gap_tol *= 10.0;
    conic::ConicSolution again = conic::solve(rel.program, loose);
    rec.retried = true;
    if (again.status == conic::SolveStatus::Optimal || usable(again) || !usable(sol)) sol = std::move(again);
  }
  rec.status = sol.status;
  rec.relative_gap = sol.relative_gap;
  rec.iterations = sol.iterations;
  rec.accepted_slow = sol.status != conic::SolveStatus::Optimal && usable(sol);

  const RelaxationValues vals = relaxation_values(rel, sol);
  rec.primal_value = vals.moment_value;
  rec.dual_value = vals.sos_value;
  // the penalized objective is v - c_2d t; the record keeps v itself
  if (mode.kind == ModeKind::Penalized && sol.x.size() == rel.program.num_vars()) {
    rec.dual_value = sol.x[rel.scalar_col];
  }

  if (rec.accepted()) {
    const Certificate raw = recover_certificate(rel, sol);
    rec.verify_residual = l2_norm(identity_defect(inst, raw));
    rec.soc_head_mismatch = mode.has_residual() && std::abs(raw.soc_head - l2_norm(raw.r)) > 1e-6;
    rec.certificate = polish_certificate(inst, raw);
    rec.residual_norm = l2_norm(rec.certificate.r);
    rec.certified_bound = certified_bound(mode, rec.certificate.v, rec.residual_norm);
    rec.verification = verify_certificate(inst, rec.certificate, opts.verify, rec.certified_bound);
  }
  rec.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
  return rec;
}

// ---------------------------------------------------------------------------
// runs

namespace detail {

struct LevelTask {
  int d;
  RelaxationMode mode;
  bool c2d_estimate;
};

inline std::vector<LevelTask> plan_tasks(const POPInstance& inst, int dmin, int dmax, const Schedule& sched,
                                         const RunOptions& opts) {
  std::vector<LevelTask> tasks;
  for (int d = dmin; d <= dmax; ++d) {
    const auto c = usable_constant(inst, d, opts.allow_estimated_constant);
    const bool est = c && c->estimate;
    const std::optional<double> cval = c ? std::optional<double>(c->value) : std::nullopt;
    switch (sched.kind) {
      case ScheduleKind::FixedGrid:
        for (double eps : sched.epsilons) tasks.push_back({d, RelaxationMode::regularized(eps, cval), est});
        break;
      case ScheduleKind::DefaultDecay:
      case ScheduleKind::Penalized:
        if (!c) {
          throw NoConstant("no certified Bernstein-Markov constant for '" + inst.name + "' at d = " +
                           std::to_string(d) + " (domain " + std::string(to_string(inst.bm_domain.kind)) + ")");
        }
        if (sched.kind == ScheduleKind::Penalized) {
          tasks.push_back({d, RelaxationMode::penalized(c->value), est});
        } else {
          tasks.push_back({d, RelaxationMode::regularized(default_decay_epsilon(d, c->value), c->value), est});
        }
        break;
      case ScheduleKind::Standard:
        tasks.push_back({d, RelaxationMode::standard(), false});
        break;
    }
  }
  return tasks;
}

}  // namespace detail

/// Solves every (level, epsilon) pair; records come back ordered by d and
/// then by schedule position whatever the worker count. Failed levels are
/// kept in the result; see check_run.
inline RunResult run_unchecked(const POPInstance& inst, int dmin, int dmax, const Schedule& sched,
                               const RunOptions& opts = {}) {
  inst.validate();
  sched.validate();
  if (dmin > dmax) throw std::invalid_argument("run: dmin must be <= dmax");
  if (dmin < inst.min_level()) {
    throw std::invalid_argument("run: dmin = " + std::to_string(dmin) + " is below the minimal level " +
                                std::to_string(inst.min_level()));
  }
  const auto tasks = detail::plan_tasks(inst, dmin, dmax, sched, opts);

  RunResult out;
  out.records.resize(tasks.size());
  std::vector<std::exception_ptr> errors(tasks.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < tasks.size(); i = next++) {
      try {
        out.records[i] = solve_level(inst, tasks[i].d, tasks[i].mode, opts);
        out.records[i].c2d_estimate = tasks[i].c2d_estimate;
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const int nthreads = std::clamp(opts.jobs, 1, static_cast<int>(std::max<std::size_t>(tasks.size(), 1)));
  if (nthreads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < nthreads; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return out;
}

/// Throws SolverFailure for an unaccepted solve, then VerificationFailure for
/// a certificate that did not verify.
inline void check_run(const RunResult& out) {
  for (const auto& r : out.records) {
    if (!r.accepted()) {
      throw SolverFailure("solver failed at d = " + std::to_string(r.d) + " (" + r.status_label() +
                          ", relative gap " + std::to_string(r.relative_gap) + ")");
    }
  }
  for (const auto& r : out.records) {
    if (!r.verification.passed) {
      throw VerificationFailure("certificate at d = " + std::to_string(r.d) +
                                " failed verification: " + r.verification.message);
    }
  }
}

inline RunResult run(const POPInstance& inst, int dmin, int dmax, const Schedule& sched,
                     const RunOptions& opts = {}) {
  RunResult out = run_unchecked(inst, dmin, dmax, sched, opts);
  check_run(out);
  return out;
}

// ---------------------------------------------------------------------------
// fits and series

/// Least squares of log|v| against log eps over the pairs with v < 0.
inline PowerLawFit fit_power_law(const std::vector<std::pair<double, double>>& pairs) {
  std::vector<double> lx, ly;
  for (const auto& [eps, v] : pairs) {
    if (v < 0.0 && eps > 0.0) {
      lx.push_back(std::log(eps));
      ly.push_back(std::log(-v));
    }
  }
  const std::size_t m = lx.size();
  if (m < 4) {
    throw InsufficientData("fit_power_law: need at least 4 pairs with v < 0, got " + std::to_string(m));
  }
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < m; ++i) {
    mx += lx[i];
    my += ly[i];
  }
  mx /= m;
  my /= m;
  double sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < m; ++i) {
    sxx += (lx[i] - mx) * (lx[i] - mx);
    sxy += (lx[i] - mx) * (ly[i] - my);
  }
  if (!(sxx > 0)) throw InsufficientData("fit_power_law: epsilons must not all coincide");
  PowerLawFit f;
  f.exponent = sxy / sxx;
  const double intercept = my - f.exponent * mx;
  f.kappa = std::exp(intercept);
  double ss = 0;
  for (std::size_t i = 0; i < m; ++i) {
    const double e = ly[i] - (intercept + f.exponent * lx[i]);
    ss += e * e;
  }
  f.residual = std::sqrt(ss / m);
  f.points = m;
  return f;
}

struct TailFit {
  PowerLawFit free;       ///< unconstrained fit over the tail
  double law = 0.0;       ///< nearest -1/k, k = 1..8
  double kappa = 0.0;     ///< prefactor under the fixed law
  std::size_t kappa_points = 0;
};

/// Power law in the divergent tail: the exponent from a free fit over the
/// `fit_points` smallest epsilons, the prefactor kappa = geometric mean of
/// |v| eps^{-law} over the `kappa_points` smallest ones, with `law` the free
/// exponent rounded to the nearest -1/k.
inline TailFit tail_power_law(std::vector<std::pair<double, double>> pairs, std::size_t fit_points = 4,
                              std::size_t kappa_points = 2) {
  std::erase_if(pairs, [](const auto& pr) { return !(pr.second < 0.0 && pr.first > 0.0); });
  std::sort(pairs.begin(), pairs.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
  if (pairs.size() < fit_points || fit_points < 4 || kappa_points < 1 || kappa_points > fit_points) {
    throw InsufficientData("tail_power_law: need at least " + std::to_string(std::max<std::size_t>(fit_points, 4)) +
                           " pairs with v < 0");
  }
  TailFit t;
  t.free = fit_power_law({pairs.begin(), pairs.begin() + static_cast<long>(fit_points)});
  double best = 1e300;
  for (int k = 1; k <= 8; ++k) {
    if (std::abs(t.free.exponent + 1.0 / k) < best) {
      best = std::abs(t.free.exponent + 1.0 / k);
      t.law = -1.0 / k;
    }
  }
  double acc = 0.0;
  for (std::size_t i = 0; i < kappa_points; ++i) acc += std::log(-pairs[i].second) - t.law * std::log(pairs[i].first);
  t.kappa = std::exp(acc / kappa_points);
  t.kappa_points = kappa_points;
  return t;
}

/// (d, |p_d* - p*|) for the records carrying a certified bound.
inline std::vector<std::pair<int, double>> gap_series(const RunResult& res, double p_star) {
  std::vector<std::pair<int, double>> out;
  for (const auto& r : res.records) {
    if (r.certified_bound) out.emplace_back(r.d, std::abs(*r.certified_bound - p_star));
  }
  return out;
}

/// Least-squares slope of log gap against log d over dlo <= d <= dhi, zero
/// gaps excluded.
inline double gap_slope(const std::vector<std::pair<int, double>>& series, int dlo, int dhi) {
  std::vector<std::pair<double, double>> pts;
  for (const auto& [d, g] : series) {
    if (d >= dlo && d <= dhi && g > 0.0) pts.emplace_back(std::log(static_cast<double>(d)), std::log(g));
  }
  if (pts.size() < 2) throw InsufficientData("gap_slope: need at least two positive gaps in range");
  double mx = 0, my = 0;
  for (const auto& [x, y] : pts) {
    mx += x;
    my += y;
  }
  mx /= pts.size();
  my /= pts.size();
  double sxx = 0, sxy = 0;
  for (const auto& [x, y] : pts) {
    sxx += (x - mx) * (x - mx);
    sxy += (x - mx) * (y - my);
  }
  return sxy / sxx;
}

/// Indices i with bound[i+1] < bound[i] - tol among consecutive certified
/// bounds; empty for a monotone run.
inline std::vector<std::size_t> monotonicity_violations(const RunResult& res, double tol = 1e-6) {
  std::vector<std::size_t> bad;
  for (std::size_t i = 0; i + 1 < res.records.size(); ++i) {
    const auto& a = res.records[i].certified_bound;
    const auto& b = res.records[i + 1].certified_bound;
    if (a && b && *b < *a - tol) bad.push_back(i);
  }
  return bad;
}

struct EnvelopeCheck {
  double penalized_bound = 0.0;
  double grid_max = 0.0;          ///< max over eps of v_d*(eps) - c_2d eps
  double best_epsilon = 0.0;
  double penalized_residual = 0.0;
};

/// Compares max over `eps_grid` of v_d*(eps) - c_2d eps with the penalized
/// bound at the same level.
inline EnvelopeCheck envelope(const POPInstance& inst, int d, const std::vector<double>& eps_grid,
                              const RunOptions& opts = {}) {
  const auto c = usable_constant(inst, d, opts.allow_estimated_constant);
  if (!c) throw NoConstant("envelope: no certified Bernstein-Markov constant");
  if (eps_grid.empty()) throw std::invalid_argument("envelope: empty epsilon grid");
  EnvelopeCheck out;
  const BoundRecord pen = solve_level(inst, d, RelaxationMode::penalized(c->value), opts);
  if (!pen.accepted()) throw SolverFailure("envelope: penalized solve failed");
  out.penalized_bound = *pen.certified_bound;
  out.penalized_residual = pen.residual_norm;
  out.grid_max = -std::numeric_limits<double>::infinity();
  for (double eps : eps_grid) {
    const BoundRecord r = solve_level(inst, d, RelaxationMode::regularized(eps, c->value), opts);
    if (!r.accepted()) throw SolverFailure("envelope: regularized solve failed");
    const double val = r.dual_value - c->value * eps;
    if (val > out.grid_max) {
      out.grid_max = val;
      out.best_epsilon = eps;
    }
  }
  return out;
}

}  // namespace regmomsos
