// regmomsos: certified lower bounds for polynomial optimization problems.
//
//   regmomsos solve PROBLEM --d 4 --mode regularized --eps 1
//   regmomsos hierarchy PROBLEM --dmin 3 --dmax 10 --mode penalized --out run.csv
//   regmomsos bench stengle --d 3 --mode penalized
//   regmomsos bench motzkin --d 3 --schedule grid:1,1e-1,1e-2
//
// Exit codes: 0 ok, 2 usage or problem-file error, 3 solver failure,
// 4 certificate verification failure.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "regmomsos/regmomsos.hpp"

namespace {

using namespace regmomsos;

constexpr int kExitUsage = 2;
constexpr int kExitSolver = 3;
constexpr int kExitVerify = 4;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Args {
  std::string problem;
  std::optional<int> d, dmin, dmax;
  std::optional<std::string> mode;
  std::optional<double> eps;
  std::optional<std::string> schedule;
  std::optional<double> pstar;
  std::string out, dump, plotdata, emit;
  int jobs = 1;
  bool extended = false;
  bool allow_estimate = false;
  double gap_tol = 1e-8;
  double feas_tol = 1e-8;
  int max_iter = 200;
  double identity_tol = 1e-6;
  bool quiet = false;
};

Schedule parse_schedule(const std::string& s) {
  if (s == "default") return Schedule::default_decay();
  if (s.rfind("grid:", 0) != 0) throw UsageError("--schedule must be 'default' or 'grid:EPS1,EPS2,...'");
  std::vector<double> eps;
  std::stringstream ss(s.substr(5));
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      eps.push_back(conic::parse_double(item));
    } catch (const std::invalid_argument&) {
      throw UsageError("--schedule: '" + item + "' is not a number");
    }
  }
  Schedule sched = Schedule::fixed_grid(std::move(eps));
  try {
    sched.validate();
  } catch (const std::invalid_argument& e) {
    throw UsageError(std::string("--schedule: ") + e.what());
  }
  return sched;
}

Schedule resolve_schedule(const Args& a) {
  const std::string mode = a.mode.value_or(a.eps || a.schedule ? "regularized" : "penalized");
  ModeKind kind;
  try {
    kind = mode_from_string(mode);
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  if (kind != ModeKind::Regularized && (a.eps || a.schedule)) {
    throw UsageError("--eps and --schedule are only valid with --mode regularized");
  }
  if (kind == ModeKind::Penalized) return Schedule::penalized();
  if (kind == ModeKind::Standard) return Schedule::standard();
  if (a.eps && a.schedule) throw UsageError("give either --eps or --schedule, not both");
  if (a.schedule) return parse_schedule(*a.schedule);
  if (!a.eps) throw UsageError("--mode regularized needs --eps or --schedule");
  if (!(*a.eps > 0.0)) return Schedule::standard();
  return Schedule::fixed_grid({*a.eps});
}

std::string sig5(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.5g", v);
  return buf;
}

void print_summary(const POPInstance& inst, const RunResult& res, std::ostream& os) {
  os << "instance " << inst.name << " (n = " << inst.n << ", " << inst.constraints.size() << " constraints)\n";
  if (inst.slater_absent) os << "Slater: primal strict feasibility absent\n";
  char line[256];
  std::snprintf(line, sizeof line, "%4s  %-11s  %-11s  %-11s  %-12s  %-12s  %-11s  %-12s  %s\n", "d", "mode", "epsilon",
                "c2d", "u*", "v*", "t*", "bound", "status");
  os << line;
  for (const auto& r : res.records) {
    const std::string eps = r.mode.kind == ModeKind::Regularized ? sig5(r.mode.epsilon) : "-";
    const std::string c = r.c2d ? sig5(*r.c2d) + (r.c2d_estimate ? "~" : "") : "-";
    const std::string b = r.certified_bound ? sig5(*r.certified_bound) : "-";
    std::snprintf(line, sizeof line, "%4d  %-11s  %-11s  %-11s  %-12s  %-12s  %-11s  %-12s  %s\n", r.d,
                  std::string(to_string(r.mode.kind)).c_str(), eps.c_str(), c.c_str(), sig5(r.primal_value).c_str(),
                  sig5(r.dual_value).c_str(), sig5(r.residual_norm).c_str(), b.c_str(), r.status_label().c_str());
    os << line;
  }
  // tail fits per level for epsilon grids
  std::map<int, std::vector<std::pair<double, double>>> by_level;
  for (const auto& r : res.records) {
    if (r.mode.kind == ModeKind::Regularized) by_level[r.d].emplace_back(r.mode.epsilon, r.dual_value);
  }
  for (const auto& [d, pairs] : by_level) {
    try {
      const TailFit t = tail_power_law(pairs);
      os << "d = " << d << ": v* ~ -kappa eps^" << sig5(t.law) << ", kappa = " << sig5(t.kappa)
         << " (free exponent " << sig5(t.free.exponent) << " over " << t.free.points << " points)\n";
    } catch (const InsufficientData&) {
    }
  }
  for (const auto& r : res.records) {
    if (r.accepted() && !r.verification.passed) {
      os << "d = " << r.d << ": verification failed: " << r.verification.message << "\n";
    }
  }
}

template <class Fn>
void write_file(const std::string& path, Fn&& fn) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot write '" + path + "'");
  fn(f);
  if (!f) throw std::runtime_error("write to '" + path + "' failed");
}

int execute(const POPInstance& inst, const Args& a, int dmin, int dmax) {
  const Schedule sched = resolve_schedule(a);
  RunOptions opts;
  opts.solver.gap_tol = a.gap_tol;
  opts.solver.feas_tol = a.feas_tol;
  opts.solver.max_iter = a.max_iter;
  opts.verify.identity = a.identity_tol;
  if (a.extended) opts.extended_precision = true;
  opts.allow_estimated_constant = a.allow_estimate;
  opts.jobs = a.jobs;

  if (!a.dump.empty()) {
    if (dmin != dmax) throw UsageError("--dump needs a single level");
    const auto tasks = detail::plan_tasks(inst, dmin, dmax, sched, opts);
    if (tasks.size() != 1) throw UsageError("--dump needs a single relaxation");
    const Relaxation rel = assemble(inst, dmin, tasks[0].mode);
    write_file(a.dump, [&](std::ostream& os) { conic::dump(rel.program, os); });
  }

  const RunResult res = run_unchecked(inst, dmin, dmax, sched, opts);
  if (!a.quiet) print_summary(inst, res, std::cout);
  if (!a.out.empty()) write_file(a.out, [&](std::ostream& os) { write_results_csv(os, res.records); });
  if (!a.plotdata.empty()) {
    const std::optional<double> ps = a.pstar ? a.pstar : inst.p_star;
    if (!ps) throw UsageError("--plotdata needs --pstar for an instance without a known minimum");
    write_file(a.plotdata, [&](std::ostream& os) { write_plot_data(os, gap_series(res, *ps)); });
  }
  check_run(res);
  return 0;
}

enum class Levels { Single, Range, Either };

void add_run_options(CLI::App* cmd, Args& a, Levels levels) {
  if (levels == Levels::Single) {
    cmd->add_option("--d", a.d, "Relaxation level")->required();
  } else if (levels == Levels::Range) {
    cmd->add_option("--dmin", a.dmin, "Lowest relaxation level")->required();
    cmd->add_option("--dmax", a.dmax, "Highest relaxation level")->required();
  } else {
    cmd->add_option("--d", a.d, "Relaxation level");
    cmd->add_option("--dmin", a.dmin, "Lowest relaxation level");
    cmd->add_option("--dmax", a.dmax, "Highest relaxation level");
  }
  cmd->add_option("--mode", a.mode, "regularized | penalized | standard (default: penalized, or regularized with --eps/--schedule)");
  cmd->add_option("--eps", a.eps, "Regularization weight (regularized mode)");
  cmd->add_option("--schedule", a.schedule, "grid:EPS1,EPS2,... or default (regularized mode)");
  cmd->add_option("--out", a.out, "Results CSV path");
  cmd->add_option("--plotdata", a.plotdata, "Two-column (d, gap) file for plotting");
  cmd->add_option("--pstar", a.pstar, "Reference minimum for --plotdata");
  cmd->add_option("--dump", a.dump, "Write the conic program (single level only)");
  cmd->add_option("--jobs", a.jobs, "Levels solved concurrently (default: $REGMOMSOS_JOBS or 1)")
      ->check(CLI::Range(1, 1024));
  cmd->add_flag("--extended-precision", a.extended, "Run the interior-point iterations in long double");
  cmd->add_flag("--allow-estimated-constant", a.allow_estimate, "Certify with grid-estimated BM constants");
  cmd->add_option("--gap-tol", a.gap_tol, "Relative gap tolerance")->capture_default_str()->check(CLI::PositiveNumber);
  cmd->add_option("--feas-tol", a.feas_tol, "Feasibility tolerance")->capture_default_str()->check(CLI::PositiveNumber);
  cmd->add_option("--max-iter", a.max_iter, "Iteration limit")->capture_default_str()->check(CLI::Range(1, 100000));
  cmd->add_option("--identity-tol", a.identity_tol, "Certificate identity tolerance")
      ->capture_default_str()
      ->check(CLI::NonNegativeNumber);
  cmd->add_flag("--quiet", a.quiet, "No summary on stdout");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Regularized and penalized moment-SOS hierarchies with certified lower bounds"};
  app.require_subcommand(1);
  Args a;
  a.jobs = jobs_from_env(1);

  auto* solve = app.add_subcommand("solve", "Solve one relaxation level of a problem file");
  solve->add_option("problem", a.problem, "Problem file (JSON)")->required();
  add_run_options(solve, a, Levels::Single);

  auto* hier = app.add_subcommand("hierarchy", "Solve a range of levels of a problem file");
  hier->add_option("problem", a.problem, "Problem file (JSON)")->required();
  add_run_options(hier, a, Levels::Range);

  auto* bench = app.add_subcommand("bench", "Run a built-in benchmark: motzkin, origin, stengle, prestel");
  bench->add_option("name", a.problem, "Benchmark name")->required();
  add_run_options(bench, a, Levels::Either);
  bench->add_option("--emit", a.emit, "Write the benchmark as a problem file and exit");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (*solve) {
      const POPInstance inst = load_problem(a.problem);
      return execute(inst, a, *a.d, *a.d);
    }
    if (*hier) {
      if (*a.dmin > *a.dmax) throw UsageError("--dmin must not exceed --dmax");
      const POPInstance inst = load_problem(a.problem);
      return execute(inst, a, *a.dmin, *a.dmax);
    }
    const POPInstance inst = benchmark(a.problem);
    if (!a.emit.empty()) {
      write_file(a.emit, [&](std::ostream& os) { os << serialize_problem(inst); });
      return 0;
    }
    if (a.d && (a.dmin || a.dmax)) throw UsageError("give either --d or --dmin/--dmax");
    if (!a.d && !(a.dmin && a.dmax)) throw UsageError("bench needs --d or both --dmin and --dmax");
    const int lo = a.d ? *a.d : *a.dmin;
    const int hi = a.d ? *a.d : *a.dmax;
    if (lo > hi) throw UsageError("--dmin must not exceed --dmax");
    return execute(inst, a, lo, hi);
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const ProblemFileError& e) {
    std::cerr << "problem file error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const NoConstant& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const SolverFailure& e) {
    std::cerr << "solver failure: " << e.what() << "\n";
    return kExitSolver;
  } catch (const MissingDuals& e) {
    std::cerr << "solver failure: " << e.what() << "\n";
    return kExitSolver;
  } catch (const VerificationFailure& e) {
    std::cerr << "verification failure: " << e.what() << "\n";
    return kExitVerify;
  } catch (const std::invalid_argument& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::domain_error& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
