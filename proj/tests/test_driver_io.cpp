#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "regmomsos/regmomsos.hpp"

using namespace regmomsos;
namespace fs = std::filesystem;

namespace {

// Random instance with a coercive quartic objective and ball constraints
// around interior centres, so the relaxations stay bounded and strictly
// feasible.
POPInstance random_instance(std::mt19937& rng, int n, int m) {
  std::uniform_real_distribution<double> u(-1.0, 1.0), rad(0.5, 1.5), ctr(-0.3, 0.3);
  POPInstance inst;
  inst.name = "random";
  inst.n = n;
  inst.measure.assign(n, MeasureFamily::ArcsineUnit);
  inst.objective = MonomialPoly(n);
  for (const auto& a : graded_indices(n, 3)) inst.objective.add_term(a, u(rng));
  for (int i = 0; i < n; ++i) {
    MultiIndex e(n, 0);
    e[i] = 4;
    inst.objective.add_term(e, 1.0);
  }
  for (int j = 0; j < m; ++j) {
    MonomialPoly g = MonomialPoly::constant(n, rad(rng));
    for (int i = 0; i < n; ++i) {
      const double c = ctr(rng);
      MultiIndex e2(n, 0), e1(n, 0);
      e2[i] = 2;
      e1[i] = 1;
      g.add_term(e2, -1.0);
      g.add_term(e1, 2.0 * c);
      g.add_term(MultiIndex(n, 0), -c * c);
    }
    inst.constraints.push_back(g);
  }
  inst.bm_domain = DomainSpec::unbounded();
  return inst;
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(REGMOMSOS_CLI_PATH) + " " + args + " > /dev/null 2>&1";
  const int rc = std::system(cmd.c_str());
  return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

fs::path scratch_dir() {
  const fs::path p = fs::temp_directory_path() / ("regmomsos_test_" + std::to_string(::getpid()));
  fs::create_directories(p);
  return p;
}

void write_text(const fs::path& p, const std::string& s) { std::ofstream(p) << s; }

std::string read_text(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST(Schedule, Validation) {
  EXPECT_NO_THROW(Schedule::fixed_grid({1.0, 0.1}).validate());
  EXPECT_THROW(Schedule::fixed_grid({}).validate(), std::invalid_argument);
  EXPECT_THROW(Schedule::fixed_grid({0.1, 1.0}).validate(), std::invalid_argument);
  EXPECT_THROW(Schedule::fixed_grid({1.0, 0.0}).validate(), std::invalid_argument);
  EXPECT_DOUBLE_EQ(default_decay_epsilon(4, 3.0), 1.0 / 12.0);
  EXPECT_DOUBLE_EQ(default_decay_epsilon(4, 0.5), 0.25);
}

TEST(Driver, PenalizedStengleRunIsMonotoneVerifiedAndValid) {
  const POPInstance inst = stengle_instance();
  const RunResult res = run(inst, 3, 7, Schedule::penalized());
  ASSERT_EQ(res.records.size(), 5u);
  EXPECT_TRUE(monotonicity_violations(res).empty());
  for (std::size_t i = 0; i < res.records.size(); ++i) {
    const auto& r = res.records[i];
    EXPECT_EQ(r.d, 3 + static_cast<int>(i));
    ASSERT_TRUE(r.certified_bound);
    EXPECT_TRUE(r.verification.passed) << r.verification.message;
    EXPECT_LE(*r.certified_bound, *inst.p_star + 1e-6);
    const double c = std::sqrt(4.0 * r.d + 1.0);
    EXPECT_EQ(r.c2d, c);
    EXPECT_NEAR(r.primal_value, r.dual_value - c * r.residual_norm, 1e-6);
    EXPECT_NEAR(*r.certified_bound, r.certificate.v - c * l2_norm(r.certificate.r), 1e-12);
    EXPECT_NEAR(*r.certified_bound, r.dual_value - c * r.residual_norm, 1e-8);
  }
}

TEST(Driver, WorkerCountDoesNotChangeResults) {
  RunOptions one, two;
  two.jobs = 2;
  const auto a = run(prestel_instance(), 1, 2, Schedule::penalized(), one);
  const auto b = run(prestel_instance(), 1, 2, Schedule::penalized(), two);
  ASSERT_EQ(a.records.size(), b.records.size());
  for (std::size_t i = 0; i < a.records.size(); ++i) {
    EXPECT_EQ(a.records[i].d, b.records[i].d);
    EXPECT_EQ(a.records[i].dual_value, b.records[i].dual_value);
  }
}

TEST(Driver, RegularizedAtZeroMatchesStandard) {
  std::mt19937 rng(17);
  for (int k = 0; k < 3; ++k) {
    const POPInstance inst = random_instance(rng, 1 + k % 2, k);
    const BoundRecord reg = solve_level(inst, 2, RelaxationMode::regularized(0.0));
    const Relaxation std_rel = assemble_standard(inst, 2);
    const auto vals = relaxation_values(std_rel, conic::solve(std_rel.program));
    ASSERT_TRUE(reg.accepted());
    EXPECT_NEAR(reg.dual_value, vals.sos_value, 1e-6);
  }
}

TEST(Driver, EnvelopeStaysBelowPenalizedBound) {
  const auto env = envelope(stengle_instance(), 3, {1.0, 0.3, 0.1, 0.03, 0.01, 0.003, 0.001});
  EXPECT_LE(env.grid_max, env.penalized_bound + 1e-5);
  EXPECT_GT(env.grid_max, env.penalized_bound - 5e-3);
}

TEST(Driver, PenalizedNeedsAConstant) {
  EXPECT_THROW(run(motzkin_instance(), 3, 3, Schedule::penalized()), NoConstant);
  EXPECT_THROW(run(stengle_instance(), 4, 3, Schedule::penalized()), std::invalid_argument);
  EXPECT_THROW(run(stengle_instance(), 2, 3, Schedule::penalized()), std::invalid_argument);
}

TEST(Driver, SolverFailureIsReported) {
  RunOptions opts;
  opts.solver.max_iter = 2;
  const RunResult res = run_unchecked(stengle_instance(), 3, 3, Schedule::penalized(), opts);
  ASSERT_EQ(res.records.size(), 1u);
  EXPECT_FALSE(res.records[0].accepted());
  EXPECT_FALSE(res.records[0].certified_bound);
  EXPECT_THROW(check_run(res), SolverFailure);
}

TEST(Fits, PowerLawRecoversSyntheticData) {
  std::vector<std::pair<double, double>> pts;
  for (double e : {1e-1, 1e-2, 1e-3, 1e-4, 1e-5, 1e-6}) pts.emplace_back(e, -0.3 * std::pow(e, -0.5));
  pts.emplace_back(1.0, 0.5);
  const auto f = fit_power_law(pts);
  EXPECT_NEAR(f.exponent, -0.5, 1e-12);
  EXPECT_NEAR(f.kappa, 0.3, 1e-12);
  EXPECT_EQ(f.points, 6u);
  std::vector<std::pair<double, double>> bent;
  for (double e : {1e-3, 1e-4, 1e-5, 1e-6}) bent.emplace_back(e, -0.2 * std::pow(e, -0.34));
  const auto t = tail_power_law(bent);
  EXPECT_DOUBLE_EQ(t.law, -1.0 / 3.0);
  EXPECT_NEAR(t.free.exponent, -0.34, 1e-12);
  EXPECT_THROW(fit_power_law({{1e-2, -1.0}, {1e-3, -2.0}, {1e-4, 1.0}}), InsufficientData);
}

TEST(Fits, GapSlope) {
  std::vector<std::pair<int, double>> s;
  for (int d = 2; d <= 20; ++d) s.emplace_back(d, 2.0 / (d * d));
  EXPECT_NEAR(gap_slope(s, 5, 20), -2.0, 1e-12);
  EXPECT_THROW(gap_slope(s, 30, 40), InsufficientData);
}

TEST(ProblemFile, BenchmarksRoundTrip) {
  for (const auto& name : benchmark_names()) {
    const POPInstance inst = benchmark(name);
    const std::string text = serialize_problem(inst);
    EXPECT_EQ(parse_problem(text), inst) << name;
    EXPECT_EQ(serialize_problem(parse_problem(text)), text);
  }
}

TEST(ProblemFile, ErrorsCarryLocations) {
  const auto where = [](const std::string& text) {
    try {
      parse_problem(text);
    } catch (const ProblemFileError& e) {
      return e.where();
    }
    return std::string("no error");
  };
  EXPECT_EQ(where("{\n\"name\": \"x\",\n\"variables\": 1,\n"), "line 4");
  EXPECT_EQ(where(R"({"name":"x","variables":1,"objective":[],"measure":"arcsine","colour":1})"), "field /colour");
  EXPECT_EQ(where(R"({"name":"x","variables":1,"objective":[],"measure":"laplace"})"), "field /measure");
  EXPECT_EQ(where(R"({"name":"x","variables":1,"objective":[{"coeff":1,"exponents":[1,2]}],"measure":"arcsine"})"),
            "field /objective/0/exponents");
  EXPECT_EQ(where(R"({"name":"x","variables":1,"measure":"arcsine"})"), "field /objective");
  EXPECT_EQ(where(R"({"name":"x","variables":1,"objective":[],"measure":"arcsine","box":[[1,0]]})"), "field /box/0");
}

TEST(ResultsCsv, GoldenFormat) {
  BoundRecord r;
  r.d = 3;
  r.mode = RelaxationMode::penalized(std::sqrt(13.0));
  r.c2d = std::sqrt(13.0);
  r.primal_value = -0.1;
  r.dual_value = 0.25;
  r.residual_norm = 1e-3;
  r.certified_bound = -3.8252e-2;
  r.status = conic::SolveStatus::SlowProgress;
  r.accepted_slow = true;
  r.verify_residual = 2.5e-10;
  r.wall_ms = 12.5;
  std::ostringstream os;
  write_results_csv(os, {r});
  EXPECT_EQ(os.str(),
            "d,mode,epsilon,c2d,primal_value,dual_value,residual_norm,certified_bound,status,verify_residual,wall_ms\n"
            "3,penalized,,3.605551275463989,-0.1,0.25,0.001,-0.038252,SlowProgress|accepted,2.5e-10,12.5\n");
  std::ostringstream plot;
  write_plot_data(plot, {{3, 0.5}, {4, 0.125}});
  EXPECT_EQ(plot.str(), "# d gap\n3 0.5\n4 0.125\n");
}

TEST(Cli, ExitCodes) {
  const fs::path dir = scratch_dir();
  const std::string stengle = (dir / "stengle.json").string();
  const std::string out = (dir / "out.csv").string();
  ASSERT_EQ(run_cli("bench stengle --emit " + stengle), 0);
  EXPECT_EQ(parse_problem(read_text(stengle)), stengle_instance());

  EXPECT_EQ(run_cli("solve " + stengle + " --d 3 --mode penalized --out " + out), 0);
  const std::string csv = read_text(out);
  EXPECT_EQ(csv.substr(0, csv.find('\n')), csv_header());
  EXPECT_NE(csv.find("3,penalized,,"), std::string::npos);

  write_text(dir / "bad.json", "{\"name\": \"x\",\n\"variables\": 1,\n\"objective\": [\n");
  EXPECT_EQ(run_cli("solve " + (dir / "bad.json").string() + " --d 2"), 2);
  EXPECT_EQ(run_cli("hierarchy " + stengle + " --dmin 4 --dmax 3 --mode penalized"), 2);
  EXPECT_EQ(run_cli("solve " + stengle + " --d 3 --mode penalized --eps 0.1"), 2);
  EXPECT_EQ(run_cli("bench unknownname --d 3"), 2);
  EXPECT_EQ(run_cli("bench stengle --d 3 --bogus"), 2);
  EXPECT_EQ(run_cli("solve " + stengle + " --d 3 --mode penalized --max-iter 2"), 3);
  EXPECT_EQ(run_cli("solve " + stengle + " --d 3 --mode penalized --identity-tol 0"), 4);
  fs::remove_all(dir);
}

TEST(Cli, DumpAndPlotData) {
  const fs::path dir = scratch_dir();
  const fs::path dump = dir / "prog.txt", plot = dir / "plot.txt";
  ASSERT_EQ(run_cli("bench stengle --dmin 3 --dmax 4 --mode penalized --plotdata " + plot.string()), 0);
  std::istringstream lines(read_text(plot));
  std::string header, l3, l4;
  std::getline(lines, header);
  std::getline(lines, l3);
  std::getline(lines, l4);
  EXPECT_EQ(header, "# d gap");
  EXPECT_EQ(l3.substr(0, 2), "3 ");
  EXPECT_EQ(l4.substr(0, 2), "4 ");
  ASSERT_EQ(run_cli("bench stengle --d 3 --mode penalized --dump " + dump.string()), 0);
  const double c = std::sqrt(13.0);
  EXPECT_EQ(conic::parse_dump(read_text(dump)), assemble(stengle_instance(), 3, RelaxationMode::penalized(c)).program);
  fs::remove_all(dir);
}
