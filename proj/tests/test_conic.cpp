#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "regmomsos/conic/program.hpp"
#include "regmomsos/conic/solver.hpp"

using namespace regmomsos::conic;

namespace {

// min x0 + 2 x1 s.t. x0 + x1 = 1, x >= 0.
ConicProgram small_lp() {
  ConicProgram p;
  p.c = {1.0, 2.0};
  p.A = {{0, 0, 1.0}, {0, 1, 1.0}};
  p.b = {1.0};
  p.cone.blocks = {ConeBlock::nonneg(2)};
  return p;
}

// min <C, X> s.t. X_00 = 1, X_11 = 1, X psd, C = [[0, 1], [1, 0]]; optimum -2.
ConicProgram small_sdp() {
  ConicProgram p;
  const double r2 = std::sqrt(2.0);
  p.c = {0.0, r2, 0.0};  // svec order (0,0), (1,0), (1,1)
  p.A = {{0, 0, 1.0}, {1, 2, 1.0}};
  p.b = {1.0, 1.0};
  p.cone.blocks = {ConeBlock::psd(2)};
  return p;
}

Eigen::MatrixXd random_symmetric(int n, std::mt19937& rng) {
  std::normal_distribution<double> g;
  Eigen::MatrixXd m(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) m(i, j) = g(rng);
  return 0.5 * (m + m.transpose());
}

}  // namespace

TEST(Cones, SvecIsAnIsometry) {
  std::mt19937 rng(1);
  for (int n = 1; n <= 20; ++n) {
    const Eigen::MatrixXd M = random_symmetric(n, rng), N = random_symmetric(n, rng);
    const double lhs = svec(M).dot(svec(N));
    const double rhs = (M * N).trace();
    EXPECT_NEAR(lhs, rhs, 1e-14 * std::max(1.0, std::abs(rhs)) * n);
    EXPECT_LT((smat(svec(M)) - M).cwiseAbs().maxCoeff(), 1e-15 * n);
  }
  EXPECT_EQ(svec_dim(4), 10);
}

TEST(Solver, LinearProgram) {
  const auto r = solve(small_lp());
  ASSERT_EQ(r.status, SolveStatus::Optimal);
  EXPECT_NEAR(r.primal_objective, 1.0, 1e-7);
  EXPECT_NEAR(r.dual_objective, 1.0, 1e-7);
  EXPECT_NEAR(r.x[0], 1.0, 1e-6);
}

TEST(Solver, SemidefiniteProgram) {
  const auto r = solve(small_sdp());
  ASSERT_EQ(r.status, SolveStatus::Optimal);
  EXPECT_NEAR(r.primal_objective, -2.0, 1e-7);
  const Eigen::MatrixXd X = smat(Eigen::VectorXd(r.x));
  EXPECT_NEAR(X(0, 1), -1.0, 1e-6);
}

TEST(Solver, SecondOrderCone) {
  ConicProgram p;  // min t s.t. (t, u) in SOC, u = (3, 4)
  p.c = {1.0, 0.0, 0.0};
  p.A = {{0, 1, 1.0}, {1, 2, 1.0}};
  p.b = {3.0, 4.0};
  p.cone.blocks = {ConeBlock::soc(3)};
  const auto r = solve(p);
  ASSERT_EQ(r.status, SolveStatus::Optimal);
  EXPECT_NEAR(r.primal_objective, 5.0, 1e-7);
}

TEST(Solver, FreeVariablesAndMixedCones) {
  ConicProgram p;  // min v s.t. v - x = 2, x >= 0
  p.c = {1.0, 0.0};
  p.A = {{0, 0, 1.0}, {0, 1, -1.0}};
  p.b = {2.0};
  p.cone.blocks = {ConeBlock::free(1), ConeBlock::nonneg(1)};
  const auto r = solve(p);
  ASSERT_EQ(r.status, SolveStatus::Optimal);
  EXPECT_NEAR(r.primal_objective, 2.0, 1e-7);
}

TEST(Solver, DetectsInfeasibilityAndUnboundedness) {
  ConicProgram inf;
  inf.c = {1.0, 1.0};
  inf.A = {{0, 0, 1.0}, {0, 1, 1.0}};
  inf.b = {-1.0};
  inf.cone.blocks = {ConeBlock::nonneg(2)};
  EXPECT_EQ(solve(inf).status, SolveStatus::PrimalInfeasible);

  ConicProgram unb;
  unb.c = {-1.0, 0.0};
  unb.A = {{0, 0, 1.0}, {0, 1, -1.0}};
  unb.b = {0.0};
  unb.cone.blocks = {ConeBlock::nonneg(2)};
  EXPECT_EQ(solve(unb).status, SolveStatus::DualInfeasible);
}

TEST(Solver, ComplementarityAndWeakDualityAlongIterates) {
  for (bool ext : {false, true}) {
    SolverSettings s;
    s.extended_precision = ext;
    const auto r = solve(small_sdp(), s);
    ASSERT_EQ(r.status, SolveStatus::Optimal);
    const double xs = r.x.dot(r.s);
    EXPECT_LE(std::abs(xs), 10 * s.gap_tol * (1 + std::abs(r.primal_objective) + std::abs(r.dual_objective)));
    ASSERT_FALSE(r.trace.empty());
    for (const auto& it : r.trace) EXPECT_GE(it.duality_slack, -1e-9 * (1 + std::abs(it.pcost)));
  }
}

TEST(Solver, IsDeterministic) {
  const auto a = solve(small_sdp());
  const auto b = solve(small_sdp());
  ASSERT_EQ(a.trace.size(), b.trace.size());
  EXPECT_EQ(a.x, b.x);
  EXPECT_EQ(a.y, b.y);
  for (std::size_t k = 0; k < a.trace.size(); ++k) EXPECT_EQ(a.trace[k].mu, b.trace[k].mu);
}

TEST(Solver, RejectsInconsistentDimensions) {
  ConicProgram p = small_lp();
  p.cone.blocks = {ConeBlock::nonneg(3)};
  EXPECT_THROW(solve(p), std::invalid_argument);
  p = small_lp();
  p.A.push_back({4, 0, 1.0});
  EXPECT_THROW(solve(p), std::invalid_argument);
  SolverSettings bad;
  bad.gap_tol = 0.0;
  EXPECT_THROW(solve(small_lp(), bad), std::invalid_argument);
}

TEST(Dump, RoundTripIsExact) {
  ConicProgram p = small_sdp();
  p.c[1] = 0.1 + 0.2;
  const std::string text = dump(p);
  EXPECT_EQ(parse_dump(text), p);
  std::istringstream is(text);
  EXPECT_EQ(parse_dump(is), p);
}

TEST(Dump, ReportsLineOfBadInput) {
  std::string text = dump(small_lp());
  const auto pos = text.find('\n', text.find('\n') + 1);
  text.insert(pos + 1, "garbage line\n");
  try {
    parse_dump(text);
    FAIL() << "expected DumpParseError";
  } catch (const DumpParseError& e) {
    EXPECT_EQ(e.line(), 3);
  }
}
