#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <vector>

#include "regmomsos/basis1d.hpp"
#include "regmomsos/multi_index.hpp"
#include "regmomsos/oracle.hpp"
#include "regmomsos/poly.hpp"

using namespace regmomsos;

namespace {

const std::vector<MeasureFamily> kFamilies = {MeasureFamily::GaussianStd, MeasureFamily::ArcsineUnit,
                                              MeasureFamily::UniformUnit};

// Even moments written out independently of the library.
double reference_moment(MeasureFamily f, int k) {
  if (k % 2) return 0.0;
  const int h = k / 2;
  switch (f) {
    case MeasureFamily::GaussianStd: {
      double v = 1.0;
      for (int i = 1; i < 2 * h; i += 2) v *= i;
      return v;
    }
    case MeasureFamily::ArcsineUnit:
      return std::tgamma(2.0 * h + 1.0) / (std::tgamma(h + 1.0) * std::tgamma(h + 1.0) * std::pow(4.0, h));
    case MeasureFamily::UniformUnit:
      return 1.0 / (2.0 * h + 1.0);
  }
  return NAN;
}

double sample_point(MeasureFamily f, std::mt19937& rng) {
  if (f == MeasureFamily::GaussianStd) return std::uniform_real_distribution<double>(-3.0, 3.0)(rng);
  return std::uniform_real_distribution<double>(-1.0, 1.0)(rng);
}

MonomialPoly random_poly(int n, int deg, std::mt19937& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  MonomialPoly p(n);
  for (const auto& a : graded_indices(n, deg)) p.add_term(a, u(rng));
  return p;
}

std::vector<MeasureFamily> same_family(MeasureFamily f, int n) { return std::vector<MeasureFamily>(n, f); }

}  // namespace

TEST(Basis1d, GaussRulesReproduceEvenMoments) {
  for (auto f : kFamilies) {
    const Quadrature q = gauss_rule(f, 12);
    ASSERT_EQ(q.exactness_degree, 23);
    for (int k = 0; 2 * k <= 22; ++k) {
      double s = 0.0;
      for (std::size_t i = 0; i < q.nodes.size(); ++i) s += q.weights[i] * std::pow(q.nodes[i], 2 * k);
      const double ref = reference_moment(f, 2 * k);
      EXPECT_NEAR(s, ref, 1e-12 * std::max(1.0, ref)) << to_string(f) << " k=" << 2 * k;
      EXPECT_NEAR(family_moment(f, 2 * k), ref, 1e-12 * std::max(1.0, ref));
    }
  }
}

TEST(Basis1d, OrthonormalUnderQuadrature) {
  for (auto f : kFamilies) {
    const Quadrature q = gauss_rule(f, 14);
    ASSERT_GE(q.exactness_degree, 24);
    std::vector<std::vector<double>> vals;
    for (double x : q.nodes) vals.push_back(eval_basis(f, 12, x));
    for (int i = 0; i <= 12; ++i) {
      for (int j = 0; j <= 12; ++j) {
        double s = 0.0;
        for (std::size_t k = 0; k < q.nodes.size(); ++k) s += q.weights[k] * vals[k][i] * vals[k][j];
        EXPECT_NEAR(s, i == j ? 1.0 : 0.0, 1e-10) << to_string(f) << " " << i << "," << j;
      }
    }
  }
}

TEST(Basis1d, LowOrderClosedForms) {
  const double x = 0.37;
  auto h = eval_basis(MeasureFamily::GaussianStd, 3, x);
  EXPECT_NEAR(h[2], (x * x - 1) / std::sqrt(2.0), 1e-15);
  EXPECT_NEAR(h[3], (x * x * x - 3 * x) / std::sqrt(6.0), 1e-15);
  auto t = eval_basis(MeasureFamily::ArcsineUnit, 4, x);
  EXPECT_NEAR(t[4], std::sqrt(2.0) * std::cos(4 * std::acos(x)), 1e-14);
  auto l = eval_basis(MeasureFamily::UniformUnit, 2, x);
  EXPECT_NEAR(l[2], std::sqrt(5.0) * 0.5 * (3 * x * x - 1), 1e-14);
}

TEST(Basis1d, LinearizationMatchesPointwiseProducts) {
  std::mt19937 rng(7);
  for (auto f : kFamilies) {
    std::vector<double> xs;
    for (int k = 0; k < 20; ++k) xs.push_back(sample_point(f, rng));
    for (int i = 0; i <= 10; ++i) {
      for (int j = 0; j <= 10; ++j) {
        const auto& c = linearize_product(f, i, j);
        EXPECT_EQ(c, linearize_product(f, j, i));
        for (double x : xs) {
          const auto b = eval_basis(f, i + j, x);
          double s = 0.0;
          for (const auto& [k, v] : c) s += v * b[k];
          const double ref = b[i] * b[j];
          EXPECT_NEAR(s, ref, 1e-9 * std::max(1.0, std::abs(ref))) << to_string(f) << " " << i << "," << j;
        }
      }
    }
  }
}

TEST(Basis1d, RejectsBadArguments) {
  EXPECT_THROW(gauss_rule(MeasureFamily::ArcsineUnit, 0), std::invalid_argument);
  EXPECT_THROW(eval_basis(MeasureFamily::ArcsineUnit, -1, 0.0), std::invalid_argument);
  EXPECT_THROW(measure_from_string("laplace"), std::invalid_argument);
  EXPECT_EQ(measure_from_string("arcsine"), MeasureFamily::ArcsineUnit);
}

TEST(MultiIndex, GradedCountsAndOrder) {
  const auto idx = graded_indices(2, 3);
  ASSERT_EQ(idx.size(), 10u);
  EXPECT_EQ(index_count(3, 4), 35u);
  for (std::size_t i = 1; i < idx.size(); ++i) EXPECT_LE(total_degree(idx[i - 1]), total_degree(idx[i]));
  const IndexSet set(2, 3);
  for (std::size_t i = 0; i < set.size(); ++i) EXPECT_EQ(set.find(set[i]), static_cast<long>(i));
  EXPECT_EQ(set.find({4, 0}), -1);
}

TEST(Poly, LegendreProjectionOfQuartic) {
  const MonomialPoly x4(1, {{{4}, 1.0}});
  const MonomialPoly got = from_ortho(project(to_ortho(x4, {MeasureFamily::UniformUnit}), 2));
  EXPECT_NEAR(got.coeff({2}), 6.0 / 7.0, 1e-12);
  EXPECT_NEAR(got.coeff({0}), -3.0 / 35.0, 1e-12);
  EXPECT_NEAR(got.coeff({1}), 0.0, 1e-12);
  EXPECT_NEAR(got.coeff({4}), 0.0, 1e-12);
}

TEST(Poly, RoundTripThroughOrthonormalBasis) {
  std::mt19937 rng(11);
  for (auto f : kFamilies) {
    for (int n = 1; n <= 3; ++n) {
      const MonomialPoly p = random_poly(n, n == 1 ? 10 : 6, rng);
      const MonomialPoly back = from_ortho(to_ortho(p, same_family(f, n)));
      for (const auto& [a, c] : p.terms()) EXPECT_NEAR(back.coeff(a), c, 1e-11 * std::max(1.0, std::abs(c)));
      for (const auto& [a, c] : back.terms()) EXPECT_NEAR(p.coeff(a), c, 1e-11);
    }
  }
}

TEST(Poly, ProjectionIsIdempotentAndContractive) {
  std::mt19937 rng(3);
  for (auto f : kFamilies) {
    for (int n = 1; n <= 3; ++n) {
      const OrthoPoly p = to_ortho(random_poly(n, n == 3 ? 5 : 8, rng), same_family(f, n));
      for (int d = 0; d <= 4; ++d) {
        const OrthoPoly once = project(p, d);
        EXPECT_TRUE(project(once, d).coeffs() == once.coeffs());
        EXPECT_LE(l2_norm(once), l2_norm(p) * (1 + 1e-15));
        EXPECT_LE(once.degree(), d);
      }
    }
  }
}

TEST(Poly, NormMatchesQuadratureIntegral) {
  std::mt19937 rng(5);
  for (auto f : kFamilies) {
    for (int trial = 0; trial < 50; ++trial) {
      const int n = 1 + trial % 2;
      const MonomialPoly p = random_poly(n, 4, rng);
      const auto fams = same_family(f, n);
      const double ref = oracle::integrate(p * p, fams, 8);
      const double nrm = l2_norm(to_ortho(p, fams));
      EXPECT_NEAR(nrm * nrm, ref, 1e-9 * ref);
    }
  }
}

TEST(Poly, MultiplyAgreesWithMonomialProduct) {
  std::mt19937 rng(9);
  for (auto f : kFamilies) {
    const auto fams = same_family(f, 2);
    const MonomialPoly p = random_poly(2, 3, rng), q = random_poly(2, 3, rng);
    const MonomialPoly got = from_ortho(multiply(to_ortho(p, fams), to_ortho(q, fams)));
    const MonomialPoly ref = p * q;
    for (const auto& [a, c] : ref.terms()) EXPECT_NEAR(got.coeff(a), c, 1e-10);
  }
}

TEST(Poly, PullbackIsARingHomomorphism) {
  std::mt19937 rng(13);
  const AffineMap map = AffineMap::from_box({{0.5, 2.0}, {-3.0, 1.0}});
  const MonomialPoly p = random_poly(2, 3, rng), q = random_poly(2, 3, rng);
  const MonomialPoly lhs = pullback(p * q, map);
  const MonomialPoly rhs = pullback(p, map) * pullback(q, map);
  for (int k = 0; k < 20; ++k) {
    const std::vector<double> x = {sample_point(MeasureFamily::UniformUnit, rng), sample_point(MeasureFamily::UniformUnit, rng)};
    const double a = lhs.evaluate(x), b = rhs.evaluate(x);
    EXPECT_NEAR(a, b, 1e-9 * std::max(1.0, std::abs(b)));
    EXPECT_NEAR(a, (p * q).evaluate(map.apply(x)), 1e-9 * std::max(1.0, std::abs(a)));
  }
  const MonomialPoly back = pullback(pullback(p, map), map.inverse());
  for (const auto& [a, c] : p.terms()) EXPECT_NEAR(back.coeff(a), c, 1e-10);
}

TEST(Poly, RejectsMismatchedOperands) {
  const MonomialPoly a(1), b(2);
  EXPECT_THROW(a + b, std::invalid_argument);
  const OrthoPoly u({MeasureFamily::ArcsineUnit}), v({MeasureFamily::UniformUnit});
  EXPECT_THROW(u + v, std::invalid_argument);
  EXPECT_THROW(MonomialPoly(1, {{{-1}, 1.0}}), std::invalid_argument);
  EXPECT_THROW(AffineMap::from_box({{1.0, 1.0}}), std::invalid_argument);
}

TEST(Oracle, GridMinimumAndIntegration) {
  const MonomialPoly p(1, {{{2}, 1.0}, {{1}, -1.0}});  // x^2 - x, minimum -1/4 at 1/2
  const auto m = oracle::grid_minimize(p, {}, oracle::GridSpec::uniform(1, -1.0, 1.0, 201));
  EXPECT_NEAR(m.value, -0.25, 1e-12);
  EXPECT_NEAR(m.argmin[0], 0.5, 1e-12);
  const MonomialPoly g(1, {{{1}, -1.0}});  // x <= 0
  EXPECT_NEAR(oracle::grid_minimize(p, {g}, oracle::GridSpec::uniform(1, -1.0, 1.0, 201)).value, 0.0, 1e-12);
  EXPECT_NEAR(oracle::integrate(MonomialPoly(1, {{{4}, 1.0}}), {MeasureFamily::GaussianStd}, 4), 3.0, 1e-12);
  EXPECT_THROW(oracle::integrate(MonomialPoly(1, {{{4}, 1.0}}), {MeasureFamily::GaussianStd}, 3), std::domain_error);
  EXPECT_THROW(oracle::GridSpec::uniform(3, -1, 1, 1000).validate(), std::invalid_argument);
}
