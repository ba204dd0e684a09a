#include "sparsecombine/verify.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace sparsecombine;

TEST(Identities, NormalizationExact) {
  for (int d = 1; d <= 10; ++d) {
    const auto r = check_normalization(d);
    EXPECT_TRUE(r.pass) << d;
    EXPECT_TRUE(r.exact_defect.is_zero());
  }
}

TEST(Identities, CancellationSystemByHand) {
  // d = 1, m = 1: alpha_0 + alpha_1 / 4 = -1/3 + 1/3
  const auto alpha = extrapolation_weights(1);
  EXPECT_EQ(alpha[0] + alpha[1] / Rational(4), Rational(0));
  for (int d = 1; d <= 10; ++d) EXPECT_TRUE(check_cancellation_system(d).pass) << d;
}

TEST(Identities, LemmaCancelExactAndFloating) {
  for (int d = 1; d <= 8; ++d) {
    const auto r = check_lemma_cancel(d, 100, 1234);
    EXPECT_TRUE(r.pass) << d;
    EXPECT_TRUE(r.exact_defect.is_zero());
    ASSERT_TRUE(r.float_defect.has_value());
    EXPECT_LE(*r.float_defect, 1e-12 * std::ldexp(1.0, d));
    EXPECT_EQ(r.seed, 1234U);
  }
}

TEST(Identities, LemmaTwoDimensionalByHand) {
  // beta(0) = 3/7, beta(1) = -2/5; expand the four index vectors.
  const auto a = extrapolation_weights(2);
  const Rational b0(3, 7), b1(-2, 5), four(4);
  const Rational sum = a[0] * b0 + a[1] * b0 / four + a[1] * b1 + a[2] * b1 / four;
  EXPECT_EQ(sum, Rational(0));
}

TEST(Identities, PerturbedWeightsFail) {
  for (int d = 1; d <= 4; ++d) {
    auto w = extrapolation_weights(d);
    w[1] *= Rational(10001, 10000);
    EXPECT_FALSE(check_cancellation_system(d, w).pass) << d;
    EXPECT_FALSE(check_normalization(d, w).pass) << d;
    EXPECT_FALSE(check_lemma_cancel(d, 3, 1, w).pass) << d;
  }
}

TEST(Identities, RunAllReportsEveryCheck) {
  const auto reports = run_identity_checks(10, 8, 100, 7);
  EXPECT_EQ(reports.size(), 10U * 2 + 8U);
  for (const auto& r : reports) EXPECT_TRUE(r.pass) << to_string(r.identity) << " d=" << r.d;
}

TEST(Identities, RangeChecks) {
  EXPECT_THROW(check_normalization(0), std::invalid_argument);
  EXPECT_THROW(check_cancellation_system(33), std::invalid_argument);
  EXPECT_THROW(check_lemma_cancel(2, 0, 1), std::invalid_argument);
  EXPECT_THROW(check_normalization(2, std::vector<Rational>{1, 2}), std::invalid_argument);
}

namespace {

SyntheticExpansion zero_expansion(int d) {
  SyntheticExpansion se;
  se.dim = d;
  se.base = [](const Point& x) { return std::exp(x[0]); };
  return se;
}

Point center(int d) {
  Point x;
  for (int j = 0; j < d; ++j) x.coords.push_back(0.3 + 0.1 * j);
  return x;
}

}  // namespace

TEST(Synthetic, NoErrorTermsGiveZeroResidual) {
  for (int d = 1; d <= 3; ++d) {
    const auto check = synthetic_expansion_check(zero_expansion(d), center(d), 2, 6);
    for (const auto& row : check.rows) EXPECT_LE(std::abs(row.residual), 1e-13);
    EXPECT_TRUE(check.within_bound);
  }
}

TEST(Synthetic, ConstantSecondOrderTermsCancel) {
  for (int d = 1; d <= 3; ++d) {
    auto se = zero_expansion(d);
    for (int j = 0; j < d; ++j)
      se.beta.push_back([j](const Point&, std::span<const double>) { return 1.0 + j; });
    const auto check = synthetic_expansion_check(se, center(d), 2, 6);
    for (const auto& row : check.rows) EXPECT_LE(std::abs(row.residual), 1e-13) << "d=" << d << " n=" << row.n;
  }
}

TEST(Synthetic, TwoDimensionalExample) {
  SyntheticExpansion se;
  se.dim = 2;
  se.base = [](const Point& x) { return x[0] * x[1]; };
  se.beta.push_back([](const Point&, std::span<const double> h) { return 1.0 + h[0] * h[0]; });
  se.beta.push_back([](const Point&, std::span<const double> h) { return std::cos(h[0]); });
  se.gamma.emplace(0b11, [](const Point&, std::span<const double>) { return 1.0; });
  se.gamma_bound = 1.0;
  const auto check = synthetic_expansion_check(se, Point{{0.5, 0.5}}, 2, 6);
  ASSERT_TRUE(check.slope.has_value());
  EXPECT_NEAR(*check.slope, -8.0, 0.3);  // the only surviving term is h1^4 h2^4
  EXPECT_TRUE(check.within_bound);
}

TEST(Synthetic, RandomInstancesAreFourthOrderAndBounded) {
  for (int d = 1; d <= 3; ++d)
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
      const auto se = random_synthetic_expansion(d, seed);
      const auto check = synthetic_expansion_check(se, center(d), 4, 8);
      ASSERT_TRUE(check.slope.has_value());
      EXPECT_LE(*check.slope, -3.7) << "d=" << d << " seed=" << seed;
      EXPECT_TRUE(check.within_bound) << "d=" << d << " seed=" << seed;
    }
}

TEST(Synthetic, TooFewLevels) {
  EXPECT_THROW(synthetic_expansion_check(zero_expansion(1), center(1), 2, 3), std::invalid_argument);
}

TEST(HoExport, OneDimensionalMasses) {
  const auto check = check_hosg_vs_bl_export(1, 3);
  EXPECT_EQ(check.masses, (std::map<int, Rational>{{3, Rational(-1, 3)}, {4, Rational(4, 3)}}));
  EXPECT_TRUE(check.pass());
}

TEST(HoExport, MassesSumToOne) {
  const auto c22 = check_hosg_vs_bl_export(2, 2);
  Rational total;
  for (const auto& [s, m] : c22.masses) total += m;
  EXPECT_EQ(total, Rational(1));
  EXPECT_TRUE(c22.pass());
  const auto c33 = check_hosg_vs_bl_export(3, 3);
  EXPECT_TRUE(c33.pass());
  EXPECT_EQ(c33.masses.begin()->first, 3);
  EXPECT_EQ(c33.masses.rbegin()->first, 3 + 2 * 3 - 1);
}

TEST(HoExport, ClosedFormMatchesAccumulation) {
  for (int d = 1; d <= 4; ++d)
    for (int n = 0; n <= 6; ++n) EXPECT_TRUE(check_hosg_vs_bl_export(d, n).pass()) << "d=" << d << " n=" << n;
}
