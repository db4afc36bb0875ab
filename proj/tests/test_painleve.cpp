#include <piwkb/bsb.hpp>
#include <piwkb/painleve.hpp>

#include <gtest/gtest.h>

using namespace piwkb;

TEST(Laurent, LowOrderPatternIsExact) {
  EXPECT_TRUE(laurent_coeff_poly(-1).is_zero());
  EXPECT_TRUE(laurent_coeff_poly(0).is_zero());
  EXPECT_TRUE(laurent_coeff_poly(1).is_zero());
  auto cm2 = laurent_coeff_poly(-2);
  ASSERT_EQ(cm2.terms.size(), 1u);
  EXPECT_EQ(cm2.terms.begin()->first, (std::pair{0, 0}));
  EXPECT_EQ(cm2.terms.begin()->second, rational(1));
  auto c2 = laurent_coeff_poly(2);
  ASSERT_EQ(c2.terms.size(), 1u);
  EXPECT_EQ(c2.terms.begin()->first, (std::pair{1, 0}));
  EXPECT_EQ(c2.terms.begin()->second, rational(1, 10));
  auto c3 = laurent_coeff_poly(3);
  ASSERT_EQ(c3.terms.size(), 1u);
  EXPECT_EQ(c3.terms.begin()->first, (std::pair{0, 0}));
  EXPECT_EQ(c3.terms.begin()->second, rational(1, 6));
  auto c4 = laurent_coeff_poly(4);
  ASSERT_EQ(c4.terms.size(), 1u);
  EXPECT_EQ(c4.terms.begin()->first, (std::pair{0, 1}));
  EXPECT_EQ(c4.terms.begin()->second, rational(1));
}

TEST(Laurent, NumericSeriesCarriesThePattern) {
  cplx a(1.3, -0.4), b(0.2, 0.7);
  auto s = laurent_coeffs(a, b, 12);
  EXPECT_EQ(s.coeff(-2), cplx(1.0));
  EXPECT_EQ(s.coeff(-1), cplx(0.0));
  EXPECT_EQ(s.coeff(0), cplx(0.0));
  EXPECT_EQ(s.coeff(1), cplx(0.0));
  EXPECT_LE(std::abs(s.coeff(2) - a / 10.0), 1e-15);
  EXPECT_LE(std::abs(s.coeff(3) - 1.0 / 6.0), 1e-15);
  EXPECT_EQ(s.coeff(4), b);
}

TEST(Laurent, FifthCoefficientCancelsTheNextResidualOrder) {
  // with c_5 in place the residual starts one order later than without it
  cplx a(0.8, 0.3), b(-0.4, 0.1);
  auto s5 = laurent_coeffs(a, b, 5);
  auto s6 = laurent_coeffs(a, b, 6);
  double r1 = pi_residual(s5, a + 0.02), r2 = pi_residual(s5, a + 0.01);
  EXPECT_NEAR(std::log2(r1 / r2), 4.0, 0.2); // |x|^{N-1} with N = 5
  double q1 = pi_residual(s6, a + 0.02), q2 = pi_residual(s6, a + 0.01);
  EXPECT_NEAR(std::log2(q1 / q2), 5.0, 0.2);
}

TEST(Laurent, CoefficientsAreRealPolynomials) {
  cplx a(0.9, -0.6), b(-0.3, 0.45);
  auto s = laurent_coeffs(a, b, 30), t = laurent_coeffs(std::conj(a), std::conj(b), 30);
  for (int j = -2; j <= 30; ++j) EXPECT_LE(std::abs(t.coeff(j) - std::conj(s.coeff(j))), 1e-12 * std::max(1.0, std::abs(s.coeff(j))));
  for (int j = 5; j <= 12; ++j)
    for (auto& [deg, c] : laurent_coeff_poly(j).terms) EXPECT_NE(c, rational(0));
}

TEST(Laurent, OrderOutOfRangeThrows) {
  EXPECT_THROW(laurent_coeffs(1.0, 0.0, 4), error);
  EXPECT_THROW(laurent_coeffs(1.0, 0.0, 51), error);
  EXPECT_THROW(laurent_coeff_poly(-3), error);
}

TEST(PiResidual, DecaysWithTheOrder) {
  cplx a(-2.34, 0.0), b(-0.064, 0.0);
  double prev = std::numeric_limits<double>::infinity();
  for (int n : {6, 10, 14, 18, 22}) {
    double r = pi_residual(laurent_coeffs(a, b, n), a + 0.1);
    EXPECT_LT(r, prev) << n;
    prev = r;
  }
}

TEST(PiResidual, ConjugateInputsGiveEqualResiduals) {
  cplx a(0.7, 0.5), b(0.1, -0.3), z = a + cplx(0.03, 0.04);
  double r = pi_residual(laurent_coeffs(a, b, 10), z);
  double s = pi_residual(laurent_coeffs(std::conj(a), std::conj(b), 10), std::conj(z));
  EXPECT_NEAR(r, s, 1e-12 * std::max(r, 1e-300));
}

TEST(PiResidual, FirstRealPoleAtSmallDistance) {
  for (auto& p : real_poles(2, true)) {
    auto s = laurent_coeffs(p.a, p.b, 20);
    EXPECT_LE(pi_residual(s, p.a + 0.05), 1e-10);
  }
  auto s = laurent_coeffs(-2.34, -0.064, 20);
  EXPECT_LE(pi_residual(s, cplx(-2.34 + 0.05)), 1e-10);
}

TEST(PiResidual, OutsideTrustedDiscThrows) {
  auto s = laurent_coeffs(cplx(-2.34), cplx(-0.064), 10);
  EXPECT_THROW(pi_residual(s, s.pole), error);
  EXPECT_THROW(pi_residual(s, s.pole + 5.0), error);
}

TEST(LaurentSeries, DoublePoleStructure) {
  auto s = laurent_coeffs(cplx(-2.34), cplx(-0.064), 20);
  for (double t : {0.3, 2.2, 4.1}) {
    cplx x = std::polar(1e-3, t);
    EXPECT_LE(std::abs(x * x * s.value(s.pole + x) - 1.0), 1e-8);
  }
}
