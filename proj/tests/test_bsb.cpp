#include <piwkb/bsb.hpp>

#include <gtest/gtest.h>

using namespace piwkb;

namespace {

double mu_of(const CubicPotential& p) { return moduli(p).inv_mu.real(); }

} // namespace

TEST(SolveBsb, FirstRealPoleNearPrintedPair) {
  auto s = solve_bsb({1, 1}, seed_from_scaling({1, 1}), 1e-12);
  // printed to three figures
  EXPECT_NEAR(s.a.real(), -2.34, 0.01);
  EXPECT_NEAR(s.b.real(), -0.064, 0.001);
  EXPECT_NEAR(s.a.imag(), 0.0, 1e-12);
  EXPECT_NEAR(s.b.imag(), 0.0, 1e-12);
}

TEST(SolveBsb, SecondRealPoleNearPrintedPair) {
  auto s = solve_bsb({2, 2}, seed_from_scaling({2, 2}), 1e-12);
  EXPECT_NEAR(s.a.real(), -5.65, 0.01);
  EXPECT_NEAR(s.b.real(), -0.23, 0.01);
}

TEST(SolveBsb, AcceptedSolutionSatisfiesAllInvariants) {
  auto s = solve_bsb({3, 3}, seed_from_scaling({3, 3}), 1e-11);
  EXPECT_LE(s.residual_norm, 1e-11);
  EXPECT_TRUE(s.class_checked);
  EXPECT_TRUE(s.arg_bound_ok);
  EXPECT_GT(std::abs(std::arg(s.a)), 4 * pi / 5);
  auto g = classify(s.potential());
  EXPECT_EQ(g.class_code, ClassCode::c320);
  EXPECT_TRUE(std::isfinite(s.rho_max));
  EXPECT_GE(s.rho_max, 0.0);
}

TEST(SolveBsb, PeriodsHitTheTargets) {
  auto s = solve_bsb({2, 3}, seed_from_scaling({2, 3}, {{{2, 2}, solve_bsb({2, 2}, seed_from_scaling({2, 2}), 1e-12)}}),
                     1e-12);
  auto P = cycle_period(s.potential(), s.labels, Cycle::plus).value;
  auto M = cycle_period(s.potential(), s.labels, Cycle::minus).value;
  EXPECT_LE(std::abs(P - plus_target(2)), 1e-10);
  EXPECT_LE(std::abs(M - minus_target(3)), 1e-10);
}

TEST(SolveBsb, RejectsNonPositiveIndices) {
  EXPECT_THROW(solve_bsb({0, 1}, {-2.0, -0.06}, 1e-10), error);
}

TEST(SolveBsb, FarSeedFailsCleanly) {
  BsbOptions o;
  o.max_iter = 3;
  EXPECT_THROW(solve_bsb({4, 4}, seed_from_scaling({1, 1}), 1e-12, o), error);
}

TEST(RealOrbit, ConstantsMatchQuotedValues) {
  auto k = real_orbit_constants();
  EXPECT_NEAR(k.mu_star, -3158.92, 0.001 * 3158.92);
  EXPECT_NEAR(k.a_star, -4.0874, 0.001 * 4.0874);
  EXPECT_NEAR(k.b_star, -0.1470, 0.001 * 0.1470);
  EXPECT_NEAR(mu_of({k.a_star, k.b_star}), k.mu_star, 1e-9 * std::abs(k.mu_star));
}

TEST(RealPoles, PowerLawPointsShareOneModulus) {
  auto poles = real_poles(5);
  double mu = mu_of(poles[0]);
  for (auto& p : poles) EXPECT_NEAR(mu_of(p), mu, 1e-10 * std::abs(mu));
  for (std::size_t i = 1; i < poles.size(); ++i) EXPECT_LT(poles[i].a.real(), poles[i - 1].a.real());
  EXPECT_NEAR(poles[0].a.real(), -2.34, 0.01);
  EXPECT_NEAR(poles[1].a.real(), -5.65, 0.01);
}

TEST(RealPoles, PolishedPointsSolveTheSystemAndStayOnTheOrbit) {
  auto raw = real_poles(5), polished = real_poles(5, true, 1e-12);
  double mu = mu_of(polished[0]);
  for (int n = 0; n < 5; ++n) {
    EXPECT_NEAR(mu_of(polished[n]), mu, 1e-8 * std::abs(mu));
    EXPECT_LE(std::abs(polished[n].a - raw[n].a), 1e-6 * std::abs(raw[n].a));
    auto lab = positional_labels(polished[n]);
    EXPECT_LE(std::abs(cycle_period(polished[n], lab, Cycle::plus).value - plus_target(n + 1)), 1e-6);
  }
}

TEST(RealPoles, RejectsEmptyRange) { EXPECT_THROW(real_poles(0), error); }

TEST(SeedFromScaling, DiagonalUsesThePowerLaw) {
  auto s = seed_from_scaling({3, 3});
  auto p = real_poles(3).back();
  EXPECT_EQ(s.a, p.a);
  EXPECT_EQ(s.b, p.b);
}

TEST(SeedFromScaling, OffDiagonalContinuesFromSolvedNeighbour) {
  SolvedLattice solved;
  solved[{1, 1}] = solve_bsb({1, 1}, seed_from_scaling({1, 1}), 1e-12);
  auto s21 = solve_bsb({2, 1}, seed_from_scaling({2, 1}, solved), 1e-12);
  auto s12 = solve_bsb({1, 2}, seed_from_scaling({1, 2}, solved), 1e-12);
  EXPECT_LE(std::abs(s21.a - std::conj(s12.a)), 1e-8);
  EXPECT_LE(std::abs(s21.b - std::conj(s12.b)), 1e-8);
  auto seed21 = seed_from_scaling({2, 1}, solved), seed12 = seed_from_scaling({1, 2}, solved);
  EXPECT_LE(std::abs(seed21.a - std::conj(seed12.a)), 1e-8);
}

TEST(SeedFromScaling, ColdStartStillConverges) {
  auto s = solve_bsb({3, 1}, seed_from_scaling({3, 1}), 1e-11);
  EXPECT_LE(s.residual_norm, 1e-11);
  EXPECT_TRUE(s.arg_bound_ok);
}

TEST(Lattice, ConjugateAcrossTheDiagonal) {
  auto cells = solve_lattice(3, 3);
  std::map<BsbIndex, BsbSolution> byidx;
  for (auto& c : cells) {
    ASSERT_TRUE(c.solution) << c.index.n << "," << c.index.m << ": " << c.failure;
    byidx[c.index] = *c.solution;
  }
  for (auto& [k, s] : byidx) {
    auto& t = byidx.at({k.m, k.n});
    EXPECT_LE(std::abs(s.a - std::conj(t.a)), 1e-8);
    EXPECT_LE(std::abs(s.b - std::conj(t.b)), 1e-8);
    EXPECT_TRUE(s.arg_bound_ok);
    if (k.n == k.m) EXPECT_NEAR(s.a.imag(), 0.0, 1e-10);
  }
}

TEST(Lattice, RejectsEmptyBounds) { EXPECT_THROW(solve_lattice(0, 2), error); }
