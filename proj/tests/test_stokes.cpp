#include <piwkb/bsb.hpp>

#include <gtest/gtest.h>

#include <random>
#include <set>

using namespace piwkb;

namespace {

CubicPotential real_orbit_point() {
  auto k = real_orbit_constants();
  return {k.a_star, k.b_star};
}

/// Lines per vertex must be 3, 4, 5 for simple, double, triple points.
void expect_valency(const StokesTrace& t) {
  std::vector<int> count(t.tps.points.size(), 0);
  for (auto& l : t.lines) ++count.at(l.source);
  for (std::size_t i = 0; i < count.size(); ++i) EXPECT_EQ(count[i], t.tps.points[i].multiplicity + 2);
}

bool internal_acyclic(const StokesComplexGraph& g) {
  std::set<std::pair<int, int>> e;
  for (auto& x : g.edges)
    if (!x.external) e.insert({std::min(x.from, x.to), std::max(x.from, x.to)});
  return e.size() < std::max<std::size_t>(1, g.vertices().points.size());
}

} // namespace

TEST(Trace, PureCubicGivesFiveStraightLines) {
  auto t = trace_stokes_lines({0.0, 0.0});
  ASSERT_EQ(t.lines.size(), 5u);
  std::set<int> rays;
  for (auto& l : t.lines) {
    ASSERT_EQ(l.end.kind, EndKind::ray);
    rays.insert(l.end.index);
    double phi = ray_angle(l.end.index);
    for (std::size_t i = 1; i < l.points.size(); ++i)
      EXPECT_LE(std::abs(std::arg(l.points[i] * std::polar(1.0, -phi))), 1e-6);
  }
  EXPECT_EQ(rays.size(), 5u);
}

TEST(Trace, DoublePointEmitsFourLines) {
  // V = 4 (l + 1)^2 (l - 2)
  auto t = trace_stokes_lines({6.0, 2.0 / 7.0});
  expect_valency(t);
  int from_double = 0;
  for (auto& l : t.lines) from_double += t.tps.points[l.source].multiplicity == 2;
  EXPECT_EQ(from_double, 4);
}

TEST(Trace, RealOrbitPointHasNineLinesAndTwoInternalEdges) {
  auto p = real_orbit_point();
  auto g = classify(p);
  EXPECT_EQ(g.trace.lines.size(), 9u);
  EXPECT_EQ(g.class_code, ClassCode::c320);
  int internal = 0;
  for (auto& e : g.edges)
    if (!e.external) {
      ++internal;
      cplx A = g.vertices().points[e.from].value, B = g.vertices().points[e.to].value;
      cplx s = turning_point_action(p, A, B, std::sqrt(p(0.5 * (A + B)))).value;
      EXPECT_LE(std::abs(s.real()), 1e-8 * std::abs(s));
    }
  EXPECT_EQ(internal, 2);
}

TEST(Trace, AntiStokesLinesEndOnShiftedRays) {
  TraceOptions o;
  o.anti_stokes = true;
  auto t = trace_stokes_lines({0.0, 0.0}, o);
  ASSERT_EQ(t.lines.size(), 5u);
  for (auto& l : t.lines) {
    double phi = ray_angle(l.end.index, true);
    EXPECT_LE(std::abs(std::arg(l.points.back() * std::polar(1.0, -phi))), 1e-6);
  }
}

TEST(Classify, PureCubicIsClass000) { EXPECT_EQ(classify({0.0, 0.0}).class_code, ClassCode::c000); }

TEST(Classify, DoublePointFamilyIsClass110) {
  for (double l0 : {0.5, 1.0, 2.0}) {
    CubicPotential p{6 * l0 * l0, 2 * l0 * l0 * l0 / 7};
    EXPECT_EQ(classify(p).class_code, ClassCode::c110) << l0;
  }
}

TEST(Classify, RealOrbitIsBoutrouxGraphWithBaseAdjacentToBothInternalEdges) {
  auto g = classify(real_orbit_point());
  ASSERT_EQ(g.class_code, ClassCode::c320);
  int base = -1;
  for (std::size_t i = 0; i < g.vertex_role.size(); ++i)
    if (g.vertex_role[i] == 0) base = static_cast<int>(i);
  ASSERT_GE(base, 0);
  for (auto& e : g.edges)
    if (!e.external) EXPECT_TRUE(e.from == base || e.to == base);
  EXPECT_NEAR(std::abs(*g.labels.base - g.vertices().points[base].value), 0.0, 1e-14);
}

TEST(Classify, ThreeRealSimplePointsAgreeWithPeriodTest) {
  CubicPotential p{1.0, 0.0};
  auto g = classify(p);
  EXPECT_NE(g.class_code, ClassCode::c320);
  EXPECT_EQ(g.vertices().simple_count(), 3);
  auto q = classify_by_periods(p);
  EXPECT_EQ(q.code, g.class_code);
  // neither cycle has vanishing real part
  auto P = cycle_period(p, g.labels, Cycle::plus).value, M = cycle_period(p, g.labels, Cycle::minus).value;
  EXPECT_GT(std::max(std::abs(P.real()) / std::abs(P), std::abs(M.real()) / std::abs(M)), 1e-3);
}

TEST(Classify, DecorationShiftsUnderRotation) {
  CubicPotential p{cplx(0.7, 0.4), cplx(-0.3, 0.2)};
  auto g = classify(p);
  auto r0 = sector_relation(g);
  for (int m = 1; m < 5; ++m) {
    auto h = classify(apply_group({1.3, m}, p));
    EXPECT_EQ(h.class_code, g.class_code);
    auto r1 = sector_relation(h);
    for (int j = -2; j <= 2; ++j)
      for (int k = -2; k <= 2; ++k) EXPECT_EQ(r1.related(j + m, k + m), r0.related(j, k)) << m << " " << j << k;
  }
}

TEST(Classify, RealPotentialsAreSymmetricUnderReflection) {
  std::mt19937 g(17);
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  for (int i = 0; i < 15; ++i) {
    CubicPotential p{u(g), u(g) / 3};
    StokesComplexGraph c;
    try {
      c = classify(p);
    } catch (const ambiguity_error&) {
      continue;
    }
    auto r = sector_relation(c);
    for (int j = -2; j <= 2; ++j)
      for (int k = -2; k <= 2; ++k) EXPECT_EQ(r.related(j, k), r.related(-j, -k)) << p.a << " " << p.b;
  }
}

TEST(Classify, RandomComplexPotentialsRespectGraphInvariants) {
  std::mt19937 g(23);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  int done = 0;
  for (int i = 0; i < 30; ++i) {
    CubicPotential p{3.0 * cplx(u(g), u(g)), cplx(u(g), u(g))};
    try {
      auto c = classify(p);
      expect_valency(c.trace);
      EXPECT_TRUE(internal_acyclic(c));
      std::set<int> rays;
      for (auto& e : c.edges)
        if (e.external) rays.insert(slot5(e.to));
      EXPECT_EQ(rays.size(), 5u);
      ++done;
    } catch (const ambiguity_error&) {
    }
  }
  EXPECT_GE(done, 25);
}

TEST(SectorRelation, TableRows) {
  auto all = sector_relation(ClassCode::c300, 0);
  for (int j = -2; j <= 2; ++j)
    for (int k = -2; k <= 2; ++k) EXPECT_TRUE(all.related(j, k));

  auto none = sector_relation(ClassCode::c000, 0);
  for (int j = -2; j <= 2; ++j)
    for (int k = -2; k <= 2; ++k) {
      int d = slot5(j - k);
      EXPECT_EQ(none.related(j, k), d == 0 || d == 1 || d == 4);
    }

  auto c110 = sector_relation(ClassCode::c110, 0);
  EXPECT_TRUE(c110.related(1, -1));
  for (auto [j, k] : {std::pair{0, 2}, {0, -2}, {1, -2}, {2, -1}}) EXPECT_FALSE(c110.related(j, k));

  auto c320 = sector_relation(ClassCode::c320, 0);
  for (auto [j, k] : {std::pair{1, -1}, {1, -2}, {-1, 2}}) EXPECT_FALSE(c320.related(j, k));
  EXPECT_TRUE(c320.related(0, 2));
  EXPECT_TRUE(c320.related(0, -2));
}

TEST(SectorRelation, SymmetricReflexiveAndConsecutiveForEveryClassAndShift) {
  for (int c = 0; c < 7; ++c)
    for (int m = 0; m < 5; ++m) {
      auto r = sector_relation(static_cast<ClassCode>(c), m);
      for (int j = -2; j <= 2; ++j) {
        EXPECT_TRUE(r.related(j, j));
        EXPECT_TRUE(r.related(j, j + 1));
        for (int k = -2; k <= 2; ++k) EXPECT_EQ(r.related(j, k), r.related(k, j));
      }
    }
}

TEST(ClassCodes, RoundTripThroughStrings) {
  for (int c = 0; c < 7; ++c) {
    auto code = static_cast<ClassCode>(c);
    EXPECT_EQ(class_from_string(to_string(code)), code);
  }
  EXPECT_THROW(class_from_string("999"), error);
}

TEST(ClassifyByPeriods, RealOrbitIsBoutrouxGraph) {
  EXPECT_EQ(classify_by_periods(real_orbit_point()).code, ClassCode::c320);
}

TEST(ClassifyByPeriods, ThreeRealRootsAreNotBoutroux) {
  std::mt19937 g(29);
  std::uniform_real_distribution<double> ua(1.0, 6.0), ub(-0.2, 0.2);
  for (int i = 0; i < 10; ++i) {
    CubicPotential p{ua(g), ub(g)};
    if (turning_points(p).points.size() != 3) continue;
    auto q = classify_by_periods(p);
    EXPECT_NE(q.code, ClassCode::c320);
  }
}

TEST(ClassifyByPeriods, RoundedFirstPoleLiesOffTheOrbit) {
  // three printed digits miss the codimension-one orbit; both classifiers see the same side
  CubicPotential p{-2.34, -0.064};
  EXPECT_EQ(classify(p).class_code, classify_by_periods(p).code);
  EXPECT_NE(classify(p).class_code, ClassCode::c320);
}

TEST(ClassifyByPeriods, NeedsSimplePoints) {
  EXPECT_THROW(classify_by_periods({0.0, 0.0}), degenerate_error);
}
