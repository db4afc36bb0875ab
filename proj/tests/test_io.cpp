#include <piwkb/io.hpp>

#include <gtest/gtest.h>

#include <regex>

using namespace piwkb;

TEST(ParseComplex, AcceptedForms) {
  EXPECT_EQ(parse_complex("1"), cplx(1, 0));
  EXPECT_EQ(parse_complex("-2.5"), cplx(-2.5, 0));
  EXPECT_EQ(parse_complex("1+2i"), cplx(1, 2));
  EXPECT_EQ(parse_complex("1 - 2i"), cplx(1, -2));
  EXPECT_EQ(parse_complex("-2.5e-1-3i"), cplx(-0.25, -3));
  EXPECT_EQ(parse_complex("1e-3+1e+2i"), cplx(0.001, 100));
  EXPECT_EQ(parse_complex("3i"), cplx(0, 3));
  EXPECT_EQ(parse_complex("-i"), cplx(0, -1));
  EXPECT_EQ(parse_complex("i"), cplx(0, 1));
  EXPECT_EQ(parse_complex("1,-2"), cplx(1, -2));
}

TEST(ParseComplex, RejectsGarbage) {
  for (auto s : {"", "abc", "1+", "2i3", "1,", "1,2,3", "1..2"}) EXPECT_THROW(parse_complex(s), error) << s;
}

TEST(Json, ComplexRoundTrip) {
  cplx z(0.1, -1.0 / 3.0);
  auto j = json::parse(to_json(z).dump());
  EXPECT_EQ(complex_from_json(j), z);
  EXPECT_EQ(complex_from_json(json(2.5)), cplx(2.5, 0));
  EXPECT_THROW(complex_from_json(json::array({1})), error);
}

TEST(Json, GraphDumpHasTheDocumentedKeys) {
  auto g = classify({0.0, 0.0});
  auto j = to_json(g);
  for (auto k : {"vertices", "edges", "class_code", "shift"}) EXPECT_TRUE(j.contains(k)) << k;
  EXPECT_EQ(j["class_code"], "000");
  EXPECT_EQ(j["vertices"].size(), 1u);
  EXPECT_EQ(j["vertices"][0]["multiplicity"], 3);
  EXPECT_EQ(j["edges"].size(), 5u);
}

TEST(Json, MonodromyReportHasFiveEntriesEach) {
  StokesMultipliers s;
  s.sigma = tritronquee_multipliers();
  s.admissibility_residuals = admissibility(s.sigma);
  auto j = to_json(s);
  EXPECT_EQ(j["sigma"].size(), 5u);
  EXPECT_EQ(j["admissibility_residuals"].size(), 5u);
  EXPECT_EQ(j["tritronquee_margin"], 0.0);
  EXPECT_EQ(complex_from_json(j["sigma"][2]), I); // index 0 sits in the middle
}

TEST(Csv, HeaderAndFullPrecisionRows) {
  BsbSolution s;
  s.index = {1, 2};
  s.a = cplx(-4.0499042053970209, -1.3469360408239237);
  s.b = cplx(-0.15057126024758516, 0.064369895897418039);
  s.residual_norm = 1e-12;
  s.rho_max = 0.3364382628075176;
  std::vector<LatticeCell> cells{{{1, 2}, s, {}}, {{2, 2}, std::nullopt, "failed"}};
  std::ostringstream os;
  write_lattice_csv(os, cells);
  std::istringstream in(os.str());
  std::string header, row, extra;
  std::getline(in, header);
  std::getline(in, row);
  EXPECT_EQ(header, "n,m,re_a,im_a,re_b,im_b,residual,rho_max");
  EXPECT_FALSE(std::getline(in, extra));
  std::vector<std::string> f;
  std::stringstream rs(row);
  for (std::string x; std::getline(rs, x, ',');) f.push_back(x);
  ASSERT_EQ(f.size(), 8u);
  EXPECT_EQ(std::stod(f[2]), s.a.real());
  EXPECT_EQ(std::stod(f[5]), s.b.imag());
  EXPECT_EQ(std::stod(f[7]), s.rho_max);
}

TEST(Svg, OnePolylinePerTracedLine) {
  auto t = trace_stokes_lines({1.0, 0.0});
  std::ostringstream os;
  write_svg(os, t);
  auto s = os.str();
  std::regex poly("<polyline");
  EXPECT_EQ(std::distance(std::sregex_iterator(s.begin(), s.end(), poly), std::sregex_iterator()), 9);
  EXPECT_NE(s.find("</svg>"), std::string::npos);
  std::ostringstream cs;
  write_svg(cs, t, {400, 0, true});
  EXPECT_NE(cs.str().find("<circle cx=\"200\" cy=\"200\" r=\"200\""), std::string::npos);
}
