#pragma once

#include <piwkb/bsb.hpp>
#include <piwkb/monodromy.hpp>

#include <json.hpp>

#include <iomanip>
#include <limits>
#include <ostream>
#include <sstream>

namespace piwkb {

using json = nlohmann::json;

/// Complex numbers travel as [re, im].
inline json to_json(cplx z) { return json::array({z.real(), z.imag()}); }

inline cplx complex_from_json(const json& j) {
  if (j.is_number()) return {j.get<double>(), 0.0};
  if (!j.is_array() || j.size() != 2) throw error("expected [re, im]");
  return {j[0].get<double>(), j[1].get<double>()};
}

/** \brief Reads "x", "x+yi", "-2.5e-1-3i", "yi", "i" or "x,y". */
inline cplx parse_complex(std::string s) {
  std::erase_if(s, [](unsigned char c) { return std::isspace(c); });
  auto fail = [&]() -> cplx { throw error("cannot read a complex number from '" + s + "'"); };
  if (s.empty()) return fail();
  auto number = [&](const std::string& t, std::size_t& used) {
    std::istringstream in(t);
    in.imbue(std::locale::classic());
    double x;
    if (!(in >> x)) return std::numeric_limits<double>::quiet_NaN();
    used = in.eof() ? t.size() : static_cast<std::size_t>(in.tellg());
    return x;
  };
  std::size_t used = 0;
  if (auto c = s.find(','); c != std::string::npos) {
    std::size_t u2 = 0;
    double re = number(s.substr(0, c), used), im = number(s.substr(c + 1), u2);
    if (std::isnan(re) || std::isnan(im) || used != c || u2 != s.size() - c - 1) return fail();
    return {re, im};
  }
  auto imag_unit = [&](const std::string& t) -> double {
    if (t.empty() || t.back() != 'i') return std::numeric_limits<double>::quiet_NaN();
    std::string body = t.substr(0, t.size() - 1);
    if (body.empty() || body == "+") return 1.0;
    if (body == "-") return -1.0;
    std::size_t u = 0;
    double y = number(body, u);
    return u == body.size() ? y : std::numeric_limits<double>::quiet_NaN();
  };
  if (s.back() == 'i') {
    // split at the last sign that is not part of an exponent
    for (std::size_t k = s.size() - 1; k-- > 0;) {
      if ((s[k] == '+' || s[k] == '-') && k > 0 && s[k - 1] != 'e' && s[k - 1] != 'E') {
        double re = number(s.substr(0, k), used);
        double im = imag_unit(s.substr(k));
        if (std::isnan(re) || used != k || std::isnan(im)) return fail();
        return {re, im};
      }
    }
    double im = imag_unit(s);
    if (std::isnan(im)) return fail();
    return {0.0, im};
  }
  double re = number(s, used);
  if (std::isnan(re) || used != s.size()) return fail();
  return {re, 0.0};
}

inline json to_json(const StokesComplexGraph& g) {
  json v = json::array();
  for (std::size_t i = 0; i < g.vertices().points.size(); ++i) {
    const auto& t = g.vertices().points[i];
    json e{{"index", i}, {"value", to_json(t.value)}, {"multiplicity", t.multiplicity}};
    if (i < g.vertex_role.size()) {
      static const char* roles[] = {"minus", "base", "plus"};
      e["role"] = roles[g.vertex_role[i] + 1];
    }
    v.push_back(e);
  }
  json e = json::array();
  for (auto& x : g.edges)
    e.push_back({{"from", x.from}, {"to", x.to}, {"kind", x.external ? "ray" : "internal"}, {"lines", x.lines}});
  return {{"vertices", v}, {"edges", e}, {"class_code", to_string(g.class_code)}, {"shift", g.shift}};
}

inline json to_json(const StokesMultipliers& s, double tritronquee_threshold = 1e-6) {
  json sig = json::array(), adm = json::array();
  for (int k = -2; k <= 2; ++k) {
    sig.push_back(to_json(s.at(k)));
    adm.push_back(std::abs(s.admissibility_residuals[slot5(k)]));
  }
  auto t = tritronquee_test(s, tritronquee_threshold);
  return {{"sigma", sig},
          {"sigma_index", {-2, -1, 0, 1, 2}},
          {"admissibility_residuals", adm},
          {"tritronquee_margin", t.margin},
          {"radius", s.R},
          {"inner_point_discrepancy", s.eval_discrepancy},
          {"digits", s.digits}};
}

inline constexpr const char* lattice_csv_header = "n,m,re_a,im_a,re_b,im_b,residual,rho_max";

/// One row per solved cell; failed cells are skipped here and reported by the caller.
inline void write_lattice_csv(std::ostream& os, const std::vector<LatticeCell>& cells) {
  std::ostringstream buf;
  buf.imbue(std::locale::classic());
  buf << std::setprecision(std::numeric_limits<double>::max_digits10);
  buf << lattice_csv_header << '\n';
  for (auto& c : cells) {
    if (!c.solution) continue;
    const auto& s = *c.solution;
    buf << s.index.n << ',' << s.index.m << ',' << s.a.real() << ',' << s.a.imag() << ',' << s.b.real() << ','
        << s.b.imag() << ',' << s.residual_norm << ',' << s.rho_max << '\n';
  }
  os << buf.str();
}

struct SvgOptions {
  double size = 600;       // pixels, square canvas
  double extent = 0;       // half-width of the plotted window; 0 fits the traced lines
  bool compactify = false; // draw z / (1 + |z|) in the unit disc
};

/** \brief Static picture of traced lines: one polyline per line, dots and labels at turning points. */
inline void write_svg(std::ostream& os, const StokesTrace& t, const SvgOptions& o = {}) {
  auto map = [&](cplx z) { return o.compactify ? z / (1.0 + std::abs(z)) : z; };
  double ext = o.compactify ? 1.0 : o.extent;
  if (ext <= 0) {
    for (auto& l : t.lines)
      for (auto z : l.points) ext = std::max({ext, std::abs(z.real()), std::abs(z.imag())});
    ext = ext > 0 ? 1.05 * ext : 1.0;
  }
  const double half = o.size / 2;
  auto px = [&](cplx z) {
    cplx w = map(z);
    return std::pair{half + half * w.real() / ext, half - half * w.imag() / ext};
  };
  std::ostringstream s;
  s.imbue(std::locale::classic());
  s << std::setprecision(6);
  s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << o.size << "\" height=\"" << o.size
    << "\" viewBox=\"0 0 " << o.size << ' ' << o.size << "\">\n";
  s << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  if (o.compactify) s << "<circle cx=\"" << half << "\" cy=\"" << half << "\" r=\"" << half << "\" fill=\"none\" stroke=\"#bbb\"/>\n";
  const char* colour = t.anti_stokes ? "#c03030" : "#2040a0";
  for (auto& l : t.lines) {
    s << "<polyline class=\"line\" fill=\"none\" stroke=\"" << colour << "\" stroke-width=\"1.2\" points=\"";
    for (auto z : l.points) {
      auto [x, y] = px(z);
      s << x << ',' << y << ' ';
    }
    s << "\"/>\n";
  }
  for (std::size_t i = 0; i < t.tps.points.size(); ++i) {
    auto [x, y] = px(t.tps.points[i].value);
    s << "<circle cx=\"" << x << "\" cy=\"" << y << "\" r=\"3.5\" fill=\"black\"/>\n";
    s << "<text x=\"" << x + 6 << "\" y=\"" << y - 6 << "\" font-size=\"12\">" << i << "</text>\n";
  }
  s << "</svg>\n";
  os << s.str();
}

} // namespace piwkb
