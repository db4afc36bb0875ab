#pragma once

#include <piwkb/action.hpp>

#include <boost/numeric/odeint.hpp>

#include <algorithm>
#include <array>
#include <bitset>
#include <numeric>
#include <string>

namespace piwkb {

struct TraceOptions {
  double launch = 1e-4;        // launch offset from the turning point, relative to separation
  double trap = 1e-4;          // trapping radius, relative to separation
  double capture_zone = 0.05;  // capture tests start inside this radius
  double near_miss = 100.0;    // capture misses within this factor of the threshold are ambiguous
  double r_max_factor = 10.0;  // exit radius = r_max_factor (1 + max|l|), in units of the root scale
  double wedge_tol = pi / 20;
  int max_doublings = 4;
  double rtol = 1e-10;
  long max_steps = 400000;
  bool anti_stokes = false;
};

enum class EndKind { turning_point, ray };

struct LineEnd {
  EndKind kind = EndKind::ray;
  int index = 0; // turning point index, or ray label in {-2..2}
};

struct StokesLine {
  int source = 0;
  double launch_angle = 0;
  std::vector<cplx> points;
  std::vector<double> heights; // |S - S(source)| along the line
  LineEnd end;
  double closest_miss = std::numeric_limits<double>::infinity(); // min |missed capture| / threshold
};

struct StokesTrace {
  CubicPotential potential;
  TurningPointSet tps;
  std::vector<StokesLine> lines;
  bool anti_stokes = false;
};

/// Argument of the asymptotic ray with label k: (2k+1) pi/5, or 2 pi k/5 for horizontal lines.
inline double ray_angle(int k, bool anti = false) { return anti ? 2 * pi * k / 5.0 : (2 * k + 1) * pi / 5.0; }

namespace detail {

inline cplx local_coefficient(const CubicPotential& p, const TurningPoint& t) {
  switch (t.multiplicity) {
  case 1: return p.d1(t.value);
  case 2: return p.d2(t.value) / 2.0;
  default: return 4.0;
  }
}

inline double separation(const TurningPointSet& tps) {
  double s = tps.min_separation();
  return s > 0 ? s : tps.scale();
}

/// S from l to turning point j along the straight segment, sqrt(V) continued from s_l at l.
inline cplx action_to_tp(const CubicPotential& p, const TurningPointSet& tps, cplx l, cplx s_l, int j) {
  SegmentRoot sr{tps.roots, l, tps.points[j].value, 0.0, s_l};
  double eps = 1e-9 * tps.scale();
  for (int i = 0; i < 3; ++i) sr.at_end[i] = std::abs(tps.roots[i] - tps.points[j].value) <= eps;
  ActionOptions o;
  o.tol = 1e-12;
  auto q = integrate_unit<cplx>([&](double t, double u) { return sr(t, u); }, false, true, o);
  return q.value * (tps.points[j].value - l);
}

inline int nearest_ray(double theta, bool anti, double& miss) {
  int best = 0;
  miss = 1e9;
  for (int k = -2; k <= 2; ++k) {
    double d = std::remainder(theta - ray_angle(k, anti), 2 * pi);
    if (std::abs(d) < miss) miss = std::abs(d), best = k;
  }
  return best;
}

/** Trace one line of the normalized potential (root scale 1). */
inline StokesLine trace_one(const CubicPotential& p, const TurningPointSet& tps, int src, double theta,
                            const TraceOptions& o) {
  namespace ode = boost::numeric::odeint;
  using State = std::array<cplx, 2>;
  const auto& tp = tps.points[src];
  const int mult = tp.multiplicity;
  const double sep = separation(tps);
  double own = 1.0;
  for (std::size_t j = 0; j < tps.points.size(); ++j)
    if (int(j) != src) own = std::min(own, std::abs(tps.points[j].value - tp.value));
  const cplx c = local_coefficient(p, tp);
  const double delta = o.launch * own;

  StokesLine line;
  line.source = src;
  line.launch_angle = theta;
  cplx l = tp.value + std::polar(delta, theta);
  cplx s_ref = pick_root(p(l), std::sqrt(c) * std::polar(std::pow(delta, 0.5 * mult), 0.5 * mult * theta));
  cplx S0 = 2.0 / (mult + 2) * s_ref * (l - tp.value);
  line.points = {tp.value, l};
  line.heights = {0.0, std::abs(S0)};

  const cplx rot = o.anti_stokes ? cplx(1.0) : I;
  cplx d0 = rot * std::conj(s_ref) / std::abs(s_ref);
  const double sigma = std::real(d0 * std::polar(1.0, -theta)) >= 0 ? 1.0 : -1.0;

  auto rhs = [&](const State& x, State& dx, double) {
    cplx s = pick_root(p(x[0]), s_ref);
    double as = std::abs(s);
    dx[0] = sigma * rot * std::conj(s) / as;
    dx[1] = as;
  };
  auto stepper = ode::make_controlled(1e-2 * o.rtol, o.rtol, ode::runge_kutta_dopri5<State>());

  State x{l, cplx(line.heights.back(), 0.0)};
  double t = 0, dt = 0.1 * delta;
  double r_max = o.r_max_factor * (1.0 + tps.max_modulus());
  int doublings = 0;
  const double r_trap = o.trap * sep;

  for (long step = 0; step < o.max_steps; ++step) {
    double dmin = tps.nearest_distance(x[0]);
    dt = std::min(dt, 0.25 * dmin);
    auto res = stepper.try_step(rhs, x, t, dt);
    if (res == ode::fail) {
      if (dt < 1e-14 * std::max(1.0, std::abs(x[0]))) throw trace_error("stokes tracer: step size underflow");
      continue;
    }
    s_ref = pick_root(p(x[0]), s_ref);
    line.points.push_back(x[0]);
    line.heights.push_back(x[1].real());

    // capture by another turning point
    for (std::size_t j = 0; j < tps.points.size(); ++j) {
      if (int(j) == src) continue;
      const auto& tj = tps.points[j];
      double dist = std::abs(x[0] - tj.value);
      if (dist > o.capture_zone * sep) continue;
      const int mj = tj.multiplicity;
      double thr = 2.0 / (mj + 2) * std::sqrt(std::abs(local_coefficient(p, tj))) * std::pow(r_trap, 0.5 * (mj + 2));
      cplx delta_s = action_to_tp(p, tps, x[0], s_ref, int(j));
      // the component along the line must point ahead; the transverse one must vanish
      cplx along = delta_s / (sigma * rot);
      bool ahead = along.real() > 0;
      double transverse = std::abs(along.imag());
      if ((ahead && transverse <= thr) || dist <= r_trap) {
        line.points.push_back(tj.value);
        line.heights.push_back(x[1].real() + std::abs(delta_s));
        line.end = {EndKind::turning_point, int(j)};
        return line;
      }
      if (ahead) line.closest_miss = std::min(line.closest_miss, transverse / thr);
    }

    if (std::abs(x[0]) > r_max) {
      double miss;
      int k = nearest_ray(std::arg(x[0]), o.anti_stokes, miss);
      if (miss < o.wedge_tol) {
        line.end = {EndKind::ray, k};
        return line;
      }
      if (++doublings > o.max_doublings) throw trace_error("stokes tracer: line left every asymptotic wedge");
      r_max *= 2;
    }
  }
  throw trace_error("stokes tracer: step budget exhausted");
}

} // namespace detail

/** \brief Trace all Stokes lines (level curves of Re S) from every turning point. */
inline StokesTrace trace_stokes_lines(const CubicPotential& p, const TraceOptions& o = {}) {
  StokesTrace out;
  out.potential = p;
  out.anti_stokes = o.anti_stokes;
  out.tps = turning_points(p);
  // work at unit root scale so tolerances are scale free
  const double L = out.tps.scale();
  const CubicPotential pn = apply_group({1.0 / L, 0}, p);
  TurningPointSet tn = out.tps;
  for (auto& t : tn.points) t.value /= L;
  for (auto& r : tn.roots) r /= L;
  const double hscale = std::pow(L, 2.5);

  for (std::size_t i = 0; i < tn.points.size(); ++i) {
    const int mult = tn.points[i].multiplicity;
    const double argc = std::arg(detail::local_coefficient(pn, tn.points[i]));
    const double phase = o.anti_stokes ? 0.0 : pi / 2;
    for (int j = 0; j < mult + 2; ++j) {
      double theta = (phase + pi * j - argc / 2) * 2.0 / (mult + 2);
      auto line = detail::trace_one(pn, tn, int(i), theta, o);
      for (auto& z : line.points) z *= L;
      for (auto& h : line.heights) h *= hscale;
      out.lines.push_back(std::move(line));
    }
  }
  return out;
}

enum class ClassCode { c300, c310, c311, c320, c100, c110, c000 };

inline std::string to_string(ClassCode c) {
  static const char* names[] = {"300", "310", "311", "320", "100", "110", "000"};
  return names[static_cast<int>(c)];
}

inline ClassCode class_from_string(const std::string& s) {
  for (int i = 0; i < 7; ++i)
    if (to_string(static_cast<ClassCode>(i)) == s) return static_cast<ClassCode>(i);
  throw error("unknown class code " + s);
}

struct ambiguity_error : error {
  ClassCode nearest, second;
  ambiguity_error(const std::string& what, ClassCode a, ClassCode b) : error(what), nearest(a), second(b) {}
};

using RaySet = std::bitset<5>; // indexed by slot5(k)

struct GraphEdge {
  int from = 0;
  bool external = true;
  int to = 0;                  // turning point index, or ray label
  std::vector<int> lines;      // traced lines realizing the edge
};

struct StokesComplexGraph {
  StokesTrace trace;
  std::vector<GraphEdge> edges;
  ClassCode class_code = ClassCode::c300;
  int shift = 0;
  TurningPointLabels labels;
  std::vector<int> vertex_role; // per turning point: 0 base, 1 plus, -1 minus

  const TurningPointSet& vertices() const { return trace.tps; }
  RaySet rays_of(int v) const {
    RaySet r;
    for (auto& e : edges)
      if (e.external && e.from == v) r.set(slot5(e.to));
    return r;
  }
};

namespace detail {

struct ClassTemplate {
  ClassCode code;
  std::vector<int> multiplicity;
  std::vector<std::vector<int>> rays;
  std::vector<std::pair<int, int>> internal;
};

// Vertex order is (base, plus, minus); labels of other classes are a fixed canonical choice.
inline const std::vector<ClassTemplate>& class_templates() {
  static const std::vector<ClassTemplate> t = {
      {ClassCode::c300, {1, 1, 1}, {{0, 2, -1}, {0, 1, 2}, {2, -2, -1}}, {}},
      {ClassCode::c310, {1, 1, 1}, {{1, -2}, {0, -1}, {1, 2, -2}}, {{0, 1}}},
      {ClassCode::c311, {1, 1, 1}, {{1, 2, -2}, {0, 1}, {-2, -1}}, {{1, 2}}},
      {ClassCode::c320, {1, 1, 1}, {{2}, {0, 1}, {-1, -2}}, {{0, 1}, {0, 2}}},
      {ClassCode::c100, {2, 1}, {{-1, 0, 1, -2}, {1, 2, -2}}, {}},
      {ClassCode::c110, {2, 1}, {{1, 2, -2}, {0, -1}}, {{0, 1}}},
      {ClassCode::c000, {3}, {{-2, -1, 0, 1, 2}}, {}},
  };
  return t;
}

inline RaySet shifted(const std::vector<int>& rays, int m) {
  RaySet r;
  for (int k : rays) r.set(slot5(k + m));
  return r;
}

inline std::vector<ClassCode> candidates(const TurningPointSet& tps, int internal_seen) {
  std::vector<ClassCode> c;
  int mult = 0;
  for (auto& t : tps.points) mult = std::max(mult, t.multiplicity);
  if (mult == 3) return {ClassCode::c000, ClassCode::c100};
  if (mult == 2) return internal_seen > 0 ? std::vector{ClassCode::c110, ClassCode::c100}
                                          : std::vector{ClassCode::c100, ClassCode::c110};
  static const std::vector<std::vector<ClassCode>> by_internal = {
      {ClassCode::c300, ClassCode::c311}, {ClassCode::c311, ClassCode::c310}, {ClassCode::c320, ClassCode::c311}};
  return by_internal[std::clamp(internal_seen, 0, 2)];
}

} // namespace detail

/** \brief Assemble the decorated graph from traced lines and match it to a class. */
inline StokesComplexGraph classify_trace(StokesTrace trace, const TraceOptions& o = {}) {
  StokesComplexGraph g;
  g.trace = std::move(trace);
  const auto& tps = g.trace.tps;
  const auto& lines = g.trace.lines;
  const int nv = static_cast<int>(tps.points.size());

  // valency law
  for (int v = 0; v < nv; ++v) {
    long n = std::count_if(lines.begin(), lines.end(), [&](const StokesLine& l) { return l.source == v; });
    if (n != tps.points[v].multiplicity + 2) throw error("classify: valency law violated");
  }

  int internal_pairs = 0, unmatched = 0;
  bool near_miss = false;
  std::vector<bool> used(lines.size(), false);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (lines[i].closest_miss < o.near_miss) near_miss = true;
    if (used[i]) continue;
    const auto& li = lines[i];
    if (li.end.kind == EndKind::ray) {
      for (auto& e : g.edges)
        if (e.external && e.from == li.source && e.to == li.end.index) {
          auto c = detail::candidates(tps, internal_pairs);
          throw ambiguity_error("classify: two lines reach the same ray from one turning point", c[0], c[1]);
        }
      g.edges.push_back({li.source, true, li.end.index, {int(i)}});
      used[i] = true;
      continue;
    }
    // internal: look for the line traced from the other end
    int partner = -1;
    for (std::size_t j = 0; j < lines.size(); ++j)
      if (!used[j] && j != i && lines[j].source == li.end.index && lines[j].end.kind == EndKind::turning_point &&
          lines[j].end.index == li.source) {
        partner = int(j);
        break;
      }
    used[i] = true;
    if (partner < 0) {
      ++unmatched;
      continue;
    }
    used[partner] = true;
    for (auto& e : g.edges)
      if (!e.external && ((e.from == li.source && e.to == li.end.index) || (e.to == li.source && e.from == li.end.index)))
        throw error("classify: two internal lines join the same pair of turning points");
    g.edges.push_back({li.source, false, li.end.index, {int(i), partner}});
    ++internal_pairs;
  }
  if (unmatched > 0 || near_miss) {
    auto c = detail::candidates(tps, internal_pairs + (unmatched + 1) / 2);
    throw ambiguity_error("classify: potential lies on a class boundary", c[0], c[1]);
  }
  if (internal_pairs >= nv && nv > 1) throw error("classify: internal subgraph contains a cycle");
  RaySet covered;
  for (int v = 0; v < nv; ++v) covered |= g.rays_of(v);
  if (!covered.all()) throw error("classify: an asymptotic ray carries no Stokes line");

  std::vector<std::pair<int, int>> internal;
  for (auto& e : g.edges)
    if (!e.external) internal.push_back({std::min(e.from, e.to), std::max(e.from, e.to)});
  std::sort(internal.begin(), internal.end());

  for (auto& tpl : detail::class_templates()) {
    if (int(tpl.multiplicity.size()) != nv || tpl.internal.size() != internal.size()) continue;
    std::vector<int> perm(nv); // template vertex -> graph vertex
    std::iota(perm.begin(), perm.end(), 0);
    do {
      bool ok = true;
      for (int tv = 0; tv < nv && ok; ++tv) ok = tps.points[perm[tv]].multiplicity == tpl.multiplicity[tv];
      if (!ok) continue;
      std::vector<std::pair<int, int>> mapped;
      for (auto [x, y] : tpl.internal) mapped.push_back({std::min(perm[x], perm[y]), std::max(perm[x], perm[y])});
      std::sort(mapped.begin(), mapped.end());
      if (mapped != internal) continue;
      for (int m = 0; m < 5; ++m) {
        bool match = true;
        for (int tv = 0; tv < nv && match; ++tv) match = g.rays_of(perm[tv]) == detail::shifted(tpl.rays[tv], m);
        if (!match) continue;
        g.class_code = tpl.code;
        g.shift = m;
        g.vertex_role.assign(nv, 0);
        const int roles[] = {0, 1, -1};
        for (int tv = 0; tv < nv; ++tv) {
          g.vertex_role[perm[tv]] = roles[tv];
          cplx z = tps.points[perm[tv]].value;
          (tv == 0 ? g.labels.base : tv == 1 ? g.labels.plus : g.labels.minus) = z;
        }
        return g;
      }
    } while (std::next_permutation(perm.begin(), perm.end()));
  }
  auto c = detail::candidates(tps, internal_pairs);
  throw ambiguity_error("classify: graph matches no admissible class", c[0], c[1]);
}

inline StokesComplexGraph classify(const CubicPotential& p, const TraceOptions& o = {}) {
  TraceOptions so = o;
  so.anti_stokes = false;
  return classify_trace(trace_stokes_lines(p, so), so);
}

/** \brief Relation between sectors: entry (j, k) true when some admissible path joins them. */
struct SectorRelation {
  std::array<std::array<bool, 5>, 5> matrix{}; // indexed by slot5

  bool related(int j, int k) const { return matrix[slot5(j)][slot5(k)]; }
};

inline SectorRelation sector_relation(ClassCode code, int shift) {
  using P = std::vector<std::pair<int, int>>;
  static const std::array<P, 7> unrelated = {
      P{},
      P{{0, 2}, {0, -2}},
      P{{1, -1}},
      P{{1, -1}, {1, -2}, {-1, 2}},
      P{{1, -1}, {0, -2}, {0, 2}},
      P{{0, 2}, {0, -2}, {1, -2}, {2, -1}},
      P{{0, 2}, {0, -2}, {1, -2}, {1, -1}, {2, -1}},
  };
  SectorRelation r;
  for (auto& row : r.matrix) row.fill(true);
  for (auto [j, k] : unrelated[static_cast<int>(code)]) {
    r.matrix[slot5(j + shift)][slot5(k + shift)] = false;
    r.matrix[slot5(k + shift)][slot5(j + shift)] = false;
  }
  return r;
}

inline SectorRelation sector_relation(const StokesComplexGraph& g) { return sector_relation(g.class_code, g.shift); }

/** \brief Loop period on the labels found by classification. */
inline CyclePeriod cycle_period(const CubicPotential& p, Cycle c, const ActionOptions& o = {}) {
  StokesComplexGraph g;
  try {
    g = classify(p);
  } catch (const ambiguity_error&) {
    throw degenerate_error("cycle_period: turning points could not be labeled");
  }
  return cycle_period(p, g.labels, c, o);
}

struct PeriodClassGuess {
  ClassCode code;
  std::array<double, 3> relative_real_parts{}; // |Re S_ij| / |S_ij| over the three pairs
};

/** \brief Class from the real parts of the actions between turning points.
 *
 * Real potentials with a conjugate pair left of the real point are decided by the sign of
 * Re of the plus period; three real turning points give (310). Otherwise a vanishing real part marks an internal line.
 */
inline PeriodClassGuess classify_by_periods(const CubicPotential& p, double tol = 1e-8, const ActionOptions& o = {}) {
  auto tps = turning_points(p);
  if (tps.points.size() != 3) throw degenerate_error("classify_by_periods: needs three simple turning points");
  PeriodClassGuess out{ClassCode::c300};
  const double sc = tps.scale();
  auto boundary = [&](double r, ClassCode a, ClassCode b) {
    if (r > tol && r <= 100 * tol) throw ambiguity_error("classify_by_periods: real part near tolerance", a, b);
  };

  if (p.is_real(1e-14)) {
    int nreal = 0, ireal = 0;
    for (int i = 0; i < 3; ++i)
      if (std::abs(tps.points[i].value.imag()) <= 1e-10 * sc) ++nreal, ireal = i;
    if (nreal == 3) {
      out.code = ClassCode::c310;
      return out;
    }
    // an internal line between the pair crosses the axis where V > 0, right of the real point;
    // with the pair on the left no such crossing exists
    if (tps.points[ireal].value.real() > 0) {
      out.code = ClassCode::c300;
      return out;
    }
    TurningPointLabels lab;
    lab.base = cplx(tps.points[ireal].value.real(), 0.0);
    for (int i = 0; i < 3; ++i)
      if (i != ireal) (tps.points[i].value.imag() > 0 ? lab.plus : lab.minus) = tps.points[i].value;
    cplx P = cycle_period(p, lab, Cycle::plus, o).value;
    double r = P.real() / std::abs(P);
    out.relative_real_parts = {std::abs(r), std::abs(r), 0.0};
    boundary(std::abs(r), ClassCode::c320, r > 0 ? ClassCode::c311 : ClassCode::c300);
    if (std::abs(r) <= tol)
      out.code = ClassCode::c320;
    else
      out.code = r > 0 ? ClassCode::c311 : ClassCode::c300;
    return out;
  }

  int zeros = 0;
  int zi = -1, zj = -1;
  const int pairs[3][2] = {{0, 1}, {0, 2}, {1, 2}};
  for (int q = 0; q < 3; ++q) {
    cplx A = tps.points[pairs[q][0]].value, B = tps.points[pairs[q][1]].value;
    double r;
    try {
      cplx s = turning_point_action(p, A, B, 1.0, o).value;
      r = std::abs(s.real()) / std::abs(s);
    } catch (const clearance_error&) {
      r = 1.0; // the straight segment is blocked by the third point
    }
    out.relative_real_parts[q] = r;
    boundary(r, ClassCode::c300, ClassCode::c311);
    if (r <= tol) ++zeros, zi = pairs[q][0], zj = pairs[q][1];
  }
  if (zeros == 0) out.code = ClassCode::c300;
  else if (zeros == 2) out.code = ClassCode::c320;
  else if (zeros == 1) {
    // the third point sits beyond one end of the internal line in (310), facing it in (311)
    int k = 3 - zi - zj;
    cplx A = tps.points[zi].value, B = tps.points[zj].value, C = tps.points[k].value;
    bool obtuse = std::real((C - A) * std::conj(B - A)) < 0 || std::real((C - B) * std::conj(A - B)) < 0;
    out.code = obtuse ? ClassCode::c310 : ClassCode::c311;
  } else {
    throw ambiguity_error("classify_by_periods: all three actions are imaginary", ClassCode::c320, ClassCode::c310);
  }
  return out;
}

} // namespace piwkb
