#pragma once

#include <piwkb/stokes.hpp>

#include <boost/math/tools/minima.hpp>

#include <map>
#include <utility>

namespace piwkb {

/** \brief Point of the Riemann sphere in homogeneous form num : den. */
struct RiemannPoint {
  cplx num{0.0};
  cplx den{1.0};

  static RiemannPoint infinity() { return {1.0, 0.0}; }
  static RiemannPoint finite(cplx z) { return {z, 1.0}; }

  bool is_infinite(double tol = 1e-14) const { return std::abs(den) <= tol * std::abs(num); }
  cplx value() const { return num / den; }

  /// Chordal closeness test, insensitive to the representative.
  bool same_as(const RiemannPoint& o, double tol) const {
    double n1 = std::hypot(std::abs(num), std::abs(den)), n2 = std::hypot(std::abs(o.num), std::abs(o.den));
    return std::abs(num * o.den - o.num * den) <= tol * n1 * n2;
  }
};

/** \brief Moebius map w -> (p w + q) / (r w + s). */
struct Moebius {
  cplx p{1.0}, q{0.0}, r{0.0}, s{1.0};

  RiemannPoint operator()(const RiemannPoint& w) const { return {p * w.num + q * w.den, r * w.num + s * w.den}; }

  /// The map sending z1, z2, z3 to 0, 1, infinity.
  static Moebius to_standard(const RiemannPoint& z1, const RiemannPoint& z2, const RiemannPoint& z3) {
    // (w - z1)(z2 - z3) / ((w - z3)(z2 - z1)) in homogeneous coordinates
    cplx a = z2.num * z3.den - z3.num * z2.den;  // z2 - z3
    cplx b = z2.num * z1.den - z1.num * z2.den;  // z2 - z1
    return {z1.den * a, -z1.num * a, z3.den * b, -z3.num * b};
  }
  Moebius inverse() const { return {s, -q, -r, p}; }
  Moebius then(const Moebius& o) const {
    return {o.p * p + o.q * r, o.p * q + o.q * s, o.r * p + o.s * r, o.r * q + o.s * s};
  }
};

/** \brief Asymptotic values w_k, stored by slot5(k), with exactness flags. */
struct AsymptoticValues {
  std::array<RiemannPoint, 5> w{};
  std::array<bool, 5> exact{};
  std::array<bool, 5> known{};
  int normalization = -2; // values are normalized on the pair (Sigma_0, Sigma_normalization)

  RiemannPoint& at(int k) { return w[slot5(k)]; }
  const RiemannPoint& at(int k) const { return w[slot5(k)]; }
};

/// True when some Moebius map carries every known entry of a onto the corresponding entry of b.
inline bool moebius_equivalent(const AsymptoticValues& a, const AsymptoticValues& b, double tol = 1e-8) {
  std::vector<int> idx;
  for (int k = -2; k <= 2; ++k)
    if (a.known[slot5(k)] && b.known[slot5(k)]) idx.push_back(k);
  // pick three entries pairwise distinct on both sides
  for (std::size_t i = 0; i < idx.size(); ++i)
    for (std::size_t j = i + 1; j < idx.size(); ++j)
      for (std::size_t k = j + 1; k < idx.size(); ++k) {
        auto A = [&](int t) { return a.at(idx[t == 0 ? i : t == 1 ? j : k]); };
        auto B = [&](int t) { return b.at(idx[t == 0 ? i : t == 1 ? j : k]); };
        if (A(0).same_as(A(1), tol) || A(0).same_as(A(2), tol) || A(1).same_as(A(2), tol)) continue;
        if (B(0).same_as(B(1), tol) || B(0).same_as(B(2), tol) || B(1).same_as(B(2), tol)) continue;
        Moebius m = Moebius::to_standard(A(0), A(1), A(2)).then(Moebius::to_standard(B(0), B(1), B(2)).inverse());
        for (int t : idx)
          if (!m(a.at(t)).same_as(b.at(t), tol)) return false;
        return true;
      }
  return false;
}

/// Values at a pole of the tritronquee solution: w_0 = 0, w_1 = w_{-2} = 1, w_2 = w_{-1} = infinity.
inline AsymptoticValues tritronquee_values() {
  AsymptoticValues v;
  v.at(0) = RiemannPoint::finite(0.0);
  v.at(1) = v.at(-2) = RiemannPoint::finite(1.0);
  v.at(2) = v.at(-1) = RiemannPoint::infinity();
  v.known.fill(true);
  v.exact.fill(true);
  v.normalization = 0;
  return v;
}

namespace detail {

struct HalfActions {
  cplx plus, minus; // S(plus) - S(base), S(minus) - S(base)
};

inline void require_320(const StokesComplexGraph& g) {
  if (g.class_code != ClassCode::c320) throw error("asymptotic values need a (320) Stokes complex");
  if (!g.labels.base || !g.labels.plus || !g.labels.minus) throw degenerate_error("turning points are not labeled");
}

inline HalfActions half_actions(const CubicPotential& p, const TurningPointLabels& lab) {
  return {cycle_period(p, lab, Cycle::plus).value / 2.0, cycle_period(p, lab, Cycle::minus).value / 2.0};
}

} // namespace detail

/** \brief Asymptotic values in the (0,-2) normalization, from the plus/minus half actions. */
inline AsymptoticValues asymptotic_values_320(const CubicPotential& p, const StokesComplexGraph& g) {
  detail::require_320(g);
  auto h = detail::half_actions(p, g.labels);
  cplx e1 = std::exp(-2.0 * h.plus), em1 = std::exp(-2.0 * h.minus);
  AsymptoticValues v;
  const int m = g.shift;
  v.normalization = -2;
  v.at(0 + m) = RiemannPoint::finite(0.0);
  v.at(-2 + m) = RiemannPoint::infinity();
  v.at(-1 + m) = RiemannPoint::finite(I * em1);
  v.at(2 + m) = RiemannPoint::finite(-I);
  v.at(1 + m) = {-I * e1, 1.0 + e1};
  for (int k : {0, -2, -1}) v.exact[slot5(k + m)] = true;
  v.known.fill(true);
  return v;
}

/** \brief Same quintuple computed directly in the (0,2) normalization. */
inline AsymptoticValues asymptotic_values_320_plus2(const CubicPotential& p, const StokesComplexGraph& g) {
  detail::require_320(g);
  auto h = detail::half_actions(p, g.labels);
  cplx e1 = std::exp(-2.0 * h.plus), em1 = std::exp(-2.0 * h.minus);
  AsymptoticValues v;
  const int m = g.shift;
  v.normalization = 2;
  v.at(0 + m) = RiemannPoint::finite(0.0);
  v.at(2 + m) = RiemannPoint::infinity();
  v.at(1 + m) = RiemannPoint::finite(-I * e1);
  v.at(-2 + m) = RiemannPoint::finite(I);
  v.at(-1 + m) = {I * em1, 1.0 + em1};
  for (int k : {0, 2, 1}) v.exact[slot5(k + m)] = true;
  v.known.fill(true);
  return v;
}

/// Moebius map taking (0,-2)-normalized values to the (0,2) normalization.
inline Moebius minus2_to_plus2() { return {I, 0.0, 1.0, I}; }

/** \brief Values quoted for the degenerate classes; keys are sector labels. */
inline std::map<int, RiemannPoint> partial_asymptotic_values(ClassCode c, int& normalization) {
  std::map<int, RiemannPoint> v;
  switch (c) {
  case ClassCode::c100: // normalized on (1,-1)
    normalization = -1;
    v[0] = RiemannPoint::finite(-1.0);
    v[2] = v[-2] = RiemannPoint::finite(1.0);
    break;
  case ClassCode::c110: // normalized on (1,-2)
    normalization = -2;
    v[-1] = RiemannPoint::finite(1.0);
    v[2] = RiemannPoint::finite(-1.0);
    break;
  case ClassCode::c000:
    normalization = 0;
    for (int k = -2; k <= 2; ++k) v[k] = RiemannPoint::finite(omega(k));
    break;
  default: throw error("partial_asymptotic_values: class has a full computation or none");
  }
  return v;
}

struct QuantizationResiduals {
  cplx r1, r2, r3;
};

inline QuantizationResiduals quantization_residuals(const CubicPotential& p, const StokesComplexGraph& g) {
  detail::require_320(g);
  auto h = detail::half_actions(p, g.labels);
  cplx e1 = std::exp(-2.0 * h.plus), em1 = std::exp(-2.0 * h.minus);
  return {e1 + 1.0, em1 + 1.0, std::exp(-2.0 * (h.plus - h.minus)) + 1.0 - e1};
}

struct RhoOptions {
  int internal_samples = 15;
  int external_samples = 11;
  double exit_radius = 50.0;  // in units of the root scale
  double guard = 1e-3;        // trajectories closer than this to a turning point are discarded
  double rtol = 1e-11;
  int refine_bits = 30;
  long max_steps = 200000;
};

/** \brief Relative errors rho between sectors, indexed by slot5. */
struct RelativeError {
  std::array<std::array<double, 5>, 5> rho{};
  std::array<std::array<bool, 5>, 5> unresolved{};
  bool relation_matches = false; // rho < log(3)/2 exactly on related pairs
  bool consistent = true;        // no horizontal trajectory joins unrelated sectors

  double at(int l, int k) const { return rho[slot5(l)][slot5(k)]; }
  double max_finite() const {
    double m = 0;
    for (auto& row : rho)
      for (double x : row)
        if (std::isfinite(x)) m = std::max(m, x);
    return m;
  }
};

namespace detail {

struct Trajectory {
  int from = 0, to = 0;
  double rho = std::numeric_limits<double>::infinity();
  bool ok = false;
};

/** Follow the horizontal trajectory through z both ways, accumulating |alpha dl|. Unit root scale. */
inline Trajectory horizontal_through(const CubicPotential& p, const TurningPointSet& tps, cplx z,
                                     const RhoOptions& o) {
  namespace ode = boost::numeric::odeint;
  using State = std::array<cplx, 2>;
  Trajectory tr;
  if (tps.nearest_distance(z) < o.guard) return tr;
  int ends[2];
  double total = 0;
  for (int dir = 0; dir < 2; ++dir) {
    const double sigma = dir == 0 ? 1.0 : -1.0;
    cplx s_ref = std::sqrt(p(z));
    auto rhs = [&](const State& x, State& dx, double) {
      cplx s = detail::pick_root(p(x[0]), s_ref);
      dx[0] = sigma * std::conj(s) / std::abs(s);
      dx[1] = alpha_abs(p, x[0]);
    };
    auto stepper = ode::make_controlled(1e-3 * o.rtol, o.rtol, ode::runge_kutta_dopri5<State>());
    State x{z, 0.0};
    double t = 0, dt = 1e-3;
    double r_exit = o.exit_radius;
    bool done = false;
    for (long step = 0; step < o.max_steps && !done; ++step) {
      double dmin = tps.nearest_distance(x[0]);
      if (dmin < o.guard) return tr;
      dt = std::min(dt, 0.25 * std::max(dmin, 1e-12));
      if (stepper.try_step(rhs, x, t, dt) == ode::fail) {
        if (dt < 1e-14) return tr;
        continue;
      }
      s_ref = detail::pick_root(p(x[0]), s_ref);
      if (std::abs(x[0]) > r_exit) {
        double miss;
        int k = detail::nearest_ray(std::arg(x[0]), true, miss);
        if (miss < pi / 20) {
          ends[dir] = k;
          total += x[1].real() + alpha_tail(std::abs(x[0]));
          done = true;
        } else if (r_exit > 16 * o.exit_radius) {
          return tr;
        } else {
          r_exit *= 2;
        }
      }
    }
    if (!done) return tr;
  }
  tr.from = ends[1];
  tr.to = ends[0];
  tr.rho = total;
  tr.ok = true;
  return tr;
}

/// Point on a polyline at a given height (linear in height between vertices).
inline cplx point_at_height(const StokesLine& l, double h) {
  auto it = std::lower_bound(l.heights.begin(), l.heights.end(), h);
  if (it == l.heights.begin()) return l.points.front();
  if (it == l.heights.end()) return l.points.back();
  std::size_t i = it - l.heights.begin();
  double h0 = l.heights[i - 1], h1 = l.heights[i];
  double f = h1 > h0 ? (h - h0) / (h1 - h0) : 0.0;
  return l.points[i - 1] + f * (l.points[i] - l.points[i - 1]);
}

} // namespace detail

/** \brief rho_l^k along horizontal trajectories crossing the traced Stokes lines.
 *
 * Every horizontal trajectory is an admissible path, so the minimum found over the sampled
 * family bounds the infimum from above. The best seed per pair is refined by Brent search in height.
 */
inline RelativeError relative_errors(const CubicPotential& p, const StokesComplexGraph& g, const RhoOptions& o = {}) {
  const double L = g.trace.tps.scale();
  const CubicPotential pn = apply_group({1.0 / L, 0}, p);
  TurningPointSet tn = g.trace.tps;
  for (auto& t : tn.points) t.value /= L;
  for (auto& r : tn.roots) r /= L;
  const double hs = std::pow(L, 2.5);
  std::vector<StokesLine> lines = g.trace.lines;
  for (auto& l : lines) {
    for (auto& z : l.points) z /= L;
    for (auto& h : l.heights) h /= hs;
  }

  const double inf = std::numeric_limits<double>::infinity();
  RelativeError out;
  for (auto& row : out.rho) row.fill(inf);
  for (int k = 0; k < 5; ++k) {
    out.rho[k][k] = 0;
    out.rho[k][(k + 1) % 5] = out.rho[(k + 1) % 5][k] = 0;
  }
  auto rel = sector_relation(g);

  struct Best {
    double rho = std::numeric_limits<double>::infinity();
    int line = -1;
    double lo = 0, hi = 0;
  };
  std::map<std::pair<int, int>, Best> best;
  auto key = [](int a, int b) { return std::make_pair(std::min(slot5(a), slot5(b)), std::max(slot5(a), slot5(b))); };
  auto non_consecutive = [](int a, int b) {
    int d = slot5(a - b);
    return d == 2 || d == 3;
  };

  for (std::size_t li = 0; li < lines.size(); ++li) {
    const auto& line = lines[li];
    std::vector<double> hv;
    if (line.end.kind == EndKind::turning_point) {
      double top = line.heights.back();
      for (int i = 1; i <= o.internal_samples; ++i) hv.push_back(top * i / (o.internal_samples + 1.0));
    } else {
      for (int i = 0; i < o.external_samples; ++i) hv.push_back(std::ldexp(1.0, i - 6));
    }
    for (std::size_t i = 0; i < hv.size(); ++i) {
      if (hv[i] >= line.heights.back()) break;
      auto tr = detail::horizontal_through(pn, tn, detail::point_at_height(line, hv[i]), o);
      if (!tr.ok || !non_consecutive(tr.from, tr.to)) continue;
      auto& b = best[key(tr.from, tr.to)];
      if (tr.rho < b.rho) {
        b.rho = tr.rho;
        b.line = int(li);
        b.lo = i > 0 ? hv[i - 1] : 0.5 * hv[i];
        b.hi = i + 1 < hv.size() ? hv[i + 1] : std::min(2 * hv[i], line.heights.back());
      }
    }
  }

  for (auto& [k, b] : best) {
    if (b.line < 0) continue;
    const auto& line = lines[b.line];
    auto f = [&](double h) {
      auto tr = detail::horizontal_through(pn, tn, detail::point_at_height(line, h), o);
      return (tr.ok && key(tr.from, tr.to) == k) ? tr.rho : 4 * b.rho + 1; // penalty keeps the search finite
    };
    auto r = boost::math::tools::brent_find_minima(f, b.lo, b.hi, o.refine_bits);
    double v = std::min(b.rho, r.second) / hs;
    out.rho[k.first][k.second] = out.rho[k.second][k.first] = v;
    if (!rel.matrix[k.first][k.second]) out.consistent = false;
  }

  const double threshold = std::log(3.0) / 2.0;
  out.relation_matches = true;
  for (int a = 0; a < 5; ++a)
    for (int b = 0; b < 5; ++b) {
      if (!non_consecutive(a, b)) continue;
      bool related = rel.matrix[a][b];
      if (related && !std::isfinite(out.rho[a][b])) out.unresolved[a][b] = true;
      if ((out.rho[a][b] < threshold) != related) out.relation_matches = false;
    }
  return out;
}

} // namespace piwkb
