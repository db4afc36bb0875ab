#pragma once

#include <piwkb/potential.hpp>

#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <optional>

namespace piwkb {

/** \brief Polygonal path; branch_seed picks the sheet of sqrt(V) at the first node.
 *
 * The root of V closest in direction to branch_seed is used. When the first node is a
 * turning point the choice is made at the midpoint of the first segment instead.
 */
struct BranchedPath {
  std::vector<cplx> nodes;
  cplx branch_seed{1.0, 0.0};
};

struct ActionValue {
  cplx value{};
  double est_error = 0;
};

enum class Cycle { plus, minus };

struct CyclePeriod {
  Cycle cycle = Cycle::plus;
  cplx value{};
  double est_error = 0;
};

/// Turning points by topological role: base is the one shared by both cycles.
struct TurningPointLabels {
  std::optional<cplx> base, plus, minus;
};

struct ActionOptions {
  double tol = 1e-13;
  double clearance = 1e-3; // relative to the smallest turning point separation
  unsigned max_depth = 25;
};

namespace detail {

inline cplx pick_root(cplx v, cplx hint) {
  cplx s = std::sqrt(v);
  return std::real(s * std::conj(hint)) >= 0 ? s : -s;
}

/// Index of the entry of roots closest to z, or -1 if none is within eps.
inline int match_root(const std::array<cplx, 3>& roots, cplx z, double eps) {
  int best = -1;
  double d = eps;
  for (int i = 0; i < 3; ++i)
    if (std::abs(roots[i] - z) <= d) {
      d = std::abs(roots[i] - z);
      best = i;
    }
  return best;
}

/** sqrt(V) on the segment A->B through the factorization of V into its roots.
 * Each factor sqrt((l - r)/(ref - r)) is continuous as long as no root lies on the
 * segment; roots sitting at an endpoint are evaluated from the exact parameter. */
struct SegmentRoot {
  std::array<cplx, 3> roots;
  cplx A, B;
  double t_ref;
  cplx s_ref;
  std::array<bool, 3> at_start{false, false, false}, at_end{false, false, false};

  cplx point(double t, double u) const { return t <= 0.5 ? A + t * (B - A) : B - u * (B - A); }

  cplx operator()(double t, double u) const {
    cplx l = point(t, u);
    cplx ref = point(t_ref, 1.0 - t_ref);
    cplx s = s_ref;
    for (int i = 0; i < 3; ++i) {
      if (at_start[i])
        s *= std::sqrt(t / t_ref);
      else if (at_end[i])
        s *= std::sqrt(u / (1.0 - t_ref));
      else
        s *= std::sqrt((l - roots[i]) / (ref - roots[i]));
    }
    return s;
  }
};

inline double distance_to_segment(cplx z, cplx A, cplx B) {
  cplx d = B - A;
  double n = std::norm(d);
  if (n == 0) return std::abs(z - A);
  double t = std::clamp(std::real((z - A) * std::conj(d)) / n, 0.0, 1.0);
  return std::abs(z - (A + t * d));
}

template <class T>
struct Quad {
  T value{};
  double error = 0;
};

/// Integral over t in [0,1] of f(t, 1-t); sqrt-type endpoint behaviour is removed by t = u^2/2.
template <class T, class F>
Quad<T> integrate_unit(F&& f, bool sing_start, bool sing_end, const ActionOptions& o) {
  using GK = boost::math::quadrature::gauss_kronrod<double, 31>;
  Quad<T> q;
  double e1 = 0, e2 = 0;
  if (!sing_start && !sing_end) {
    q.value = GK::integrate([&](double t) { return f(t, 1.0 - t); }, 0.0, 1.0, o.max_depth, o.tol, &e1);
    q.error = e1;
    return q;
  }
  T lo, hi;
  if (sing_start)
    lo = GK::integrate([&](double v) { double t = 0.5 * v * v; return T(f(t, 1.0 - t) * v); }, 0.0, 1.0,
                       o.max_depth, o.tol, &e1);
  else
    lo = GK::integrate([&](double t) { return f(t, 1.0 - t); }, 0.0, 0.5, o.max_depth, o.tol, &e1);
  if (sing_end)
    hi = GK::integrate([&](double v) { double u = 0.5 * v * v; return T(f(1.0 - u, u) * v); }, 0.0, 1.0,
                       o.max_depth, o.tol, &e2);
  else
    hi = GK::integrate([&](double t) { return f(t, 1.0 - t); }, 0.5, 1.0, o.max_depth, o.tol, &e2);
  q.value = lo + hi;
  q.error = e1 + e2;
  return q;
}

template <class T>
void check_quadrature(const Quad<T>& q, const char* what) {
  double mag = std::abs(q.value);
  if (!std::isfinite(mag) || !(q.error <= 1e-7 * std::max(1.0, mag)))
    throw quadrature_error(std::string(what) + ": quadrature did not converge");
}

inline double clearance_radius(const TurningPointSet& tps, const ActionOptions& o) {
  double sep = tps.min_separation();
  if (sep == 0) sep = tps.scale();
  return o.clearance * sep;
}

/** Segment between two turning points with the branch fixed at the midpoint. */
inline SegmentRoot tp_segment(const TurningPointSet& tps, cplx from, cplx to, cplx hint, const CubicPotential& p) {
  double eps = 1e-6 * tps.scale();
  SegmentRoot sr{tps.roots, from, to, 0.5, 0.0};
  int matched = 0;
  for (int i = 0; i < 3; ++i) {
    if (std::abs(tps.roots[i] - from) <= eps) sr.at_start[i] = true, ++matched;
    else if (std::abs(tps.roots[i] - to) <= eps) sr.at_end[i] = true, ++matched;
  }
  if (matched != 2) throw degenerate_error("endpoints must be two distinct simple turning points");
  sr.s_ref = pick_root(p(0.5 * (from + to)), hint);
  return sr;
}

inline void check_tp_pair(const TurningPointSet& tps, cplx from, cplx to, const ActionOptions& o) {
  double eps = 1e-6 * tps.scale();
  for (cplx z : {from, to}) {
    bool found = false;
    for (auto& t : tps.points)
      if (std::abs(t.value - z) <= eps) {
        if (t.multiplicity != 1) throw degenerate_error("turning point action needs simple turning points");
        found = true;
      }
    if (!found) throw degenerate_error("endpoint is not a turning point");
  }
  double rad = clearance_radius(tps, o);
  for (auto& t : tps.points) {
    if (std::abs(t.value - from) <= eps || std::abs(t.value - to) <= eps) continue;
    if (distance_to_segment(t.value, from, to) < rad)
      throw clearance_error("segment between turning points passes too close to a third one");
  }
}

} // namespace detail

/** \brief S along a polygonal path with continuous branch. */
inline ActionValue line_action(const CubicPotential& p, const BranchedPath& path, const ActionOptions& o = {}) {
  if (path.nodes.size() < 2) throw error("line_action: path needs at least two nodes");
  auto tps = turning_points(p);
  const double eps = 1e-12 * tps.scale();
  const double rad = detail::clearance_radius(tps, o);
  const std::size_t n = path.nodes.size();

  ActionValue out;
  std::optional<cplx> s_here; // sqrt(V) at the current node
  for (std::size_t k = 0; k + 1 < n; ++k) {
    cplx A = path.nodes[k], B = path.nodes[k + 1];
    if (A == B) continue;
    detail::SegmentRoot sr{tps.roots, A, B, 0.0, 0.0};
    bool ss = false, se = false;
    for (int i = 0; i < 3; ++i) {
      bool a_hit = std::abs(tps.roots[i] - A) <= eps, b_hit = std::abs(tps.roots[i] - B) <= eps;
      if (a_hit) {
        if (k != 0) throw clearance_error("line_action: interior node on a turning point");
        sr.at_start[i] = ss = true;
      } else if (b_hit) {
        if (k + 2 != n) throw clearance_error("line_action: interior node on a turning point");
        sr.at_end[i] = se = true;
      } else if (detail::distance_to_segment(tps.roots[i], A, B) < rad) {
        throw clearance_error("line_action: path violates turning point clearance");
      }
    }
    if (ss) {
      sr.t_ref = 0.5;
      sr.s_ref = detail::pick_root(p(0.5 * (A + B)), path.branch_seed);
    } else {
      if (!s_here) s_here = detail::pick_root(p(A), path.branch_seed);
      sr.s_ref = *s_here;
    }
    auto q = detail::integrate_unit<cplx>([&](double t, double u) { return sr(t, u); }, ss, se, o);
    detail::check_quadrature(q, "line_action");
    out.value += q.value * (B - A);
    out.est_error += q.error * std::abs(B - A);
    if (!se) s_here = sr(1.0, 0.0);
  }
  return out;
}

/** \brief S between two simple turning points along the straight segment.
 *
 * side_hint selects the sheet: sqrt(V) at the midpoint is the root closest in direction to it.
 */
inline ActionValue turning_point_action(const CubicPotential& p, cplx from_tp, cplx to_tp, cplx side_hint,
                                        const ActionOptions& o = {}) {
  auto tps = turning_points(p);
  detail::check_tp_pair(tps, from_tp, to_tp, o);
  if (std::abs(from_tp - to_tp) <= 1e-6 * tps.scale()) return {};
  auto sr = detail::tp_segment(tps, from_tp, to_tp, side_hint, p);
  auto q = detail::integrate_unit<cplx>([&](double t, double u) { return sr(t, u); }, true, true, o);
  detail::check_quadrature(q, "turning_point_action");
  return {q.value * (to_tp - from_tp), q.error * std::abs(to_tp - from_tp)};
}

/** \brief Endpoints and midpoint branch hint of the half-cycle from base to plus/minus.
 *
 * The sheet is fixed locally: sqrt(V) at the midpoint has positive projection on
 * -i d for the plus cycle and +i d for the minus cycle, d being the segment direction.
 * On the real orbit this puts the plus period on the positive imaginary axis.
 */
struct HalfCycle {
  cplx from, to, hint;
};

inline HalfCycle half_cycle(const TurningPointLabels& lab, Cycle c) {
  if (!lab.base || !(c == Cycle::plus ? lab.plus : lab.minus))
    throw degenerate_error("cycle requires labeled simple turning points");
  cplx from = *lab.base, to = c == Cycle::plus ? *lab.plus : *lab.minus;
  cplx d = to - from;
  cplx hint = c == Cycle::plus ? I * std::conj(d) : -I * std::conj(d);
  return {from, to, hint};
}

/** \brief Loop integral of sqrt(V) around the pair (base, plus) or (base, minus). */
inline CyclePeriod cycle_period(const CubicPotential& p, const TurningPointLabels& lab, Cycle c,
                                const ActionOptions& o = {}) {
  auto h = half_cycle(lab, c);
  auto s = turning_point_action(p, h.from, h.to, h.hint, o);
  return {c, 2.0 * s.value, 2.0 * s.est_error};
}

struct PeriodJacobian {
  cplx dP_da, dP_db;
};

/** \brief Derivatives of cycle_period in a and b, on the same branch. */
inline PeriodJacobian period_jacobian(const CubicPotential& p, const TurningPointLabels& lab, Cycle c,
                                      const ActionOptions& o = {}) {
  auto h = half_cycle(lab, c);
  auto tps = turning_points(p);
  detail::check_tp_pair(tps, h.from, h.to, o);
  auto sr = detail::tp_segment(tps, h.from, h.to, h.hint, p);
  auto one = detail::integrate_unit<cplx>(
      [&](double t, double u) { return 1.0 / sr(t, u); }, true, true, o);
  auto lam = detail::integrate_unit<cplx>(
      [&](double t, double u) { return sr.point(t, u) / sr(t, u); }, true, true, o);
  detail::check_quadrature(one, "period_jacobian");
  detail::check_quadrature(lam, "period_jacobian");
  cplx d = h.to - h.from;
  return {-2.0 * lam.value * d, -28.0 * one.value * d};
}

/** \brief |alpha| with alpha = (4 V V'' - 5 V'^2) / (32 V^{5/2}); the modulus is branch free. */
inline double alpha_abs(const CubicPotential& p, cplx l) {
  cplx v = p(l);
  if (v == 0.0) return std::numeric_limits<double>::infinity();
  cplx r1 = p.d1(l) / v, r2 = p.d2(l) / v; // ratios avoid overflow far out
  return std::abs(4.0 * r2 - 5.0 * r1 * r1) / (32.0 * std::sqrt(std::abs(v)));
}

/// Closed-form tail of the alpha integral beyond radius R for the pure cubic.
inline double alpha_tail(double R) { return 21.0 / 160.0 * std::pow(R, -2.5); }

/** \brief Integral of |alpha(l) dl| along a polygonal path. */
inline double alpha_integral(const CubicPotential& p, const BranchedPath& path, const ActionOptions& o = {}) {
  auto tps = turning_points(p);
  double rad = detail::clearance_radius(tps, o);
  double total = 0;
  using GK = boost::math::quadrature::gauss_kronrod<double, 31>;
  for (std::size_t k = 0; k + 1 < path.nodes.size(); ++k) {
    cplx A = path.nodes[k], B = path.nodes[k + 1];
    for (auto& t : tps.points)
      if (detail::distance_to_segment(t.value, A, B) < rad)
        throw clearance_error("alpha_integral: path violates turning point clearance");
    double err = 0;
    double v = GK::integrate([&](double t) { return alpha_abs(p, A + t * (B - A)); }, 0.0, 1.0, o.max_depth,
                             1e-12, &err);
    total += v * std::abs(B - A);
  }
  return total;
}

/** \brief Integral of |alpha| along the half-line start + s*direction, s >= 0. */
inline double alpha_ray_integral(const CubicPotential& p, cplx start, cplx direction, const ActionOptions& o = {}) {
  auto tps = turning_points(p);
  double rad = detail::clearance_radius(tps, o);
  cplx d = direction / std::abs(direction);
  for (auto& t : tps.points) {
    double s = std::max(0.0, std::real((t.value - start) * std::conj(d)));
    if (std::abs(start + s * d - t.value) < rad)
      throw clearance_error("alpha_ray_integral: ray violates turning point clearance");
  }
  boost::math::quadrature::exp_sinh<double> es;
  return es.integrate([&](double s) { return alpha_abs(p, start + s * d); }, 1e-12);
}

} // namespace piwkb
