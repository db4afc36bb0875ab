#pragma once

#include <piwkb/wkb.hpp>

#include <boost/math/tools/roots.hpp>

#include <map>
#include <optional>

namespace piwkb {

struct BsbIndex {
  int n = 1;
  int m = 1;

  auto operator<=>(const BsbIndex&) const = default;
};

struct BsbOptions {
  double tol = 1e-10;
  int max_iter = 50;
  double continuation_step = 0.25;
  bool check_class = true;
  bool compute_rho = true;
  ActionOptions action{};
  RhoOptions rho{};
};

struct BsbSolution {
  BsbIndex index;
  cplx a, b;
  double residual_norm = 0;
  double rho_max = std::numeric_limits<double>::quiet_NaN();
  bool class_checked = false;
  bool arg_bound_ok = false; // |arg a| > 4 pi / 5
  int iterations = 0;
  TurningPointLabels labels;

  CubicPotential potential() const { return {a, b}; }
};

/// Right-hand sides of the quantization system for real-valued indices.
inline cplx plus_target(double n) { return 2.0 * pi * I * (n - 0.5); }
inline cplx minus_target(double m) { return -2.0 * pi * I * (m - 0.5); }

/** \brief Carry labels to the turning points of a nearby potential by nearest assignment. */
inline TurningPointLabels relabel(const CubicPotential& p, const TurningPointLabels& prev) {
  auto tps = turning_points(p);
  if (tps.points.size() != 3) throw convergence_error("turning points collided");
  std::array<cplx, 3> old{*prev.base, *prev.plus, *prev.minus};
  std::array<int, 3> perm{0, 1, 2}, best{};
  double bd = std::numeric_limits<double>::infinity();
  do {
    double d = 0;
    for (int i = 0; i < 3; ++i) d += std::abs(tps.points[perm[i]].value - old[i]);
    if (d < bd) bd = d, best = perm;
  } while (std::next_permutation(perm.begin(), perm.end()));
  return {tps.points[best[0]].value, tps.points[best[1]].value, tps.points[best[2]].value};
}

/** \brief Labels by position: base has the smallest real part, plus the larger imaginary part. */
inline TurningPointLabels positional_labels(const CubicPotential& p) {
  auto tps = turning_points(p);
  if (tps.points.size() != 3) throw degenerate_error("positional labels need three simple turning points");
  auto pts = tps.points;
  std::sort(pts.begin(), pts.end(), [](auto& x, auto& y) { return x.value.real() < y.value.real(); });
  cplx u = pts[1].value, v = pts[2].value;
  if (u.imag() < v.imag()) std::swap(u, v);
  return {pts[0].value, u, v};
}

/** \brief Labels from the Stokes complex when it is (320), positional otherwise. */
inline TurningPointLabels seed_labels(const CubicPotential& p) {
  try {
    auto g = classify(p);
    if (g.class_code == ClassCode::c320) return g.labels;
  } catch (const error&) {
  }
  return positional_labels(p);
}

struct BoutrouxResult {
  CubicPotential potential;
  TurningPointLabels labels;
  double residual_norm = 0;
  int iterations = 0;
};

/** \brief Damped Newton for P_plus = 2 pi i (n - 1/2), P_minus = -2 pi i (m - 1/2) at real n, m. */
inline BoutrouxResult solve_boutroux(double n, double m, const CubicPotential& seed, const TurningPointLabels& labels,
                                     const BsbOptions& o = {}) {
  const cplx t1 = plus_target(n), t2 = minus_target(m);
  CubicPotential x = seed;
  TurningPointLabels lab = labels;
  auto residual = [&](const CubicPotential& q, const TurningPointLabels& l) {
    return std::array<cplx, 2>{cycle_period(q, l, Cycle::plus, o.action).value - t1,
                               cycle_period(q, l, Cycle::minus, o.action).value - t2};
  };
  auto norm = [](const std::array<cplx, 2>& f) { return std::hypot(std::abs(f[0]), std::abs(f[1])); };

  auto F = residual(x, lab);
  double fn = norm(F);
  for (int it = 0; it <= o.max_iter; ++it) {
    if (fn <= o.tol) return {x, lab, fn, it};
    if (it == o.max_iter) break;
    auto jp = period_jacobian(x, lab, Cycle::plus, o.action);
    auto jm = period_jacobian(x, lab, Cycle::minus, o.action);
    cplx det = jp.dP_da * jm.dP_db - jp.dP_db * jm.dP_da;
    if (std::abs(det) <= 1e-14 * (std::abs(jp.dP_da * jm.dP_db) + std::abs(jp.dP_db * jm.dP_da)))
      throw convergence_error("solve_boutroux: singular Jacobian");
    cplx da = (F[0] * jm.dP_db - F[1] * jp.dP_db) / det;
    cplx db = (jp.dP_da * F[1] - jm.dP_da * F[0]) / det;

    double lambda = 1.0;
    bool accepted = false;
    for (int half = 0; half < 30; ++half, lambda *= 0.5) {
      CubicPotential y{x.a - lambda * da, x.b - lambda * db};
      try {
        auto ly = relabel(y, lab);
        auto Fy = residual(y, ly);
        double fy = norm(Fy);
        if (fy < fn) {
          x = y, lab = ly, F = Fy, fn = fy;
          accepted = true;
          break;
        }
      } catch (const error&) {
        // leave the step halved: the trial point was too far for the current labels
      }
    }
    if (!accepted) {
      if (fn <= 1e3 * o.tol) return {x, lab, fn, it};
      throw convergence_error("solve_boutroux: damping failed to reduce the residual");
    }
  }
  throw convergence_error("solve_boutroux: no convergence within the iteration budget");
}

namespace detail {

inline BsbSolution finish_solution(const BsbIndex& idx, const BoutrouxResult& r, const BsbOptions& o) {
  BsbSolution s;
  s.index = idx;
  s.a = r.potential.a;
  s.b = r.potential.b;
  s.residual_norm = r.residual_norm;
  s.iterations = r.iterations;
  s.labels = r.labels;
  s.arg_bound_ok = std::abs(std::arg(s.a)) > 4 * pi / 5;
  if (o.check_class || o.compute_rho) {
    StokesComplexGraph g;
    try {
      g = classify(r.potential);
    } catch (const ambiguity_error&) {
      throw convergence_error("solve_bsb: converged potential is not of class (320)");
    }
    if (g.class_code != ClassCode::c320) throw convergence_error("solve_bsb: class drift away from (320)");
    auto same = [&](std::optional<cplx> u, std::optional<cplx> v) {
      return std::abs(*u - *v) <= 1e-8 * g.trace.tps.scale();
    };
    if (!same(g.labels.base, s.labels.base) || !same(g.labels.plus, s.labels.plus) ||
        !same(g.labels.minus, s.labels.minus))
      throw convergence_error("solve_bsb: tracked labels disagree with the Stokes complex");
    s.class_checked = true;
    if (o.compute_rho) s.rho_max = relative_errors(r.potential, g, o.rho).max_finite();
  }
  return s;
}

} // namespace detail

/** \brief Solve the quantization system for integer indices from a seed potential. */
inline BsbSolution solve_bsb(const BsbIndex& idx, const CubicPotential& seed, double tol, const BsbOptions& opts = {}) {
  if (idx.n < 1 || idx.m < 1) throw error("solve_bsb: indices must be positive");
  BsbOptions o = opts;
  o.tol = tol;
  auto r = solve_boutroux(idx.n, idx.m, seed, seed_labels(seed), o);
  return detail::finish_solution(idx, r, o);
}

struct RealOrbitConstants {
  double mu_star;  // a^3 / b^2 on the orbit
  double a_star;
  double b_star;
};

/** \brief The real orbit with Re of the plus period equal to zero, normalized by the period. */
inline RealOrbitConstants real_orbit_constants(double tol = 1e-14) {
  auto f = [](double b) {
    CubicPotential p{-1.0, b};
    return cycle_period(p, positional_labels(p), Cycle::plus).value.real();
  };
  double lo = -0.05, hi = -0.005;
  double flo = f(lo), fhi = f(hi);
  if (flo * fhi > 0) throw convergence_error("real_orbit_constants: bracketing failed");
  std::uintmax_t iters = 200;
  int bits = std::max(10, std::min(52, int(-std::log2(tol))));
  auto r = boost::math::tools::toms748_solve(f, lo, hi, flo, fhi, boost::math::tools::eps_tolerance<double>(bits),
                                             iters);
  double b0 = 0.5 * (r.first + r.second);
  CubicPotential p{-1.0, b0};
  double kappa = cycle_period(p, positional_labels(p), Cycle::plus).value.imag();
  double x = std::pow(2 * pi / kappa, 0.4);
  return {-1.0 / (b0 * b0), -x * x, b0 * x * x * x};
}

namespace detail {
inline const RealOrbitConstants& cached_constants() {
  static const RealOrbitConstants c = real_orbit_constants();
  return c;
}
} // namespace detail

/** \brief a_n = a*(n-1/2)^{4/5}, b_n = b*(n-1/2)^{6/5}; optionally polished by solve_bsb. */
inline std::vector<CubicPotential> real_poles(int n_max, bool polish = false, double tol = 1e-10) {
  if (n_max < 1) throw error("real_poles: n_max must be positive");
  const auto& c = detail::cached_constants();
  std::vector<CubicPotential> out;
  for (int n = 1; n <= n_max; ++n) {
    CubicPotential p{c.a_star * std::pow(n - 0.5, 0.8), c.b_star * std::pow(n - 0.5, 1.2)};
    if (polish) {
      BsbOptions o;
      o.compute_rho = false;
      o.check_class = false;
      o.tol = tol;
      p = solve_boutroux(n, n, p, positional_labels(p), o).potential;
    }
    out.push_back(p);
  }
  return out;
}

using SolvedLattice = std::map<BsbIndex, BsbSolution>;

/** \brief Seed for (n, m): the power law on the diagonal, continuation from a solved neighbour off it.
 *
 * Continuation moves the real-valued targets from the neighbour's indices towards (n, m) in
 * fixed fractions and stops one step short; solve_bsb takes the last step.
 */
inline CubicPotential seed_from_scaling(const BsbIndex& idx, const SolvedLattice& solved = {},
                                        const BsbOptions& o = {}) {
  if (idx.n == idx.m) return real_poles(idx.n).back();

  const BsbSolution* from = nullptr;
  int best = std::numeric_limits<int>::max();
  for (auto& [k, s] : solved) {
    int d = std::abs(k.n - idx.n) + std::abs(k.m - idx.m);
    if (d < best) best = d, from = &s;
  }
  CubicPotential start;
  TurningPointLabels lab;
  double n0, m0;
  if (from) {
    start = from->potential();
    lab = from->labels;
    n0 = from->index.n;
    m0 = from->index.m;
  } else {
    int d = std::max(1, static_cast<int>(std::lround((idx.n + idx.m) / 2.0)));
    start = real_poles(d).back();
    lab = positional_labels(start);
    n0 = m0 = d;
  }
  double dist = std::max(std::abs(idx.n - n0), std::abs(idx.m - m0));
  int steps = std::max(1, static_cast<int>(std::ceil(dist / o.continuation_step)));
  BsbOptions co = o;
  co.tol = std::max(o.tol, 1e-9);
  for (int s = 1; s < steps; ++s) {
    double f = double(s) / steps;
    auto r = solve_boutroux(n0 + f * (idx.n - n0), m0 + f * (idx.m - m0), start, lab, co);
    start = r.potential;
    lab = r.labels;
  }
  return start;
}

struct LatticeCell {
  BsbIndex index;
  std::optional<BsbSolution> solution;
  std::string failure;
};

/** \brief Fill 1 <= n <= n_max, 1 <= m <= m_max: diagonal first, then by distance from it. */
inline std::vector<LatticeCell> solve_lattice(int n_max, int m_max, const BsbOptions& o = {}) {
  if (n_max < 1 || m_max < 1) throw error("solve_lattice: bounds must be at least 1");
  std::vector<BsbIndex> order;
  for (int n = 1; n <= n_max; ++n)
    for (int m = 1; m <= m_max; ++m) order.push_back({n, m});
  std::stable_sort(order.begin(), order.end(), [](auto& x, auto& y) {
    int dx = std::abs(x.n - x.m), dy = std::abs(y.n - y.m);
    return dx != dy ? dx < dy : x.n + x.m < y.n + y.m;
  });
  SolvedLattice solved;
  std::vector<LatticeCell> cells;
  for (auto& idx : order) {
    LatticeCell c{idx, std::nullopt, {}};
    try {
      auto seed = seed_from_scaling(idx, solved, o);
      c.solution = solve_bsb(idx, seed, o.tol, o);
      solved[idx] = *c.solution;
    } catch (const error& e) {
      c.failure = e.what();
    }
    cells.push_back(std::move(c));
  }
  std::sort(cells.begin(), cells.end(), [](auto& x, auto& y) { return x.index < y.index; });
  return cells;
}

} // namespace piwkb
