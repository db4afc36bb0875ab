#pragma once

#include <piwkb/action.hpp>

#include <boost/multiprecision/complex_adaptor.hpp>
#include <boost/multiprecision/mpfr.hpp>
#include <boost/numeric/odeint.hpp>

#include <array>
#include <cmath>
#include <vector>

namespace piwkb {

struct MonodromyOptions {
  double R = 0;              // 0 picks max(8, 4 (1 + max|lambda_i|))
  double rtol = 1e-12;
  double atol = 1e-14;
  cplx hub = 0;              // inner point where psi_{k-1} and psi_{k+1} meet
  double inner_offset = 0.1; // second inner point: hub + offset (1 + max|lambda_i|) e^{0.3 i}
  double tail_tol = 1e-2;    // bound on the WKB error tail at the start of each ray
  double max_growth = 30;    // log growth per chunk before renormalizing
  std::size_t max_steps = 2000000;
  bool extended = true;               // redo in multiprecision when double falls short
  double admissibility_target = 1e-6; // what "falls short" means
};

/// One point of a solution, stored as (psi, psi') e^{log_scale}.
struct SolutionSample {
  cplx lambda;
  cplx psi;
  cplx dpsi;
  double log_scale = 0;
};

/// m e^l, for quantities whose modulus would overflow a double.
struct Scaled {
  cplx m{1.0, 0.0};
  double l = 0;

  static Scaled of(cplx z, double l = 0) {
    double a = std::abs(z);
    if (a == 0 || !std::isfinite(a)) return {z, l};
    return {z / a, l + std::log(a)};
  }
  Scaled operator*(const Scaled& o) const { return of(m * o.m, l + o.l); }
  Scaled operator/(const Scaled& o) const { return of(m / o.m, l - o.l); }
  cplx value() const { return m * std::exp(l); }
};

inline Scaled sqrt(const Scaled& s) { return Scaled::of(std::sqrt(s.m), s.l / 2); }

/// W(u, v) = u psi v' - u' psi v, with the scales kept.
inline Scaled wronskian(const SolutionSample& u, const SolutionSample& v) {
  return Scaled::of(u.psi * v.dpsi - u.dpsi * v.psi, u.log_scale + v.log_scale);
}

/** \brief Solution subdominant in the sector centred on 2 pi k / 5.
 *
 * Three legs leave the start point R e^{2 pi i k / 5}: arcs of |lambda| = R to the neighbouring
 * anti-Stokes directions at +-pi/5, and the ray inward to the hub. The solution grows along each leg.
 */
struct RecessiveSolution {
  int sector = 0;
  double R = 0;
  std::vector<SolutionSample> arc_minus;
  std::vector<SolutionSample> arc_plus;
  std::vector<SolutionSample> ray;
};

inline double default_radius(const CubicPotential& p) {
  return std::max(8.0, 4.0 * (1.0 + turning_points(p).max_modulus()));
}

/// Start of the sector-k ray and the anti-Stokes point between sectors k and k+1, both on |lambda| = R.
inline cplx sector_point(int k, double R) { return std::polar(R, 2 * pi * wrap5(k) / 5.0); }
inline cplx anti_stokes_point(int k, double R) { return std::polar(R, 2 * pi * wrap5(k) / 5.0 + pi / 5); }

namespace detail {

using ode_state = std::array<cplx, 2>;

/// Follow psi'' = V psi along lambda(t), t in [0, 1], renormalizing as the solution grows.
template <class Path, class Velocity>
std::vector<SolutionSample> follow(const CubicPotential& p, SolutionSample s, Path path, Velocity vel,
                                   const MonodromyOptions& o) {
  namespace ode = boost::numeric::odeint;
  std::vector<SolutionSample> out{s};
  double growth = 0;
  for (int i = 0; i < 64; ++i) {
    double t = (i + 0.5) / 64.0;
    growth += std::sqrt(std::abs(p(path(t)))) * std::abs(vel(t)) / 64.0;
  }
  if (growth == 0) return out;
  int chunks = std::max(4, static_cast<int>(std::ceil(growth / o.max_growth)));

  auto rhs = [&](const ode_state& y, ode_state& dy, double t) {
    cplx v = vel(t);
    dy[0] = y[1] * v;
    dy[1] = p(path(t)) * y[0] * v;
  };
  auto stepper = ode::make_controlled(o.atol, o.rtol, ode::runge_kutta_fehlberg78<ode_state>());
  std::size_t steps = 0;
  for (int c = 0; c < chunks; ++c) {
    double t0 = double(c) / chunks, t1 = double(c + 1) / chunks;
    ode_state y{s.psi, s.dpsi};
    try {
      steps += ode::integrate_adaptive(stepper, rhs, y, t0, t1, (t1 - t0) / 16);
    } catch (const std::exception& e) {
      throw convergence_error(std::string("monodromy: integration failed: ") + e.what());
    }
    if (steps > o.max_steps) throw convergence_error("monodromy: step budget exhausted");
    double n = std::max(std::abs(y[0]), std::abs(y[1]));
    if (!std::isfinite(n)) throw convergence_error("monodromy: solution overflowed");
    if (n == 0) throw convergence_error("monodromy: solution vanished");
    s = {path(t1), y[0] / n, y[1] / n, s.log_scale + std::log(n)};
    out.push_back(s);
  }
  return out;
}

/// psi' / psi at the start of a sector ray: first-order WKB on the branch decaying outward.
inline cplx wkb_log_derivative(const CubicPotential& p, cplx start) {
  cplx s = std::sqrt(p(start));
  if ((s * start).real() < 0) s = -s;
  return -s - p.d1(start) / (4.0 * p(start));
}

inline void check_tail(const CubicPotential& p, cplx start, const MonodromyOptions& o) {
  double tail = alpha_ray_integral(p, start, start / std::abs(start));
  if (!(tail <= o.tail_tol)) throw error("recessive_solution: radius too small for the WKB tail bound");
}

} // namespace detail

/// Straight segment from s.lambda to `to`.
inline std::vector<SolutionSample> propagate_segment(const CubicPotential& p, const SolutionSample& s, cplx to,
                                                     const MonodromyOptions& o = {}) {
  const cplx from = s.lambda, d = to - from;
  auto out = detail::follow(p, s, [&](double t) { return from + t * d; }, [&](double) { return d; }, o);
  out.back().lambda = to;
  return out;
}

/// Arc of |lambda| = |s.lambda| from arg s.lambda by `sweep` radians.
inline std::vector<SolutionSample> propagate_arc(const CubicPotential& p, const SolutionSample& s, double sweep,
                                                 const MonodromyOptions& o = {}) {
  const double R = std::abs(s.lambda), phi0 = std::arg(s.lambda);
  auto at = [&](double t) { return std::polar(R, phi0 + t * sweep); };
  return detail::follow(p, s, at, [&](double t) { return I * sweep * at(t); }, o);
}

/** \brief Recessive solution for sector k.
 *
 * Initial data at R e^{2 pi i k / 5}: psi = 1, psi' = -sqrt(V) - V'/(4V) on the branch decaying
 * outward. The dominant admixture this leaves is suppressed by the growth along every leg.
 */
inline RecessiveSolution recessive_solution(const CubicPotential& p, int k, double R, const MonodromyOptions& o = {}) {
  if (!(R > 0)) throw error("recessive_solution: radius must be positive");
  const cplx start = sector_point(k, R);
  detail::check_tail(p, start, o);
  SolutionSample init{start, 1.0, detail::wkb_log_derivative(p, start), 0.0};
  RecessiveSolution r;
  r.sector = wrap5(k);
  r.R = R;
  r.arc_minus = propagate_arc(p, init, -pi / 5, o);
  r.arc_minus.back().lambda = anti_stokes_point(k - 1, R);
  r.arc_plus = propagate_arc(p, init, pi / 5, o);
  r.arc_plus.back().lambda = anti_stokes_point(k, R);
  r.ray = propagate_segment(p, init, o.hub, o);
  return r;
}

struct StokesMultipliers {
  std::array<cplx, 5> sigma{};                    // slot5(k)
  std::array<cplx, 5> admissibility_residuals{};  // 1 + s_k s_{k+1} + i s_{k+3}, slot5(k)
  double R = 0;
  double eval_discrepancy = 0; // max |sigma| difference between the two inner evaluation points
  int digits = 15;             // working precision of the run that produced these numbers

  cplx at(int k) const { return sigma[slot5(k)]; }
  double max_admissibility() const {
    double m = 0;
    for (auto r : admissibility_residuals) m = std::max(m, std::abs(r));
    return m;
  }
};

namespace detail {

template <class T>
T lift(cplx z) {
  if constexpr (std::is_same_v<T, Scaled>)
    return Scaled::of(z);
  else
    return T(z.real(), z.imag());
}

template <class T>
bool degenerate(const T& x) {
  if constexpr (std::is_same_v<T, Scaled>)
    return x.m == 0.0 || !std::isfinite(std::abs(x.m));
  else
    return x == T(0);
}

inline cplx settle(const Scaled& s) { return s.value(); }
template <class T>
T settle(const T& t) {
  return t;
}

/** Multipliers from Wronskians of the base solutions psi_{-2..2}.
 *
 * adjacent[slot5(k)] = W(psi_k, psi_{k+1}) and skip[slot5(k)] = W(psi_{k-1}, psi_{k+1}), indices of
 * the solutions taken mod 5. Psi_k = c_k psi_k with W(Psi_j, Psi_{j+1}) = (-1)^{j+1} for j = -2..2
 * and Psi_{k+5} = -i Psi_k. Then sigma_k = (-1)^{k+1} W(Psi_{k-1}, Psi_{k+1}).
 */
template <class T>
auto multipliers_from(const std::array<T, 5>& adjacent, const std::array<T, 5>& skip) {
  using std::sqrt;
  for (auto& w : adjacent)
    if (degenerate(w)) throw convergence_error("stokes_multipliers: adjacent solutions are dependent");
  std::array<T, 5> P; // P[j + 2] = c_j c_{j+1}, with c_3 = c_{-2}
  for (int j = -2; j <= 1; ++j) P[j + 2] = lift<T>((j % 2 == 0) ? -1.0 : 1.0) / adjacent[slot5(j)];
  P[4] = lift<T>(-I) / adjacent[slot5(2)];

  std::array<T, 5> c; // c[j + 2]
  c[0] = sqrt(P[0] * P[2] * P[4] / (P[1] * P[3]));
  for (int j = -1; j <= 2; ++j) c[j + 2] = P[j + 1] / c[j + 1];
  auto coef = [&](int k) -> T {
    if (k == 3) return lift<T>(-I) * c[0];
    if (k == -3) return lift<T>(I) * c[4];
    return c[k + 2];
  };
  using V = decltype(settle(std::declval<T>()));
  std::array<V, 5> sigma;
  for (int k = -2; k <= 2; ++k) {
    V sign = (k % 2 == 0) ? V(-1.0) : V(1.0);
    sigma[slot5(k)] = sign * settle(coef(k - 1) * coef(k + 1) * skip[slot5(k)]);
  }
  return sigma;
}

template <class V>
std::array<V, 5> admissibility_of(const std::array<V, 5>& s) {
  const V i(0.0, 1.0);
  std::array<V, 5> r;
  for (int k = -2; k <= 2; ++k) r[slot5(k)] = V(1.0) + s[slot5(k)] * s[slot5(k + 1)] + i * s[slot5(k + 3)];
  return r;
}

/// Taylor-series propagation of psi'' = V psi in fixed multiprecision. V is cubic, so the
/// series coefficients follow from a four-term recurrence.
template <unsigned Digits>
class TaylorPropagator {
public:
  using C = boost::multiprecision::number<
      boost::multiprecision::complex_adaptor<boost::multiprecision::mpfr_float_backend<Digits>>,
      boost::multiprecision::et_off>;

  struct State {
    C z, psi, dpsi;
  };

  TaylorPropagator(const CubicPotential& p, std::size_t max_steps)
      : p_(p), a_(p.a.real(), p.a.imag()), b_(p.b.real(), p.b.imag()), max_steps_(max_steps) {
    order_ = static_cast<int>(Digits * 6 / 5 + 10);
    tol_ = std::pow(10.0, -static_cast<double>(Digits) + 5);
    reach_ = order_ / std::exp(1.0) * std::pow(tol_, 1.0 / order_);
    coeff_.resize(order_ + 1);
  }

  State start(cplx at) const {
    C z = lift<C>(at);
    C v = V(z), dv = C(12) * z * z - C(2) * a_;
    C s = sqrt(v);
    if ((down(s) * at).real() < 0) s = -s;
    return {z, C(1), -s - dv / (C(4) * v)};
  }

  void segment(State& st, cplx to) {
    const C target = lift<C>(to);
    for (;;) {
      C d = target - st.z;
      double dist = static_cast<double>(abs(d));
      if (dist == 0) return;
      double h = reach_ / local_scale(st.z);
      if (h >= dist) {
        advance(st, d);
        st.z = target;
        return;
      }
      advance(st, d * C(h / dist));
    }
  }

  /// Along |lambda| = R from phi0 to phi1, landing exactly on `to`.
  void arc(State& st, double R, double phi0, double phi1, cplx to) {
    const double dir = phi1 > phi0 ? 1.0 : -1.0;
    double phi = phi0;
    while (dir * (phi1 - phi) > 0) {
      double dphi = reach_ / local_scale(st.z) / R;
      bool last = dphi >= std::abs(phi1 - phi);
      phi = last ? phi1 : phi + dir * dphi;
      const C aim = lift<C>(last ? to : std::polar(R, phi));
      advance(st, aim - st.z);
      st.z = aim;
    }
  }

  static C wronskian(const State& u, const State& v) { return u.psi * v.dpsi - u.dpsi * v.psi; }
  static cplx down(const C& z) { return {static_cast<double>(z.real()), static_cast<double>(z.imag())}; }

private:
  C V(const C& z) const { return C(4) * z * z * z - C(2) * a_ * z - C(28) * b_; }

  double local_scale(const C& z) const {
    cplx w = down(z);
    return std::sqrt(std::abs(p_(w))) + std::cbrt(std::abs(p_.d1(w))) + std::pow(std::abs(p_.d2(w) / 2.0), 0.25) +
           std::pow(4.0, 0.2);
  }

  // Covers d in equal Taylor steps, doubling their number until the truncated tail is negligible.
  void advance(State& st, const C& d) {
    for (int pieces = 1; pieces <= (1 << 20); pieces *= 2) {
      State trial = st;
      const C h = d / C(pieces);
      bool ok = true;
      for (int i = 0; i < pieces && ok; ++i) ok = step(trial, h);
      if (ok) {
        st = trial;
        return;
      }
    }
    throw convergence_error("monodromy: Taylor step underflow");
  }

  bool step(State& st, const C& h) {
    if (++steps_ > max_steps_) throw convergence_error("monodromy: step budget exhausted");
    const C& z = st.z;
    const C v[4] = {V(z), C(12) * z * z - C(2) * a_, C(12) * z, C(4)};
    coeff_[0] = st.psi;
    coeff_[1] = st.dpsi;
    for (int n = 0; n + 2 <= order_; ++n) {
      C acc = v[0] * coeff_[n];
      for (int j = 1; j <= 3 && j <= n; ++j) acc += v[j] * coeff_[n - j];
      coeff_[n + 2] = acc / C((n + 1) * (n + 2));
    }
    C ps = coeff_[order_], dps = C(order_) * coeff_[order_];
    for (int n = order_ - 1; n >= 0; --n) ps = ps * h + coeff_[n];
    for (int n = order_ - 1; n >= 1; --n) dps = dps * h + C(n) * coeff_[n];
    // compared in multiprecision: psi itself may be far outside the double range
    const auto hn = abs(h);
    const auto tail = abs(coeff_[order_]) * pow(hn, order_) + abs(coeff_[order_ - 1]) * pow(hn, order_ - 1);
    const auto size = abs(ps) + hn * abs(dps);
    if (!(tail <= size * tol_)) return false;
    st.psi = ps;
    st.dpsi = dps;
    st.z += h;
    return true;
  }

  CubicPotential p_;
  C a_, b_;
  int order_;
  double tol_, reach_;
  std::vector<C> coeff_;
  std::size_t steps_ = 0, max_steps_;
};

template <unsigned Digits>
StokesMultipliers multipliers_extended(const CubicPotential& p, double R, const MonodromyOptions& o) {
  using T = TaylorPropagator<Digits>;
  using C = typename T::C;
  // the WKB start leaves a dominant admixture of relative size e^{-2 S(R)}, S(R) ~ 4/5 R^{5/2}
  R = std::max(R, std::pow((Digits + 10) * std::log(10.0) / 1.6, 0.4));
  T prop(p, o.max_steps);
  const cplx second = o.hub + o.inner_offset * (1.0 + turning_points(p).max_modulus()) * std::polar(1.0, 0.3);

  std::array<typename T::State, 5> plus, minus, ray, moved;
  for (int k = -2; k <= 2; ++k) {
    const cplx start = sector_point(k, R);
    check_tail(p, start, o);
    const double th = std::arg(start);
    const auto s0 = prop.start(start);
    auto& pl = plus[slot5(k)] = s0;
    prop.arc(pl, R, th, th + pi / 5, anti_stokes_point(k, R));
    auto& mi = minus[slot5(k)] = s0;
    prop.arc(mi, R, th, th - pi / 5, anti_stokes_point(k - 1, R));
    auto& r = ray[slot5(k)] = s0;
    prop.segment(r, o.hub);
    auto& m = moved[slot5(k)] = r;
    prop.segment(m, second);
  }
  std::array<C, 5> adjacent, skip_a, skip_b;
  for (int k = -2; k <= 2; ++k) {
    adjacent[slot5(k)] = T::wronskian(plus[slot5(k)], minus[slot5(k + 1)]);
    skip_a[slot5(k)] = T::wronskian(ray[slot5(k - 1)], ray[slot5(k + 1)]);
    skip_b[slot5(k)] = T::wronskian(moved[slot5(k - 1)], moved[slot5(k + 1)]);
  }
  auto sa = multipliers_from(adjacent, skip_a);
  auto sb = multipliers_from(adjacent, skip_b);
  auto res = admissibility_of(sa);
  StokesMultipliers out;
  out.R = R;
  out.digits = static_cast<int>(Digits);
  for (int i = 0; i < 5; ++i) {
    out.sigma[i] = T::down(sa[i]);
    out.admissibility_residuals[i] = T::down(res[i]);
    out.eval_discrepancy = std::max(out.eval_discrepancy, static_cast<double>(abs(sa[i] - sb[i])));
  }
  return out;
}

} // namespace detail

inline std::array<cplx, 5> admissibility(const std::array<cplx, 5>& s) { return detail::admissibility_of(s); }

/** \brief Stokes multipliers by direct integration; R <= 0 selects the default radius.
 *
 * Adjacent pairs meet on the anti-Stokes ray between their sectors at |lambda| = R, where both
 * oscillate. psi_{k-1} and psi_{k+1} are both dominant in sector k, so they meet at the hub, where
 * their recessive difference is least swamped. A second inner point, reached by a short segment
 * from the hub, gives an independent evaluation.
 *
 * Multipliers can be exponentially large; the admissibility relations then cancel products of
 * size |sigma|^2 and double precision cannot resolve them. If the double run misses the target the
 * computation is repeated with a multiprecision Taylor integrator at 50, 100 or 150 digits.
 */
inline StokesMultipliers stokes_multipliers(const CubicPotential& p, double R = 0, double tol = 1e-12,
                                            const MonodromyOptions& opts = {}) {
  MonodromyOptions o = opts;
  o.rtol = tol;
  if (!(R > 0)) R = o.R > 0 ? o.R : default_radius(p);
  const double inner = o.inner_offset * (1.0 + turning_points(p).max_modulus());

  std::array<RecessiveSolution, 5> psi;
  std::array<SolutionSample, 5> moved;
  for (int k = -2; k <= 2; ++k) {
    psi[slot5(k)] = recessive_solution(p, k, R, o);
    moved[slot5(k)] = propagate_segment(p, psi[slot5(k)].ray.back(), o.hub + inner * std::polar(1.0, 0.3), o).back();
  }
  auto sol = [&](int k) -> const RecessiveSolution& { return psi[slot5(k)]; };

  std::array<Scaled, 5> adjacent, skip_a, skip_b;
  for (int k = -2; k <= 2; ++k) {
    adjacent[slot5(k)] = wronskian(sol(k).arc_plus.back(), sol(k + 1).arc_minus.back());
    skip_a[slot5(k)] = wronskian(sol(k - 1).ray.back(), sol(k + 1).ray.back());
    skip_b[slot5(k)] = wronskian(moved[slot5(k - 1)], moved[slot5(k + 1)]);
  }
  StokesMultipliers out;
  out.R = R;
  out.sigma = detail::multipliers_from(adjacent, skip_a);
  auto other = detail::multipliers_from(adjacent, skip_b);
  for (int i = 0; i < 5; ++i) out.eval_discrepancy = std::max(out.eval_discrepancy, std::abs(out.sigma[i] - other[i]));
  out.admissibility_residuals = admissibility(out.sigma);
  if (!o.extended || out.max_admissibility() <= o.admissibility_target) return out;

  double big = 1;
  for (auto s : out.sigma) big = std::max(big, std::abs(s));
  const double need = 30 + 2 * std::log10(big);
  if (need <= 50) {
    out = detail::multipliers_extended<50>(p, R, o);
    if (out.max_admissibility() <= o.admissibility_target) return out;
  }
  if (need <= 100) {
    out = detail::multipliers_extended<100>(p, R, o);
    if (out.max_admissibility() <= o.admissibility_target) return out;
  }
  return detail::multipliers_extended<150>(p, R, o);
}

struct TritronqueeVerdict {
  bool passed = false;
  double margin = 0; // max(|sigma_2|, |sigma_-2|)
};

inline TritronqueeVerdict tritronquee_test(const StokesMultipliers& s, double threshold) {
  double m = std::max(std::abs(s.at(2)), std::abs(s.at(-2)));
  return {m <= threshold, m};
}

/// Multipliers of the tritronquee solution: sigma_{+-2} = 0 forces the others to i.
inline std::array<cplx, 5> tritronquee_multipliers() {
  std::array<cplx, 5> s{};
  s[slot5(-1)] = s[slot5(0)] = s[slot5(1)] = I;
  return s;
}

} // namespace piwkb
