#pragma once

#include <piwkb/core.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <vector>

namespace piwkb {

/** \brief The cubic V(lambda) = 4 lambda^3 - 2 a lambda - 28 b. */
struct CubicPotential {
  cplx a{};
  cplx b{};

  cplx operator()(cplx l) const { return 4.0 * l * l * l - 2.0 * a * l - 28.0 * b; }
  cplx d1(cplx l) const { return 12.0 * l * l - 2.0 * a; }
  cplx d2(cplx l) const { return 24.0 * l; }

  bool is_real(double tol = 0.0) const {
    return std::abs(a.imag()) <= tol * std::max(1.0, std::abs(a)) &&
           std::abs(b.imag()) <= tol * std::max(1.0, std::abs(b));
  }
  CubicPotential conj() const { return {std::conj(a), std::conj(b)}; }
};

struct TurningPoint {
  cplx value;
  int multiplicity = 1;
};

struct TurningPointSet {
  std::vector<TurningPoint> points;
  std::array<cplx, 3> roots{}; // with repetition, used for factorized square roots

  int simple_count() const {
    return static_cast<int>(std::count_if(points.begin(), points.end(),
                                          [](const TurningPoint& t) { return t.multiplicity == 1; }));
  }
  double max_modulus() const {
    double r = 0;
    for (auto& t : points) r = std::max(r, std::abs(t.value));
    return r;
  }
  /// Smallest distance between distinct turning points (0 if there is only one).
  double min_separation() const {
    double s = 0;
    for (std::size_t i = 0; i < points.size(); ++i)
      for (std::size_t j = i + 1; j < points.size(); ++j) {
        double d = std::abs(points[i].value - points[j].value);
        s = (s == 0) ? d : std::min(s, d);
      }
    return s;
  }
  /// Natural length scale of the configuration; never zero.
  double scale() const {
    double s = max_modulus();
    return s > 0 ? s : 1.0;
  }
  double nearest_distance(cplx l) const {
    double d = std::numeric_limits<double>::infinity();
    for (auto& t : points) d = std::min(d, std::abs(l - t.value));
    return d;
  }
};

namespace detail {

inline cplx polish_root(const CubicPotential& p, cplx r) {
  for (int it = 0; it < 3; ++it) {
    cplx d = p.d1(r);
    if (d == 0.0) break;
    cplx step = p(r) / d;
    if (!std::isfinite(step.real()) || !std::isfinite(step.imag())) break;
    cplx next = r - step;
    if (std::abs(p(next)) >= std::abs(p(r))) break;
    r = next;
  }
  return r;
}

} // namespace detail

/** \brief Zeros of V with multiplicities; clustering is relative to the root scale. */
inline TurningPointSet turning_points(const CubicPotential& pot, double tol = 1e-8) {
  if (!(tol > 0)) throw error("turning_points: tolerance must be positive");
  // depressed form l^3 + s l + t
  const cplx s = -pot.a / 2.0;
  const cplx t = -7.0 * pot.b;
  const double scale = std::max(std::sqrt(std::abs(s)), std::cbrt(std::abs(t)));
  TurningPointSet out;
  if (scale == 0.0) {
    out.points.push_back({0.0, 3});
    out.roots = {0.0, 0.0, 0.0};
    return out;
  }

  const cplx disc = std::sqrt(t * t / 4.0 + s * s * s / 27.0);
  cplx u3 = -t / 2.0 + disc;
  cplx u3b = -t / 2.0 - disc;
  if (std::abs(u3b) > std::abs(u3)) u3 = u3b;
  std::array<cplx, 3> r{};
  if (std::abs(u3) == 0.0) {
    r = {0.0, 0.0, 0.0};
  } else {
    cplx u = std::pow(u3, 1.0 / 3.0);
    for (int j = 0; j < 3; ++j) {
      cplx uj = u * std::polar(1.0, 2.0 * pi * j / 3.0);
      r[j] = uj - s / (3.0 * uj);
    }
  }
  for (auto& x : r) x = detail::polish_root(pot, x);

  const double eps = tol * scale;
  bool c01 = std::abs(r[0] - r[1]) <= eps, c02 = std::abs(r[0] - r[2]) <= eps,
       c12 = std::abs(r[1] - r[2]) <= eps;
  int clustered = int(c01) + int(c02) + int(c12);
  if (clustered >= 2) {
    out.points.push_back({0.0, 3});
    out.roots = {0.0, 0.0, 0.0};
    return out;
  }
  if (clustered == 1) {
    // exact double-root formulas of the depressed cubic
    cplx dbl = -3.0 * t / (2.0 * s);
    cplx sim = 3.0 * t / s;
    out.points.push_back({dbl, 2});
    out.points.push_back({sim, 1});
    out.roots = {dbl, dbl, sim};
    return out;
  }
  for (auto& x : r) out.points.push_back({x, 1});
  out.roots = r;
  return out;
}

/** \brief Element (x, m) of the rescaling group R_+ x Z_5. */
struct GroupElement {
  double x = 1.0;
  int m = 0;

  GroupElement compose(const GroupElement& o) const { return {x * o.x, slot5(m + o.m)}; }
};

inline CubicPotential apply_group(const GroupElement& g, const CubicPotential& p) {
  return {omega(2 * g.m) * g.x * g.x * p.a, omega(3 * g.m) * g.x * g.x * g.x * p.b};
}

/** \brief nu = b/a, mu = b^2/a^3; inv_mu = a^3/b^2 is the form quoted for the real orbit. */
struct ModuliCoords {
  cplx nu;
  cplx mu;
  cplx inv_mu;
};

inline ModuliCoords moduli(const CubicPotential& p) {
  if (p.a == 0.0) throw degenerate_error("moduli: a = 0 has no (nu, mu) coordinates");
  cplx a3 = p.a * p.a * p.a;
  cplx inv = p.b == 0.0 ? cplx(std::numeric_limits<double>::infinity(), 0) : a3 / (p.b * p.b);
  return {p.b / p.a, p.b * p.b / a3, inv};
}

} // namespace piwkb
