#pragma once

#include <piwkb/core.hpp>

#include <boost/multiprecision/cpp_int.hpp>

#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <utility>
#include <vector>

namespace piwkb {

using rational = boost::multiprecision::cpp_rational;

/** \brief Polynomial in (a, b) with exact rational coefficients. */
struct RationalPoly {
  std::map<std::pair<int, int>, rational> terms; // (deg a, deg b) -> coefficient

  static RationalPoly constant(const rational& c) {
    RationalPoly p;
    if (c != 0) p.terms[{0, 0}] = c;
    return p;
  }
  static RationalPoly monomial(int da, int db, const rational& c = 1) {
    RationalPoly p;
    if (c != 0) p.terms[{da, db}] = c;
    return p;
  }
  bool is_zero() const { return terms.empty(); }

  RationalPoly& operator+=(const RationalPoly& o) {
    for (auto& [k, v] : o.terms) {
      auto& slot = terms[k];
      slot += v;
      if (slot == 0) terms.erase(k);
    }
    return *this;
  }
  RationalPoly operator*(const RationalPoly& o) const {
    RationalPoly r;
    for (auto& [k1, v1] : terms)
      for (auto& [k2, v2] : o.terms) {
        auto& slot = r.terms[{k1.first + k2.first, k1.second + k2.second}];
        slot += v1 * v2;
      }
    std::erase_if(r.terms, [](const auto& kv) { return kv.second == 0; });
    return r;
  }
  RationalPoly scaled(const rational& c) const {
    RationalPoly r;
    if (c == 0) return r;
    for (auto& [k, v] : terms) r.terms[k] = v * c;
    return r;
  }
  cplx eval(cplx a, cplx b) const {
    cplx s = 0;
    for (auto& [k, v] : terms) s += v.convert_to<double>() * std::pow(a, k.first) * std::pow(b, k.second);
    return s;
  }
};

namespace detail {

/// Exact coefficients c_j(a, b) of the Laurent series at a pole, computed once and shared.
class LaurentTable {
public:
  static LaurentTable& instance() {
    static LaurentTable t;
    return t;
  }

  /// c_j for j = -2..n, index j + 2.
  std::vector<RationalPoly> coeffs(int n) {
    std::lock_guard<std::mutex> lock(mu_);
    extend(n);
    return {c_.begin(), c_.begin() + n + 3};
  }

  /// Coefficients R_k, k = -4..2n, of y'' - 6 y^2 + z for the series truncated at order n.
  std::vector<RationalPoly> residual(int n) {
    std::lock_guard<std::mutex> lock(mu_);
    extend(n);
    auto it = residual_.find(n);
    if (it != residual_.end()) return it->second;
    std::vector<RationalPoly> r(2 * n + 5);
    auto at = [&](int k) -> RationalPoly& { return r[k + 4]; };
    for (int j = -2; j <= n; ++j) at(j - 2) += c_[j + 2].scaled(rational(j) * (j - 1));
    for (int i = -2; i <= n; ++i)
      for (int j = -2; j <= n; ++j) at(i + j) += (c_[i + 2] * c_[j + 2]).scaled(-6);
    at(0) += RationalPoly::monomial(1, 0);
    at(1) += RationalPoly::constant(1);
    residual_[n] = r;
    return r;
  }

private:
  LaurentTable() {
    c_.push_back(RationalPoly::constant(1)); // j = -2
    c_.push_back({});                        // -1
    c_.push_back({});                        // 0
    c_.push_back({});                        // 1
    c_.push_back(RationalPoly::monomial(1, 0, rational(1, 10)));
    c_.push_back(RationalPoly::constant(rational(1, 6)));
    c_.push_back(RationalPoly::monomial(0, 1)); // j = 4, free parameter b
  }

  // (j - 4)(j + 3) c_j = 6 sum_{i + k = j - 2, i, k >= -1} c_i c_k  for j >= 5
  void extend(int n) {
    for (int j = static_cast<int>(c_.size()) - 2; j <= n; ++j) {
      RationalPoly s;
      for (int i = -1; i <= j - 1; ++i) {
        int k = j - 2 - i;
        if (k < -1 || k > j - 1) continue;
        s += c_[i + 2] * c_[k + 2];
      }
      c_.push_back(s.scaled(rational(6) / (rational(j - 4) * (j + 3))));
    }
  }

  std::mutex mu_;
  std::vector<RationalPoly> c_;
  std::map<int, std::vector<RationalPoly>> residual_;
};

} // namespace detail

struct LaurentOptions {
  int max_order = 50;
  double safe_factor = 0.3;
};

/** \brief Truncated Laurent series of a P-I solution with a double pole at z = pole. */
struct LaurentSeries {
  cplx pole;
  cplx b;
  int order = 0;
  std::vector<cplx> coeffs; // c_j at index j + 2

  cplx coeff(int j) const { return coeffs.at(j + 2); }

  cplx value(cplx z) const {
    cplx x = z - pole, s = 0;
    for (int j = order; j >= -2; --j) s = s * x + coeffs[j + 2];
    return s / (x * x);
  }

  /// Radius inside which the truncated series is trusted.
  double safe_radius(double factor = 0.3) const {
    double scale = 1.0;
    if (std::abs(pole) > 1) scale = std::min(scale, std::pow(std::abs(pole), -0.25));
    if (std::abs(b) > 1) scale = std::min(scale, std::pow(std::abs(b), -1.0 / 6.0));
    return factor * scale;
  }
};

inline LaurentSeries laurent_coeffs(cplx a, cplx b, int order, const LaurentOptions& o = {}) {
  if (order < 5 || order > o.max_order) throw error("laurent_coeffs: order out of range");
  LaurentSeries s{a, b, order, {}};
  for (auto& c : detail::LaurentTable::instance().coeffs(order)) s.coeffs.push_back(c.eval(a, b));
  return s;
}

/// Exact polynomial form of c_j, for inspection.
inline RationalPoly laurent_coeff_poly(int j) {
  if (j < -2) throw error("laurent_coeff_poly: index below -2");
  return detail::LaurentTable::instance().coeffs(std::max(j, 5))[j + 2];
}

/** \brief |y'' - 6 y^2 + z| for the truncated series, assembled power by power. */
inline double pi_residual(const LaurentSeries& s, cplx z, const LaurentOptions& o = {}) {
  cplx x = z - s.pole;
  double r = std::abs(x);
  if (r == 0 || r > s.safe_radius(o.safe_factor))
    throw error("pi_residual: point outside the trusted disc around the pole");
  auto res = detail::LaurentTable::instance().residual(s.order);
  cplx total = 0;
  for (int k = static_cast<int>(res.size()) - 5; k >= -4; --k) {
    const auto& poly = res[k + 4];
    if (!poly.is_zero()) total += poly.eval(s.pole, s.b) * std::pow(x, k);
  }
  return std::abs(total);
}

} // namespace piwkb
