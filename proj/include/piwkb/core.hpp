#pragma once

#include <complex>
#include <numbers>
#include <stdexcept>
#include <string>

namespace piwkb {

using cplx = std::complex<double>;

inline constexpr double pi = std::numbers::pi;
inline constexpr cplx I{0.0, 1.0};

/// e^{2 pi i m / 5}
inline cplx omega(int m) { return std::polar(1.0, 2.0 * pi * m / 5.0); }

/// Representative of k in {-2,...,2}.
inline int wrap5(int k) {
  int r = ((k % 5) + 5) % 5;
  return r > 2 ? r - 5 : r;
}

/// Array slot 0..4 for a sector or ray label in {-2,...,2}.
inline int slot5(int k) { return ((k % 5) + 5) % 5; }

struct error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct degenerate_error : error {
  using error::error;
};

struct clearance_error : error {
  using error::error;
};

struct quadrature_error : error {
  using error::error;
};

struct convergence_error : error {
  using error::error;
};

struct trace_error : error {
  using error::error;
};

} // namespace piwkb
