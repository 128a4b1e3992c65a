#ifndef CONVEYANCE_SPECIAL_FUNCTIONS_HPP
#define CONVEYANCE_SPECIAL_FUNCTIONS_HPP

// Complex log-gamma, Gauss-Legendre rules, and Hankel functions of complex
// order by steepest-descent integration of
//   H1_nu(z) =  1/(pi i) int_{-inf}^{+inf + pi i} exp(z sinh t - nu t) dt
//   H2_nu(z) = -1/(pi i) int_{-inf}^{+inf - pi i} exp(z sinh t - nu t) dt

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstddef>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>
#include <vector>

#include <gsl/gsl_errno.h>
#include <gsl/gsl_integration.h>
#include <gsl/gsl_sf_gamma.h>

#include "conveyance/error.hpp"

namespace conveyance::special {

using cplx = std::complex<double>;

/// log Gamma(z) from GSL, with the imaginary part reduced to (-pi, pi].
inline cplx log_gamma(cplx z) {
  gsl_sf_result lnr, arg;
  const int status = gsl_sf_lngamma_complex_e(z.real(), z.imag(), &lnr, &arg);
  require(status == GSL_SUCCESS, ErrorKind::numeric_failure, "complex log-gamma failed");
  return {lnr.val, arg.val};
}

/// arg Gamma(1/2 + i y), continuous in y with value 0 at y = 0.
///
/// The GSL phase is placed on the branch nearest the leading Stirling term
/// Im[(s - 1/2) log s - s] after shifting s up by the recurrence
/// arg Gamma(s) = arg Gamma(s + n) - sum_{k<n} arg(s + k).
inline double arg_gamma_half(double y) {
  const cplx s{0.5, y};
  cplx w = s;
  double phase = 0.0;
  while (std::abs(w) < 16.0) {
    phase -= std::arg(w);
    w += 1.0;
  }
  const double estimate = ((w - 0.5) * std::log(w) - w).imag();
  const double reduced = log_gamma(w).imag();
  const double two_pi = 2.0 * std::numbers::pi;
  return phase + reduced + two_pi * std::round((estimate - reduced) / two_pi);
}

/// Gauss-Legendre nodes and weights on [-1, 1], cached per order.
struct GaussLegendre {
  std::vector<double> nodes;
  std::vector<double> weights;
};

inline const GaussLegendre& gauss_legendre(std::size_t n) {
  static std::mutex mutex;
  static std::map<std::size_t, std::unique_ptr<GaussLegendre>> cache;
  std::lock_guard<std::mutex> lock(mutex);
  auto& slot = cache[n];
  if (!slot) {
    require(n >= 1, ErrorKind::invalid_argument, "Gauss-Legendre order must be >= 1");
    gsl_integration_glfixed_table* table = gsl_integration_glfixed_table_alloc(n);
    require(table != nullptr, ErrorKind::numeric_failure, "GSL failed to build a GL table");
    auto rule = std::make_unique<GaussLegendre>();
    rule->nodes.resize(n);
    rule->weights.resize(n);
    for (std::size_t i = 0; i < n; ++i)
      gsl_integration_glfixed_point(-1.0, 1.0, i, &rule->nodes[i], &rule->weights[i], table);
    gsl_integration_glfixed_table_free(table);
    slot = std::move(rule);
  }
  return *slot;
}

/// A complex number stored as exp(log_scale) * mantissa to survive the huge
/// magnitudes of large-order Hankel functions.
struct Scaled {
  cplx log_scale;
  cplx mantissa;
  cplx value() const { return std::exp(log_scale) * mantissa; }
};

inline cplx ratio(const Scaled& a, const Scaled& b) {
  return std::exp(a.log_scale - b.log_scale) * (a.mantissa / b.mantissa);
}

namespace detail {

struct SaddleIntegrand {
  cplx z;
  cplx nu;
  cplx f(cplx t) const { return z * std::sinh(t) - nu * t; }
  cplx df(cplx t) const { return z * std::cosh(t) - nu; }
  cplx d2f(cplx t) const { return z * std::sinh(t); }
};

/// Follows the steepest-descent path of Re f from near the saddle, returning
/// the polyline of visited points (first point is `start`).
inline std::vector<cplx> descend(const SaddleIntegrand& g, cplx start, double f0_re,
                                 double drop) {
  std::vector<cplx> path{start};
  cplx t = start;
  auto direction = [&](cplx u) {
    const cplx d = g.df(u);
    const double mag = std::abs(d);
    return mag > 0.0 ? -std::conj(d) / mag : cplx{0.0, 0.0};
  };
  for (int iter = 0; iter < 200000; ++iter) {
    const double slope = std::abs(g.df(t));
    const double curv = std::abs(g.d2f(t));
    double h = 0.25 / std::sqrt(std::max(curv, 1e-300));
    if (slope > 0.0) h = std::min(h, 0.5 / slope);
    h = std::clamp(h, 1e-9, 0.25);
    // RK4 on dt/ds = -conj(f')/|f'|
    const cplx k1 = direction(t);
    const cplx k2 = direction(t + 0.5 * h * k1);
    const cplx k3 = direction(t + 0.5 * h * k2);
    const cplx k4 = direction(t + h * k3);
    t += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    path.push_back(t);
    if (g.f(t).real() < f0_re - drop) return path;
    if (!std::isfinite(t.real()) || !std::isfinite(t.imag())) break;
  }
  throw NumericFailure("steepest-descent path did not leave the saddle region");
}

/// int exp(f(t) - f0) dt along a polyline, composite GL per segment.
inline cplx integrate_polyline(const SaddleIntegrand& g, const std::vector<cplx>& pts, cplx f0,
                               std::size_t order) {
  const auto& rule = gauss_legendre(order);
  cplx acc{0.0, 0.0};
  for (std::size_t s = 0; s + 1 < pts.size(); ++s) {
    const cplx a = pts[s], b = pts[s + 1];
    const cplx half = 0.5 * (b - a), mid = 0.5 * (a + b);
    cplx seg{0.0, 0.0};
    for (std::size_t i = 0; i < rule.nodes.size(); ++i)
      seg += rule.weights[i] * std::exp(g.f(mid + half * rule.nodes[i]) - f0);
    acc += seg * half;
  }
  return acc;
}

/// Saddle-point contour integral of exp(f) between the -inf valley and the
/// valley at +inf + i*pi*sign; returns exp(f0) * I as a Scaled value.
inline Scaled contour_integral(cplx nu, cplx z, int sign) {
  SaddleIntegrand g{z, nu};
  const cplx i{0.0, 1.0};
  // saddles: cosh t = nu / z
  const cplx c = std::acos(nu / z);
  const cplx t0 = static_cast<double>(sign) * i * c;
  const cplx f0 = g.f(t0);
  const cplx f2 = g.d2f(t0);
  cplx dir = std::sqrt(-1.0 / f2);
  dir /= std::abs(dir);
  const double scale = 1.0 / std::sqrt(std::max(std::abs(f2), 1e-300));
  const double step = 0.05 * std::min(scale, 1.0);
  constexpr double drop = 60.0;
  auto branch_a = descend(g, t0 + step * dir, f0.real(), drop);
  auto branch_b = descend(g, t0 - step * dir, f0.real(), drop);
  // orient: the branch heading to Re t -> -inf is the start of the contour
  if (branch_a.back().real() > branch_b.back().real()) std::swap(branch_a, branch_b);
  const cplx end_b = branch_b.back();
  // Once a branch has run well into its valley it must sit at Im t ~ sign*pi
  // (mod 2 pi). Large arguments truncate next to the saddle, where only the
  // orientation is informative.
  const double target = sign * std::numbers::pi;
  if (end_b.real() - t0.real() > 1.0 &&
      std::abs(std::remainder(end_b.imag() - target, 2.0 * std::numbers::pi)) >
          0.5 * std::numbers::pi)
    throw NumericFailure("steepest-descent path reached the wrong valley");
  std::vector<cplx> pts(branch_a.rbegin(), branch_a.rend());
  pts.push_back(t0);
  pts.insert(pts.end(), branch_b.begin(), branch_b.end());

  cplx prev = integrate_polyline(g, pts, f0, 8);
  for (std::size_t order = 16; order <= 64; order *= 2) {
    const cplx cur = integrate_polyline(g, pts, f0, order);
    if (std::abs(cur - prev) <= 1e-13 * std::abs(cur)) return {f0, cur};
    prev = cur;
  }
  throw NumericFailure("Hankel contour quadrature did not converge");
}

}  // namespace detail

/// H1_nu(z) for complex order and Re z > 0.
inline Scaled hankel1_scaled(cplx nu, cplx z) {
  require(z.real() > 0.0, ErrorKind::invalid_argument, "Hankel argument needs Re z > 0");
  auto s = detail::contour_integral(nu, z, +1);
  s.mantissa /= cplx{0.0, std::numbers::pi};
  return s;
}

inline Scaled hankel2_scaled(cplx nu, cplx z) {
  require(z.real() > 0.0, ErrorKind::invalid_argument, "Hankel argument needs Re z > 0");
  auto s = detail::contour_integral(nu, z, -1);
  s.mantissa /= cplx{0.0, -std::numbers::pi};
  return s;
}

inline cplx hankel1(cplx nu, cplx z) { return hankel1_scaled(nu, z).value(); }
inline cplx hankel2(cplx nu, cplx z) { return hankel2_scaled(nu, z).value(); }

/// H1_{nu-1}(z) / H1_nu(z)
inline cplx hankel1_ratio(cplx nu, cplx z) {
  return ratio(hankel1_scaled(nu - 1.0, z), hankel1_scaled(nu, z));
}

inline cplx hankel2_ratio(cplx nu, cplx z) {
  return ratio(hankel2_scaled(nu - 1.0, z), hankel2_scaled(nu, z));
}

}  // namespace conveyance::special

#endif  // CONVEYANCE_SPECIAL_FUNCTIONS_HPP
