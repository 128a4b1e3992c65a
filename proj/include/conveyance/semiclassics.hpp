#ifndef CONVEYANCE_SEMICLASSICS_HPP
#define CONVEYANCE_SEMICLASSICS_HPP

// WKB analysis of the metastable tilted well.
//
// The tilted potential is mirrored so that the barrier sits on the right and
// the outgoing wave leaves towards +x. Turning points are ordered c < a < b:
// c and a bound the classically allowed well, a and b bound the barrier.
//   X = (1/hbar) int_c^a p dx,   S = (1/hbar) int_a^b rho dx
// Above the barrier top X runs to the top and S continues to negative values
// through the pair of complex-conjugate turning points.

#include <cmath>
#include <complex>
#include <cstddef>
#include <functional>
#include <limits>
#include <numbers>
#include <optional>
#include <string>
#include <type_traits>
#include <utility>
#include <vector>

#include <boost/math/tools/roots.hpp>
#include <gsl/gsl_errno.h>
#include <gsl/gsl_integration.h>

#include "conveyance/core_model.hpp"
#include "conveyance/error.hpp"
#include "conveyance/special_functions.hpp"

namespace conveyance::semiclassics {

using cplx = std::complex<double>;

/// A single-well potential with at most one barrier on its right.
struct Landscape {
  std::function<double(double)> V;
  std::function<cplx(cplx)> V_complex;   // analytic continuation, may be empty
  std::function<cplx(cplx)> dV_complex;  // its derivative
  double mass = 1.0;
  double hbar = 1.0;
  double x_well = 0.0;               // location of the minimum
  std::optional<double> x_top{};     // barrier maximum, if any
  double scale = 1.0;                // typical length for bracketing searches
  double depth_scale = 1.0;          // typical energy

  double v_min() const { return V(x_well); }
  double v_top() const { return x_top ? V(*x_top) : std::numeric_limits<double>::infinity(); }
};

/// x -> -x, which puts the barrier of an a > 0 tilt on the right.
inline model::PotentialSpec mirror_for_wkb(const model::PotentialSpec& spec) {
  if (!model::has_metastable_well(spec))
    fail(ErrorKind::geometry, "tilted well has no metastable minimum at m a = " +
                                  std::to_string(spec.slope()));
  return {spec.params, -spec.acceleration};
}

namespace detail {
inline std::pair<double, double> solve_root(const std::function<double(double)>& f, double lo,
                                            double hi) {
  boost::uintmax_t iterations = 200;
  auto tol = [](double a, double b) { return std::abs(b - a) <= 1e-13 * std::max(1.0, std::abs(a)); };
  return boost::math::tools::toms748_solve(f, lo, hi, tol, iterations);
}
inline double root(const std::function<double(double)>& f, double lo, double hi) {
  const auto r = solve_root(f, lo, hi);
  return 0.5 * (r.first + r.second);
}
}  // namespace detail

/// Landscape of the tilted well with the barrier on the right (apply
/// mirror_for_wkb first for a > 0; a spec with slope < 0 is used as is).
inline Landscape tilted_landscape(const model::PotentialSpec& mirrored) {
  const auto& p = mirrored.params;
  p.validate();
  const double slope = mirrored.slope();
  require(slope < 0.0 || slope == 0.0, ErrorKind::geometry,
          "landscape expects the barrier on the right (slope <= 0); mirror first");
  if (!model::has_metastable_well(mirrored))
    fail(ErrorKind::geometry, "no metastable well for this slope");
  Landscape land;
  land.mass = p.mass;
  land.hbar = p.hbar;
  land.scale = p.width;
  land.depth_scale = p.depth;
  land.V = [mirrored](double x) { return model::tilted_potential(mirrored, x); };
  const double V0 = p.depth, w = p.width;
  land.V_complex = [V0, w, slope](cplx z) {
    const cplx th = std::tanh(z / w);
    return V0 * (th * th - 1.0) + slope * z;
  };
  land.dV_complex = [V0, w, slope](cplx z) {
    const cplx th = std::tanh(z / w);
    return 2.0 * V0 / w * th * (1.0 - th * th) + slope;
  };
  if (slope == 0.0) {
    land.x_well = 0.0;
    return land;  // no barrier
  }
  // extrema: (2 V0 / w) s (1 - s^2) = |slope|, s = tanh(x/w) in (0, 1)
  const double target = -slope * w / (2.0 * V0);
  auto g = [target](double s) { return s * (1.0 - s * s) - target; };
  const double s_peak = 1.0 / std::sqrt(3.0);
  const double s_min = detail::root(g, 0.0, s_peak);
  const double s_top = detail::root(g, s_peak, 1.0 - 1e-15);
  land.x_well = w * std::atanh(s_min);
  land.x_top = w * std::atanh(s_top);
  return land;
}

/// V = m Omega^2 x^2 / 2, no barrier.
inline Landscape harmonic_landscape(double mass, double omega, double hbar = 1.0) {
  Landscape land;
  land.mass = mass;
  land.hbar = hbar;
  land.scale = 1.0 / std::sqrt(mass * omega / hbar);
  land.V = [mass, omega](double x) { return 0.5 * mass * omega * omega * x * x; };
  land.V_complex = [mass, omega](cplx z) { return 0.5 * mass * omega * omega * z * z; };
  land.dV_complex = [mass, omega](cplx z) { return mass * omega * omega * z; };
  land.x_well = 0.0;
  return land;
}

struct TurningPoints {
  double c;
  double a;
  std::optional<double> b;  // absent when there is no barrier
};

inline constexpr double kBarrierTopGuard = 1e-6;

inline TurningPoints turning_points(const Landscape& land, double energy) {
  const double vmin = land.v_min();
  if (!(energy > vmin))
    fail(ErrorKind::no_turning_points, "energy at or below the well minimum");
  if (land.x_top && !(energy < land.v_top() - kBarrierTopGuard))
    fail(ErrorKind::no_turning_points, "energy not below the barrier top");
  auto f = [&](double x) { return land.V(x) - energy; };
  // left wall
  double step = land.scale;
  double lo = land.x_well - step;
  while (f(lo) < 0.0) {
    step *= 2.0;
    lo = land.x_well - step;
    require(step < 1e8, ErrorKind::no_turning_points, "no left turning point");
  }
  TurningPoints tp{};
  tp.c = detail::root(f, lo, land.x_well);
  if (!land.x_top) {
    step = land.scale;
    double hi = land.x_well + step;
    while (f(hi) < 0.0) {
      step *= 2.0;
      hi = land.x_well + step;
      require(step < 1e8, ErrorKind::no_turning_points, "no right turning point");
    }
    tp.a = detail::root(f, land.x_well, hi);
    return tp;
  }
  tp.a = detail::root(f, land.x_well, *land.x_top);
  step = land.scale;
  double hi = *land.x_top + step;
  while (f(hi) > 0.0) {
    step *= 2.0;
    hi = *land.x_top + step;
    require(step < 1e8, ErrorKind::no_turning_points, "no outer turning point");
  }
  tp.b = detail::root(f, *land.x_top, hi);
  return tp;
}

namespace detail {
struct CquadWorkspace {
  gsl_integration_cquad_workspace* ws;
  CquadWorkspace() : ws(gsl_integration_cquad_workspace_alloc(200)) {}
  ~CquadWorkspace() { gsl_integration_cquad_workspace_free(ws); }
  CquadWorkspace(const CquadWorkspace&) = delete;
  CquadWorkspace& operator=(const CquadWorkspace&) = delete;
};

inline double cquad(const std::function<double(double)>& f, double lo, double hi) {
  thread_local CquadWorkspace work;
  gsl_function gf;
  gf.function = [](double x, void* p) { return (*static_cast<const std::function<double(double)>*>(p))(x); };
  gf.params = const_cast<std::function<double(double)>*>(&f);
  double result = 0.0, abserr = 0.0;
  std::size_t nevals = 0;
  gsl_set_error_handler_off();
  const int status = gsl_integration_cquad(&gf, lo, hi, 1e-300, 1e-11, work.ws, &result, &abserr, &nevals);
  if (status != 0 && abserr > 1e-9 * std::abs(result))
    throw NumericFailure("turning-point quadrature did not converge", static_cast<int>(nevals));
  return result;
}

/// int_lo^hi g(x) dx with x = mid + half sin(theta), which smooths the
/// square-root behaviour at both turning points. Gauss-Legendre with node
/// doubling until the relative change drops below 1e-9; nearly coalescing
/// turning points fall through to adaptive CQUAD.
template <typename T, typename F>
T endpoint_quadrature(F g, T lo, T hi) {
  const T mid = 0.5 * (lo + hi), half = 0.5 * (hi - lo);
  const double hp = 0.5 * std::numbers::pi;
  auto h = [&](double th) { return g(mid + half * std::sin(th)) * std::cos(th); };
  auto rule_sum = [&](std::size_t n) {
    const auto& r = special::gauss_legendre(n);
    T acc{};
    for (std::size_t i = 0; i < n; ++i) acc += r.weights[i] * h(hp * r.nodes[i]);
    return acc * (half * hp);
  };
  T prev = rule_sum(16);
  for (std::size_t n = 32; n <= 512; n *= 2) {
    const T cur = rule_sum(n);
    if (std::abs(cur - prev) <= 1e-9 * std::abs(cur)) return cur;
    prev = cur;
  }
  if constexpr (std::is_same_v<T, double>) {
    return half * cquad([&](double th) { return h(th); }, -hp, hp);
  } else {
    const double re = cquad([&](double th) { return h(th).real(); }, -hp, hp);
    const double im = cquad([&](double th) { return h(th).imag(); }, -hp, hp);
    return half * T{re, im};
  }
}
}  // namespace detail

/// (1/hbar) int_lo^hi sqrt(2m |E - V|) dx for real turning points lo < hi.
inline double action_between(const Landscape& land, double energy, double lo, double hi) {
  const double m = land.mass;
  auto g = [&](double x) { return std::sqrt(std::max(0.0, 2.0 * m * std::abs(energy - land.V(x)))); };
  return detail::endpoint_quadrature<double>(g, lo, hi) / land.hbar;
}

struct ActionIntegrals {
  double S = 0.0;      // barrier action, negative above the barrier top
  double X = 0.0;      // well phase
  double dX_dE = 0.0;
  bool above_barrier = false;
};

/// Complex turning point in the upper half plane above the barrier top.
inline cplx complex_turning_point(const Landscape& land, double energy) {
  require(land.x_top.has_value() && land.V_complex && land.dV_complex, ErrorKind::geometry,
          "complex turning points need a barrier and an analytic potential");
  const double xt = *land.x_top;
  // V'' at the top by central difference
  const double h = 1e-4 * land.scale;
  const double curv = (land.V(xt + h) - 2.0 * land.V(xt) + land.V(xt - h)) / (h * h);
  require(curv < 0.0, ErrorKind::geometry, "barrier top is not a maximum");
  // continuation in sqrt(E - V_top) from just above the top
  const double gap = energy - land.v_top();
  const int stages = 16;
  cplx z{xt, 0.0};
  for (int k = 1; k <= stages; ++k) {
    const double e = land.v_top() + gap * (double(k) / stages) * (double(k) / stages);
    if (k == 1) z = cplx{xt, std::sqrt(2.0 * (e - land.v_top()) / -curv)};
    bool done = false;
    for (int it = 0; it < 100 && !done; ++it) {
      const cplx residual = land.V_complex(z) - e;
      if (std::abs(residual) < 1e-15 * std::max(1.0, std::abs(e))) {
        done = true;
        break;
      }
      const cplx step = residual / land.dV_complex(z);
      z -= step;
      done = std::abs(step) < 1e-12 * std::max(1.0, std::abs(z));
    }
    if (!done) throw NumericFailure("Newton iteration for the complex turning point did not converge", 100);
  }
  require(z.imag() > 0.0, ErrorKind::no_turning_points,
          "complex turning point left the upper half plane");
  return z;
}

/// Barrier action S(E); negative continuation above the top.
inline double barrier_action(const Landscape& land, double energy) {
  require(land.x_top.has_value(), ErrorKind::geometry, "no barrier");
  const double top = land.v_top();
  if (energy < top - kBarrierTopGuard) {
    const auto tp = turning_points(land, energy);
    return action_between(land, energy, tp.a, *tp.b);
  }
  if (energy > top + kBarrierTopGuard) {
    const cplx za = complex_turning_point(land, energy);
    const cplx zb = std::conj(za);
    const double m = land.mass;
    // -i sqrt(2m(E - V)) stays on one branch along the segment between the
    // conjugate turning points
    auto g = [&](cplx z) { return cplx{0.0, -1.0} * std::sqrt(2.0 * m * (energy - land.V_complex(z))); };
    const cplx val = detail::endpoint_quadrature<cplx>(g, zb, za) / land.hbar;
    return -std::abs(val.real());
  }
  fail(ErrorKind::no_turning_points, "energy within 1e-6 of the barrier top");
}

inline double well_phase(const Landscape& land, double energy) {
  if (land.x_top && energy > land.v_top() + kBarrierTopGuard) {
    // left wall only; the phase runs up to the barrier top
    auto f = [&](double x) { return land.V(x) - energy; };
    double step = land.scale, lo = land.x_well - step;
    while (f(lo) < 0.0) {
      step *= 2.0;
      lo = land.x_well - step;
      require(step < 1e8, ErrorKind::no_turning_points, "no left turning point");
    }
    const double c = detail::root(f, lo, land.x_well);
    return action_between(land, energy, c, *land.x_top);
  }
  const auto tp = turning_points(land, energy);
  return action_between(land, energy, tp.c, tp.a);
}

inline double energy_step(double energy) { return 1e-6 * std::max(std::abs(energy), 1e-3); }

inline ActionIntegrals actions(const Landscape& land, double energy) {
  ActionIntegrals out;
  out.X = well_phase(land, energy);
  const double h = energy_step(energy);
  out.dX_dE = (well_phase(land, energy + h) - well_phase(land, energy - h)) / (2.0 * h);
  if (land.x_top) {
    out.S = barrier_action(land, energy);
    out.above_barrier = energy > land.v_top();
  }
  return out;
}

/// phi(S) = arg Gamma(1/2 + i S/pi) - (S/pi) ln|S/pi| + S/pi
inline double weber_phase(double S) {
  const double y = S / std::numbers::pi;
  if (y == 0.0) return 0.0;
  return special::arg_gamma_half(y) - y * std::log(std::abs(y)) + y;
}

enum class Connection { airy, weber };

struct WkbOptions {
  /// Weber: use kappa = exp(-S) instead of exp(+S).
  bool paper_kappa = false;
  /// Weber: include d(phi/2)/dE in the level-spacing derivative.
  bool phase_derivative = true;
  /// Allow levels above the barrier top (S < 0).
  bool above_barrier = true;
};

struct SemiclassicalLevel {
  int n = 0;
  Connection connection = Connection::airy;
  double energy = 0.0;
  double hbar_omega = 0.0;
  double S = 0.0;
  double X = 0.0;
  double phi = 0.0;
  double kappa = 0.0;
  double gamma_airy = 0.0;
  double gamma_weber = 0.0;
  bool paper_kappa = false;
};

inline double gamma_airy(double hbar_omega, double S, double hbar = 1.0) {
  return hbar_omega / (2.0 * std::numbers::pi) * std::exp(-2.0 * S) / hbar;
}

inline double weber_kappa(double S, bool paper_kappa) {
  return paper_kappa ? std::exp(-S) : std::exp(S);
}

inline double gamma_weber(double hbar_omega, double S, bool paper_kappa = false,
                          double hbar = 1.0) {
  const double k = weber_kappa(S, paper_kappa);
  if (k > 1e150) return gamma_airy(hbar_omega, S, hbar);  // asymptotic branch, avoids overflow
  const double q = std::sqrt(1.0 + k * k);
  // (q - k)/(q + k) = 1/(q + k)^2 without cancellation
  return 2.0 * hbar_omega / std::numbers::pi / ((q + k) * (q + k)) / hbar;
}

inline double gamma_airy(const SemiclassicalLevel& level, double hbar = 1.0) {
  return gamma_airy(level.hbar_omega, level.S, hbar);
}
inline double gamma_weber(const SemiclassicalLevel& level, double hbar = 1.0) {
  return gamma_weber(level.hbar_omega, level.S, level.paper_kappa, hbar);
}

/// Quantized level n: X(E) = (n + 1/2) pi (Airy) or X - phi/2 = (n + 1/2) pi (Weber).
inline SemiclassicalLevel quantize(const Landscape& land, int n,
                                   Connection connection = Connection::airy,
                                   const WkbOptions& options = {}) {
  require(n >= 0, ErrorKind::invalid_level, "level index must be >= 0");
  const double target = (n + 0.5) * std::numbers::pi;
  const bool weber = connection == Connection::weber && land.x_top.has_value();
  auto phase = [&](double e) {
    double x = well_phase(land, e);
    if (weber) x -= 0.5 * weber_phase(barrier_action(land, e));
    return x;
  };
  auto f = [&](double e) { return phase(e) - target; };

  const double vmin = land.v_min();
  const double span = land.x_top ? land.v_top() - vmin : 1.0;
  std::vector<std::pair<double, double>> intervals;
  if (land.x_top) {
    intervals.push_back({vmin + 1e-9 * span, land.v_top() - 2.0 * kBarrierTopGuard});
    if (options.above_barrier)
      intervals.push_back({land.v_top() + 2.0 * kBarrierTopGuard, land.v_top() + span + 0.5 * land.depth_scale});
  } else {
    double hi = vmin + span;
    while (f(hi) < 0.0) hi = vmin + 2.0 * (hi - vmin);
    intervals.push_back({vmin + 1e-12 * span, hi});
  }
  std::optional<double> energy;
  for (auto [lo, hi] : intervals) {
    const double flo = f(lo), fhi = f(hi);
    if (flo <= 0.0 && fhi >= 0.0) {
      energy = detail::root(f, lo, hi);
      break;
    }
  }
  if (!energy) {
    // the root may be hidden in the guard band around the barrier top
    fail(ErrorKind::level_not_found, "no WKB level " + std::to_string(n) + " in the metastable window");
  }

  SemiclassicalLevel level;
  level.n = n;
  level.connection = connection;
  level.energy = *energy;
  level.paper_kappa = options.paper_kappa;
  level.X = well_phase(land, *energy);
  const double h = energy_step(*energy);
  double derivative;
  if (weber && options.phase_derivative)
    derivative = (phase(*energy + h) - phase(*energy - h)) / (2.0 * h);
  else
    derivative = (well_phase(land, *energy + h) - well_phase(land, *energy - h)) / (2.0 * h);
  require(derivative > 0.0, ErrorKind::numeric_failure, "non-positive dX/dE");
  level.hbar_omega = std::numbers::pi / derivative;
  if (land.x_top) {
    level.S = barrier_action(land, *energy);
    level.phi = weber_phase(level.S);
    level.kappa = weber_kappa(level.S, options.paper_kappa);
    level.gamma_airy = gamma_airy(level.hbar_omega, level.S, land.hbar);
    level.gamma_weber = gamma_weber(level.hbar_omega, level.S, options.paper_kappa, land.hbar);
  }
  return level;
}

inline TurningPoints turning_points(const model::PotentialSpec& mirrored, double energy) {
  return turning_points(tilted_landscape(mirrored), energy);
}
inline ActionIntegrals actions(const model::PotentialSpec& mirrored, double energy) {
  return actions(tilted_landscape(mirrored), energy);
}
inline SemiclassicalLevel quantize(const model::PotentialSpec& mirrored, int n,
                                   Connection connection = Connection::airy,
                                   const WkbOptions& options = {}) {
  return quantize(tilted_landscape(mirrored), n, connection, options);
}

struct GammaRow {
  double ma = 0.0;
  std::optional<SemiclassicalLevel> airy;
  std::optional<SemiclassicalLevel> weber;
  std::string error;  // non-empty when a variant could not be evaluated
};

/// Lowest-level decay rates over a list of slopes m a (> 0).
inline std::vector<GammaRow> gamma_table(const model::PhysicalParams& params,
                                         const std::vector<double>& slopes,
                                         const WkbOptions& options = {}) {
  std::vector<GammaRow> rows;
  for (double ma : slopes) {
    GammaRow row;
    row.ma = ma;
    try {
      const auto land = tilted_landscape(mirror_for_wkb(model::PotentialSpec::from_slope(params, ma)));
      try {
        row.airy = quantize(land, 0, Connection::airy, options);
      } catch (const Error& e) {
        row.error += std::string("airy: ") + e.what() + "; ";
      }
      try {
        row.weber = quantize(land, 0, Connection::weber, options);
      } catch (const Error& e) {
        row.error += std::string("weber: ") + e.what() + "; ";
      }
    } catch (const Error& e) {
      row.error = e.what();
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace conveyance::semiclassics

#endif  // CONVEYANCE_SEMICLASSICS_HPP
