#ifndef CONVEYANCE_CORE_MODEL_HPP
#define CONVEYANCE_CORE_MODEL_HPP

// Trapping potential, its accelerated-frame tilt, and the analytic bound
// states of the tanh^2 well.
//
// Units are dimensionless: the well depth, width and hbar default to one and
// the mass is the single knob that sets the number of bound states.

#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include <boost/math/special_functions/jacobi.hpp>

#include "conveyance/error.hpp"
#include "conveyance/wavefunction.hpp"

namespace conveyance::model {

struct PhysicalParams {
  double mass = 1.0;
  double depth = 1.0;  // V0
  double width = 1.0;  // w
  double hbar = 1.0;

  void validate() const {
    require(mass > 0.0 && std::isfinite(mass), ErrorKind::invalid_argument, "mass must be > 0");
    require(depth > 0.0 && std::isfinite(depth), ErrorKind::invalid_argument, "depth must be > 0");
    require(width > 0.0 && std::isfinite(width), ErrorKind::invalid_argument, "width must be > 0");
    require(hbar > 0.0 && std::isfinite(hbar), ErrorKind::invalid_argument, "hbar must be > 0");
  }
};

/// Well parameters plus a uniform frame acceleration a (slope m*a).
struct PotentialSpec {
  PhysicalParams params{};
  double acceleration = 0.0;

  double slope() const noexcept { return params.mass * acceleration; }

  static PotentialSpec from_slope(const PhysicalParams& p, double ma) {
    return PotentialSpec{p, ma / p.mass};
  }
};

/// V0 [tanh^2((x - x0)/w) - 1]
inline double well_potential(const PhysicalParams& p, double x, double x0 = 0.0) {
  const double th = std::tanh((x - x0) / p.width);
  return p.depth * (th * th - 1.0);
}

/// V(x) + m a x
inline double tilted_potential(const PotentialSpec& spec, double x) {
  return well_potential(spec.params, x) + spec.slope() * x;
}

/// Largest |m a| for which the tilted well keeps a local minimum.
inline double spinodal_slope(const PhysicalParams& p) {
  // max over t in (0,1) of t(1 - t^2) is 2/(3 sqrt 3)
  return 2.0 * p.depth / p.width * (2.0 / (3.0 * std::sqrt(3.0)));
}

/// The tilt is mirror-symmetric in the sign of a, so |m a| is what matters.
inline bool has_metastable_well(const PotentialSpec& spec) {
  return std::abs(spec.slope()) < spinodal_slope(spec.params);
}

/// Exact bound-state energies of the untilted well, ascending.
inline std::vector<double> bound_state_energies(const PhysicalParams& p) {
  p.validate();
  const double scale = p.hbar * p.hbar / (2.0 * p.mass * p.width * p.width);
  const double root = std::sqrt(p.depth / scale + 0.25);
  std::vector<double> energies;
  for (int n = 0;; ++n) {
    const double bracket = root - (2.0 * n + 1.0) / 2.0;
    if (bracket <= 0.0) break;
    energies.push_back(-scale * bracket * bracket);
  }
  return energies;
}

/// Analytic bound state n on the grid, normalized with the grid inner product.
///
/// Even states are non-negative at the well center; odd states are positive
/// on the right flank.
inline WaveFunction bound_state_wavefunction(const PhysicalParams& p, int n, const Grid& grid,
                                             double x0 = 0.0) {
  const auto energies = bound_state_energies(p);
  require(n >= 0 && n < static_cast<int>(energies.size()), ErrorKind::invalid_level,
          "bound state " + std::to_string(n) + " does not exist (have " +
              std::to_string(energies.size()) + ")");
  const double alpha =
      std::sqrt(-2.0 * p.mass * p.width * p.width * energies[n] / (p.hbar * p.hbar));
  const double sign = (n % 2 == 0 && (n / 2) % 2 == 1) ? -1.0 : 1.0;

  WaveFunction psi(grid);
  for (std::size_t j = 0; j < grid.size(); ++j) {
    const double xi = std::tanh((grid.x(j) - x0) / p.width);
    // (1 - xi^2)^(alpha/2) = sech^alpha, evaluated in log form to avoid underflow
    const double u = std::abs(grid.x(j) - x0) / p.width;
    const double log_cosh = u + std::log1p(std::exp(-2.0 * u)) - std::numbers::ln2;
    const double envelope = std::exp(-alpha * log_cosh);
    psi[j] = sign * envelope * boost::math::jacobi(static_cast<unsigned>(n), alpha, alpha, xi);
  }
  psi.normalize();
  return psi;
}

}  // namespace conveyance::model

#endif  // CONVEYANCE_CORE_MODEL_HPP
