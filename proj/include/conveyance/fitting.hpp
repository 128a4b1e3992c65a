#ifndef CONVEYANCE_FITTING_HPP
#define CONVEYANCE_FITTING_HPP

// Decay-rate and line-shape fits.
//
// Pure exponentials are fitted on log p by ordinary least squares. The offset
// form p0 + A exp(-G t) and the Lorentzian line shape go through MINPACK's
// Levenberg-Marquardt (Eigen's unsupported port) with analytic Jacobians.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <unsupported/Eigen/NonLinearOptimization>

#include "conveyance/error.hpp"

namespace conveyance::fit {

enum class DecayForm { pure, with_offset };

struct FitWindow {
  double t_start = 0.0;
  double t_end = 0.0;
};

struct DecayFit {
  DecayForm form = DecayForm::pure;
  double rate = 0.0;       // Gamma, 1/time
  double amplitude = 1.0;  // A
  double offset = 0.0;     // p0, zero for the pure form
  FitWindow window{};
  std::size_t samples = 0;
  double rms_residual = 0.0;
  double r_squared = 0.0;  // of the log-linear regression
};

struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;
};

inline LineFit linear_regression(std::span<const double> x, std::span<const double> y) {
  require(x.size() == y.size() && x.size() >= 2, ErrorKind::fit_domain,
          "linear regression needs at least two paired samples");
  const double n = static_cast<double>(x.size());
  double sx = 0, sy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sx += x[i];
    sy += y[i];
  }
  const double mx = sx / n, my = sy / n;
  double sxx = 0, sxy = 0, syy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
    syy += (y[i] - my) * (y[i] - my);
  }
  require(sxx > 0.0, ErrorKind::fit_domain, "regression abscissae are degenerate");
  LineFit out;
  out.slope = sxy / sxx;
  out.intercept = my - out.slope * mx;
  double ss_res = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double r = y[i] - (out.intercept + out.slope * x[i]);
    ss_res += r * r;
  }
  out.r_squared = syy > 0.0 ? 1.0 - ss_res / syy : 1.0;
  return out;
}

namespace detail {

struct OffsetExpFunctor {
  using Scalar = double;
  enum { InputsAtCompileTime = Eigen::Dynamic, ValuesAtCompileTime = Eigen::Dynamic };
  using InputType = Eigen::VectorXd;
  using ValueType = Eigen::VectorXd;
  using JacobianType = Eigen::MatrixXd;

  std::span<const double> t;
  std::span<const double> y;

  int inputs() const { return 3; }
  int values() const { return static_cast<int>(t.size()); }

  // x = (p0, A, Gamma)
  int operator()(const Eigen::VectorXd& x, Eigen::VectorXd& f) const {
    for (std::size_t i = 0; i < t.size(); ++i)
      f[static_cast<Eigen::Index>(i)] = x[0] + x[1] * std::exp(-x[2] * t[i]) - y[i];
    return 0;
  }
  int df(const Eigen::VectorXd& x, Eigen::MatrixXd& J) const {
    for (std::size_t i = 0; i < t.size(); ++i) {
      const auto r = static_cast<Eigen::Index>(i);
      const double e = std::exp(-x[2] * t[i]);
      J(r, 0) = 1.0;
      J(r, 1) = e;
      J(r, 2) = -x[1] * t[i] * e;
    }
    return 0;
  }
};

struct LorentzFunctor {
  using Scalar = double;
  enum { InputsAtCompileTime = Eigen::Dynamic, ValuesAtCompileTime = Eigen::Dynamic };
  using InputType = Eigen::VectorXd;
  using ValueType = Eigen::VectorXd;
  using JacobianType = Eigen::MatrixXd;

  std::span<const double> e;
  std::span<const double> y;

  int inputs() const { return 3; }
  int values() const { return static_cast<int>(e.size()); }

  // x = (c, E0, gamma); model c / ((E - E0)^2 + gamma^2)
  int operator()(const Eigen::VectorXd& x, Eigen::VectorXd& f) const {
    for (std::size_t i = 0; i < e.size(); ++i) {
      const double d = e[i] - x[1];
      f[static_cast<Eigen::Index>(i)] = x[0] / (d * d + x[2] * x[2]) - y[i];
    }
    return 0;
  }
  int df(const Eigen::VectorXd& x, Eigen::MatrixXd& J) const {
    for (std::size_t i = 0; i < e.size(); ++i) {
      const auto r = static_cast<Eigen::Index>(i);
      const double d = e[i] - x[1];
      const double q = d * d + x[2] * x[2];
      J(r, 0) = 1.0 / q;
      J(r, 1) = 2.0 * x[0] * d / (q * q);
      J(r, 2) = -2.0 * x[0] * x[2] / (q * q);
    }
    return 0;
  }
};

template <typename Functor>
int run_levenberg_marquardt(Functor& functor, Eigen::VectorXd& x) {
  Eigen::LevenbergMarquardt<Functor> lm(functor);
  lm.parameters.ftol = 1e-15;
  lm.parameters.xtol = 1e-15;
  lm.parameters.gtol = 0.0;
  lm.parameters.maxfev = 4000;
  const auto status = lm.minimize(x);
  if (status == Eigen::LevenbergMarquardtSpace::ImproperInputParameters ||
      status == Eigen::LevenbergMarquardtSpace::TooManyFunctionEvaluation)
    throw NumericFailure("Levenberg-Marquardt did not converge", static_cast<long>(lm.nfev));
  return static_cast<int>(lm.nfev);
}

}  // namespace detail

/// Fits samples inside `window` (inclusive) to exp(-G t) or p0 + A exp(-G t).
inline DecayFit fit_exponential(std::span<const double> times, std::span<const double> values,
                                FitWindow window, DecayForm form = DecayForm::pure) {
  require(times.size() == values.size(), ErrorKind::dimension, "times/values size mismatch");
  std::vector<double> t, y, logy;
  for (std::size_t i = 0; i < times.size(); ++i) {
    if (times[i] < window.t_start || times[i] > window.t_end) continue;
    if (!(values[i] > 0.0))
      fail(ErrorKind::fit_domain, "non-positive sample at t=" + std::to_string(times[i]));
    t.push_back(times[i]);
    y.push_back(values[i]);
    logy.push_back(std::log(values[i]));
  }
  require(t.size() >= 3, ErrorKind::fit_domain, "fit window holds fewer than 3 samples");

  const auto line = linear_regression(t, logy);
  DecayFit out;
  out.form = form;
  out.window = window;
  out.samples = t.size();
  out.rate = -line.slope;
  out.amplitude = std::exp(line.intercept);
  out.r_squared = line.r_squared;

  if (form == DecayForm::with_offset) {
    detail::OffsetExpFunctor functor{t, y};
    Eigen::VectorXd x(3);
    x << 0.0, out.amplitude, out.rate;
    detail::run_levenberg_marquardt(functor, x);
    if (!std::isfinite(x[2])) throw NumericFailure("offset exponential fit diverged");
    out.offset = x[0];
    out.amplitude = x[1];
    out.rate = x[2];
  }

  double ss = 0.0;
  for (std::size_t i = 0; i < t.size(); ++i) {
    const double model = out.offset + out.amplitude * std::exp(-out.rate * t[i]);
    ss += (model - y[i]) * (model - y[i]);
  }
  out.rms_residual = std::sqrt(ss / static_cast<double>(t.size()));
  require(out.rate > 0.0, ErrorKind::fit_domain, "fitted rate is not positive");
  return out;
}

/// c / ((E - E0)^2 + gamma^2). `rate()` is the decay rate 2*gamma/hbar that the
/// line shape implies for the survival probability.
struct LorentzianFit {
  double center = 0.0;
  double half_width = 0.0;
  double scale = 0.0;
  std::size_t samples = 0;
  double rate(double hbar = 1.0) const { return 2.0 * half_width / hbar; }
};

struct LorentzianOptions {
  /// Fit window half-extent in units of the estimated half width.
  double window_half_widths = 6.0;
  std::size_t min_levels = 5;
  /// Divide each weight by the local level spacing, turning |d_k|^2 into a
  /// spectral density before fitting.
  bool per_unit_energy = true;
};

/// Least-squares Lorentzian through (energy, weight) samples around the
/// dominant peak. Energies must be ascending.
inline LorentzianFit lorentzian_fit(std::span<const double> energies,
                                    std::span<const double> raw_weights,
                                    LorentzianOptions options = {}) {
  require(energies.size() == raw_weights.size(), ErrorKind::dimension,
          "energies/weights size mismatch");
  const std::size_t n = energies.size();
  std::vector<double> weights(raw_weights.begin(), raw_weights.end());
  if (options.per_unit_energy && n >= 2) {
    for (std::size_t k = 0; k < n; ++k) {
      const std::size_t lo = k == 0 ? 0 : k - 1;
      const std::size_t hi = k + 1 == n ? n - 1 : k + 1;
      const double spacing = (energies[hi] - energies[lo]) / static_cast<double>(hi - lo);
      require(spacing > 0.0, ErrorKind::invalid_argument, "energies must be strictly ascending");
      weights[k] /= spacing;
    }
  }
  require(n >= options.min_levels, ErrorKind::no_resonance, "too few levels for a line fit");
  const auto peak = static_cast<std::size_t>(
      std::max_element(weights.begin(), weights.end()) - weights.begin());
  if (peak == 0 || peak + 1 == n || !(weights[peak] > 0.0))
    fail(ErrorKind::no_resonance, "weight distribution has no interior peak");

  // Half-width estimate from the half-maximum crossings, interpolated.
  const double half = 0.5 * weights[peak];
  auto crossing = [&](int dir) {
    std::size_t i = peak;
    while (true) {
      const std::size_t next = dir > 0 ? i + 1 : i - 1;
      if ((dir > 0 && next >= n) || (dir < 0 && i == 0)) return energies[i];
      if (weights[next] <= half) {
        const double f = (weights[i] - half) / (weights[i] - weights[next]);
        return energies[i] + f * (energies[next] - energies[i]);
      }
      i = next;
    }
  };
  double gamma0 = 0.5 * (crossing(+1) - crossing(-1));
  const double spacing = 0.5 * (energies[peak + 1] - energies[peak - 1]);
  gamma0 = std::max(gamma0, 0.5 * spacing);

  std::vector<double> e, y;
  const double reach = options.window_half_widths * gamma0;
  for (std::size_t i = 0; i < n; ++i) {
    if (std::abs(energies[i] - energies[peak]) <= reach) {
      e.push_back(energies[i]);
      y.push_back(weights[i]);
    }
  }
  // widen symmetrically until enough levels are inside
  std::size_t lo = peak, hi = peak;
  while (e.size() < options.min_levels) {
    if (lo > 0) --lo;
    if (hi + 1 < n) ++hi;
    if (lo == 0 && hi + 1 == n && hi - lo + 1 < options.min_levels)
      fail(ErrorKind::no_resonance, "not enough levels around the peak");
    e.assign(energies.begin() + static_cast<std::ptrdiff_t>(lo),
             energies.begin() + static_cast<std::ptrdiff_t>(hi) + 1);
    y.assign(weights.begin() + static_cast<std::ptrdiff_t>(lo),
             weights.begin() + static_cast<std::ptrdiff_t>(hi) + 1);
  }

  detail::LorentzFunctor functor{e, y};
  Eigen::VectorXd x(3);
  x << weights[peak] * gamma0 * gamma0, energies[peak], gamma0;
  detail::run_levenberg_marquardt(functor, x);
  LorentzianFit out;
  out.scale = x[0];
  out.center = x[1];
  out.half_width = std::abs(x[2]);
  out.samples = e.size();
  if (!(out.half_width > 0.0) || !std::isfinite(out.center))
    fail(ErrorKind::no_resonance, "Lorentzian fit collapsed");
  return out;
}

}  // namespace conveyance::fit

#endif  // CONVEYANCE_FITTING_HPP
