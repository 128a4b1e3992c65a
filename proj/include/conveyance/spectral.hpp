#ifndef CONVEYANCE_SPECTRAL_HPP
#define CONVEYANCE_SPECTRAL_HPP

// Exact diagonalization of the discretized Hamiltonian and the dephasing
// picture of decay built on top of it.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "conveyance/core_model.hpp"
#include "conveyance/error.hpp"
#include "conveyance/fitting.hpp"
#include "conveyance/tridiagonal.hpp"
#include "conveyance/wavefunction.hpp"

namespace conveyance::spectral {

inline double hopping(double mass, double dx, double hbar = 1.0) {
  return hbar * hbar / (2.0 * mass * dx * dx);
}

/// Real symmetric tridiagonal H = diag(V_j + 2t) with off-diagonal -t.
/// Rows beyond either end are dropped, i.e. the state vanishes outside.
struct DiscreteHamiltonian {
  Grid grid;
  double t_hop;
  std::vector<double> diagonal;

  std::size_t size() const noexcept { return diagonal.size(); }
  double potential(std::size_t j) const noexcept { return diagonal[j] - 2.0 * t_hop; }
  std::vector<double> off_diagonal() const { return std::vector<double>(size() - 1, -t_hop); }

  double trace() const {
    double s = 0.0;
    for (double d : diagonal) s += d;
    return s;
  }

  /// Row-sum bound on the spectral norm.
  double norm_bound() const {
    double best = 0.0;
    for (double d : diagonal) best = std::max(best, std::abs(d) + 2.0 * t_hop);
    return best;
  }

  template <typename Vec>
  Vec apply(const Vec& v) const {
    const std::size_t n = size();
    Vec out(v);
    for (std::size_t j = 0; j < n; ++j) {
      auto acc = diagonal[j] * v[j];
      if (j > 0) acc -= t_hop * v[j - 1];
      if (j + 1 < n) acc -= t_hop * v[j + 1];
      out[j] = acc;
    }
    return out;
  }
};

inline DiscreteHamiltonian build_hamiltonian(const Grid& grid, const model::PhysicalParams& params,
                                             const std::function<double(double)>& potential) {
  params.validate();
  DiscreteHamiltonian h{grid, hopping(params.mass, grid.dx(), params.hbar), {}};
  h.diagonal.resize(grid.size());
  for (std::size_t j = 0; j < grid.size(); ++j)
    h.diagonal[j] = potential(grid.x(j)) + 2.0 * h.t_hop;
  return h;
}

inline DiscreteHamiltonian build_hamiltonian(const Grid& grid, const model::PotentialSpec& spec) {
  return build_hamiltonian(grid, spec.params,
                           [&](double x) { return model::tilted_potential(spec, x); });
}

/// Ascending eigenvalues and eigenvectors as unit-norm columns (Euclidean).
/// The grid-normalized state k is column k divided by sqrt(dx).
struct SpectralDecomposition {
  Grid grid;
  std::vector<double> energies;
  Eigen::MatrixXd vectors;

  std::size_t size() const noexcept { return energies.size(); }

  WaveFunction state(std::size_t k) const {
    require(k < size() && static_cast<Eigen::Index>(k) < vectors.cols(), ErrorKind::invalid_level,
            "eigenstate index out of range");
    WaveFunction psi(grid);
    const double scale = 1.0 / std::sqrt(grid.dx());
    for (std::size_t j = 0; j < grid.size(); ++j)
      psi[j] = vectors(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(k)) * scale;
    return psi;
  }
};

inline SpectralDecomposition diagonalize(const DiscreteHamiltonian& h) {
  const auto off = h.off_diagonal();
  auto eig = linalg::tridiagonal_eigensystem(h.diagonal, off);
  return SpectralDecomposition{h.grid, std::move(eig.values), std::move(eig.vectors)};
}

/// Only the lowest `count` eigenpairs.
inline SpectralDecomposition lowest_states(const DiscreteHamiltonian& h, std::size_t count) {
  require(count >= 1 && count <= h.size(), ErrorKind::invalid_argument,
          "requested eigenpair count out of range");
  const auto off = h.off_diagonal();
  auto eig = linalg::tridiagonal_eigenpairs(h.diagonal, off, 0, static_cast<int>(count) - 1);
  return SpectralDecomposition{h.grid, std::move(eig.values), std::move(eig.vectors)};
}

/// Eigenpairs with energies in (lower, upper]; a partial decomposition.
inline SpectralDecomposition states_in_window(const DiscreteHamiltonian& h, double lower,
                                              double upper) {
  const auto off = h.off_diagonal();
  auto eig = linalg::tridiagonal_eigenpairs_in(h.diagonal, off, lower, upper);
  return SpectralDecomposition{h.grid, std::move(eig.values), std::move(eig.vectors)};
}

inline std::vector<double> eigenvalues(const DiscreteHamiltonian& h) {
  const auto off = h.off_diagonal();
  return linalg::tridiagonal_eigenvalues(h.diagonal, off);
}

/// Discrete ground state of the untilted well; the reference initial state.
inline WaveFunction discrete_ground_state(const Grid& grid, const model::PhysicalParams& params,
                                          int level = 0) {
  const auto h = build_hamiltonian(grid, model::PotentialSpec{params, 0.0});
  auto decomp = lowest_states(h, static_cast<std::size_t>(level) + 1);
  auto psi = decomp.state(static_cast<std::size_t>(level));
  // same sign convention as the analytic states
  const auto ref = model::bound_state_wavefunction(params, level, grid);
  if (std::real(psi.overlap(ref)) < 0.0)
    for (auto& z : psi.values()) z = -z;
  return psi;
}

struct DiagramRow {
  double acceleration;
  std::vector<double> energies;  // lowest k_max levels
};

inline std::vector<DiagramRow> energy_diagram(const model::PhysicalParams& params,
                                              std::span<const double> accelerations,
                                              const Grid& grid, std::size_t k_max) {
  require(k_max >= 1 && k_max <= grid.size(), ErrorKind::invalid_argument,
          "k_max out of range for grid");
  std::vector<DiagramRow> rows;
  rows.reserve(accelerations.size());
  for (double a : accelerations) {
    require(std::isfinite(a), ErrorKind::invalid_argument, "acceleration must be finite");
    const auto h = build_hamiltonian(grid, model::PotentialSpec{params, a});
    const auto off = h.off_diagonal();
    auto eig = linalg::tridiagonal_eigenpairs(h.diagonal, off, 0, static_cast<int>(k_max) - 1);
    rows.push_back({a, std::move(eig.values)});
  }
  return rows;
}

/// d_k = <k|psi> for every level of a decomposition.
struct OverlapCoefficients {
  std::vector<double> energies;
  std::vector<cplx> amplitudes;

  std::vector<double> weights() const {
    std::vector<double> w(amplitudes.size());
    for (std::size_t k = 0; k < w.size(); ++k) w[k] = std::norm(amplitudes[k]);
    return w;
  }
  double total_weight() const {
    double s = 0.0;
    for (const auto& d : amplitudes) s += std::norm(d);
    return s;
  }
};

inline OverlapCoefficients expansion_coefficients(const WaveFunction& state,
                                                  const SpectralDecomposition& decomp) {
  require(state.grid().same_as(decomp.grid), ErrorKind::dimension,
          "state and decomposition live on different grids");
  const auto n = static_cast<Eigen::Index>(state.size());
  Eigen::VectorXd re(n), im(n);
  for (Eigen::Index j = 0; j < n; ++j) {
    re[j] = state[static_cast<std::size_t>(j)].real();
    im[j] = state[static_cast<std::size_t>(j)].imag();
  }
  const double scale = std::sqrt(state.grid().dx());
  const Eigen::VectorXd cr = decomp.vectors.transpose() * re;
  const Eigen::VectorXd ci = decomp.vectors.transpose() * im;
  OverlapCoefficients out;
  out.energies = decomp.energies;
  out.amplitudes.resize(static_cast<std::size_t>(cr.size()));
  for (Eigen::Index k = 0; k < cr.size(); ++k)
    out.amplitudes[static_cast<std::size_t>(k)] = scale * cplx{cr[k], ci[k]};
  return out;
}

/// p(t) = |sum_k |d_k|^2 exp(-i E_k t / hbar)|^2
inline std::vector<double> dephasing_survival(const OverlapCoefficients& coeffs,
                                              std::span<const double> times, double hbar = 1.0) {
  const auto w = coeffs.weights();
  std::vector<double> p(times.size());
  for (std::size_t i = 0; i < times.size(); ++i) {
    cplx acc{0.0, 0.0};
    for (std::size_t k = 0; k < w.size(); ++k)
      if (w[k] != 0.0) acc += w[k] * std::polar(1.0, -coeffs.energies[k] * times[i] / hbar);
    p[i] = std::min(1.0, std::norm(acc));
  }
  return p;
}

/// The same quantity written as sum |d_k|^4 + 2 sum_{k<l} |d_k|^2 |d_l|^2 cos((E_k - E_l) t).
/// Quadratic in the level count; for cross-checks only.
inline std::vector<double> dephasing_survival_double_sum(const OverlapCoefficients& coeffs,
                                                         std::span<const double> times,
                                                         double hbar = 1.0) {
  const auto w = coeffs.weights();
  std::vector<double> p(times.size());
  for (std::size_t i = 0; i < times.size(); ++i) {
    double acc = 0.0;
    for (std::size_t k = 0; k < w.size(); ++k) {
      acc += w[k] * w[k];
      for (std::size_t l = k + 1; l < w.size(); ++l)
        acc += 2.0 * w[k] * w[l] *
               std::cos((coeffs.energies[k] - coeffs.energies[l]) * times[i] / hbar);
    }
    p[i] = acc;
  }
  return p;
}

/// |psi(t)|^2 summed over the points within `layer` steps of either wall,
/// times dx. psi(t) is rebuilt only on those rows.
inline std::vector<double> boundary_weight_series(const OverlapCoefficients& coeffs,
                                                  const SpectralDecomposition& decomp,
                                                  std::span<const double> times,
                                                  double hbar = 1.0, std::size_t layer = 5) {
  const std::size_t n = decomp.grid.size();
  std::vector<std::size_t> rows;
  for (std::size_t j = 0; j < std::min(layer, n); ++j) {
    rows.push_back(j);
    if (n - 1 - j >= layer) rows.push_back(n - 1 - j);
  }
  const std::size_t levels = coeffs.amplitudes.size();
  std::vector<double> out(times.size());
  std::vector<cplx> phased(levels);
  for (std::size_t i = 0; i < times.size(); ++i) {
    for (std::size_t k = 0; k < levels; ++k)
      phased[k] = coeffs.amplitudes[k] * std::polar(1.0, -coeffs.energies[k] * times[i] / hbar);
    double acc = 0.0;
    for (auto j : rows) {
      cplx v{0.0, 0.0};
      for (std::size_t k = 0; k < levels; ++k)
        v += decomp.vectors(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(k)) * phased[k];
      acc += std::norm(v);  // columns are Euclidean-normalized, so this is already |psi|^2 dx
    }
    out[i] = acc;
  }
  return out;
}

inline constexpr double kReflectionThreshold = 1e-4;
inline constexpr double kTransientLogDrop = 0.5;

/// First sample time whose boundary weight exceeds the threshold.
inline std::optional<double> first_crossing(std::span<const double> times,
                                            std::span<const double> weights,
                                            double threshold = kReflectionThreshold) {
  for (std::size_t i = 0; i < times.size() && i < weights.size(); ++i)
    if (weights[i] > threshold) return times[i];
  return std::nullopt;
}

/// Starts once -ln p exceeds 0.1 and ends at the reflection time (or the end
/// of the series).
inline fit::FitWindow relaxation_window(std::span<const double> times, std::span<const double> p,
                                        std::optional<double> reflection) {
  require(!times.empty() && times.size() == p.size(), ErrorKind::dimension,
          "times/p size mismatch");
  double start = times.back();
  for (std::size_t i = 0; i < times.size(); ++i) {
    if (p[i] > 0.0 && -std::log(p[i]) > kTransientLogDrop) {
      start = times[i];
      break;
    }
  }
  const double end = reflection ? *reflection : times.back();
  if (!(end > start))
    fail(ErrorKind::fit_domain, "no decay before reflection: window start " +
                                    std::to_string(start) + " >= end " + std::to_string(end));
  return {start, end};
}

struct RelaxationResult {
  std::vector<double> times;
  std::vector<double> survival;
  std::vector<double> boundary_weight;
  std::optional<double> reflection_time;
  fit::DecayFit fit;
  OverlapCoefficients coefficients;
};

/// Sudden switch-on of the slope m*a: the a = 0 discrete ground state is
/// expanded in the tilted eigenbasis and left to dephase.
inline RelaxationResult relaxation_run(const model::PhysicalParams& params, double acceleration,
                                       const Grid& grid, double t_max, double dt,
                                       fit::DecayForm form = fit::DecayForm::pure) {
  require(t_max > 0.0 && dt > 0.0, ErrorKind::invalid_argument, "t_max and dt must be positive");
  const auto psi0 = discrete_ground_state(grid, params);
  const auto decomp = diagonalize(build_hamiltonian(grid, model::PotentialSpec{params, acceleration}));
  RelaxationResult out;
  out.coefficients = expansion_coefficients(psi0, decomp);
  const auto steps = static_cast<std::size_t>(std::llround(t_max / dt));
  out.times.resize(steps + 1);
  for (std::size_t i = 0; i <= steps; ++i) out.times[i] = static_cast<double>(i) * dt;
  out.survival = dephasing_survival(out.coefficients, out.times, params.hbar);
  out.boundary_weight = boundary_weight_series(out.coefficients, decomp, out.times, params.hbar);
  out.reflection_time = first_crossing(out.times, out.boundary_weight);
  const auto window = relaxation_window(out.times, out.survival, out.reflection_time);
  out.fit = fit::fit_exponential(out.times, out.survival, window, form);
  return out;
}

}  // namespace conveyance::spectral

#endif  // CONVEYANCE_SPECTRAL_HPP
