#ifndef CONVEYANCE_RESONANCE_HPP
#define CONVEYANCE_RESONANCE_HPP

// Siegert resonance states of the tilted well on a finite lattice.
//
// Outside the box the lattice equation with a pure linear potential,
//   -t (Phi_{j+1} - 2 Phi_j + Phi_{j-1}) + m a dx j Phi_j = E Phi_j,
// is the Bessel recurrence C_{nu-1}(sigma) + C_{nu+1}(sigma) = (2 nu/sigma) C_nu(sigma)
// with nu_j = j + sigma (1 - E/2t), sigma = 2t/(m a dx). The decaying (right)
// and outgoing (left) exterior solutions enter the interior problem as
// energy-dependent boundary potentials, and E is found self-consistently.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <gsl/gsl_multimin.h>

#include "conveyance/core_model.hpp"
#include "conveyance/error.hpp"
#include "conveyance/semiclassics.hpp"
#include "conveyance/special_functions.hpp"
#include "conveyance/spectral.hpp"
#include "conveyance/tridiagonal.hpp"
#include "conveyance/wavefunction.hpp"

namespace conveyance::resonance {

enum class Side { left, right };

struct ExteriorClosure {
  Side side;
  cplx ratio;  // Phi_{outside neighbour} / Phi_{boundary}
  cplx v_eff;  // -t_hop * ratio
};

struct OrderAndArgument {
  cplx nu;
  double sigma;
};

inline void require_slope(const model::PotentialSpec& spec) {
  if (spec.acceleration == 0.0) fail(ErrorKind::no_slope, "resonance exterior needs a != 0");
  require(spec.acceleration > 0.0, ErrorKind::invalid_argument,
          "resonance exterior is built for a > 0 (mirror the problem for a < 0)");
}

/// nu at lattice position x (= j dx) and the common Bessel argument sigma.
inline OrderAndArgument nu_sigma(double x, cplx energy, const model::PotentialSpec& spec,
                                 const Grid& grid) {
  require_slope(spec);
  const double t = spectral::hopping(spec.params.mass, grid.dx(), spec.params.hbar);
  const double sigma = 2.0 * t / (spec.slope() * grid.dx());
  return {x / grid.dx() + sigma * (1.0 - energy / (2.0 * t)), sigma};
}

/// Minimal (decaying) exterior solution on the ramp side, by the backward
/// continued fraction r_{j-1} = 1 / (2 nu_j / sigma - r_j), deepened until the
/// boundary ratio is stable to 1e-12.
inline ExteriorClosure right_closure(cplx energy, const model::PotentialSpec& spec,
                                     const Grid& grid) {
  const auto base = nu_sigma(grid.x_max(), energy, spec, grid);
  const double t = spectral::hopping(spec.params.mass, grid.dx(), spec.params.hbar);
  auto fraction = [&](std::size_t depth) {
    cplx r{0.0, 0.0};
    for (std::size_t k = depth; k >= 1; --k) {
      const cplx nu = base.nu + static_cast<double>(k);
      r = 1.0 / (2.0 * nu / base.sigma - r);
    }
    return r;  // Phi_{J+1} / Phi_J at the last interior point J
  };
  std::size_t depth = 32;
  cplx prev = fraction(depth);
  while (depth < (std::size_t{1} << 24)) {
    depth *= 2;
    const cplx cur = fraction(depth);
    if (std::abs(cur - prev) <= 1e-12 * std::max(1.0, std::abs(cur)))
      return {Side::right, cur, -t * cur};
    prev = cur;
  }
  throw NumericFailure("right continued fraction did not converge",
                       static_cast<long>(depth));
}

/// Outgoing exterior solution on the open side: H1_{nu_{J-1}}(sigma)/H1_{nu_J}(sigma)
/// at the first interior point J.
inline ExteriorClosure left_closure(cplx energy, const model::PotentialSpec& spec,
                                    const Grid& grid) {
  const auto base = nu_sigma(grid.x_min(), energy, spec, grid);
  const double t = spectral::hopping(spec.params.mass, grid.dx(), spec.params.hbar);
  const cplx r = special::hankel1_ratio(base.nu, base.sigma);
  return {Side::left, r, -t * r};
}

/// Closure built from H2 instead of H1 (incoming wave); used for symmetry checks.
inline ExteriorClosure left_closure_incoming(cplx energy, const model::PotentialSpec& spec,
                                             const Grid& grid) {
  const auto base = nu_sigma(grid.x_min(), energy, spec, grid);
  const double t = spectral::hopping(spec.params.mass, grid.dx(), spec.params.hbar);
  const cplx r = special::hankel2_ratio(base.nu, base.sigma);
  return {Side::left, r, -t * r};
}

/// Complex symmetric tridiagonal interior Hamiltonian at trial energy E.
struct InteriorMatrix {
  double t_hop;
  std::vector<cplx> diagonal;
};

inline InteriorMatrix interior_matrix(cplx energy, const model::PotentialSpec& spec,
                                      const Grid& grid, bool open = true) {
  const auto h = spectral::build_hamiltonian(grid, spec);
  InteriorMatrix m{h.t_hop, std::vector<cplx>(h.diagonal.begin(), h.diagonal.end())};
  if (open) {
    m.diagonal.front() += left_closure(energy, spec, grid).v_eff;
    m.diagonal.back() += right_closure(energy, spec, grid).v_eff;
  }
  return m;
}

inline Eigen::MatrixXcd dense(const InteriorMatrix& m) {
  const auto n = static_cast<Eigen::Index>(m.diagonal.size());
  Eigen::MatrixXcd h = Eigen::MatrixXcd::Zero(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    h(j, j) = m.diagonal[static_cast<std::size_t>(j)];
    if (j + 1 < n) h(j, j + 1) = h(j + 1, j) = -m.t_hop;
  }
  return h;
}

/// Full interior spectrum (dense; for diagnostics and small grids).
inline std::vector<cplx> interior_spectrum(const InteriorMatrix& m) {
  Eigen::ComplexEigenSolver<Eigen::MatrixXcd> solver(dense(m), false);
  require(solver.info() == Eigen::Success, ErrorKind::numeric_failure,
          "complex eigensolver failed");
  std::vector<cplx> out(solver.eigenvalues().begin(), solver.eigenvalues().end());
  std::sort(out.begin(), out.end(), [](cplx a, cplx b) { return a.real() < b.real(); });
  return out;
}

struct InteriorEigenpair {
  cplx value;
  std::vector<cplx> vector;  // unit Euclidean norm
  int iterations;
};

/// Eigenvalue of the interior matrix nearest `shift`, by inverse iteration
/// followed by Rayleigh-quotient refinement. The quotient is the bilinear
/// x^T H x / x^T x appropriate to complex symmetric matrices.
inline InteriorEigenpair nearest_eigenpair(const InteriorMatrix& m, cplx shift,
                                           int max_iterations = 200) {
  const std::size_t n = m.diagonal.size();
  std::vector<cplx> x(n), y(n), diag(n), scratch(n);
  for (std::size_t j = 0; j < n; ++j) x[j] = 1.0 / std::sqrt(static_cast<double>(n));
  const cplx off{-m.t_hop, 0.0};
  auto apply = [&](const std::vector<cplx>& v) {
    std::vector<cplx> out(n);
    for (std::size_t j = 0; j < n; ++j) {
      cplx acc = m.diagonal[j] * v[j];
      if (j > 0) acc += off * v[j - 1];
      if (j + 1 < n) acc += off * v[j + 1];
      out[j] = acc;
    }
    return out;
  };
  auto bilinear = [&](const std::vector<cplx>& a, const std::vector<cplx>& b) {
    cplx acc{0.0, 0.0};
    for (std::size_t j = 0; j < n; ++j) acc += a[j] * b[j];
    return acc;
  };
  auto normalize = [&](std::vector<cplx>& v) {
    double s = 0.0;
    for (const auto& z : v) s += std::norm(z);
    s = std::sqrt(s);
    for (auto& z : v) z /= s;
  };

  cplx sigma = shift;
  cplx lambda = shift;
  double scale = 0.0;
  for (const auto& d : m.diagonal) scale = std::max(scale, std::abs(d) + 2.0 * m.t_hop);
  for (int it = 1; it <= max_iterations; ++it) {
    for (std::size_t j = 0; j < n; ++j) diag[j] = m.diagonal[j] - sigma;
    y = x;
    try {
      linalg::solve_tridiagonal<cplx>(off, diag, y, scratch);
    } catch (const NumericFailure&) {
      // shift landed on an eigenvalue; nudge it
      sigma += cplx{1e-12, 1e-12} * std::max(1.0, std::abs(sigma));
      continue;
    }
    normalize(y);
    x = y;
    const auto hx = apply(x);
    const cplx xx = bilinear(x, x);
    if (std::abs(xx) < 1e-300) throw NumericFailure("degenerate bilinear norm", it);
    lambda = bilinear(x, hx) / xx;
    double res = 0.0;
    for (std::size_t j = 0; j < n; ++j) res += std::norm(hx[j] - lambda * x[j]);
    res = std::sqrt(res);
    if (res <= 1e-13 * scale) return {lambda, x, it};
    // a few fixed-shift sweeps to lock on, then Rayleigh updates
    if (it >= 3) sigma = lambda;
  }
  throw NumericFailure("inverse iteration stagnated near shift (" + std::to_string(sigma.real()) +
                           ", " + std::to_string(sigma.imag()) + ")",
                       max_iterations);
}

/// e_k(E): the interior eigenvalue nearest E with closures evaluated at E.
inline InteriorEigenpair interior_eigensolve(cplx guess, const model::PotentialSpec& spec,
                                             const Grid& grid) {
  return nearest_eigenpair(interior_matrix(guess, spec, grid), guess);
}

struct ResonanceState {
  cplx energy;
  double gamma = 0.0;  // -2 Im E / hbar
  double residual = 0.0;
  int iterations = 0;
  std::string method;
  WaveFunction vector;

  /// Discrete probability current between the first two grid points.
  double left_current(double mass, double hbar = 1.0) const {
    const double dx = vector.grid().dx();
    return hbar / (mass * dx) * std::imag(std::conj(vector[0]) * vector[1]);
  }
};

struct SolveOptions {
  int fixed_point_iterations = 60;
  std::size_t max_evaluations = 500;
  double tolerance = 1e-10;
  /// Solutions with more weight than this on the five outermost points at
  /// either end are surface states of the exterior closure.
  double max_edge_weight = 0.2;
};

namespace detail {
struct MinimizerContext {
  const model::PotentialSpec* spec;
  const Grid* grid;
  std::size_t evaluations = 0;
  double best = std::numeric_limits<double>::infinity();
  cplx best_energy{};
};

inline double residual_fn(const gsl_vector* v, void* params) {
  auto* ctx = static_cast<MinimizerContext*>(params);
  ++ctx->evaluations;
  const cplx e{gsl_vector_get(v, 0), gsl_vector_get(v, 1)};
  try {
    const auto pair = interior_eigensolve(e, *ctx->spec, *ctx->grid);
    const double r = std::abs(pair.value - e);
    if (r < ctx->best) {
      ctx->best = r;
      ctx->best_energy = e;
    }
    return r;
  } catch (const Error&) {
    return 1e6;
  }
}
}  // namespace detail

/// Solves e_k(E) = E, first by fixed-point iteration, then by Nelder-Mead on
/// |e_k(E) - E| over (Re E, Im E).
inline ResonanceState solve_resonance(cplx e0, const model::PotentialSpec& spec, const Grid& grid,
                                      const SolveOptions& options = {}) {
  require_slope(spec);
  const double hbar = spec.params.hbar;
  auto finish = [&](cplx e, double residual, int iterations, const char* method) {
    const auto pair = interior_eigensolve(e, spec, grid);
    WaveFunction psi(grid, pair.vector);
    psi.normalize();
    // fix the global phase: real and positive at the amplitude maximum
    std::size_t peak = 0;
    for (std::size_t j = 0; j < psi.size(); ++j)
      if (std::abs(psi[j]) > std::abs(psi[peak])) peak = j;
    const cplx phase = std::abs(psi[peak]) / psi[peak];
    for (auto& z : psi.values()) z *= phase;
    double edge = 0.0;
    for (std::size_t j = 0; j < std::min<std::size_t>(5, psi.size() / 2); ++j)
      edge += (std::norm(psi[j]) + std::norm(psi[psi.size() - 1 - j])) * grid.dx();
    if (edge > options.max_edge_weight)
      throw Error(ErrorKind::no_resonance,
                  "solution at E = (" + std::to_string(pair.value.real()) + ", " +
                      std::to_string(pair.value.imag()) + ") is a boundary state of the closure (edge weight " +
                      std::to_string(edge) + ")");
    return ResonanceState{pair.value, -2.0 * pair.value.imag() / hbar, residual, iterations,
                          method, std::move(psi)};
  };

  cplx e = e0;
  double residual = std::numeric_limits<double>::infinity();
  int iterations = 0;
  for (int it = 1; it <= options.fixed_point_iterations; ++it) {
    iterations = it;
    try {
      const auto pair = interior_eigensolve(e, spec, grid);
      residual = std::abs(pair.value - e);
      e = pair.value;
    } catch (const Error&) {
      break;
    }
    if (residual <= options.tolerance) {
      // one more evaluation at the converged point for the reported residual
      const auto check = interior_eigensolve(e, spec, grid);
      const double r = std::abs(check.value - e);
      if (r <= options.tolerance) return finish(e, r, iterations, "fixed-point");
    }
    if (!std::isfinite(residual)) break;
  }

  detail::MinimizerContext ctx{&spec, &grid};
  gsl_multimin_function fn{&detail::residual_fn, 2, &ctx};
  gsl_vector* x = gsl_vector_alloc(2);
  gsl_vector* step = gsl_vector_alloc(2);
  const cplx start = std::isfinite(e.real()) ? e : e0;
  gsl_vector_set(x, 0, start.real());
  gsl_vector_set(x, 1, start.imag());
  const double s = std::max(1e-3, 0.1 * std::abs(start.imag()));
  gsl_vector_set_all(step, s);
  gsl_multimin_fminimizer* solver =
      gsl_multimin_fminimizer_alloc(gsl_multimin_fminimizer_nmsimplex2, 2);
  gsl_multimin_fminimizer_set(solver, &fn, x, step);
  while (ctx.evaluations < options.max_evaluations) {
    if (gsl_multimin_fminimizer_iterate(solver) != GSL_SUCCESS) break;
    if (solver->fval <= options.tolerance) break;
    if (gsl_multimin_fminimizer_size(solver) < 1e-15) break;
  }
  const cplx best{gsl_vector_get(solver->x, 0), gsl_vector_get(solver->x, 1)};
  const double fbest = solver->fval;
  gsl_multimin_fminimizer_free(solver);
  gsl_vector_free(x);
  gsl_vector_free(step);
  const cplx chosen = fbest <= ctx.best ? best : ctx.best_energy;
  const double r = std::min(fbest, ctx.best);
  if (r > options.tolerance)
    throw NumericFailure("resonance residual " + std::to_string(r) + " above tolerance at E = (" +
                             std::to_string(chosen.real()) + ", " + std::to_string(chosen.imag()) +
                             ")",
                         static_cast<long>(ctx.evaluations));
  return finish(chosen, r, iterations + static_cast<int>(ctx.evaluations), "nelder-mead");
}

/// Real part from the metastable branch of the closed-box spectrum (the level
/// with the largest overlap with the untilted ground state), imaginary part
/// -gamma_hint/2 or -0.05.
inline cplx default_guess(const model::PotentialSpec& spec, const Grid& grid,
                          std::optional<double> gamma_hint = std::nullopt) {
  const auto psi0 = spectral::discrete_ground_state(grid, spec.params);
  const auto h = spectral::build_hamiltonian(grid, spec);
  const auto e0 = model::bound_state_energies(spec.params).front();
  const auto window = spectral::states_in_window(h, e0 - 0.5 * spec.params.depth,
                                                 e0 + 0.5 * spec.params.depth);
  double re = e0;
  if (window.size() > 0) {
    const auto c = spectral::expansion_coefficients(psi0, window);
    const auto w = c.weights();
    const auto k = static_cast<std::size_t>(std::max_element(w.begin(), w.end()) - w.begin());
    re = c.energies[k];
  }
  const double im = gamma_hint && *gamma_hint > 0.0 ? -0.5 * *gamma_hint : -0.05;
  return {re, im};
}

/// Airy rate of the lowest level when it lies below the barrier top.
inline std::optional<double> wkb_gamma_hint(const model::PotentialSpec& spec) {
  try {
    const auto land = semiclassics::tilted_landscape(semiclassics::mirror_for_wkb(spec));
    const auto level = semiclassics::quantize(land, 0, semiclassics::Connection::airy);
    if (level.S > 0.0 && std::isfinite(level.gamma_airy)) return level.gamma_airy;
  } catch (const Error&) {
  }
  return std::nullopt;
}

}  // namespace conveyance::resonance

#endif  // CONVEYANCE_RESONANCE_HPP
