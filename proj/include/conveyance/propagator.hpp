#ifndef CONVEYANCE_PROPAGATOR_HPP
#define CONVEYANCE_PROPAGATOR_HPP

// Crank-Nicolson time stepping in the frame co-moving with the trap.
//
// In that frame the Hamiltonian is p^2/2m + V(x) + m a(t) x; the x-independent
// term -m v(t)^2 / 2 only contributes a global phase and is dropped. An
// optional quadratic absorbing layer removes outgoing probability.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "conveyance/core_model.hpp"
#include "conveyance/error.hpp"
#include "conveyance/fitting.hpp"
#include "conveyance/spectral.hpp"
#include "conveyance/tridiagonal.hpp"
#include "conveyance/wavefunction.hpp"

namespace conveyance::propagate {

enum class AbsorberSide { left, right, both };

inline AbsorberSide parse_side(const std::string& s) {
  if (s == "left") return AbsorberSide::left;
  if (s == "right") return AbsorberSide::right;
  if (s == "both") return AbsorberSide::both;
  fail(ErrorKind::config, "unknown absorber side '" + s + "'");
}

inline const char* to_string(AbsorberSide s) {
  switch (s) {
    case AbsorberSide::left: return "left";
    case AbsorberSide::right: return "right";
    case AbsorberSide::both: return "both";
  }
  return "both";
}

/// -i v_ab ((x - x_min - w_ab)/w_ab)^2 on [x_min, x_min + w_ab), mirrored on
/// the right edge when requested.
struct AbsorbingPotential {
  double strength = 0.0;  // v_ab
  double width = 1.0;     // w_ab
  AbsorberSide side = AbsorberSide::left;

  void validate(const Grid& grid) const {
    require(strength >= 0.0 && std::isfinite(strength), ErrorKind::invalid_argument,
            "absorber strength must be >= 0");
    require(width > 0.0, ErrorKind::invalid_argument, "absorber width must be > 0");
    const double span = grid.x_max() - grid.x_min();
    const double needed = side == AbsorberSide::both ? 2.0 * width : width;
    require(needed < span, ErrorKind::invalid_argument, "absorber wider than the domain");
  }

  cplx operator()(const Grid& grid, double x) const {
    double s = 0.0;
    if (side != AbsorberSide::right && x < grid.x_min() + width) {
      const double u = (x - grid.x_min() - width) / width;
      s += u * u;
    }
    if (side != AbsorberSide::left && x > grid.x_max() - width) {
      const double u = (x - grid.x_max() + width) / width;
      s += u * u;
    }
    return {0.0, -strength * s};
  }
};

struct TimeGrid {
  double dt = 0.1;
  std::size_t n_steps = 0;

  void validate() const {
    require(dt > 0.0 && std::isfinite(dt), ErrorKind::invalid_argument, "dt must be positive");
  }
  double duration() const noexcept { return dt * static_cast<double>(n_steps); }
};

/// Trap kinematics seen by the moving frame.
struct Drive {
  std::function<double(double)> acceleration;  // a(t) = x0''(t)
  std::function<double(double)> velocity;      // v(t) = x0'(t)

  static Drive constant(double a) {
    return {[a](double) { return a; }, [a](double t) { return a * t; }};
  }
  static Drive at_rest() { return constant(0.0); }
};

/// One Crank-Nicolson step
///   (1 + i dt/2hbar H_{n+1}) psi' = (1 - i dt/2hbar H_n) psi
/// with H_n = T + V_n. Potentials may be complex.
class CrankNicolson {
 public:
  CrankNicolson(const Grid& grid, double mass, double hbar, double dt,
                double energy_reference = 0.0)
      : grid_(grid), hbar_(hbar), dt_(dt), e_ref_(energy_reference),
        t_hop_(hbar * hbar / (2.0 * mass * grid.dx() * grid.dx())),
        diag_(grid.size()), rhs_(grid.size()), scratch_(grid.size()) {
    require(mass > 0.0 && hbar > 0.0, ErrorKind::invalid_argument, "mass and hbar must be > 0");
    require(dt > 0.0, ErrorKind::invalid_argument, "dt must be positive");
  }

  double t_hop() const noexcept { return t_hop_; }
  double dt() const noexcept { return dt_; }

  void step(std::span<cplx> psi, std::span<const cplx> v_now, std::span<const cplx> v_next) {
    const std::size_t n = grid_.size();
    require(psi.size() == n && v_now.size() == n && v_next.size() == n, ErrorKind::dimension,
            "CN step: potential/state size mismatch");
    const cplx beta{0.0, dt_ / (2.0 * hbar_)};  // i dt / 2hbar
    const cplx off = -beta * t_hop_;              // coefficient of psi_{j+-1} in (1 + beta H)
    for (std::size_t j = 0; j < n; ++j) {
      const cplx h_now = 2.0 * t_hop_ + v_now[j] - e_ref_;
      const cplx h_next = 2.0 * t_hop_ + v_next[j] - e_ref_;
      cplx r = (1.0 - beta * h_now) * psi[j];
      if (j > 0) r -= off * psi[j - 1];
      if (j + 1 < n) r -= off * psi[j + 1];
      rhs_[j] = r;
      diag_[j] = 1.0 + beta * h_next;
    }
    linalg::solve_tridiagonal<cplx>(off, diag_, rhs_, scratch_);
    std::copy(rhs_.begin(), rhs_.end(), psi.begin());
  }

 private:
  Grid grid_;
  double hbar_;
  double dt_;
  double e_ref_;
  double t_hop_;
  std::vector<cplx> diag_;
  std::vector<cplx> rhs_;
  std::vector<cplx> scratch_;
};

/// Free-function form of a single step.
inline WaveFunction cn_step(const WaveFunction& psi, std::span<const cplx> v_now,
                            std::span<const cplx> v_next, double dt, double mass,
                            double hbar = 1.0) {
  CrankNicolson cn(psi.grid(), mass, hbar, dt);
  WaveFunction out(psi);
  cn.step(out.values(), v_now, v_next);
  return out;
}

struct Snapshot {
  double time;
  WaveFunction state;
};

struct Trajectory {
  std::vector<double> times;
  std::vector<double> p;               // |<Phi(0)|Phi(t)>|^2
  std::vector<double> P;               // rest-frame survival
  std::vector<double> norm;            // <Phi(t)|Phi(t)>
  std::vector<double> boundary_weight; // within 5 dx of either wall
  std::vector<Snapshot> snapshots;
  std::optional<WaveFunction> final_state;

  std::size_t index_of(double t) const {
    require(!times.empty(), ErrorKind::range, "empty trajectory");
    const auto it = std::lower_bound(times.begin(), times.end(), t - 1e-9);
    require(it != times.end() && std::abs(*it - t) <= 1e-6 * std::max(1.0, std::abs(t)),
            ErrorKind::range, "time " + std::to_string(t) + " is not a stored sample");
    return static_cast<std::size_t>(it - times.begin());
  }
};

inline double survival_p(const Trajectory& tr, double t) { return tr.p[tr.index_of(t)]; }
inline double survival_P_rest(const Trajectory& tr, double t) { return tr.P[tr.index_of(t)]; }

inline constexpr double kBoundaryThreshold = 1e-4;
inline constexpr std::size_t kBoundaryLayer = 5;

/// First stored time at which the weight near either wall exceeds 1e-4.
inline std::optional<double> reflection_monitor(const Trajectory& tr,
                                                double threshold = kBoundaryThreshold) {
  for (std::size_t i = 0; i < tr.times.size() && i < tr.boundary_weight.size(); ++i)
    if (tr.boundary_weight[i] > threshold) return tr.times[i];
  return std::nullopt;
}

inline double boundary_weight(std::span<const cplx> psi, double dx,
                              std::size_t layer = kBoundaryLayer) {
  const std::size_t n = psi.size();
  double acc = 0.0;
  for (std::size_t j = 0; j < std::min(layer, n); ++j) {
    acc += std::norm(psi[j]);
    if (n - 1 - j >= layer) acc += std::norm(psi[n - 1 - j]);
  }
  return acc * dx;
}

struct PropagationOptions {
  std::size_t snapshot_stride = 100;  // 0 disables snapshots
  std::size_t record_stride = 1;      // p, P, norm sampling
  double start_time = 0.0;
  /// Subtracted from H; changes only a global phase in exact dynamics but
  /// reduces Cayley phase error for states near this energy.
  double energy_reference = 0.0;
  bool keep_final_state = true;
  /// Reference for p(t); defaults to the initial state.
  std::optional<WaveFunction> reference{};
  /// Called after every recorded sample with (time, state).
  std::function<void(double, const WaveFunction&)> observer{};
};

/// Moving-frame propagation under V(x) + m a(t) x (+ absorber).
///
/// P(t) is |<Phi(0)| exp(i m (v(t) - v(0)) x / hbar) |Phi(t)>|^2, the rest-frame
/// survival relative to the frame in which Phi(0) was prepared.
inline Trajectory propagate_moving_frame(const WaveFunction& initial, const Drive& drive,
                                         const model::PhysicalParams& params,
                                         const TimeGrid& time_grid,
                                         const std::optional<AbsorbingPotential>& absorber = {},
                                         const PropagationOptions& options = {}) {
  params.validate();
  time_grid.validate();
  const Grid& grid = initial.grid();
  if (absorber) absorber->validate(grid);
  require(options.record_stride >= 1, ErrorKind::invalid_argument, "record stride must be >= 1");
  const std::size_t n = grid.size();
  const double m = params.mass, hbar = params.hbar, dx = grid.dx();

  std::vector<cplx> base(n);
  std::vector<double> xs = grid.points();
  for (std::size_t j = 0; j < n; ++j) {
    base[j] = model::well_potential(params, xs[j]);
    if (absorber) base[j] += (*absorber)(grid, xs[j]);
  }
  auto potential_at = [&](double t, std::vector<cplx>& out) {
    const double slope = m * drive.acceleration(t);
    for (std::size_t j = 0; j < n; ++j) out[j] = base[j] + slope * xs[j];
  };

  const WaveFunction reference = options.reference ? *options.reference : initial;
  require(reference.grid().same_as(grid), ErrorKind::dimension, "reference on a different grid");
  const double v0 = drive.velocity(options.start_time);

  Trajectory tr;
  WaveFunction psi(initial);
  auto record = [&](double t) {
    const auto ov = reference.overlap(psi);
    tr.times.push_back(t);
    tr.p.push_back(std::norm(ov));
    const double k = m * (drive.velocity(t) - v0) / hbar;
    double P;
    if (k == 0.0) {
      P = std::norm(ov);
    } else {
      cplx acc{0.0, 0.0};
      const auto r = reference.values();
      const auto s = psi.values();
      for (std::size_t j = 0; j < n; ++j) acc += std::conj(r[j]) * std::polar(1.0, k * xs[j]) * s[j];
      P = std::norm(acc * dx);
    }
    tr.P.push_back(P);
    tr.norm.push_back(norm_squared(psi.values(), dx));
    tr.boundary_weight.push_back(boundary_weight(psi.values(), dx));
    if (options.observer) options.observer(t, psi);
  };

  CrankNicolson cn(grid, m, hbar, time_grid.dt, options.energy_reference);
  std::vector<cplx> v_now(n), v_next(n);
  double t = options.start_time;
  potential_at(t, v_now);
  record(t);
  if (options.snapshot_stride > 0) tr.snapshots.push_back({t, psi});

  for (std::size_t step = 1; step <= time_grid.n_steps; ++step) {
    const double t_next = options.start_time + static_cast<double>(step) * time_grid.dt;
    potential_at(t_next, v_next);
    cn.step(psi.values(), v_now, v_next);
    std::swap(v_now, v_next);
    t = t_next;
    if (step % options.record_stride == 0 || step == time_grid.n_steps) record(t);
    if (options.snapshot_stride > 0 && step % options.snapshot_stride == 0)
      tr.snapshots.push_back({t, psi});
  }
  if (options.keep_final_state) tr.final_state = std::move(psi);
  return tr;
}

/// Propagation at constant slope m a from a rest-frame state, used for the
/// absorbing-boundary estimate of the decay rate.
inline Trajectory propagate_constant_slope(const WaveFunction& initial,
                                           const model::PotentialSpec& spec,
                                           const TimeGrid& time_grid,
                                           const std::optional<AbsorbingPotential>& absorber = {},
                                           PropagationOptions options = {}) {
  return propagate_moving_frame(initial, Drive::constant(spec.acceleration), spec.params,
                                time_grid, absorber, std::move(options));
}

/// <psi|H|psi> for a real discrete Hamiltonian.
inline double energy_expectation(const WaveFunction& psi, const spectral::DiscreteHamiltonian& h) {
  const auto v = psi.values();
  const std::size_t n = v.size();
  cplx acc{0.0, 0.0};
  for (std::size_t j = 0; j < n; ++j) {
    cplx hv = (2.0 * h.t_hop + h.potential(j)) * v[j];
    if (j > 0) hv -= h.t_hop * v[j - 1];
    if (j + 1 < n) hv -= h.t_hop * v[j + 1];
    acc += std::conj(v[j]) * hv;
  }
  return acc.real() * psi.grid().dx() / psi.norm() / psi.norm();
}

struct AbsorptionOptions {
  fit::DecayForm form = fit::DecayForm::with_offset;
  /// Fixed start of the fit window; by default the transient rule of the
  /// dephasing analysis is used.
  std::optional<double> fit_start{};
  std::size_t record_stride = 1;
  std::size_t snapshot_stride = 0;
  /// Defaults to <Phi(0)|H|Phi(0)> of the tilted Hamiltonian.
  std::optional<double> energy_reference{};
};

struct AbsorptionResult {
  Trajectory trajectory;
  std::optional<double> reflection_time;
  fit::FitWindow window;
  fit::DecayFit fit;
  double energy_reference = 0.0;
};

/// Sudden switch-on of m a from the a = 0 discrete ground state, propagated
/// with an absorber; the decay rate is fitted on p(t).
inline AbsorptionResult absorption_run(const model::PotentialSpec& spec, const Grid& grid,
                                       const AbsorbingPotential& absorber,
                                       const TimeGrid& time_grid,
                                       const AbsorptionOptions& options = {}) {
  const auto psi0 = spectral::discrete_ground_state(grid, spec.params);
  const auto h = spectral::build_hamiltonian(grid, spec);
  AbsorptionResult out;
  out.energy_reference = options.energy_reference ? *options.energy_reference
                                                  : energy_expectation(psi0, h);
  PropagationOptions po;
  po.snapshot_stride = options.snapshot_stride;
  po.keep_final_state = false;
  po.record_stride = options.record_stride;
  po.energy_reference = out.energy_reference;
  out.trajectory = propagate_constant_slope(psi0, spec, time_grid, absorber, po);
  const auto& tr = out.trajectory;
  out.reflection_time = reflection_monitor(tr);
  if (options.fit_start) {
    const double end = out.reflection_time ? *out.reflection_time : tr.times.back();
    require(*options.fit_start < end, ErrorKind::fit_domain, "fit start lies after the usable window");
    out.window = {*options.fit_start, end};
  } else {
    out.window = spectral::relaxation_window(tr.times, tr.p, out.reflection_time);
  }
  out.fit = fit::fit_exponential(tr.times, tr.p, out.window, options.form);
  return out;
}

}  // namespace conveyance::propagate

#endif  // CONVEYANCE_PROPAGATOR_HPP
