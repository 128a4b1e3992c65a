#ifndef CONVEYANCE_PROTOCOLS_HPP
#define CONVEYANCE_PROTOCOLS_HPP

// Conveyance schedules x0(t) with x0(0) = 0, x0(tau) = L, and the experiments
// built on them.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>
#include <optional>
#include <shared_mutex>
#include <string>
#include <vector>

#include <boost/math/interpolators/cardinal_cubic_b_spline.hpp>

#include "conveyance/core_model.hpp"
#include "conveyance/error.hpp"
#include "conveyance/fitting.hpp"
#include "conveyance/propagator.hpp"
#include "conveyance/semiclassics.hpp"
#include "conveyance/special_functions.hpp"
#include "conveyance/spectral.hpp"
#include "conveyance/wavefunction.hpp"

namespace conveyance::protocols {

enum class Kind { constant_velocity, cos, sin, custom };

inline Kind parse_kind(const std::string& s) {
  if (s == "const-v" || s == "constant-velocity" || s == "const_v") return Kind::constant_velocity;
  if (s == "cos") return Kind::cos;
  if (s == "sin") return Kind::sin;
  if (s == "custom") return Kind::custom;
  fail(ErrorKind::config, "unknown protocol kind '" + s + "'");
}

inline const char* to_string(Kind k) {
  switch (k) {
    case Kind::constant_velocity: return "const-v";
    case Kind::cos: return "cos";
    case Kind::sin: return "sin";
    case Kind::custom: return "custom";
  }
  return "custom";
}

namespace detail {
/// Piecewise-exact integrals of a cubic spline of a(t) sampled on a uniform grid.
class SampledSchedule {
 public:
  SampledSchedule(std::vector<double> samples, double tau)
      : tau_(tau), h_(tau / static_cast<double>(samples.size() - 1)),
        spline_(samples.begin(), samples.end(), 0.0, tau / static_cast<double>(samples.size() - 1)) {
    const std::size_t n = samples.size();
    v_knots_.assign(n, 0.0);
    x_knots_.assign(n, 0.0);
    for (std::size_t i = 0; i + 1 < n; ++i) {
      const double t0 = static_cast<double>(i) * h_;
      v_knots_[i + 1] = v_knots_[i] + integrate_a(t0, t0 + h_);
      x_knots_[i + 1] = x_knots_[i] + integrate_v(i, t0, t0 + h_);
    }
  }

  double acceleration(double t) const { return spline_(std::clamp(t, 0.0, tau_)); }
  double velocity(double t) const {
    const std::size_t i = knot(t);
    return v_knots_[i] + integrate_a(static_cast<double>(i) * h_, t);
  }
  double position(double t) const {
    const std::size_t i = knot(t);
    return x_knots_[i] + integrate_v(i, static_cast<double>(i) * h_, t);
  }

 private:
  std::size_t knot(double t) const {
    const auto i = static_cast<std::size_t>(std::floor(std::clamp(t, 0.0, tau_) / h_));
    return std::min(i, v_knots_.size() - 2);
  }
  double integrate_a(double lo, double hi) const {
    const auto& r = special::gauss_legendre(4);
    double acc = 0.0;
    for (std::size_t k = 0; k < 4; ++k)
      acc += r.weights[k] * spline_(0.5 * (lo + hi) + 0.5 * (hi - lo) * r.nodes[k]);
    return 0.5 * (hi - lo) * acc;
  }
  double integrate_v(std::size_t i, double lo, double hi) const {
    const auto& r = special::gauss_legendre(4);
    const double t0 = static_cast<double>(i) * h_;
    double acc = 0.0;
    for (std::size_t k = 0; k < 4; ++k) {
      const double s = 0.5 * (lo + hi) + 0.5 * (hi - lo) * r.nodes[k];
      acc += r.weights[k] * (v_knots_[i] + integrate_a(t0, s));
    }
    return 0.5 * (hi - lo) * acc;
  }

  double tau_;
  double h_;
  boost::math::interpolators::cardinal_cubic_b_spline<double> spline_;
  std::vector<double> v_knots_;
  std::vector<double> x_knots_;
};
}  // namespace detail

/// Trap trajectory. Outside [0, tau] the trap rests at 0 or L.
struct Protocol {
  Kind kind = Kind::cos;
  double distance = 0.0;  // L
  double duration = 0.0;  // tau
  int mu = 2;             // smoothness exponent
  double c = 0.0;         // const-v speed
  double omega = 0.0;     // pi / tau
  double a1 = 0.0;        // cos amplitude
  double a2 = 0.0;        // sin amplitude
  std::shared_ptr<const detail::SampledSchedule> samples{};

  double acceleration(double t) const {
    if (t < 0.0 || t > duration) return 0.0;
    switch (kind) {
      case Kind::constant_velocity: return 0.0;
      case Kind::cos: return a1 * std::cos(omega * t);
      case Kind::sin: return a2 * std::sin(2.0 * omega * t);
      case Kind::custom: return samples->acceleration(t);
    }
    return 0.0;
  }
  double velocity(double t) const {
    if (t < 0.0 || t > duration) return 0.0;
    switch (kind) {
      case Kind::constant_velocity: return c;
      case Kind::cos: return a1 / omega * std::sin(omega * t);
      case Kind::sin: return a2 / (2.0 * omega) * (1.0 - std::cos(2.0 * omega * t));
      case Kind::custom: return samples->velocity(t);
    }
    return 0.0;
  }
  double position(double t) const {
    if (t <= 0.0) return 0.0;
    if (t >= duration) return distance;
    switch (kind) {
      case Kind::constant_velocity: return c * t;
      case Kind::cos: return a1 / (omega * omega) * (1.0 - std::cos(omega * t));
      case Kind::sin:
        return a2 / (2.0 * omega) * (t - std::sin(2.0 * omega * t) / (2.0 * omega));
      case Kind::custom: return samples->position(t);
    }
    return 0.0;
  }
  /// Unclamped closed-form endpoint, for the endpoint check.
  double raw_endpoint() const {
    switch (kind) {
      case Kind::constant_velocity: return c * duration;
      case Kind::cos: return a1 / (omega * omega) * (1.0 - std::cos(omega * duration));
      case Kind::sin:
        return a2 / (2.0 * omega) * (duration - std::sin(2.0 * omega * duration) / (2.0 * omega));
      case Kind::custom: return samples->position(duration);
    }
    return 0.0;
  }
  propagate::Drive drive() const {
    Protocol self = *this;
    return {[self](double t) { return self.acceleration(t); },
            [self](double t) { return self.velocity(t); }};
  }
};

inline Protocol make_protocol(Kind kind, double distance, double duration) {
  require(distance > 0.0 && std::isfinite(distance), ErrorKind::invalid_argument, "L must be > 0");
  require(duration > 0.0 && std::isfinite(duration), ErrorKind::invalid_argument, "tau must be > 0");
  require(kind != Kind::custom, ErrorKind::invalid_argument,
          "custom protocols are built from samples");
  Protocol p;
  p.kind = kind;
  p.distance = distance;
  p.duration = duration;
  p.omega = std::numbers::pi / duration;
  switch (kind) {
    case Kind::constant_velocity:
      p.mu = 1;
      p.c = distance / duration;
      break;
    case Kind::cos:
      p.mu = 2;
      p.a1 = p.omega * p.omega * distance / 2.0;
      break;
    case Kind::sin:
      p.mu = 3;
      p.a2 = 2.0 * std::numbers::pi * distance / (duration * duration);
      break;
    case Kind::custom: break;
  }
  return p;
}

/// a(t) sampled uniformly on [0, tau] (first sample at 0, last at tau) and
/// interpolated by a cubic B-spline; x0(tau) = L is checked, not enforced.
inline Protocol make_custom_protocol(std::vector<double> accelerations, double distance,
                                     double duration, int mu = 0) {
  std::vector<std::string> problems;
  if (!(distance > 0.0)) problems.push_back("L must be > 0");
  if (!(duration > 0.0)) problems.push_back("tau must be > 0");
  if (accelerations.size() < 4) problems.push_back("at least 4 acceleration samples are needed");
  for (double a : accelerations)
    if (!std::isfinite(a)) {
      problems.push_back("acceleration samples must be finite");
      break;
    }
  Protocol p;
  if (problems.empty()) {
    p.kind = Kind::custom;
    p.distance = distance;
    p.duration = duration;
    p.mu = mu;
    p.omega = std::numbers::pi / duration;
    p.samples = std::make_shared<detail::SampledSchedule>(std::move(accelerations), duration);
    const double end = p.raw_endpoint();
    if (std::abs(end - distance) > 1e-6 * std::max(1.0, distance))
      problems.push_back("x0(tau) = " + std::to_string(end) + " differs from L = " +
                         std::to_string(distance));
  }
  if (!problems.empty()) {
    std::string msg = "invalid custom protocol:";
    for (const auto& s : problems) msg += " " + s + ";";
    fail(ErrorKind::config, msg);
  }
  return p;
}

struct ConveyanceOptions {
  int level = 0;                     // initial bound state
  std::size_t record_stride = 1;
  std::size_t snapshot_stride = 0;   // 0: no snapshots
  double extra_time = 0.0;           // propagation after tau with the trap at rest
  std::optional<propagate::AbsorbingPotential> absorber{};
  std::optional<double> energy_reference{};
};

struct ConveyanceResult {
  Protocol protocol;
  std::vector<double> times;
  std::vector<double> x0, v, a;
  std::vector<double> p;       // survival in the moving frame
  std::vector<double> P;       // rest-frame survival
  std::vector<double> norm;
  std::vector<double> p_plus;  // const-v only
  std::vector<double> p_minus; // const-v only
  std::vector<propagate::Snapshot> snapshots;
  double p_final = 0.0;        // p(tau)
  double P_final = 0.0;        // P(tau)
  double p_plus_tau_minus = 0.0;  // const-v: p_+(tau_-)
  double p_minus_tau_plus = 0.0;  // const-v: p_-(tau_+)
};

namespace detail {
inline std::size_t step_count(double span, double dt) {
  require(dt > 0.0, ErrorKind::invalid_argument, "dt must be positive");
  return std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(span / dt - 1e-9)));
}

inline void append(ConveyanceResult& out, const propagate::Trajectory& tr, const Protocol& proto,
                   bool skip_first) {
  for (std::size_t i = skip_first ? 1 : 0; i < tr.times.size(); ++i) {
    const double t = tr.times[i];
    out.times.push_back(t);
    out.x0.push_back(proto.position(t));
    out.v.push_back(proto.velocity(t));
    out.a.push_back(proto.acceleration(t));
    out.p.push_back(tr.p[i]);
    out.P.push_back(tr.P[i]);
    out.norm.push_back(tr.norm[i]);
  }
  for (const auto& s : tr.snapshots) {
    if (skip_first && !out.snapshots.empty() && std::abs(s.time - out.snapshots.back().time) < 1e-12)
      continue;
    out.snapshots.push_back(s);
  }
}

inline WaveFunction initial_level(const Grid& grid, const model::PhysicalParams& params, int level) {
  const auto count = model::bound_state_energies(params).size();
  require(level >= 0 && static_cast<std::size_t>(level) < count, ErrorKind::invalid_level,
          "level " + std::to_string(level) + " is not bound (" + std::to_string(count) +
              " bound states)");
  return spectral::discrete_ground_state(grid, params, level);
}
}  // namespace detail

/// Constant velocity with the velocity jumps of the trap handled by momentum
/// kicks: Phi(0+) = exp(-i m c x / hbar) Psi(0), and exp(+i m c x / hbar) at tau.
/// p(t) = p_+ on [0, tau], p_- afterwards.
inline ConveyanceResult run_constant_velocity(const Protocol& protocol,
                                              const model::PhysicalParams& params,
                                              const Grid& grid, double dt,
                                              const ConveyanceOptions& options = {}) {
  require(protocol.kind == Kind::constant_velocity, ErrorKind::invalid_argument,
          "run_constant_velocity needs a constant-velocity protocol");
  params.validate();
  const auto psi0 = detail::initial_level(grid, params, options.level);
  const double k = params.mass * protocol.c / params.hbar;
  const WaveFunction plus0 = psi0.boosted(-k);

  ConveyanceResult out;
  out.protocol = protocol;
  auto p_minus_of = [&](const WaveFunction& s) { return std::norm(psi0.overlap(s)); };
  auto p_plus_of = [&](const WaveFunction& s) { return std::norm(plus0.overlap(s)); };

  propagate::PropagationOptions po;
  po.record_stride = options.record_stride;
  po.snapshot_stride = options.snapshot_stride;
  po.energy_reference = options.energy_reference.value_or(0.0);
  std::vector<double> pm, pp;
  po.observer = [&](double, const WaveFunction& s) {
    pm.push_back(p_minus_of(s));
    pp.push_back(p_plus_of(s));
  };
  const std::size_t n1 = detail::step_count(protocol.duration, dt);
  const double dt1 = protocol.duration / static_cast<double>(n1);
  // constant slope zero; v = c throughout, so P = p_+ here
  const propagate::Drive moving{[](double) { return 0.0; }, [c = protocol.c](double) { return c; }};
  auto first = propagate::propagate_moving_frame(plus0, moving, params, {dt1, n1}, options.absorber, po);
  detail::append(out, first, protocol, false);
  out.p_plus = pp;
  out.p_minus = pm;
  const WaveFunction tau_minus = *first.final_state;
  out.p_plus_tau_minus = p_plus_of(tau_minus);
  const WaveFunction tau_plus = tau_minus.boosted(k);
  out.p_minus_tau_plus = p_minus_of(tau_plus);
  out.P_final = out.p_plus_tau_minus;
  out.p_final = out.p_plus_tau_minus;
  // p(t) = p_+ up to tau
  out.p = out.p_plus;
  out.P = out.p_plus;

  if (options.extra_time > 0.0) {
    pm.clear();
    pp.clear();
    const std::size_t n2 = detail::step_count(options.extra_time, dt);
    po.start_time = protocol.duration;
    po.reference = psi0;
    auto second = propagate::propagate_moving_frame(tau_plus, propagate::Drive::at_rest(), params,
                                                    {options.extra_time / static_cast<double>(n2), n2},
                                                    options.absorber, po);
    const std::size_t before = out.times.size();
    detail::append(out, second, protocol, true);
    // after tau: p = p_-, and P = p_- as the trap rests at L
    out.p.resize(before);
    out.P.resize(before);
    for (std::size_t i = 1; i < pm.size(); ++i) {
      out.p.push_back(pm[i]);
      out.P.push_back(pm[i]);
      out.p_minus.push_back(pm[i]);
      out.p_plus.push_back(pp[i]);
    }
  }
  return out;
}

/// Moving-frame run of a schedule starting from bound state `level`.
inline ConveyanceResult run_conveyance(const Protocol& protocol, const model::PhysicalParams& params,
                                       const Grid& grid, double dt,
                                       const ConveyanceOptions& options = {}) {
  if (protocol.kind == Kind::constant_velocity)
    return run_constant_velocity(protocol, params, grid, dt, options);
  params.validate();
  const auto psi0 = detail::initial_level(grid, params, options.level);
  const double k0 = params.mass * protocol.velocity(0.0) / params.hbar;
  const WaveFunction phi0 = k0 == 0.0 ? psi0 : psi0.boosted(-k0);

  propagate::PropagationOptions po;
  po.record_stride = options.record_stride;
  po.snapshot_stride = options.snapshot_stride;
  po.energy_reference = options.energy_reference.value_or(0.0);
  const std::size_t n1 = detail::step_count(protocol.duration, dt);
  const double dt1 = protocol.duration / static_cast<double>(n1);
  std::size_t steps = n1;
  if (options.extra_time > 0.0)
    steps += static_cast<std::size_t>(std::llround(options.extra_time / dt1));
  const auto tr = propagate::propagate_moving_frame(phi0, protocol.drive(), params, {dt1, steps},
                                                    options.absorber, po);
  ConveyanceResult out;
  out.protocol = protocol;
  detail::append(out, tr, protocol, false);
  // nearest record to tau (exact when the stride divides the step count)
  std::size_t at_tau = 0;
  for (std::size_t i = 0; i < out.times.size(); ++i)
    if (std::abs(out.times[i] - protocol.duration) < std::abs(out.times[at_tau] - protocol.duration))
      at_tau = i;
  out.p_final = out.p[at_tau];
  out.P_final = out.P[at_tau];
  return out;
}

/// 1 - |<phi_0|phi_alpha>|^2 ~ alpha^2 / (8 beta) for a harmonic well
/// beta x^2 shifted by the force alpha; beta = V0 / w^2.
struct DropEstimate {
  double value = 0.0;
  bool valid = true;  // false once the estimate exceeds 0.5
};

inline DropEstimate initial_drop_estimate(const model::PhysicalParams& params, double alpha) {
  params.validate();
  const double beta = params.depth / (params.width * params.width);
  const double d = alpha * alpha / (8.0 * beta);
  return {d, d <= 0.5};
}

/// Gamma as a function of the slope m|a|, interpolated log-linearly between
/// table points and linearly from (0, 0) to the first positive entry.
class GammaOfSlope {
 public:
  GammaOfSlope() = default;
  GammaOfSlope(std::vector<double> slopes, std::vector<double> gammas) {
    require(slopes.size() == gammas.size() && !slopes.empty(), ErrorKind::invalid_argument,
            "Gamma table needs matching non-empty columns");
    std::vector<std::pair<double, double>> rows;
    for (std::size_t i = 0; i < slopes.size(); ++i) {
      require(slopes[i] >= 0.0 && gammas[i] >= 0.0, ErrorKind::invalid_argument,
              "Gamma table entries must be non-negative");
      rows.emplace_back(slopes[i], gammas[i]);
    }
    std::sort(rows.begin(), rows.end());
    if (rows.front().first > 0.0) rows.insert(rows.begin(), {0.0, 0.0});
    for (auto [s, g] : rows) {
      slopes_.push_back(s);
      gammas_.push_back(g);
    }
  }

  double max_slope() const { return slopes_.empty() ? 0.0 : slopes_.back(); }

  double operator()(double slope) const {
    const double s = std::abs(slope);
    require(!slopes_.empty(), ErrorKind::range, "empty Gamma table");
    if (s > slopes_.back() * (1.0 + 1e-12))
      fail(ErrorKind::range, "slope " + std::to_string(s) + " beyond the Gamma table (max " +
                                 std::to_string(slopes_.back()) + ")");
    const auto it = std::upper_bound(slopes_.begin(), slopes_.end(), s);
    if (it == slopes_.end()) return gammas_.back();
    const auto i = static_cast<std::size_t>(it - slopes_.begin());
    if (i == 0) return gammas_.front();
    const double s0 = slopes_[i - 1], s1 = slopes_[i], g0 = gammas_[i - 1], g1 = gammas_[i];
    const double u = (s - s0) / (s1 - s0);
    if (g0 > 0.0 && g1 > 0.0) return std::exp((1.0 - u) * std::log(g0) + u * std::log(g1));
    return (1.0 - u) * g0 + u * g1;
  }

 private:
  std::vector<double> slopes_;
  std::vector<double> gammas_;
};

/// Weber-variant WKB rates over a slope grid; points without a level are skipped.
inline GammaOfSlope weber_gamma_table(const model::PhysicalParams& params,
                                      const std::vector<double>& slopes,
                                      const semiclassics::WkbOptions& options = {}) {
  std::vector<double> s, g;
  for (const auto& row : semiclassics::gamma_table(params, slopes, options)) {
    if (!row.weber) continue;
    s.push_back(row.ma);
    g.push_back(row.weber->gamma_weber);
  }
  require(!s.empty(), ErrorKind::range, "no WKB rates available for this slope grid");
  return GammaOfSlope(std::move(s), std::move(g));
}

struct TunnelingEstimate {
  std::vector<double> times;
  std::vector<double> p;  // (1 - d_ini) exp(-int_0^t Gamma)
  double d_initial = 0.0;
  double d_final = 0.0;
  double p_final = 0.0;   // includes (1 - d_fin)
};

inline TunnelingEstimate adiabatic_tunneling_estimate(const Protocol& protocol,
                                                      const model::PhysicalParams& params,
                                                      const GammaOfSlope& gamma,
                                                      std::size_t samples = 2001) {
  require(protocol.kind != Kind::constant_velocity, ErrorKind::invalid_argument,
          "the drop estimate needs a finite acceleration jump (cos, sin or custom)");
  require(samples >= 3, ErrorKind::invalid_argument, "need at least 3 samples");
  const double m = params.mass;
  TunnelingEstimate out;
  out.d_initial = initial_drop_estimate(params, m * std::abs(protocol.acceleration(0.0))).value;
  out.d_final = initial_drop_estimate(params, m * std::abs(protocol.acceleration(protocol.duration))).value;
  const double h = protocol.duration / static_cast<double>(samples - 1);
  double integral = 0.0;
  double previous = gamma(m * protocol.acceleration(0.0));
  for (std::size_t i = 0; i < samples; ++i) {
    const double t = static_cast<double>(i) * h;
    if (i > 0) {
      const double g = gamma(m * protocol.acceleration(t));
      integral += 0.5 * h * (previous + g);
      previous = g;
    }
    out.times.push_back(t);
    out.p.push_back((1.0 - out.d_initial) * std::exp(-integral));
  }
  out.p_final = out.p.back() * (1.0 - out.d_final);
  return out;
}

struct SpectrogramRow {
  double time = 0.0;
  double acceleration = 0.0;
  std::vector<double> energies;
  std::vector<double> weights;
  double total() const {
    double s = 0.0;
    for (double w : weights) s += w;
    return s;
  }
};

struct PopulationSpectrogram {
  std::vector<SpectrogramRow> rows;
};

/// Diagonalizations of the moving-frame Hamiltonian keyed by a rounded to
/// 1e-12. Concurrent lookups share a lock; each entry is computed once.
class EigenCache {
 public:
  EigenCache(Grid grid, model::PhysicalParams params, std::size_t levels)
      : grid_(std::move(grid)), params_(params), levels_(levels) {}

  std::shared_ptr<const spectral::SpectralDecomposition> get(double acceleration) {
    const long long key = std::llround(acceleration * 1e12);
    {
      std::shared_lock lock(mutex_);
      const auto it = entries_.find(key);
      if (it != entries_.end()) return it->second;
    }
    auto decomp = std::make_shared<const spectral::SpectralDecomposition>(spectral::lowest_states(
        spectral::build_hamiltonian(grid_, model::PotentialSpec{params_, static_cast<double>(key) * 1e-12}),
        levels_));
    std::unique_lock lock(mutex_);
    return entries_.try_emplace(key, std::move(decomp)).first->second;
  }

  std::size_t size() const {
    std::shared_lock lock(mutex_);
    return entries_.size();
  }

 private:
  Grid grid_;
  model::PhysicalParams params_;
  std::size_t levels_;
  mutable std::shared_mutex mutex_;
  std::map<long long, std::shared_ptr<const spectral::SpectralDecomposition>> entries_;
};

/// Projects stored moving-frame states on the lowest `levels` eigenstates of
/// the instantaneous Hamiltonian with slope m a(t).
inline PopulationSpectrogram population_spectrogram(const std::vector<propagate::Snapshot>& snapshots,
                                                    const Protocol& protocol,
                                                    const model::PhysicalParams& params,
                                                    std::size_t levels, EigenCache* cache = nullptr) {
  require(!snapshots.empty(), ErrorKind::invalid_argument, "no snapshots stored");
  const Grid& grid = snapshots.front().state.grid();
  std::optional<EigenCache> local;
  if (!cache) {
    local.emplace(grid, params, levels);
    cache = &*local;
  }
  PopulationSpectrogram out;
  for (const auto& snap : snapshots) {
    SpectrogramRow row;
    row.time = snap.time;
    row.acceleration = protocol.acceleration(snap.time);
    const auto decomp = cache->get(row.acceleration);
    row.energies = decomp->energies;
    const auto coeffs = spectral::expansion_coefficients(snap.state, *decomp);
    row.weights = coeffs.weights();
    out.rows.push_back(std::move(row));
  }
  return out;
}

struct MultiStateResult {
  std::vector<int> levels;
  std::vector<ConveyanceResult> runs;
  std::vector<double> p_final;
  double selection_ratio = 0.0;  // p_0(tau) / p_1(tau) when both levels are present
};

inline MultiStateResult multi_state_conveyance(const Protocol& protocol,
                                               const model::PhysicalParams& params, const Grid& grid,
                                               double dt, const std::vector<int>& levels,
                                               ConveyanceOptions options = {}) {
  require(!levels.empty(), ErrorKind::invalid_argument, "no levels requested");
  MultiStateResult out;
  out.levels = levels;
  for (int level : levels) {
    options.level = level;
    out.runs.push_back(run_conveyance(protocol, params, grid, dt, options));
    out.p_final.push_back(out.runs.back().p_final);
  }
  const auto i0 = std::find(levels.begin(), levels.end(), 0);
  const auto i1 = std::find(levels.begin(), levels.end(), 1);
  if (i0 != levels.end() && i1 != levels.end()) {
    const double p1 = out.p_final[static_cast<std::size_t>(i1 - levels.begin())];
    const double p0 = out.p_final[static_cast<std::size_t>(i0 - levels.begin())];
    out.selection_ratio = p1 > 0.0 ? p0 / p1 : std::numeric_limits<double>::infinity();
  }
  return out;
}

/// Least-squares slope of log(1 - p) against log(tau).
inline fit::LineFit scaling_slope(const std::vector<double>& taus, const std::vector<double>& p_final) {
  require(taus.size() == p_final.size() && taus.size() >= 2, ErrorKind::invalid_argument,
          "need at least two sweep points");
  std::vector<double> lx, ly;
  for (std::size_t i = 0; i < taus.size(); ++i) {
    const double excitation = 1.0 - p_final[i];
    require(excitation > 0.0, ErrorKind::fit_domain, "1 - p(tau) must be positive");
    lx.push_back(std::log(taus[i]));
    ly.push_back(std::log(excitation));
  }
  return fit::linear_regression(lx, ly);
}

}  // namespace conveyance::protocols

#endif  // CONVEYANCE_PROTOCOLS_HPP
