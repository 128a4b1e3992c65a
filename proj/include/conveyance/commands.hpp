#ifndef CONVEYANCE_COMMANDS_HPP
#define CONVEYANCE_COMMANDS_HPP

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdio>
#include <filesystem>
#include <limits>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <tuple>
#include <vector>

#include "conveyance/config.hpp"
#include "conveyance/core_model.hpp"
#include "conveyance/fitting.hpp"
#include "conveyance/io.hpp"
#include "conveyance/propagator.hpp"
#include "conveyance/protocols.hpp"
#include "conveyance/resonance.hpp"
#include "conveyance/semiclassics.hpp"
#include "conveyance/spectral.hpp"
#include "conveyance/workers.hpp"

#ifndef CONVEYANCE_VERSION
#define CONVEYANCE_VERSION "dev"
#endif

namespace conveyance::commands {

namespace fs = std::filesystem;
using config::CaseConfig;
using config::ExperimentConfig;
using io::CsvTable;
using io::json;

inline constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

/// Where and how a command writes its files.
class Output {
 public:
  Output(const ExperimentConfig& cfg) : dir_(cfg.output_dir), hash_(cfg.hash) {}

  CsvTable table(std::vector<std::string> columns) const { return CsvTable(std::move(columns), hash_); }

  void save(const CsvTable& t, const std::string& name) {
    t.save(dir_ / name);
    files_.push_back(name);
  }

  void save_json(const json& j, const std::string& name) {
    io::write_atomic(dir_ / name, j.dump(2) + "\n");
    files_.push_back(name);
  }

  const std::vector<std::string>& files() const noexcept { return files_; }
  const fs::path& dir() const noexcept { return dir_; }

 private:
  fs::path dir_;
  std::string hash_;
  std::vector<std::string> files_;
};

namespace detail {

inline std::string tag(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", v);
  return buf;
}

inline std::string prefix(const ExperimentConfig& cfg, const CaseConfig& c) {
  return cfg.cases.size() > 1 || !c.label.empty() ? c.label + "_" : std::string{};
}

inline model::PotentialSpec slope_spec(const model::PhysicalParams& p, double ma) {
  return model::PotentialSpec::from_slope(p, ma);
}

inline double or_nan(const std::optional<double>& v) { return v ? *v : kNaN; }

}  // namespace detail

// ---------------------------------------------------------------- spectrum

inline void cmd_spectrum(const ExperimentConfig& cfg, unsigned workers, Output& out) {
  for (const auto& c : cfg.cases) {
    const auto& s = *c.spectrum;
    const Grid grid = s.grid.grid();
    const auto rows = parallel_map(s.a_values.size(), workers, [&](std::size_t i) {
      const double a = s.a_values[i];
      return spectral::energy_diagram(c.params, std::span<const double>(&a, 1), grid, s.levels).front();
    });
    std::vector<std::string> cols{"a", "ma"};
    for (std::size_t k = 0; k < s.levels; ++k) cols.push_back("E" + std::to_string(k));
    auto table = out.table(cols);
    for (const auto& r : rows) {
      std::vector<double> v{r.acceleration, c.params.mass * r.acceleration};
      v.insert(v.end(), r.energies.begin(), r.energies.end());
      table.add_numbers(v);
    }
    out.save(table, detail::prefix(cfg, c) + "spectrum.csv");

    auto bound = out.table({"n", "energy"});
    const auto e = model::bound_state_energies(c.params);
    for (std::size_t n = 0; n < e.size(); ++n) bound.add_row({static_cast<double>(n), e[n]});
    out.save(bound, detail::prefix(cfg, c) + "bound_states.csv");
  }
}

// ---------------------------------------------------------------- relax

struct RelaxOutcome {
  double ma = 0.0;
  spectral::RelaxationResult run;
  std::optional<fit::LorentzianFit> lorentz;
  std::string status = "ok";
};

inline RelaxOutcome relax_one(const model::PhysicalParams& params, const config::RelaxSettings& s, double ma) {
  RelaxOutcome o;
  o.ma = ma;
  const Grid grid = s.grid.grid();
  const auto psi0 = spectral::discrete_ground_state(grid, params);
  const auto decomp =
      spectral::diagonalize(spectral::build_hamiltonian(grid, detail::slope_spec(params, ma)));
  auto& r = o.run;
  r.coefficients = spectral::expansion_coefficients(psi0, decomp);
  const auto steps = static_cast<std::size_t>(std::llround(s.time.t_max / s.time.dt));
  r.times.resize(steps + 1);
  for (std::size_t i = 0; i <= steps; ++i) r.times[i] = static_cast<double>(i) * s.time.dt;
  r.survival = spectral::dephasing_survival(r.coefficients, r.times, params.hbar);
  r.boundary_weight = spectral::boundary_weight_series(r.coefficients, decomp, r.times, params.hbar);
  r.reflection_time = spectral::first_crossing(r.times, r.boundary_weight);
  r.fit.rate = kNaN;
  try {
    fit::FitWindow window;
    if (s.fit.start) {
      const double end = r.reflection_time ? *r.reflection_time : r.times.back();
      require(*s.fit.start < end, ErrorKind::fit_domain, "fit start lies after the usable window");
      window = {*s.fit.start, end};
    } else {
      window = spectral::relaxation_window(r.times, r.survival, r.reflection_time);
    }
    r.fit = fit::fit_exponential(r.times, r.survival, window, s.fit.form);
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::fit_domain && e.kind() != ErrorKind::numeric_failure) throw;
    o.status = to_string(e.kind());
    r.fit = fit::DecayFit{};
    r.fit.rate = r.fit.amplitude = r.fit.offset = r.fit.r_squared = kNaN;
    r.fit.window = {kNaN, kNaN};
  }
  if (s.lorentzian) {
    try {
      o.lorentz = fit::lorentzian_fit(o.run.coefficients.energies, o.run.coefficients.weights());
    } catch (const Error& e) {
      o.status += std::string(o.status == "ok" ? "" : ";") + "lorentzian:" + to_string(e.kind());
    }
  }
  return o;
}

inline void cmd_relax(const ExperimentConfig& cfg, unsigned workers, Output& out) {
  for (const auto& c : cfg.cases) {
    const auto& s = *c.relax;
    const auto runs = parallel_map(c.ma_values.size(), workers,
                                   [&](std::size_t i) { return relax_one(c.params, s, c.ma_values[i]); });
    const auto pre = detail::prefix(cfg, c);
    std::vector<std::string> cols{"mass", "ma", "gamma", "amplitude", "offset", "r_squared",
                                  "t_start", "t_end", "reflection_time"};
    if (s.lorentzian) {
      cols.insert(cols.end(), {"lorentz_center", "lorentz_half_width", "gamma_lorentz"});
    }
    cols.push_back("status");
    auto summary = out.table(cols);
    for (const auto& o : runs) {
      const auto& r = o.run;
      auto t = out.table({"t", "p", "minus_log_p", "boundary_weight"});
      for (std::size_t i = 0; i < r.times.size(); ++i)
        t.add_row({r.times[i], r.survival[i], -std::log(r.survival[i]), r.boundary_weight[i]});
      out.save(t, pre + "relax_ma" + detail::tag(o.ma) + ".csv");
      if (s.overlaps) {
        auto d = out.table({"energy", "weight"});
        const auto w = r.coefficients.weights();
        for (std::size_t k = 0; k < w.size(); ++k) d.add_row({r.coefficients.energies[k], w[k]});
        out.save(d, pre + "relax_ma" + detail::tag(o.ma) + "_overlaps.csv");
      }
      std::vector<std::string> row;
      for (double v : {c.params.mass, o.ma, r.fit.rate, r.fit.amplitude, r.fit.offset, r.fit.r_squared,
                       r.fit.window.t_start, r.fit.window.t_end, detail::or_nan(r.reflection_time)})
        row.push_back(io::format_number(v));
      if (s.lorentzian)
        for (double v : {o.lorentz ? o.lorentz->center : kNaN, o.lorentz ? o.lorentz->half_width : kNaN,
                         o.lorentz ? o.lorentz->rate(c.params.hbar) : kNaN})
          row.push_back(io::format_number(v));
      row.push_back(o.status);
      summary.add_row(row);
    }
    out.save(summary, pre + "relax_summary.csv");
  }
}

// ---------------------------------------------------------------- absorb

struct AbsorbOutcome {
  double ma = 0.0;
  bool bare = false;
  std::optional<propagate::AbsorptionResult> run;
  std::string status = "ok";
};

inline propagate::AbsorptionResult absorb_one(const model::PhysicalParams& params,
                                              const config::AbsorbSettings& s, double ma, bool bare) {
  propagate::AbsorptionOptions o;
  o.form = s.fit.form;
  o.fit_start = s.fit.start;
  o.record_stride = s.record_stride;
  o.snapshot_stride = s.snapshot_stride;
  o.energy_reference = s.energy_reference;
  auto absorber = s.absorber;
  if (bare) absorber.strength = 0.0;
  return propagate::absorption_run(detail::slope_spec(params, ma), s.grid.grid(), absorber,
                                   s.time.time_grid(), o);
}

inline void cmd_absorb(const ExperimentConfig& cfg, unsigned workers, Output& out) {
  for (const auto& c : cfg.cases) {
    const auto& s = *c.absorb;
    std::vector<std::pair<double, bool>> jobs;
    for (double ma : c.ma_values) {
      jobs.emplace_back(ma, false);
      if (s.bare) jobs.emplace_back(ma, true);
    }
    const auto runs = parallel_map(jobs.size(), workers, [&](std::size_t i) {
      AbsorbOutcome o;
      o.ma = jobs[i].first;
      o.bare = jobs[i].second;
      try {
        o.run = absorb_one(c.params, s, o.ma, o.bare);
      } catch (const Error& e) {
        if (e.kind() != ErrorKind::fit_domain && e.kind() != ErrorKind::numeric_failure) throw;
        o.status = to_string(e.kind());
      }
      return o;
    });
    const auto pre = detail::prefix(cfg, c);
    auto summary = out.table({"mass", "ma", "absorber", "gamma", "amplitude", "offset", "r_squared", "t_start",
                              "t_end", "reflection_time", "energy_reference", "status"});
    for (const auto& o : runs) {
      const std::string stem = pre + "absorb_ma" + detail::tag(o.ma) + (o.bare ? "_bare" : "");
      if (!o.run) {
        summary.add_row({io::format_number(c.params.mass), io::format_number(o.ma), o.bare ? "off" : "on", "nan",
                         "nan", "nan", "nan", "nan", "nan", "nan", "nan", o.status});
        continue;
      }
      const auto& r = *o.run;
      const auto& tr = r.trajectory;
      auto t = out.table({"t", "p", "norm", "boundary_weight"});
      for (std::size_t i = 0; i < tr.times.size(); ++i)
        t.add_row({tr.times[i], tr.p[i], tr.norm[i], tr.boundary_weight[i]});
      out.save(t, stem + ".csv");
      if (!tr.snapshots.empty()) {
        auto snap = out.table({"t", "x", "density"});
        for (const auto& sn : tr.snapshots)
          for (std::size_t j = 0; j < sn.state.size(); ++j)
            snap.add_row({sn.time, sn.state.grid().x(j), std::norm(sn.state[j])});
        out.save(snap, stem + "_snapshots.csv");
      }
      std::vector<std::string> row{io::format_number(c.params.mass), io::format_number(o.ma), o.bare ? "off" : "on"};
      for (double v : {r.fit.rate, r.fit.amplitude, r.fit.offset, r.fit.r_squared, r.window.t_start,
                       r.window.t_end, detail::or_nan(r.reflection_time), r.energy_reference})
        row.push_back(io::format_number(v));
      row.push_back(o.status);
      summary.add_row(row);
    }
    out.save(summary, pre + "absorb_summary.csv");
  }
}

// ---------------------------------------------------------------- wkb

inline std::vector<semiclassics::GammaRow> wkb_rows(const CaseConfig& c, unsigned workers) {
  return parallel_map(c.ma_values.size(), workers, [&](std::size_t i) {
    return semiclassics::gamma_table(c.params, {c.ma_values[i]}, *c.wkb).front();
  });
}

inline void cmd_wkb(const ExperimentConfig& cfg, unsigned workers, Output& out) {
  for (const auto& c : cfg.cases) {
    const auto rows = wkb_rows(c, workers);
    auto table = out.table({"mass", "ma", "E_airy", "hbar_omega_airy", "S_airy", "gamma_airy", "E_weber",
                            "hbar_omega_weber", "S_weber", "phi", "kappa", "gamma_weber", "status"});
    for (const auto& r : rows) {
      std::vector<std::string> row{io::format_number(c.params.mass), io::format_number(r.ma)};
      auto level = [&](const std::optional<semiclassics::SemiclassicalLevel>& l, bool weber) {
        if (!l) {
          for (int i = 0; i < (weber ? 6 : 4); ++i) row.push_back("nan");
          return;
        }
        row.push_back(io::format_number(l->energy));
        row.push_back(io::format_number(l->hbar_omega));
        row.push_back(io::format_number(l->S));
        if (weber) {
          row.push_back(io::format_number(l->phi));
          row.push_back(io::format_number(l->kappa));
          row.push_back(io::format_number(l->gamma_weber));
        } else {
          row.push_back(io::format_number(l->gamma_airy));
        }
      };
      level(r.airy, false);
      level(r.weber, true);
      row.push_back(r.error.empty() ? "ok" : r.error);
      table.add_row(row);
    }
    out.save(table, detail::prefix(cfg, c) + "wkb.csv");
  }
}

// ---------------------------------------------------------------- resonance

inline resonance::ResonanceState resonance_one(const model::PhysicalParams& params,
                                               const config::ResonanceSettings& s, double ma) {
  const auto spec = detail::slope_spec(params, ma);
  const Grid grid = s.grid.grid();
  const auto guess = s.guess ? *s.guess : resonance::default_guess(spec, grid, resonance::wkb_gamma_hint(spec));
  return resonance::solve_resonance(guess, spec, grid);
}

inline void cmd_resonance(const ExperimentConfig& cfg, unsigned workers, Output& out) {
  json all = json::array();
  for (const auto& c : cfg.cases) {
    const auto& s = *c.resonance;
    const auto states = parallel_map(c.ma_values.size(), workers,
                                     [&](std::size_t i) { return resonance_one(c.params, s, c.ma_values[i]); });
    const auto pre = detail::prefix(cfg, c);
    for (std::size_t i = 0; i < states.size(); ++i) {
      const auto& st = states[i];
      const double ma = c.ma_values[i];
      all.push_back({{"case", c.label},
                     {"mass", c.params.mass},
                     {"ma", ma},
                     {"energy", {st.energy.real(), st.energy.imag()}},
                     {"gamma", st.gamma},
                     {"residual", st.residual},
                     {"iterations", st.iterations},
                     {"method", st.method}});
      auto v = out.table({"x", "re", "im", "density"});
      for (std::size_t j = 0; j < st.vector.size(); ++j)
        v.add_row({st.vector.grid().x(j), st.vector[j].real(), st.vector[j].imag(), std::norm(st.vector[j])});
      out.save(v, pre + "resonance_ma" + detail::tag(ma) + "_vector.csv");
      if (s.spectrum) {
        const auto spectrum = resonance::interior_spectrum(
            resonance::interior_matrix(st.energy, detail::slope_spec(c.params, ma), s.grid.grid()));
        auto t = out.table({"re", "im"});
        for (const auto& e : spectrum) t.add_row({e.real(), e.imag()});
        out.save(t, pre + "resonance_ma" + detail::tag(ma) + "_spectrum.csv");
      }
    }
  }
  out.save_json(json{{"config_hash", cfg.hash}, {"states", all}}, "resonance.json");
}

// ---------------------------------------------------------------- convey

struct ConveyJob {
  protocols::Kind kind;
  double tau;
  int level;
};

struct ConveyOutcome {
  ConveyJob job;
  protocols::ConveyanceResult run;
  std::optional<protocols::PopulationSpectrogram> spectrogram;
  std::optional<double> estimate;
};

inline protocols::Protocol build_protocol(const config::ProtocolConfig& pc, protocols::Kind kind, double tau) {
  if (kind == protocols::Kind::custom) return protocols::make_custom_protocol(pc.samples, pc.distance, tau, pc.mu);
  return protocols::make_protocol(kind, pc.distance, tau);
}

inline void cmd_convey(const ExperimentConfig& cfg, unsigned workers, Output& out) {
  for (const auto& c : cfg.cases) {
    const auto& s = *c.convey;
    const auto& pc = s.protocol;
    const Grid grid = s.grid.grid();
    std::vector<ConveyJob> jobs;
    for (auto kind : pc.kinds)
      for (double tau : pc.durations)
        for (int level : pc.levels) jobs.push_back({kind, tau, level});

    std::optional<protocols::GammaOfSlope> gamma;
    if (pc.estimate) gamma = protocols::weber_gamma_table(c.params, pc.estimate_slopes);
    std::size_t max_levels = pc.spectrogram_levels;
    protocols::EigenCache cache(grid, c.params, max_levels);

    const auto runs = parallel_map(jobs.size(), workers, [&](std::size_t i) {
      const auto& job = jobs[i];
      ConveyOutcome o{job, {}, std::nullopt, std::nullopt};
      const auto proto = build_protocol(pc, job.kind, job.tau);
      protocols::ConveyanceOptions opt;
      opt.level = job.level;
      opt.record_stride = pc.record_stride;
      opt.snapshot_stride = pc.snapshot_stride;
      opt.extra_time = pc.extra_time;
      opt.absorber = s.absorber;
      o.run = protocols::run_conveyance(proto, c.params, grid, s.dt, opt);
      if (pc.spectrogram)
        o.spectrogram = protocols::population_spectrogram(o.run.snapshots, proto, c.params, max_levels, &cache);
      if (gamma && job.kind != protocols::Kind::constant_velocity && job.level == 0)
        o.estimate = protocols::adiabatic_tunneling_estimate(proto, c.params, *gamma).p_final;
      return o;
    });

    const auto pre = detail::prefix(cfg, c);
    auto summary = out.table({"kind", "tau", "p_final", "one_minus_p", "level", "P_final", "p_estimate"});
    std::map<std::tuple<std::string, int>, std::pair<std::vector<double>, std::vector<double>>> curves;
    std::map<std::pair<std::string, double>, std::map<int, double>> finals;
    for (const auto& o : runs) {
      const auto kind = protocols::to_string(o.job.kind);
      const std::string stem = pre + "convey_" + kind + "_tau" + detail::tag(o.job.tau) + "_n" +
                               std::to_string(o.job.level);
      const auto& r = o.run;
      const bool pm = o.job.kind == protocols::Kind::constant_velocity;
      std::vector<std::string> cols{"t", "x0", "v", "a", "p", "P", "norm"};
      if (pm) cols.insert(cols.end(), {"p_plus", "p_minus"});
      auto t = out.table(cols);
      for (std::size_t i = 0; i < r.times.size(); ++i) {
        std::vector<double> v{r.times[i], r.x0[i], r.v[i], r.a[i], r.p[i], r.P[i], r.norm[i]};
        if (pm) {
          v.push_back(r.p_plus[i]);
          v.push_back(r.p_minus[i]);
        }
        t.add_numbers(v);
      }
      out.save(t, stem + ".csv");
      if (!r.snapshots.empty()) {
        auto snap = out.table({"t", "x", "abs"});
        for (const auto& sn : r.snapshots)
          for (std::size_t j = 0; j < sn.state.size(); ++j)
            snap.add_row({sn.time, sn.state.grid().x(j), std::abs(sn.state[j])});
        out.save(snap, stem + "_snapshots.csv");
      }
      if (o.spectrogram) {
        auto sp = out.table({"t", "a", "k", "energy", "weight"});
        for (const auto& row : o.spectrogram->rows)
          for (std::size_t k = 0; k < row.weights.size(); ++k)
            sp.add_row({row.time, row.acceleration, static_cast<double>(k), row.energies[k], row.weights[k]});
        out.save(sp, pre + "spectrogram_" + kind + "_tau" + detail::tag(o.job.tau) + "_n" +
                         std::to_string(o.job.level) + ".csv");
      }
      summary.add_row({kind, io::format_number(o.job.tau), io::format_number(r.p_final),
                       io::format_number(1.0 - r.p_final), std::to_string(o.job.level),
                       io::format_number(r.P_final), io::format_number(detail::or_nan(o.estimate))});
      auto& curve = curves[{kind, o.job.level}];
      curve.first.push_back(o.job.tau);
      curve.second.push_back(r.p_final);
      finals[{kind, o.job.tau}][o.job.level] = r.p_final;
    }
    out.save(summary, pre + "convey_summary.csv");

    if (pc.durations.size() >= 2) {
      auto scaling = out.table({"kind", "level", "slope", "intercept", "r_squared"});
      for (const auto& [key, curve] : curves) {
        try {
          const auto f = protocols::scaling_slope(curve.first, curve.second);
          scaling.add_row({std::get<0>(key), std::to_string(std::get<1>(key)), io::format_number(f.slope),
                           io::format_number(f.intercept), io::format_number(f.r_squared)});
        } catch (const Error& e) {
          scaling.add_row({std::get<0>(key), std::to_string(std::get<1>(key)), "nan", "nan", "nan"});
        }
      }
      out.save(scaling, pre + "convey_scaling.csv");
    }
    const bool selection = std::find(pc.levels.begin(), pc.levels.end(), 0) != pc.levels.end() &&
                           std::find(pc.levels.begin(), pc.levels.end(), 1) != pc.levels.end();
    if (selection) {
      auto sel = out.table({"kind", "tau", "p0", "p1", "ratio"});
      for (const auto& [key, by_level] : finals) {
        const double p0 = by_level.at(0), p1 = by_level.at(1);
        sel.add_row({key.first, io::format_number(key.second), io::format_number(p0), io::format_number(p1),
                     io::format_number(p1 > 0.0 ? p0 / p1 : kNaN)});
      }
      out.save(sel, pre + "convey_selection.csv");
    }
  }
}

// ---------------------------------------------------------------- compare

struct CompareRow {
  double mass = 0.0;
  double ma = 0.0;
  double relax = kNaN, absorb = kNaN, res = kNaN, airy = kNaN, weber = kNaN;
  std::string status;
};

inline void cmd_compare(const ExperimentConfig& cfg, unsigned workers, Output& out) {
  enum Method { relax, absorb, res, wkb };
  struct Task {
    std::size_t case_index;
    std::size_t ma_index;
    Method method;
  };
  std::vector<Task> tasks;
  for (std::size_t ci = 0; ci < cfg.cases.size(); ++ci) {
    const auto& c = cfg.cases[ci];
    for (std::size_t mi = 0; mi < c.ma_values.size(); ++mi) {
      if (c.relax) tasks.push_back({ci, mi, relax});
      if (c.absorb) tasks.push_back({ci, mi, absorb});
      if (c.resonance) tasks.push_back({ci, mi, res});
      if (c.wkb) tasks.push_back({ci, mi, wkb});
    }
  }
  struct Result {
    double a = kNaN, b = kNaN;
    std::string status;
  };
  const auto results = parallel_map(tasks.size(), workers, [&](std::size_t i) {
    const auto& task = tasks[i];
    const auto& c = cfg.cases[task.case_index];
    const double ma = c.ma_values[task.ma_index];
    Result r;
    try {
      switch (task.method) {
        case relax: {
          const auto o = relax_one(c.params, *c.relax, ma);
          r.a = o.run.fit.rate;
          if (o.status != "ok") r.status = "relax:" + o.status;
          break;
        }
        case absorb: r.a = absorb_one(c.params, *c.absorb, ma, false).fit.rate; break;
        case res: r.a = resonance_one(c.params, *c.resonance, ma).gamma; break;
        case wkb: {
          const auto row = semiclassics::gamma_table(c.params, {ma}, *c.wkb).front();
          if (row.airy) r.a = row.airy->gamma_airy;
          if (row.weber) r.b = row.weber->gamma_weber;
          if (!row.error.empty()) r.status = "wkb:" + row.error;
          break;
        }
      }
    } catch (const Error& e) {
      static const char* names[] = {"relax", "absorb", "resonance", "wkb"};
      r.status = std::string(names[task.method]) + ":" + to_string(e.kind());
    }
    return r;
  });

  std::map<std::pair<std::size_t, std::size_t>, CompareRow> rows;
  for (std::size_t i = 0; i < tasks.size(); ++i) {
    const auto& task = tasks[i];
    const auto& c = cfg.cases[task.case_index];
    auto& row = rows[{task.case_index, task.ma_index}];
    row.mass = c.params.mass;
    row.ma = c.ma_values[task.ma_index];
    const auto& r = results[i];
    switch (task.method) {
      case relax: row.relax = r.a; break;
      case absorb: row.absorb = r.a; break;
      case res: row.res = r.a; break;
      case wkb:
        row.airy = r.a;
        row.weber = r.b;
        break;
    }
    if (!r.status.empty()) row.status += (row.status.empty() ? "" : ";") + r.status;
  }
  auto table = out.table({"case", "mass", "ma", "gamma_relax", "gamma_absorb", "gamma_res", "gamma_airy",
                          "gamma_weber", "status"});
  for (const auto& [key, row] : rows) {
    std::vector<std::string> cells{cfg.cases[key.first].label};
    for (double v : {row.mass, row.ma, row.relax, row.absorb, row.res, row.airy, row.weber})
      cells.push_back(io::format_number(v));
    cells.push_back(row.status.empty() ? "ok" : row.status);
    table.add_row(cells);
  }
  out.save(table, "compare.csv");
}

// ---------------------------------------------------------------- dispatch

/// Runs a validated experiment and writes its manifest last.
inline io::RunManifest run_experiment(const ExperimentConfig& cfg, unsigned workers) {
  io::RunManifest manifest;
  manifest.command = config::to_string(cfg.command);
  manifest.config_hash = cfg.hash;
  manifest.tool_version = CONVEYANCE_VERSION;
  manifest.started = io::utc_timestamp();
  manifest.workers = workers;
  Output out(cfg);
  switch (cfg.command) {
    case config::Command::spectrum: cmd_spectrum(cfg, workers, out); break;
    case config::Command::relax: cmd_relax(cfg, workers, out); break;
    case config::Command::absorb: cmd_absorb(cfg, workers, out); break;
    case config::Command::wkb: cmd_wkb(cfg, workers, out); break;
    case config::Command::resonance: cmd_resonance(cfg, workers, out); break;
    case config::Command::convey: cmd_convey(cfg, workers, out); break;
    case config::Command::compare: cmd_compare(cfg, workers, out); break;
  }
  manifest.outputs = out.files();
  manifest.finished = io::utc_timestamp();
  manifest.save(out.dir());
  return manifest;
}

}  // namespace conveyance::commands

#endif  // CONVEYANCE_COMMANDS_HPP
