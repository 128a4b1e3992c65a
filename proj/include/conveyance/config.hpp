#ifndef CONVEYANCE_CONFIG_HPP
#define CONVEYANCE_CONFIG_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "conveyance/core_model.hpp"
#include "conveyance/error.hpp"
#include "conveyance/fitting.hpp"
#include "conveyance/io.hpp"
#include "conveyance/propagator.hpp"
#include "conveyance/protocols.hpp"
#include "conveyance/semiclassics.hpp"

namespace conveyance::config {

using json = nlohmann::json;

/// Collects every violation before failing.
class Issues {
 public:
  void add(const std::string& where, const std::string& what) {
    items_.push_back(where.empty() ? what : where + ": " + what);
  }
  bool empty() const noexcept { return items_.empty(); }
  const std::vector<std::string>& items() const noexcept { return items_; }

  void throw_if_any() const {
    if (items_.empty()) return;
    std::ostringstream os;
    os << "invalid configuration (" << items_.size() << (items_.size() == 1 ? " problem)" : " problems)");
    for (const auto& s : items_) os << "\n  - " << s;
    throw Error(ErrorKind::config, os.str());
  }

 private:
  std::vector<std::string> items_;
};

namespace detail {

inline std::string join(const std::string& path, const std::string& key) {
  return path.empty() ? key : path + "." + key;
}

inline std::optional<double> number(const json& j, const std::string& key, const std::string& path,
                                    Issues& issues) {
  if (!j.is_object() || !j.contains(key)) return std::nullopt;
  const auto& v = j.at(key);
  if (!v.is_number()) {
    issues.add(join(path, key), "must be a number");
    return std::nullopt;
  }
  const double x = v.get<double>();
  if (!std::isfinite(x)) {
    issues.add(join(path, key), "must be finite");
    return std::nullopt;
  }
  return x;
}

inline double positive(const json& j, const std::string& key, double fallback, const std::string& path,
                       Issues& issues) {
  const auto v = number(j, key, path, issues);
  if (!v) return fallback;
  if (*v <= 0.0) issues.add(join(path, key), "must be > 0");
  return *v;
}

inline bool flag(const json& j, const std::string& key, bool fallback, const std::string& path,
                 Issues& issues) {
  if (!j.is_object() || !j.contains(key)) return fallback;
  if (!j.at(key).is_boolean()) {
    issues.add(join(path, key), "must be true or false");
    return fallback;
  }
  return j.at(key).get<bool>();
}

inline std::size_t count(const json& j, const std::string& key, std::size_t fallback,
                         const std::string& path, Issues& issues, std::size_t minimum = 0) {
  if (!j.is_object() || !j.contains(key)) return fallback;
  const auto& v = j.at(key);
  if (!v.is_number_integer() || v.get<long long>() < static_cast<long long>(minimum)) {
    issues.add(join(path, key), "must be an integer >= " + std::to_string(minimum));
    return fallback;
  }
  return static_cast<std::size_t>(v.get<long long>());
}

}  // namespace detail

/// A list of numbers, or {"from", "to", "count", "log"}.
inline std::vector<double> parse_values(const json& j, const std::string& path, Issues& issues) {
  std::vector<double> out;
  if (j.is_array()) {
    for (std::size_t i = 0; i < j.size(); ++i) {
      if (!j[i].is_number() || !std::isfinite(j[i].get<double>()))
        issues.add(path + "[" + std::to_string(i) + "]", "must be a finite number");
      else
        out.push_back(j[i].get<double>());
    }
  } else if (j.is_object()) {
    const auto from = detail::number(j, "from", path, issues);
    const auto to = detail::number(j, "to", path, issues);
    const auto n = detail::count(j, "count", 0, path, issues, 1);
    const bool log = detail::flag(j, "log", false, path, issues);
    if (!from || !to) {
      issues.add(path, "range needs numeric from and to");
      return out;
    }
    if (log && (*from <= 0.0 || *to <= 0.0)) {
      issues.add(path, "log range needs positive bounds");
      return out;
    }
    for (std::size_t i = 0; i < n; ++i) {
      const double u = n == 1 ? 0.0 : static_cast<double>(i) / static_cast<double>(n - 1);
      out.push_back(log ? std::exp(std::log(*from) + u * (std::log(*to) - std::log(*from)))
                        : *from + u * (*to - *from));
    }
  } else {
    issues.add(path, "must be a list of numbers or a range object");
    return out;
  }
  if (out.empty()) issues.add(path, "must not be empty");
  return out;
}

inline model::PhysicalParams parse_params(const json& root, Issues& issues) {
  model::PhysicalParams p;
  if (!root.contains("params")) return p;
  const auto& j = root.at("params");
  if (!j.is_object()) {
    issues.add("params", "must be an object");
    return p;
  }
  p.mass = detail::positive(j, "mass", p.mass, "params", issues);
  p.depth = detail::positive(j, "depth", p.depth, "params", issues);
  p.width = detail::positive(j, "width", p.width, "params", issues);
  p.hbar = detail::positive(j, "hbar", p.hbar, "params", issues);
  return p;
}

struct GridConfig {
  double x_min = -20.0;
  double x_max = 20.0;
  double dx = 0.1;
  Grid grid() const { return Grid(x_min, x_max, dx); }
};

inline GridConfig parse_grid(const json& j, const std::string& path, const model::PhysicalParams& p,
                             Issues& issues) {
  GridConfig g;
  if (!j.is_object()) {
    issues.add(path, "grid section is required");
    return g;
  }
  const auto lo = detail::number(j, "x_min", path, issues);
  const auto hi = detail::number(j, "x_max", path, issues);
  if (!lo || !hi) {
    issues.add(path, "x_min and x_max are required");
  } else {
    g.x_min = *lo;
    g.x_max = *hi;
  }
  g.dx = detail::positive(j, "dx", g.dx, path, issues);
  if (g.x_max <= g.x_min) {
    issues.add(path, "x_max must exceed x_min");
    return g;
  }
  const double reach = 2.0 * p.width;
  if (g.x_min > -reach || g.x_max < reach)
    issues.add(path, "grid must contain the well region |x| <= 2 w");
  if (g.dx > 0.0 && (g.x_max - g.x_min) / g.dx < 2.0) issues.add(path, "grid needs at least 3 points");
  return g;
}

struct TimeConfig {
  double dt = 0.1;
  double t_max = 0.0;
  propagate::TimeGrid time_grid() const {
    return {dt, static_cast<std::size_t>(std::llround(t_max / dt))};
  }
};

inline TimeConfig parse_time(const json& j, const std::string& path, bool need_t_max, Issues& issues) {
  TimeConfig t;
  if (!j.is_object()) {
    issues.add(path, "time section is required");
    return t;
  }
  t.dt = detail::positive(j, "dt", t.dt, path, issues);
  if (need_t_max) {
    if (!j.contains("t_max"))
      issues.add(path, "t_max is required");
    else
      t.t_max = detail::positive(j, "t_max", 0.0, path, issues);
  }
  return t;
}

struct FitConfig {
  fit::DecayForm form = fit::DecayForm::pure;
  std::optional<double> start{};
};

inline FitConfig parse_fit(const json& root, const std::string& path, fit::DecayForm fallback,
                           Issues& issues) {
  FitConfig f;
  f.form = fallback;
  if (!root.contains("fit")) return f;
  const auto& j = root.at("fit");
  const std::string where = detail::join(path, "fit");
  if (j.contains("form")) {
    const auto s = j.at("form").is_string() ? j.at("form").get<std::string>() : std::string{};
    if (s == "pure")
      f.form = fit::DecayForm::pure;
    else if (s == "with_offset" || s == "offset")
      f.form = fit::DecayForm::with_offset;
    else
      issues.add(where + ".form", "must be \"pure\" or \"with_offset\"");
  }
  if (const auto s = detail::number(j, "start", where, issues)) {
    if (*s < 0.0) issues.add(where + ".start", "must be >= 0");
    f.start = *s;
  }
  return f;
}

inline std::optional<propagate::AbsorbingPotential> parse_absorber(const json& root, const std::string& path,
                                                                   const GridConfig& g,
                                                                   const model::PhysicalParams& p,
                                                                   Issues& issues) {
  if (!root.contains("absorber") || root.at("absorber").is_null()) return std::nullopt;
  const auto& j = root.at("absorber");
  const std::string where = detail::join(path, "absorber");
  propagate::AbsorbingPotential a;
  if (const auto s = detail::number(j, "strength", where, issues)) {
    if (*s < 0.0) issues.add(where + ".strength", "must be >= 0");
    a.strength = *s;
  } else {
    issues.add(where, "strength is required");
  }
  a.width = detail::positive(j, "width", a.width, where, issues);
  if (j.contains("side")) {
    try {
      a.side = propagate::parse_side(j.at("side").get<std::string>());
    } catch (const std::exception&) {
      issues.add(where + ".side", "must be left, right or both");
    }
  }
  const double reach = 2.0 * p.width;
  if (a.side != propagate::AbsorberSide::right && g.x_min + a.width > -reach)
    issues.add(where, "left absorber overlaps the well or lies outside the grid");
  if (a.side != propagate::AbsorberSide::left && g.x_max - a.width < reach)
    issues.add(where, "right absorber overlaps the well or lies outside the grid");
  return a;
}

struct ProtocolConfig {
  std::vector<protocols::Kind> kinds;
  double distance = 0.0;
  std::vector<double> durations;
  std::vector<int> levels{0};
  double extra_time = 0.0;
  std::size_t record_stride = 1;
  std::size_t snapshot_stride = 0;
  bool spectrogram = false;
  std::size_t spectrogram_levels = 30;
  bool estimate = false;
  std::vector<double> estimate_slopes;
  std::vector<double> samples;
  int mu = 3;
};

inline ProtocolConfig parse_protocol(const json& root, const model::PhysicalParams& params,
                                     const GridConfig& g, Issues& issues) {
  ProtocolConfig pc;
  if (!root.contains("protocol") || !root.at("protocol").is_object()) {
    issues.add("protocol", "protocol section is required");
    return pc;
  }
  const auto& j = root.at("protocol");
  const std::string where = "protocol";
  if (!j.contains("kinds") || !j.at("kinds").is_array() || j.at("kinds").empty()) {
    issues.add(where + ".kinds", "must be a non-empty list");
  } else {
    for (const auto& k : j.at("kinds")) {
      try {
        pc.kinds.push_back(protocols::parse_kind(k.get<std::string>()));
      } catch (const std::exception&) {
        issues.add(where + ".kinds", "unknown protocol kind " + k.dump());
      }
    }
  }
  if (!j.contains("distance"))
    issues.add(where, "distance is required");
  else
    pc.distance = detail::positive(j, "distance", 0.0, where, issues);
  if (!j.contains("durations")) {
    issues.add(where, "durations are required");
  } else {
    pc.durations = parse_values(j.at("durations"), where + ".durations", issues);
    for (double t : pc.durations)
      if (t <= 0.0) {
        issues.add(where + ".durations", "every duration must be > 0");
        break;
      }
  }
  if (j.contains("levels")) {
    pc.levels.clear();
    const auto& lv = j.at("levels");
    if (!lv.is_array() || lv.empty()) issues.add(where + ".levels", "must be a non-empty list");
    const auto bound = model::bound_state_energies(params).size();
    for (const auto& l : lv) {
      if (!l.is_number_integer() || l.get<long long>() < 0 ||
          static_cast<std::size_t>(l.get<long long>()) >= bound) {
        issues.add(where + ".levels", "level " + l.dump() + " is not a bound state (there are " +
                                          std::to_string(bound) + ")");
      } else {
        pc.levels.push_back(l.get<int>());
      }
    }
  }
  if (const auto e = detail::number(j, "extra_time", where, issues)) {
    if (*e < 0.0) issues.add(where + ".extra_time", "must be >= 0");
    pc.extra_time = *e;
  }
  pc.record_stride = detail::count(j, "record_stride", 1, where, issues, 1);
  pc.snapshot_stride = detail::count(j, "snapshot_stride", 0, where, issues);
  pc.spectrogram = detail::flag(j, "spectrogram", false, where, issues);
  pc.spectrogram_levels = detail::count(j, "spectrogram_levels", 30, where, issues, 1);
  if (pc.spectrogram && pc.snapshot_stride == 0)
    issues.add(where, "spectrogram needs snapshot_stride > 0");
  pc.estimate = detail::flag(j, "estimate", false, where, issues);
  if (pc.estimate) {
    if (!j.contains("estimate_slopes"))
      issues.add(where, "estimate needs estimate_slopes");
    else
      pc.estimate_slopes = parse_values(j.at("estimate_slopes"), where + ".estimate_slopes", issues);
  }
  const bool custom = std::find(pc.kinds.begin(), pc.kinds.end(), protocols::Kind::custom) != pc.kinds.end();
  if (custom) {
    if (!j.contains("samples"))
      issues.add(where, "custom protocol needs samples");
    else
      pc.samples = parse_values(j.at("samples"), where + ".samples", issues);
    if (j.contains("mu")) pc.mu = static_cast<int>(detail::count(j, "mu", 3, where, issues));
    if (!pc.samples.empty() && pc.distance > 0.0)
      for (double tau : pc.durations) {
        if (tau <= 0.0) continue;
        try {
          protocols::make_custom_protocol(pc.samples, pc.distance, tau, pc.mu);
        } catch (const Error& e) {
          issues.add(where + ".samples", "tau = " + io::format_number(tau) + ": " + e.what());
        }
      }
  }
  if (pc.distance > 0.0 && g.x_max - g.x_min < pc.distance)
    issues.add("grid", "grid span must cover the conveyance distance");
  return pc;
}


enum class Command { spectrum, relax, absorb, wkb, resonance, convey, compare };

inline const char* to_string(Command c) {
  switch (c) {
    case Command::spectrum: return "spectrum";
    case Command::relax: return "relax";
    case Command::absorb: return "absorb";
    case Command::wkb: return "wkb";
    case Command::resonance: return "resonance";
    case Command::convey: return "convey";
    case Command::compare: return "compare";
  }
  return "?";
}

inline std::optional<Command> parse_command(const std::string& s) {
  for (auto c : {Command::spectrum, Command::relax, Command::absorb, Command::wkb, Command::resonance,
                 Command::convey, Command::compare})
    if (s == to_string(c)) return c;
  return std::nullopt;
}

struct SpectrumSettings {
  GridConfig grid;
  std::vector<double> a_values;
  std::size_t levels = 40;
};

struct RelaxSettings {
  GridConfig grid;
  TimeConfig time;
  FitConfig fit;
  bool lorentzian = false;
  bool overlaps = false;
};

struct AbsorbSettings {
  GridConfig grid;
  TimeConfig time;
  FitConfig fit;
  propagate::AbsorbingPotential absorber;
  std::size_t record_stride = 1;
  std::size_t snapshot_stride = 0;
  bool bare = false;  // also run without the absorber
  std::optional<double> energy_reference{};
};

struct ResonanceSettings {
  GridConfig grid;
  std::optional<std::complex<double>> guess{};
  bool spectrum = true;
};

struct ConveySettings {
  GridConfig grid;
  double dt = 0.1;
  ProtocolConfig protocol;
  std::optional<propagate::AbsorbingPotential> absorber{};
};

struct CaseConfig {
  std::string label;
  model::PhysicalParams params;
  std::vector<double> ma_values;
  std::optional<SpectrumSettings> spectrum;
  std::optional<RelaxSettings> relax;
  std::optional<AbsorbSettings> absorb;
  std::optional<semiclassics::WkbOptions> wkb;
  std::optional<ResonanceSettings> resonance;
  std::optional<ConveySettings> convey;
};

struct ExperimentConfig {
  Command command = Command::spectrum;
  json document;  // as hashed
  std::string hash;
  std::string output_dir;
  std::vector<CaseConfig> cases;
};

struct Overrides {
  std::optional<std::string> output_dir{};
  bool weber_paper_kappa = false;
};

namespace detail {

/// The case document with grid/time/fit/absorber taken from a method section.
inline json method_view(const json& doc, const std::string& method) {
  json view = doc;
  if (!doc.contains(method) || !doc.at(method).is_object()) return view;
  for (const char* key : {"grid", "time", "fit", "absorber"}) {
    if (!doc.at(method).contains(key)) continue;
    const auto& patch = doc.at(method).at(key);
    if (view.contains(key) && view.at(key).is_object() && patch.is_object())
      view[key].merge_patch(patch);
    else
      view[key] = patch;
  }
  return view;
}

inline const json& section(const json& doc, const std::string& name) {
  static const json empty = json::object();
  return doc.contains(name) && doc.at(name).is_object() ? doc.at(name) : empty;
}

inline std::vector<double> ma_values(const json& doc, Issues& issues) {
  if (!doc.contains("ma_values")) {
    issues.add("ma_values", "list of slopes m a is required");
    return {};
  }
  auto v = parse_values(doc.at("ma_values"), "ma_values", issues);
  for (double s : v)
    if (s <= 0.0) {
      issues.add("ma_values", "every slope must be > 0");
      break;
    }
  return v;
}

inline RelaxSettings relax_settings(const json& doc, const model::PhysicalParams& p, Issues& issues) {
  const json v = method_view(doc, "relax");
  RelaxSettings s;
  s.grid = parse_grid(v.value("grid", json()), "grid", p, issues);
  s.time = parse_time(v.value("time", json()), "time", true, issues);
  s.fit = parse_fit(v, "", fit::DecayForm::pure, issues);
  const auto& sec = section(doc, "relax");
  s.lorentzian = flag(sec, "lorentzian", false, "relax", issues);
  s.overlaps = flag(sec, "overlaps", false, "relax", issues);
  return s;
}

inline AbsorbSettings absorb_settings(const json& doc, const model::PhysicalParams& p, Issues& issues) {
  const json v = method_view(doc, "absorb");
  AbsorbSettings s;
  s.grid = parse_grid(v.value("grid", json()), "grid", p, issues);
  s.time = parse_time(v.value("time", json()), "time", true, issues);
  s.fit = parse_fit(v, "", fit::DecayForm::with_offset, issues);
  if (const auto a = parse_absorber(v, "", s.grid, p, issues))
    s.absorber = *a;
  else
    issues.add("absorber", "absorber section is required");
  const auto& sec = section(doc, "absorb");
  s.record_stride = count(sec, "record_stride", 1, "absorb", issues, 1);
  s.snapshot_stride = count(sec, "snapshot_stride", 0, "absorb", issues);
  s.bare = flag(sec, "bare", false, "absorb", issues);
  s.energy_reference = number(sec, "energy_reference", "absorb", issues);
  if (s.fit.start && s.time.t_max > 0.0 && *s.fit.start >= s.time.t_max)
    issues.add("fit.start", "must lie before time.t_max");
  return s;
}

inline ResonanceSettings resonance_settings(const json& doc, const model::PhysicalParams& p,
                                            Issues& issues) {
  const json v = method_view(doc, "resonance");
  ResonanceSettings s;
  s.grid = parse_grid(v.value("grid", json()), "grid", p, issues);
  const auto& sec = section(doc, "resonance");
  if (sec.contains("guess")) {
    const auto& g = sec.at("guess");
    if (g.is_array() && g.size() == 2 && g[0].is_number() && g[1].is_number())
      s.guess = std::complex<double>(g[0].get<double>(), g[1].get<double>());
    else
      issues.add("resonance.guess", "must be [re, im]");
  }
  s.spectrum = flag(sec, "spectrum", true, "resonance", issues);
  return s;
}

inline semiclassics::WkbOptions wkb_settings(const json& doc, bool paper_kappa, Issues& issues) {
  semiclassics::WkbOptions o;
  const auto& sec = section(doc, "wkb");
  o.paper_kappa = flag(sec, "paper_kappa", false, "wkb", issues) || paper_kappa;
  o.phase_derivative = flag(sec, "phase_derivative", true, "wkb", issues);
  o.above_barrier = flag(sec, "above_barrier", true, "wkb", issues);
  return o;
}

inline CaseConfig parse_case(const json& doc, Command command, bool paper_kappa, Issues& issues) {
  CaseConfig c;
  c.params = parse_params(doc, issues);
  const auto& p = c.params;
  switch (command) {
    case Command::spectrum: {
      SpectrumSettings s;
      s.grid = parse_grid(doc.value("grid", json()), "grid", p, issues);
      if (!doc.contains("a_values"))
        issues.add("a_values", "list of accelerations is required");
      else
        s.a_values = parse_values(doc.at("a_values"), "a_values", issues);
      s.levels = count(doc, "levels", 40, "", issues, 1);
      if (s.grid.dx > 0.0 && s.grid.x_max > s.grid.x_min &&
          static_cast<double>(s.levels) > (s.grid.x_max - s.grid.x_min) / s.grid.dx + 1.0)
        issues.add("levels", "exceeds the number of grid points");
      c.spectrum = s;
      break;
    }
    case Command::relax:
      c.ma_values = ma_values(doc, issues);
      c.relax = relax_settings(doc, p, issues);
      break;
    case Command::absorb:
      c.ma_values = ma_values(doc, issues);
      c.absorb = absorb_settings(doc, p, issues);
      break;
    case Command::wkb:
      c.ma_values = ma_values(doc, issues);
      c.wkb = wkb_settings(doc, paper_kappa, issues);
      break;
    case Command::resonance:
      c.ma_values = ma_values(doc, issues);
      c.resonance = resonance_settings(doc, p, issues);
      break;
    case Command::convey: {
      ConveySettings s;
      s.grid = parse_grid(doc.value("grid", json()), "grid", p, issues);
      s.dt = parse_time(doc.value("time", json()), "time", false, issues).dt;
      s.protocol = parse_protocol(doc, p, s.grid, issues);
      s.absorber = parse_absorber(doc, "", s.grid, p, issues);
      c.convey = s;
      break;
    }
    case Command::compare: {
      c.ma_values = ma_values(doc, issues);
      std::vector<std::string> methods{"relax", "absorb", "resonance", "wkb"};
      if (doc.contains("methods")) {
        methods.clear();
        const auto& m = doc.at("methods");
        if (!m.is_array() || m.empty()) issues.add("methods", "must be a non-empty list");
        for (const auto& x : m) {
          const auto name = x.is_string() ? x.get<std::string>() : std::string{};
          if (name == "relax" || name == "absorb" || name == "resonance" || name == "wkb")
            methods.push_back(name);
          else
            issues.add("methods", "unknown method " + x.dump());
        }
      }
      auto has = [&](const char* n) { return std::find(methods.begin(), methods.end(), n) != methods.end(); };
      if (has("relax")) c.relax = relax_settings(doc, p, issues);
      if (has("absorb")) c.absorb = absorb_settings(doc, p, issues);
      if (has("resonance")) c.resonance = resonance_settings(doc, p, issues);
      if (has("wkb")) c.wkb = wkb_settings(doc, paper_kappa, issues);
      break;
    }
  }
  return c;
}

}  // namespace detail

/// Validates the whole document, including every case, before anything runs.
inline ExperimentConfig parse_experiment(const json& document, Command command,
                                         const Overrides& overrides = {}) {
  Issues issues;
  ExperimentConfig cfg;
  cfg.command = command;
  if (!document.is_object()) {
    issues.add("", "configuration must be a JSON object");
    issues.throw_if_any();
  }
  if (document.contains("command")) {
    const auto& c = document.at("command");
    if (!c.is_string() || c.get<std::string>() != to_string(command))
      issues.add("command", "document is for " + c.dump() + ", not \"" + to_string(command) + "\"");
  }
  if (overrides.output_dir) {
    cfg.output_dir = *overrides.output_dir;
  } else if (document.contains("output") && document.at("output").is_object() &&
             document.at("output").contains("dir") && document.at("output").at("dir").is_string()) {
    cfg.output_dir = document.at("output").at("dir").get<std::string>();
  } else {
    issues.add("output.dir", "no output directory (set output.dir or pass --out)");
  }

  cfg.document = document;
  cfg.document.erase("output");
  if (overrides.weber_paper_kappa) cfg.document["wkb"]["paper_kappa"] = true;
  cfg.hash = io::config_hash(cfg.document);

  json base = document;
  base.erase("cases");
  base.erase("output");
  if (document.contains("cases")) {
    const auto& cases = document.at("cases");
    if (!cases.is_array() || cases.empty()) {
      issues.add("cases", "must be a non-empty list");
    } else {
      for (std::size_t i = 0; i < cases.size(); ++i) {
        const std::string where = "cases[" + std::to_string(i) + "]";
        if (!cases[i].is_object()) {
          issues.add(where, "must be an object");
          continue;
        }
        json merged = base;
        merged.merge_patch(cases[i]);
        Issues local;
        auto c = detail::parse_case(merged, command, overrides.weber_paper_kappa, local);
        for (const auto& s : local.items()) issues.add(where, s);
        c.label = cases[i].contains("label") && cases[i].at("label").is_string()
                      ? cases[i].at("label").get<std::string>()
                      : "case" + std::to_string(i);
        cfg.cases.push_back(std::move(c));
      }
    }
  } else {
    cfg.cases.push_back(detail::parse_case(base, command, overrides.weber_paper_kappa, issues));
  }
  issues.throw_if_any();
  return cfg;
}

inline json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  require(static_cast<bool>(in), ErrorKind::config, "cannot read configuration " + path.string());
  try {
    return json::parse(in, nullptr, true, true);
  } catch (const json::parse_error& e) {
    throw Error(ErrorKind::config, path.string() + ": " + e.what());
  }
}

}  // namespace conveyance::config

#endif  // CONVEYANCE_CONFIG_HPP
