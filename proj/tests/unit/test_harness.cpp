#include <catch_amalgamated.hpp>

#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>

#include "conveyance/commands.hpp"

using namespace conveyance;
using Catch::Approx;
using json = nlohmann::json;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("conveyance_test_" + name);
  fs::remove_all(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

json spectrum_doc(const fs::path& out) {
  auto doc = json::parse(R"({
    "params": {"mass": 10},
    "grid": {"x_min": -10, "x_max": 10, "dx": 0.1},
    "a_values": {"from": 0, "to": 0.0002, "count": 5},
    "levels": 8
  })");
  doc["output"]["dir"] = out.string();
  return doc;
}

std::string problems(const json& doc, config::Command cmd) {
  try {
    config::parse_experiment(doc, cmd);
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::config);
    return e.what();
  }
  FAIL("configuration was accepted");
  return {};
}

}  // namespace

TEST_CASE("config hash ignores key order", "[harness]") {
  const auto a = json::parse(R"({"params": {"mass": 1, "depth": 1}, "ma_values": [0.2]})");
  const auto b = json::parse(R"({"ma_values": [0.2], "params": {"depth": 1, "mass": 1}})");
  CHECK(io::config_hash(a) == io::config_hash(b));
  const auto c = json::parse(R"({"ma_values": [0.3], "params": {"depth": 1, "mass": 1}})");
  CHECK(io::config_hash(a) != io::config_hash(c));
  CHECK(io::config_hash(a).size() == 16);
  CHECK(io::fnv1a("") == 0xcbf29ce484222325ULL);
  CHECK(io::fnv1a("a") == 0xaf63dc4c8601ec8cULL);
}

TEST_CASE("output directory does not change the hash", "[harness]") {
  auto doc = spectrum_doc("/tmp/x");
  const auto h1 = config::parse_experiment(doc, config::Command::spectrum).hash;
  doc["output"]["dir"] = "/tmp/y";
  CHECK(config::parse_experiment(doc, config::Command::spectrum).hash == h1);
  config::Overrides o;
  o.weber_paper_kappa = true;
  CHECK(config::parse_experiment(doc, config::Command::spectrum, o).hash != h1);
}

TEST_CASE("csv tables", "[harness]") {
  io::CsvTable t({"t", "p"}, "abc");
  t.add_row({0.0, 1.0});
  t.add_row({0.5, 0.25});
  CHECK(t.str() == "# config_hash=abc\nt,p\n0,1\n0.5,0.25\n");
  CHECK_THROWS_AS(t.add_row({1.0}), Error);
  CHECK(io::format_number(std::nan("")) == "nan");
  const auto dir = scratch("csv");
  t.save(dir / "a.csv");
  CHECK(slurp(dir / "a.csv") == t.str());
  CHECK_FALSE(fs::exists(dir / "a.csv.tmp"));
  fs::remove_all(dir);
}

TEST_CASE("validation reports every problem", "[harness]") {
  const auto doc = json::parse(R"({
    "params": {"mass": -1, "width": 0},
    "grid": {"x_min": -1, "x_max": 1, "dx": -0.1},
    "time": {"dt": 0},
    "ma_values": [],
    "absorber": {"strength": -2, "width": 5, "side": "top"}
  })");
  const auto msg = problems(doc, config::Command::absorb);
  for (const char* s : {"params.mass", "params.width", "grid.dx", "time.dt", "t_max", "ma_values",
                        "absorber.strength", "absorber.side", "output.dir"})
    CHECK(msg.find(s) != std::string::npos);

  auto convey = json::parse(R"({
    "params": {"mass": 1},
    "grid": {"x_min": -5, "x_max": 5, "dx": 0.1},
    "time": {"dt": 0.1},
    "protocol": {"kinds": ["cos", "warp"], "distance": 50, "durations": [10, -1], "levels": [0, 1]},
    "output": {"dir": "x"}
  })");
  const auto m2 = problems(convey, config::Command::convey);
  CHECK(m2.find("warp") != std::string::npos);
  CHECK(m2.find("every duration") != std::string::npos);
  CHECK(m2.find("level 1") != std::string::npos);
  CHECK(m2.find("conveyance distance") != std::string::npos);

  convey["command"] = "relax";
  CHECK(problems(convey, config::Command::convey).find("not \"convey\"") != std::string::npos);
}

TEST_CASE("empty acceleration list writes nothing", "[harness]") {
  const auto dir = scratch("empty");
  auto doc = spectrum_doc(dir);
  doc["a_values"] = json::array();
  const auto msg = problems(doc, config::Command::spectrum);
  CHECK(msg.find("a_values") != std::string::npos);
  CHECK_FALSE(fs::exists(dir));
}

TEST_CASE("cases and method sections", "[harness]") {
  const auto doc = json::parse(R"({
    "params": {"mass": 1},
    "grid": {"x_min": -20, "x_max": 20, "dx": 0.1},
    "time": {"dt": 0.1, "t_max": 50},
    "ma_values": [0.2],
    "absorb": {"grid": {"x_min": -150}, "time": {"dt": 0.05}, "absorber": {"strength": 2, "width": 30}},
    "methods": ["relax", "absorb", "wkb"],
    "cases": [{"label": "light"}, {"label": "heavy", "params": {"mass": 100}, "ma_values": [0.5, 0.6]}],
    "output": {"dir": "x"}
  })");
  const auto cfg = config::parse_experiment(doc, config::Command::compare);
  REQUIRE(cfg.cases.size() == 2);
  CHECK(cfg.cases[0].label == "light");
  CHECK(cfg.cases[1].params.mass == 100.0);
  CHECK(cfg.cases[1].ma_values.size() == 2);
  CHECK(cfg.cases[0].relax->grid.x_min == -20.0);
  CHECK(cfg.cases[0].absorb->grid.x_min == -150.0);
  CHECK(cfg.cases[0].absorb->grid.x_max == 20.0);
  CHECK(cfg.cases[0].absorb->time.dt == 0.05);
  CHECK(cfg.cases[0].absorb->time.t_max == 50.0);
  CHECK_FALSE(cfg.cases[0].resonance.has_value());
  CHECK(cfg.cases[0].wkb.has_value());

  auto broken = doc;
  broken["cases"][1]["params"]["mass"] = 0;
  CHECK(problems(broken, config::Command::compare).find("cases[1]: params.mass") != std::string::npos);
}

TEST_CASE("parallel map keeps order and rethrows", "[harness]") {
  const auto sq = parallel_map(50, 4, [](std::size_t i) { return static_cast<int>(i * i); });
  for (std::size_t i = 0; i < sq.size(); ++i) CHECK(sq[i] == static_cast<int>(i * i));
  std::atomic<int> calls{0};
  CHECK_THROWS_WITH(parallel_map(20, 3,
                                 [&](std::size_t i) {
                                   ++calls;
                                   if (i == 7 || i == 12) throw std::runtime_error("boom " + std::to_string(i));
                                   return i;
                                 }),
                    "boom 7");
  CHECK(calls == 20);
  CHECK(parallel_map(0, 4, [](std::size_t i) { return i; }).empty());
}

TEST_CASE("spectrum output is deterministic", "[harness]") {
  const auto d1 = scratch("det1"), d2 = scratch("det2");
  const auto m1 = commands::run_experiment(config::parse_experiment(spectrum_doc(d1), config::Command::spectrum), 1);
  const auto m2 = commands::run_experiment(config::parse_experiment(spectrum_doc(d2), config::Command::spectrum), 3);
  REQUIRE(m1.outputs == m2.outputs);
  for (const auto& f : m1.outputs) CHECK(slurp(d1 / f) == slurp(d2 / f));
  CHECK(fs::exists(d1 / "manifest.json"));
  const auto manifest = json::parse(slurp(d1 / "manifest.json"));
  CHECK(manifest.at("config_hash") == m1.config_hash);
  CHECK(manifest.at("outputs").size() == m1.outputs.size());

  // four nearly flat bound branches near a = 0 for m = 10
  std::ifstream in(d1 / "spectrum.csv");
  std::string line;
  std::getline(in, line);
  CHECK(line.rfind("# config_hash=", 0) == 0);
  std::getline(in, line);
  CHECK(line.rfind("a,ma,E0", 0) == 0);
  std::vector<std::vector<double>> rows;
  while (std::getline(in, line)) {
    std::vector<double> r;
    std::stringstream ss(line);
    for (std::string cell; std::getline(ss, cell, ',');) r.push_back(std::stod(cell));
    rows.push_back(r);
  }
  REQUIRE(rows.size() == 5);
  const auto exact = model::bound_state_energies(model::PhysicalParams{10.0, 1.0, 1.0, 1.0});
  REQUIRE(exact.size() == 4);
  for (std::size_t k = 0; k < 4; ++k) {
    CHECK(rows[0][2 + k] == Approx(exact[k]).margin(5e-3));
    CHECK(std::abs(rows.back()[2 + k] - rows.front()[2 + k]) < 1e-3);
  }
  CHECK(rows[0][6] > 0.0);
  fs::remove_all(d1);
  fs::remove_all(d2);
}

TEST_CASE("wkb and convey commands", "[harness]") {
  const auto dir = scratch("cmds");
  auto wkb = json::parse(R"({"params": {"mass": 1}, "ma_values": [0.2, 0.4, 0.9]})");
  wkb["output"]["dir"] = dir.string();
  const auto m = commands::run_experiment(config::parse_experiment(wkb, config::Command::wkb), 2);
  REQUIRE(m.outputs == std::vector<std::string>{"wkb.csv"});
  const auto text = slurp(dir / "wkb.csv");
  CHECK(text.find("\n1,0.2,") != std::string::npos);
  CHECK(text.find("geometry") != std::string::npos);  // ma = 0.9 has no well

  auto convey = json::parse(R"({
    "params": {"mass": 1},
    "grid": {"x_min": -30, "x_max": 30, "dx": 0.1},
    "time": {"dt": 0.05},
    "protocol": {"kinds": ["const-v", "sin"], "distance": 5, "durations": [10, 20], "record_stride": 10}
  })");
  convey["output"]["dir"] = (dir / "c").string();
  const auto mc = commands::run_experiment(config::parse_experiment(convey, config::Command::convey), 2);
  CHECK(fs::exists(dir / "c" / "convey_summary.csv"));
  CHECK(fs::exists(dir / "c" / "convey_scaling.csv"));
  const auto cv = slurp(dir / "c" / "convey_const-v_tau10_n0.csv");
  CHECK(cv.find("p_plus,p_minus") != std::string::npos);
  CHECK(mc.outputs.size() == 6);
  fs::remove_all(dir);
}

#ifdef CONVEYANCE_TOOL
TEST_CASE("command-line exit codes", "[harness]") {
  const auto dir = scratch("cli");
  fs::create_directories(dir);
  auto run = [&](const std::string& args) {
    const int status = std::system((std::string(CONVEYANCE_TOOL) + " " + args + " > /dev/null 2>&1").c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  };
  auto write = [&](const std::string& name, const json& j) {
    std::ofstream(dir / name) << j.dump();
    return (dir / name).string();
  };
  auto empty = spectrum_doc(dir / "out_empty");
  empty["a_values"] = json::array();
  CHECK(run("spectrum --config " + write("empty.json", empty)) == 2);
  CHECK_FALSE(fs::exists(dir / "out_empty"));
  CHECK(run("spectrum --config " + (dir / "missing.json").string()) == 2);
  CHECK(run("spectrum") == 2);
  CHECK(run("--help") == 0);

  const auto ok = write("ok.json", spectrum_doc(dir / "ignored"));
  CHECK(run("spectrum --config " + ok + " --out " + (dir / "out_ok").string() + " --workers 2") == 0);
  CHECK(fs::exists(dir / "out_ok" / "spectrum.csv"));
  CHECK_FALSE(fs::exists(dir / "ignored"));

  auto surface = json::parse(R"({
    "params": {"mass": 1}, "grid": {"x_min": -20, "x_max": 20, "dx": 0.1},
    "ma_values": [0.2], "resonance": {"guess": [5, -3]}
  })");
  surface["output"]["dir"] = (dir / "out_surface").string();
  CHECK(run("resonance --config " + write("surface.json", surface)) == 3);
  CHECK_FALSE(fs::exists(dir / "out_surface" / "manifest.json"));
  fs::remove_all(dir);
}
#endif

#ifdef CONVEYANCE_RECIPES
TEST_CASE("shipped recipes validate", "[harness]") {
  std::size_t seen = 0;
  for (int n = 2; n <= 14; ++n) {
    const fs::path path = fs::path(CONVEYANCE_RECIPES) / ("fig" + std::to_string(n) + ".json");
    INFO(path.string());
    REQUIRE(fs::exists(path));
    const auto doc = config::read_json_file(path);
    const auto cmd = config::parse_command(doc.at("command").get<std::string>());
    REQUIRE(cmd.has_value());
    CHECK_NOTHROW(config::parse_experiment(doc, *cmd));
    ++seen;
  }
  CHECK(seen == 13);
}

TEST_CASE("quick recipes run", "[harness]") {
  const auto dir = scratch("recipes");
  config::Overrides o;
  o.output_dir = (dir / "fig2").string();
  auto cfg = config::parse_experiment(config::read_json_file(fs::path(CONVEYANCE_RECIPES) / "fig2.json"),
                                      config::Command::spectrum, o);
  auto m = commands::run_experiment(cfg, 2);
  CHECK(m.outputs.size() == 4);
  CHECK(fs::exists(dir / "fig2" / "m10_spectrum.csv"));

  o.output_dir = (dir / "fig14").string();
  cfg = config::parse_experiment(config::read_json_file(fs::path(CONVEYANCE_RECIPES) / "fig14.json"),
                                 config::Command::resonance, o);
  m = commands::run_experiment(cfg, 1);
  const auto res = json::parse(slurp(dir / "fig14" / "resonance.json"));
  const auto& e = res.at("states").at(0).at("energy");
  CHECK(e.at(0).get<double>() == Approx(-0.56123).margin(5e-5));
  CHECK(e.at(1).get<double>() == Approx(-0.022144).margin(5e-6));
  CHECK(fs::exists(dir / "fig14" / "resonance_ma0.2_spectrum.csv"));
  fs::remove_all(dir);
}
#endif
