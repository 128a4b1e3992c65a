#include <cstdio>
#include <exception>
#include <iostream>
#include <string>

#include "CLI11.hpp"

#include "conveyance/commands.hpp"

namespace {

constexpr int kConfigError = 2;
constexpr int kNumericError = 3;

}  // namespace

int main(int argc, char** argv) {
  using namespace conveyance;
  CLI::App app{"Decay and transport of a particle in an accelerated tanh^2 trap"};
  app.set_version_flag("--version", std::string(CONVEYANCE_VERSION));
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir;
  unsigned workers = default_workers();
  bool paper_kappa = false;
  app.add_option("--config", config_path, "JSON experiment configuration")->required();
  app.add_option("--out", out_dir, "output directory (overrides output.dir)");
  app.add_option("--workers", workers, "parallel runs")->check(CLI::PositiveNumber);
  app.add_flag("--weber-paper-kappa", paper_kappa, "use kappa = exp(-S) in the Weber connection");

  const char* names[][2] = {
      {"spectrum", "energy levels against acceleration"},
      {"relax", "dephasing survival p(t) and its decay rate"},
      {"absorb", "Crank-Nicolson survival with an absorbing layer"},
      {"wkb", "semiclassical decay rates (Airy and Weber)"},
      {"resonance", "complex resonance energy and eigenvector"},
      {"convey", "transport protocols, sweeps and spectrograms"},
      {"compare", "decay rates from every method side by side"},
  };
  app.fallthrough();
  for (const auto& n : names) app.add_subcommand(n[0], n[1]);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kConfigError;
  }

  const auto command = config::parse_command(app.get_subcommands().front()->get_name());
  try {
    config::Overrides overrides;
    if (!out_dir.empty()) overrides.output_dir = out_dir;
    overrides.weber_paper_kappa = paper_kappa;
    const auto cfg = config::parse_experiment(config::read_json_file(config_path), *command, overrides);
    const auto manifest = commands::run_experiment(cfg, workers);
    std::cout << manifest.command << ": wrote " << manifest.outputs.size() << " files to " << cfg.output_dir
              << " (config " << manifest.config_hash << ")\n";
    return 0;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return e.kind() == ErrorKind::config ? kConfigError : kNumericError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kNumericError;
  }
}
