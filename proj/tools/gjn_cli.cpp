#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "gjn/cli.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Numerical lab for Gaussian John-Nirenberg spaces"};
  app.require_subcommand(1);
  app.fallthrough();
  std::string config_path;
  std::string out_dir = "gjn_out";
  std::optional<std::uint64_t> seed;
  int verbosity = 1;
  app.add_option("--config", config_path, "JSON config file")->required();
  app.add_option("--out", out_dir, "output directory");
  app.add_option("--seed", seed, "overrides the config seed");
  app.add_option("--verbosity", verbosity, "0 quiet, 1 checks, 2 progress")->check(CLI::Range(0, 2));
  for (const auto& [name, fn] : gjn::cli::subcommands()) app.add_subcommand(name);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }
  const std::string command = app.get_subcommands().front()->get_name();

  gjn::cli::ExperimentConfig config;
  try {
    config = gjn::cli::load_config(config_path, command);
    if (seed) config.seed = *seed;
  } catch (const gjn::cli::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  }

  try {
    const gjn::cli::RunResult r = gjn::cli::run(command, config, out_dir, verbosity);
    if (verbosity >= 1) {
      for (const auto& c : r.checks)
        std::cout << (c.holds ? "PASS " : "FAIL ") << c.name << (c.detail.empty() ? "" : "  " + c.detail) << "\n";
      std::cout << command << ": " << (r.all_hold() ? "all checks hold" : "some checks failed") << ", reports in "
                << out_dir << "\n";
    }
    return r.all_hold() ? 0 : 1;
  } catch (const gjn::cli::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
}
