#include <CLI11.hpp>
#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

#include "nsslab/errors.h"
#include "nsslab/experiments.h"

namespace ex = nsslab::experiments;

int main(int argc, char** argv) {
  CLI::App app{"nsslab: noise-to-state stability experiments"};
  app.require_subcommand(1);

  std::string run_config;
  std::optional<std::string> out_dir;
  std::optional<int> threads;
  std::optional<std::uint64_t> seed_override;
  auto* run = app.add_subcommand("run", "Run the experiment described by a config file");
  run->add_option("config", run_config, "Config file")->required()->check(CLI::ExistingFile);
  run->add_option("--out", out_dir, "Output directory (overrides output.dir)");
  run->add_option("--threads", threads, "Worker threads; results do not depend on it")
      ->check(CLI::PositiveNumber);
  run->add_option("--seed-override", seed_override, "Replace mc.master_seed");

  app.add_subcommand("list", "List the registered experiments");

  std::string validate_config;
  auto* validate = app.add_subcommand("validate", "Check a config without running it");
  validate->add_option("config", validate_config, "Config file")
      ->required()
      ->check(CLI::ExistingFile);

  CLI11_PARSE(app, argc, argv);

  try {
    if (app.got_subcommand("list")) {
      std::cout << ex::RegistryText();
      return 0;
    }
    if (app.got_subcommand("validate")) {
      const auto config = ex::Config::Load(validate_config);
      ex::Validate(config);
      std::cout << validate_config << ": ok (" << config.name() << ")\n";
      return 0;
    }
    const auto config = ex::Config::Load(run_config);
    ex::RunOptions options;
    if (out_dir) options.out_dir = *out_dir;
    options.threads = threads;
    options.seed_override = seed_override;
    const auto report = ex::Run(config, options);
    ex::WriteSummary(report, std::cout);
    return report.passed() ? 0 : 1;
  } catch (const nsslab::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}
