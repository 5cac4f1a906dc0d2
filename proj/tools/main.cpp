#include <CLI11.hpp>
#include <exception>
#include <iostream>

#include "experiments.hpp"

int main(int argc, char** argv) {
  using namespace roughevo::cli;
  CLI::App app{"Numerical experiments for parabolic rough evolution equations"};
  app.require_subcommand(1);

  std::string config_path;
  RunOptions options;
  std::uint64_t seed = 0;
  std::string kind;
  for (const auto& name : experiment_kinds()) {
    CLI::App* sub = app.add_subcommand(name, "Run a '" + name + "' experiment");
    sub->add_option("-c,--config", config_path, "JSON config file")->required()->check(CLI::ExistingFile);
    sub->add_option("-o,--out", options.out, "Output directory for the manifest and artifacts");
    sub->add_option("-s,--seed", seed, "Random seed (overrides the config)");
    sub->add_flag("--plots", options.plots, "Write SVG plots");
    sub->add_flag("--timings", options.timings, "Record wall-clock timings in the manifest");
    sub->callback([&kind, name] { kind = name; });
  }
  CLI11_PARSE(app, argc, argv);
  for (const auto* sub : app.get_subcommands())
    if (sub->count("--seed") > 0) options.seed = seed;

  try {
    const RunResult result = run_experiment(kind, load_config(config_path), options);
    std::cout << result.kind << " '" << result.name << "'\n";
    for (const auto& [name, value] : result.metrics) std::cout << "  " << name << " = " << value << "\n";
    for (const auto& c : result.checks)
      std::cout << "  check " << c.name << ": " << c.value << " in [" << c.lower << ", " << c.upper << "] "
                << (c.pass() ? "PASS" : "FAIL") << "\n";
    std::cout << (result.passed() ? "PASS" : "FAIL") << "\n";
    return result.passed() ? 0 : 1;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
}
