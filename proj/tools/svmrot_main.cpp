#include <CLI11.hpp>

#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "svmrot/config.hpp"
#include "svmrot/runner.hpp"
#include "svmrot/version.hpp"

namespace {

constexpr const char* kUsage =
    "usage: svmrot <schrodinger|fokker_planck|ensemble|classical|crosscheck> --config <path>\n"
    "              [--seed <u64>] [--out <dir>] [--quiet]\n"
    "The output directory is taken from --out, then $SVMROT_OUT_DIR, then [output] directory.\n";

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Stochastic-variational quantum dynamics in non-inertial frames"};
  app.set_version_flag("--version", std::string(svmrot::kVersion));
  std::string mode_name;
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out_dir;
  bool quiet = false;
  app.add_option("mode", mode_name, "Run mode")->required();
  app.add_option("--config", config_path, "Scenario file")->required();
  app.add_option("--seed", seed, "Master seed override");
  app.add_option("--out", out_dir, "Output directory override");
  app.add_flag("--quiet", quiet, "Only print warnings and errors");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    std::cout << app.help() << kUsage;
    return 0;
  } catch (const CLI::CallForVersion&) {
    std::cout << svmrot::kVersion << '\n';
    return 0;
  } catch (const CLI::ParseError& e) {
    std::cerr << "svmrot: " << e.what() << '\n' << kUsage;
    return svmrot::kExitConfigError;
  }

  svmrot::RunMode mode;
  try {
    mode = svmrot::parse_run_mode(mode_name);
  } catch (const svmrot::ConfigError& e) {
    std::cerr << "svmrot: " << e.what() << '\n' << kUsage;
    return svmrot::kExitConfigError;
  }

  svmrot::ScenarioConfig config;
  std::vector<std::string> defaults;
  try {
    config = svmrot::load_config(config_path, &defaults);
  } catch (const svmrot::ConfigError& e) {
    std::cerr << "svmrot: " << config_path << ": " << e.what() << '\n';
    return svmrot::kExitConfigError;
  }
  if (!quiet) {
    for (const std::string& d : defaults) std::cerr << "svmrot: default " << d << '\n';
  }
  if (seed) config.run.master_seed = *seed;

  svmrot::RunOptions options;
  options.quiet = quiet;
  if (!out_dir.empty()) {
    options.out_dir = out_dir;
  } else if (const char* env = std::getenv("SVMROT_OUT_DIR"); env && *env) {
    options.out_dir = env;
  }
  return svmrot::run(mode, config, options);
}
