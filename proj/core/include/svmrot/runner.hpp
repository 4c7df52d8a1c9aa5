#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "svmrot/config.hpp"
#include "svmrot/observables.hpp"

namespace svmrot {

enum class RunMode { schrodinger, fokker_planck, ensemble, classical, crosscheck };

std::string_view to_string(RunMode mode);
// Throws ConfigError for an unknown mode name.
RunMode parse_run_mode(std::string_view name);

enum ExitCode : int {
  kExitSuccess = 0,
  kExitConfigError = 1,
  kExitNumericalError = 2,
  kExitCrosscheckFailed = 3,
};

struct RunOptions {
  std::filesystem::path out_dir;
  bool quiet = false;
  // Progress and warnings; std::cerr when null.
  std::ostream* log = nullptr;
};

struct CheckResult {
  std::string name;
  double value = 0.0;
  double threshold = 0.0;
  bool passed = false;
  std::string detail;
};

struct CrosscheckReport {
  double tv_histogram = 0.0;
  double t_histogram = 0.0;
  double l1_fokker_planck = 0.0;
  double t_fokker_planck = 0.0;
  double ehrenfest_max = 0.0;
  double lz_drift = 0.0;
  double q_ensemble = 0.0;
  double q_stat_err = 0.0;
  double lz_final = 0.0;
  double el_residual_max = 0.0;
  std::vector<CheckResult> checks;

  bool passed() const;
};

// Writes the observables CSV with the fixed column order.
void write_observables_csv(std::ostream& os, const ObservableSeries& series,
                           std::string_view config_hash);

// Runs one mode and writes its files under options.out_dir. Library errors
// are mapped to exit codes: ConfigError -> 1, numerical failures -> 2, a
// failed crosscheck -> 3 (the report is still written).
int run(RunMode mode, const ScenarioConfig& config, const RunOptions& options);

// The crosscheck computation without file output; used by run().
CrosscheckReport crosscheck(const ScenarioConfig& config, ObservableSeries* series = nullptr,
                            std::ostream* log = nullptr);

}  // namespace svmrot
