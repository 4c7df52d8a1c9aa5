#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "svmrot/frame.hpp"
#include "svmrot/grid.hpp"
#include "svmrot/params.hpp"
#include "svmrot/potential.hpp"

namespace svmrot {

struct InitialState {
  Vec2 center{0.0, 0.0};
  double sigma = 0.5;
  Vec2 k{0.0, 0.0};
  int vortex = 0;
};

struct GridConfig {
  std::size_t n = 256;
  double length = 16.0;
  Boundary boundary = Boundary::dirichlet_zero;
};

struct Tolerances {
  double tv = 0.05;
  double fp_l1 = 1e-2;
  double ehrenfest = 1e-3;
  double noether_sigma = 3.0;
  double noether_drift = 1e-3;
  // Absolute bound on the L2 Euler-Lagrange residual; <= 0 disables the check.
  double el = 0.0;
};

struct RunConfig {
  double dt = 1e-3;
  double t_end = 1.0;
  std::vector<double> snapshot_times;
  std::size_t n_traj = 10000;
  std::uint64_t master_seed = 1;
  double solver_tol = 1e-10;
  int max_iterations = 500;
  std::size_t bins = 64;
  unsigned threads = 1;
  double rho_floor_rel = 1e-12;
  // Density floor of the Euler-Lagrange residual, relative to max rho. The
  // quantum-potential stencil is only resolved where rho is not tiny.
  double el_rho_floor_rel = 1e-3;
  // Ensemble observables are evaluated every `ensemble_stride` steps.
  std::size_t ensemble_stride = 10;
  // Time at which crosscheck compares the Fokker-Planck density.
  double fp_check_time = 0.5;
  Tolerances tolerances;
};

struct OutputConfig {
  std::string directory = "out";
  bool snapshots = true;
  bool paths = false;
  std::size_t path_traj_limit = 100;
};

struct ScenarioConfig {
  PhysicalParams params;
  FramePath frame = FramePath::inertial();
  Potential potential;
  InitialState initial;
  GridConfig grid;
  RunConfig run;
  OutputConfig output;

  Grid2D make_grid() const { return Grid2D(grid.n, grid.length, grid.boundary); }
};

// Sectioned key = value text (';' starts a comment). Unknown sections or keys
// are rejected. Throws ConfigError naming the line for syntax errors and the
// violated rule for invalid values. Every default that was applied is
// appended to `defaults_applied` when given.
ScenarioConfig parse_config(std::istream& is, std::vector<std::string>* defaults_applied = nullptr);
ScenarioConfig load_config(const std::string& path,
                           std::vector<std::string>* defaults_applied = nullptr);

// Throws ConfigError when an invariant does not hold.
void validate(const ScenarioConfig& config);

// Text that parse_config reads back into an identical config.
std::string serialize(const ScenarioConfig& config);

// FNV-1a 64 of serialize(config), as 16 hex digits.
std::string config_hash(const ScenarioConfig& config);

}  // namespace svmrot
