#pragma once

namespace svmrot {

// Mass, reduced Planck constant and diffusion coefficient of the stochastic
// process. Quantum runs require nu == hbar / (2 M).
struct PhysicalParams {
  double mass = 1.0;
  double hbar = 1.0;
  double nu = 0.5;

  static PhysicalParams quantum(double mass, double hbar) {
    return {mass, hbar, hbar / (2.0 * mass)};
  }

  bool is_quantum(double rel_tol = 1e-12) const;

  // Throws ConfigError unless nu == hbar / (2 M) within rel_tol.
  void require_quantum(double rel_tol = 1e-12) const;
};

}  // namespace svmrot
