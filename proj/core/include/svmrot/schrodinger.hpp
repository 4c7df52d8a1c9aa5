#pragma once

#include <functional>
#include <span>
#include <vector>

#include "svmrot/frame.hpp"
#include "svmrot/grid.hpp"
#include "svmrot/observables.hpp"
#include "svmrot/potential.hpp"

namespace svmrot {

// Rotating-frame Hamiltonian frozen at time t on a Dirichlet grid:
//   H = -hbar^2/(2M) Lap + (i hbar / 2)[W.grad + grad.(W .)] + V,  W = A + B,
// which is (1/2M)(-i hbar grad - M W)^2 - (M/2) W^2 + V with the W^2 terms
// cancelled analytically. Boundary nodes are held at zero; the cross term in
// its symmetrized form makes the matrix Hermitian.
class Hamiltonian {
 public:
  Hamiltonian(const Grid2D& grid, const PhysicalParams& params, const FramePath& frame,
              const Potential& potential, double t);

  // out = H in; boundary values of `in` are treated as zero.
  void apply(std::span<const Complex> in, std::span<Complex> out) const;
  ComplexField apply(const ComplexField& in) const;

  // Real diagonal entry at flat index k.
  double diagonal(std::size_t k) const { return diagonal_base_ + potential_[k]; }

  const Grid2D& grid() const { return grid_; }

 private:
  Grid2D grid_;
  double kinetic_;     // hbar^2 / (2 M h^2)
  double cross_;       // hbar / (4 h), multiplies i
  double diagonal_base_;
  std::vector<double> wx_;
  std::vector<double> wy_;
  std::vector<double> potential_;
};

// H psi at time t. Throws ConfigError unless nu == hbar/(2M) and
// PreconditionError on a non-Dirichlet grid.
ComplexField hamiltonian_apply(const WaveFunction& psi, const FramePath& frame,
                               const Potential& potential, double t);

struct SchrodingerRun {
  WaveFunction psi;
  FramePath frame;
  Potential potential;
  double dt = 1e-3;
  double t = 0.0;
  double solver_tol = 1e-10;
  int max_iterations = 500;
};

struct StepStats {
  int iterations = 0;
  double residual = 0.0;
};

// One Crank-Nicolson step with H frozen at t + dt/2:
//   (1 + i dt H / (2 hbar)) psi' = (1 - i dt H / (2 hbar)) psi,
// solved by Jacobi-preconditioned BiCGSTAB to ||r|| < solver_tol ||rhs||.
// Throws ConvergenceError with the achieved relative residual.
SchrodingerRun step(SchrodingerRun run, StepStats* stats = nullptr);

// Exact inverse of step(): maps psi(t) to psi(t - dt) with H frozen at
// t - dt/2.
SchrodingerRun step_back(SchrodingerRun run, StepStats* stats = nullptr);

// Largest |psi| on the ring of nodes adjacent to the Dirichlet boundary.
double boundary_amplitude(const WaveFunction& psi);

// dt hbar / (M h^2); the iterative solve is well conditioned when <= 1.
double stiffness_number(const Grid2D& grid, const PhysicalParams& params, double dt);

using StepObserver = std::function<void(const SchrodingerRun&, const StepStats&)>;

struct EvolveResult {
  SchrodingerRun run;
  std::vector<WaveSnapshot> snapshots;
  ObservableSeries series;
  double max_boundary_amplitude = 0.0;
  int max_solver_iterations = 0;
};

// Steps from run.t to t_end (the final step is shortened to land on t_end)
// and records one observable row per step plus psi at each snapshot time.
// The observer runs once at the start and after every step, so callers can
// stream output that survives a later failure.
EvolveResult evolve(SchrodingerRun run, double t_end, std::span<const double> snapshot_times,
                    const StepObserver& observer = {});

struct GroundState {
  WaveFunction psi;
  double energy = 0.0;
  double residual = 0.0;
  int iterations = 0;
};

// Lowest eigenstate of the discrete H at time t by shifted inverse iteration
// with conjugate-gradient solves; H - shift must be positive definite.
GroundState ground_state(const WaveFunction& guess, const FramePath& frame,
                         const Potential& potential, double t = 0.0, double tol = 1e-11,
                         double shift = 0.0, int max_iterations = 500);

}  // namespace svmrot
