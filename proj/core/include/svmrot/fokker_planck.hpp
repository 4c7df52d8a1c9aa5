#pragma once

#include <functional>
#include <span>
#include <vector>

#include "svmrot/frame.hpp"
#include "svmrot/grid.hpp"

namespace svmrot {

enum class DriftProvenance { from_madelung, analytic_test };

// Velocity field p/M - A - B on the grid. Masked nodes carry zero drift.
struct DriftField {
  VectorField values;
  NodeMask mask;
  DriftProvenance provenance = DriftProvenance::analytic_test;

  const Grid2D& grid() const { return values.x.grid(); }
};

enum class Direction { forward, backward };

// p_fwd/M - A - B (forward) or p_bwd/M - A - B (backward) at time t.
DriftField drift_from_madelung(const MadelungFields& fields, const FramePath& frame, double t,
                               Direction direction = Direction::forward);

// Drift sampled from an analytic velocity function at the grid nodes.
DriftField analytic_drift(const Grid2D& grid, const std::function<Vec2(double, double)>& velocity);

// 0.9 * min(h^2 / (4 nu), h / max|drift|, 1 / max_cell(4 nu / h^2 + outflow / h)),
// where outflow is the sum of the upwinded face velocities leaving a cell. The
// last term keeps every update coefficient non-negative.
double admissible_dt(const DriftField& drift, double nu);

struct FpStepResult {
  RealField rho;
  // Mass removed by clipping negative cells before renormalization.
  double clipped_mass = 0.0;
};

// One explicit finite-volume step of d_t rho = div(-drift rho + nu grad rho)
// on node-centred cells: first-order upwind advective face fluxes, centred
// diffusive fluxes, zero flux through the domain boundary. Negative cells are
// clipped and the density rescaled to the pre-clip mass. Throws
// StabilityError when dt exceeds admissible_dt.
FpStepResult fp_step(const RealField& rho, const DriftField& drift, double nu, double dt);

struct FpAdvance {
  RealField rho;
  double clipped_mass = 0.0;
  int substeps = 0;
};

// Advances by dt, splitting it into the fewest equal substeps that satisfy
// the stability bound.
FpAdvance fp_advance(const RealField& rho, const DriftField& drift, double nu, double dt);

using DriftSource = std::function<DriftField(double t)>;

struct FpSeries {
  std::vector<double> t;
  std::vector<double> total_mass;
  std::vector<double> clipped_mass;
  std::vector<double> min_rho;
};

struct DensitySnapshot {
  double t = 0.0;
  RealField rho;
};

struct FpEvolveResult {
  RealField rho;
  std::vector<DensitySnapshot> snapshots;
  FpSeries series;
};

struct FpEvolveOptions {
  // Split steps that violate the stability bound instead of throwing.
  bool substep = true;
};

// Repeated steps of size dt from t0 to t_end, refreshing the drift from
// `source` at the start of every step.
FpEvolveResult fp_evolve(const RealField& rho0, const DriftSource& source, double nu, double t0,
                         double t_end, double dt, std::span<const double> snapshot_times,
                         const FpEvolveOptions& options = {});

// sum |a - b| h^2.
double l1_distance(const RealField& a, const RealField& b);

}  // namespace svmrot
