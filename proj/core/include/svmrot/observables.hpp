#pragma once

#include <cstddef>
#include <limits>
#include <span>
#include <vector>

#include "svmrot/frame.hpp"
#include "svmrot/grid.hpp"
#include "svmrot/potential.hpp"

namespace svmrot {

inline constexpr double kAbsent = std::numeric_limits<double>::quiet_NaN();

struct WaveSnapshot {
  double t = 0.0;
  WaveFunction psi;
};

// Columns of the observables time series; quantities that were not computed
// at a row hold kAbsent.
struct ObservableSeries {
  std::vector<double> t;
  std::vector<double> norm;
  std::vector<double> mean_x;
  std::vector<double> mean_y;
  std::vector<double> mean_px;
  std::vector<double> mean_py;
  std::vector<double> L_z;
  std::vector<double> Q_ensemble;
  std::vector<double> Q_stat_err;
  std::vector<double> ehrenfest_residual_x;
  std::vector<double> ehrenfest_residual_y;
  std::vector<double> el_residual_norm;

  std::size_t size() const { return t.size(); }

  // Appends a row with the wave-function observables filled and the
  // ensemble/residual columns absent. Returns the row index.
  std::size_t append(double time, const WaveFunction& psi);
};

struct ExpectationVec2 {
  Vec2 value;
  double imag_residue = 0.0;
};

struct ExpectationScalar {
  double value = 0.0;
  double imag_residue = 0.0;
};

Vec2 expectation_position(const WaveFunction& psi);

// <-i hbar grad>, central differences.
ExpectationVec2 expectation_momentum(const WaveFunction& psi);

// <L_z> with L_z = -i hbar (x d/dy - y d/dx), integrand psi* L_z psi.
ExpectationScalar angular_momentum_expectation(const WaveFunction& psi);

// <grad V> = sum rho grad V h^2.
Vec2 expectation_potential_gradient(const WaveFunction& psi, const Potential& potential);

// sum rho p_m h^2 and sum rho (x p_m,y - y p_m,x) h^2 over unmasked nodes.
Vec2 madelung_mean_momentum(const MadelungFields& fields);
double madelung_angular_momentum(const MadelungFields& fields);

struct EhrenfestPoint {
  double t = 0.0;
  Vec2 residual;
};

// d/dt <-i hbar d_i> - [Omega_ji <-i hbar d_j> - <d_i V>] at every interior
// snapshot, with a centered time difference. Snapshots must be uniformly
// spaced by dt; at least three are required (PreconditionError).
std::vector<EhrenfestPoint> ehrenfest_residual(std::span<const WaveSnapshot> snapshots,
                                               const FramePath& frame, const Potential& potential,
                                               double dt);

// Same residual from precomputed <-i hbar grad> and <grad V> series.
std::vector<EhrenfestPoint> ehrenfest_residual(std::span<const double> times,
                                               std::span<const Vec2> mean_momentum,
                                               std::span<const Vec2> mean_grad_potential,
                                               const FramePath& frame, double dt);

struct ChargeEstimate {
  double value = 0.0;
  double stat_err = 0.0;
  std::size_t used = 0;
  std::size_t masked = 0;
};

// z-component of E[q x p_m(q)] over particle positions; p_m bilinearly
// interpolated; particles whose nearest node is masked are excluded.
ChargeEstimate noether_charge_ensemble(std::span<const Vec2> positions, const VectorField& p_m,
                                       const NodeMask& mask);

// How the coupling term sum_j p_j d_i A_j is contracted. The hydrodynamic
// form of the rotating-frame Schrodinger equation requires gradient_contraction;
// convective ((p.grad) A_i) is kept to demonstrate that it does not vanish.
enum class CouplingForm { gradient_contraction, convective };

struct EulerLagrangeOptions {
  // Nodes within this many cells of the boundary are excluded.
  std::size_t margin = 2;
  CouplingForm coupling = CouplingForm::gradient_contraction;
};

struct EulerLagrangeResidual {
  double l2_x = 0.0;
  double l2_y = 0.0;
  double linf_x = 0.0;
  double linf_y = 0.0;
  std::size_t evaluated = 0;
  RealField residual_x;
  RealField residual_y;

  double l2() const;
  double linf() const;
};

// Residual of the momentum-field equation
//   [d_t + (p_m/M - A - B).grad] p_m,i - 2 M nu^2 d_i(rho^{-1/2} Lap sqrt(rho))
//       - [sum_j p_m,j d_i A_j - d_i V]
// at the middle of three snapshots spaced by dt. Nodes are evaluated only
// where every node within two cells is unmasked at all three times.
EulerLagrangeResidual euler_lagrange_residual(const MadelungFields& before,
                                              const MadelungFields& middle,
                                              const MadelungFields& after,
                                              const FramePath& frame, const Potential& potential,
                                              double t_middle, double dt,
                                              const EulerLagrangeOptions& options = {});

}  // namespace svmrot
