#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "svmrot/fokker_planck.hpp"
#include "svmrot/frame.hpp"
#include "svmrot/grid.hpp"
#include "svmrot/noise.hpp"
#include "svmrot/potential.hpp"

namespace svmrot {

// N independent trajectories in the reflecting box [-L/2, L/2]^2 of
// `domain`. Trajectory i draws its noise from a Philox stream keyed by
// stream_seed(master_seed, i) with the step number as counter, so its path
// depends only on (master_seed, i, inputs) and not on thread count.
struct TrajectoryEnsemble {
  Grid2D domain;
  std::uint64_t master_seed = 0;
  std::vector<Vec2> positions;
  std::vector<std::uint64_t> seeds;
  double t = 0.0;
  std::uint64_t forward_steps = 0;
  std::uint64_t backward_steps = 0;

  std::size_t size() const { return positions.size(); }
};

TrajectoryEnsemble make_ensemble(const Grid2D& domain, std::vector<Vec2> positions,
                                 std::uint64_t master_seed, double t0 = 0.0);

// Positions drawn from an isotropic Gaussian of per-axis deviation sigma,
// reflected into the domain.
TrajectoryEnsemble sample_gaussian_ensemble(const Grid2D& domain, std::size_t n, Vec2 center,
                                            double sigma, std::uint64_t master_seed,
                                            double t0 = 0.0);

// Positions drawn from a gridded density: node k is picked with probability
// rho_k / sum(rho), then jittered uniformly over its cell (clipped to the
// domain).
TrajectoryEnsemble sample_from_density(const RealField& rho, std::size_t n,
                                       std::uint64_t master_seed, double t0 = 0.0);

struct MomentumField {
  VectorField p;
  NodeMask mask;

  const Grid2D& grid() const { return p.x.grid(); }
};

MomentumField forward_momentum(const MadelungFields& fields);
MomentumField backward_momentum(const MadelungFields& fields);
MomentumField momentum_field(const Grid2D& grid, const std::function<Vec2(double, double)>& p);

struct EnsembleOptions {
  unsigned threads = 1;
};

// Euler-Maruyama step with dt > 0:
//   q <- q + (p(q)/M - A(q, t) - B(t)) dt + sqrt(2 nu) dW.
// p is bilinearly interpolated; particles whose nearest node is masked get
// zero drift. The noise is additive, so this already has strong order 1.
TrajectoryEnsemble advance_forward(TrajectoryEnsemble ensemble, const MomentumField& p,
                                   const FramePath& frame, const PhysicalParams& params, double dt,
                                   const EnsembleOptions& options = {});
TrajectoryEnsemble advance_forward(TrajectoryEnsemble ensemble, const MadelungFields& fields,
                                   const FramePath& frame, double dt,
                                   const EnsembleOptions& options = {});

// The same scheme with dt < 0 and the backward momentum p~.
TrajectoryEnsemble advance_backward(TrajectoryEnsemble ensemble, const MomentumField& p_tilde,
                                    const FramePath& frame, const PhysicalParams& params,
                                    double dt, const EnsembleOptions& options = {});
// Asserts p_fwd - p_bwd = 2 M nu grad ln rho before stepping with p_bwd.
TrajectoryEnsemble advance_backward(TrajectoryEnsemble ensemble, const MadelungFields& fields,
                                    const FramePath& frame, double dt,
                                    const EnsembleOptions& options = {});

// Throws PreconditionError unless p_fwd - p_bwd = 2 M nu grad ln rho and
// (p_fwd + p_bwd) / 2 = p_m at unmasked nodes, relative to the field scale.
void check_consistency(const MadelungFields& fields, double tol = 1e-12);

// Ensemble positions recorded at successive times.
struct PathStore {
  std::vector<double> times;
  std::vector<std::vector<Vec2>> slices;

  void record(const TrajectoryEnsemble& ensemble);
  std::size_t size() const { return times.size(); }
};

struct BinnedVectorEstimate {
  VectorField mean;
  VectorField std_err;
  std::vector<std::size_t> counts;
  std::size_t empty_bins = 0;
};

// Empirical mean derivative at slice s, binned by q(t_s):
//   forward:  E[(q(t_{s+lag}) - q(t_s)) / (t_{s+lag} - t_s) | q(t_s)]
//   backward: E[(q(t_s) - q(t_{s-lag})) / (t_s - t_{s-lag}) | q(t_s)]
// Bins are the cells around the nodes of `bins`; empty bins hold zero.
BinnedVectorEstimate mean_derivative(const PathStore& paths, std::size_t slice, std::size_t lag,
                                     Direction direction, const Grid2D& bins);

// count / (N h^2) per bin, so the result integrates to one.
RealField histogram_density(std::span<const Vec2> positions, const Grid2D& bins);

// Mass of a fine density inside each bin cell divided by the bin area; the
// fine density is bilinearly interpolated and integrated with a midpoint
// rule on subsamples^2 points per bin.
RealField bin_density(const RealField& rho, const Grid2D& bins, int subsamples = 8);

// (1/2) sum |a - b| h^2.
double total_variation(const RealField& a, const RealField& b);

struct ActionEstimate {
  double value = 0.0;
  double stat_err = 0.0;
  // Noise contribution M nu d per step removed from the increment estimate.
  double ito_correction = 0.0;
  // Estimate with finite-difference increments in place of D and D~.
  double increment_value = 0.0;
  std::size_t steps = 0;
};

// Monte-Carlo estimate of E[sum_t L(q, Dq, D~q) dt] with
//   L = (M/2) [(Dq + A + B)^2 + (D~q + A + B)^2] / 2 - V(q)
// over the interior slices of `paths`. With per-slice Madelung fields, Dq and
// D~q are the forward and backward drifts at q; otherwise the path increments
// are used and the Ito noise term is subtracted. Needs at least three slices
// (PreconditionError).
ActionEstimate stochastic_action_estimate(const PathStore& paths,
                                          std::span<const MadelungFields> fields_per_slice,
                                          const FramePath& frame, const Potential& potential,
                                          const PhysicalParams& params);

}  // namespace svmrot
