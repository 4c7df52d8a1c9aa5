#include "svmrot/ensemble.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "svmrot/parallel.hpp"

namespace svmrot {

namespace {

double reflect(double v, double half) {
  while (v > half || v < -half) {
    v = v > half ? 2.0 * half - v : -2.0 * half - v;
  }
  return v;
}

std::vector<std::uint64_t> derive_seeds(std::uint64_t master_seed, std::size_t n) {
  std::vector<std::uint64_t> seeds(n);
  for (std::size_t i = 0; i < n; ++i) seeds[i] = stream_seed(master_seed, i);
  return seeds;
}

}  // namespace

TrajectoryEnsemble make_ensemble(const Grid2D& domain, std::vector<Vec2> positions,
                                 std::uint64_t master_seed, double t0) {
  TrajectoryEnsemble e{domain, master_seed, std::move(positions), {}, t0, 0, 0};
  e.seeds = derive_seeds(master_seed, e.positions.size());
  return e;
}

TrajectoryEnsemble sample_gaussian_ensemble(const Grid2D& domain, std::size_t n, Vec2 center,
                                            double sigma, std::uint64_t master_seed, double t0) {
  TrajectoryEnsemble e = make_ensemble(domain, std::vector<Vec2>(n), master_seed, t0);
  const double half = domain.half_width();
  for (std::size_t i = 0; i < n; ++i) {
    NoiseStream s(e.seeds[i], StreamTag::initial);
    const auto z = s.normal_pair();
    e.positions[i] = {reflect(center.x + sigma * z[0], half), reflect(center.y + sigma * z[1], half)};
  }
  return e;
}

TrajectoryEnsemble sample_from_density(const RealField& rho, std::size_t n,
                                       std::uint64_t master_seed, double t0) {
  const Grid2D& g = rho.grid();
  std::vector<double> cdf(g.size());
  double acc = 0.0;
  for (std::size_t k = 0; k < g.size(); ++k) {
    acc += std::max(rho[k], 0.0);
    cdf[k] = acc;
  }
  if (!(acc > 0.0)) throw ZeroNormError("cannot sample from an empty density");
  TrajectoryEnsemble e = make_ensemble(g, std::vector<Vec2>(n), master_seed, t0);
  const double h = g.spacing();
  const double half = g.half_width();
  for (std::size_t i = 0; i < n; ++i) {
    NoiseStream s(e.seeds[i], StreamTag::initial);
    const auto pick = s.uniform_pair();
    const auto jitter = s.uniform_pair();
    const double target = pick[0] * acc;
    auto it = std::upper_bound(cdf.begin(), cdf.end(), target);
    if (it == cdf.end()) --it;
    const auto k = static_cast<std::size_t>(it - cdf.begin());
    const std::size_t ii = k % g.n();
    const std::size_t jj = k / g.n();
    const double x = std::clamp(g.coord(ii) + (jitter[0] - 0.5) * h, -half, half);
    const double y = std::clamp(g.coord(jj) + (jitter[1] - 0.5) * h, -half, half);
    e.positions[i] = {x, y};
  }
  return e;
}

MomentumField forward_momentum(const MadelungFields& fields) { return {fields.p_fwd, fields.mask}; }

MomentumField backward_momentum(const MadelungFields& fields) { return {fields.p_bwd, fields.mask}; }

MomentumField momentum_field(const Grid2D& grid, const std::function<Vec2(double, double)>& p) {
  MomentumField out{{RealField(grid), RealField(grid)}, NodeMask(grid.size(), 0)};
  for (std::size_t j = 0; j < grid.n(); ++j) {
    for (std::size_t i = 0; i < grid.n(); ++i) {
      const Vec2 v = p(grid.coord(i), grid.coord(j));
      out.p.x(i, j) = v.x;
      out.p.y(i, j) = v.y;
    }
  }
  return out;
}

namespace {

TrajectoryEnsemble advance(TrajectoryEnsemble e, const MomentumField& p, const FramePath& frame,
                           const PhysicalParams& params, double dt, StreamTag tag,
                           std::uint64_t counter, const EnsembleOptions& options) {
  const Mat3 omega = omega_tensor(frame, e.t);
  const Vec3 c = frame.offset(e.t);
  const Vec3 b = field_B(frame, e.t);
  const double inv_m = 1.0 / params.mass;
  const double amplitude = std::sqrt(2.0 * params.nu * std::abs(dt));
  const double half = e.domain.half_width();
  const Grid2D& g = p.grid();
  const bool masked_field = p.mask.size() == g.size();

  parallel_for(e.size(), options.threads, [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      Vec2& q = e.positions[i];
      double vx = 0.0, vy = 0.0;
      if (!(masked_field && p.mask[nearest_node(g, q.x, q.y)])) {
        const Vec2 mom = interpolate(p.p, q.x, q.y);
        const double x = q.x - c.x();
        const double y = q.y - c.y();
        const double ax = omega(0, 0) * x + omega(0, 1) * y - omega(0, 2) * c.z();
        const double ay = omega(1, 0) * x + omega(1, 1) * y - omega(1, 2) * c.z();
        vx = mom.x * inv_m - ax - b.x();
        vy = mom.y * inv_m - ay - b.y();
      }
      double nx = 0.0, ny = 0.0;
      if (amplitude > 0.0) {
        NoiseStream s(e.seeds[i], tag, counter);
        const auto z = s.normal_pair();
        nx = amplitude * z[0];
        ny = amplitude * z[1];
      }
      q.x = reflect(q.x + vx * dt + nx, half);
      q.y = reflect(q.y + vy * dt + ny, half);
    }
  });
  e.t += dt;
  return e;
}

}  // namespace

TrajectoryEnsemble advance_forward(TrajectoryEnsemble ensemble, const MomentumField& p,
                                   const FramePath& frame, const PhysicalParams& params, double dt,
                                   const EnsembleOptions& options) {
  if (!(dt > 0.0)) throw PreconditionError("forward step needs dt > 0");
  const std::uint64_t counter = ensemble.forward_steps++;
  return advance(std::move(ensemble), p, frame, params, dt, StreamTag::forward, counter, options);
}

TrajectoryEnsemble advance_forward(TrajectoryEnsemble ensemble, const MadelungFields& fields,
                                   const FramePath& frame, double dt,
                                   const EnsembleOptions& options) {
  return advance_forward(std::move(ensemble), forward_momentum(fields), frame, fields.params, dt,
                         options);
}

TrajectoryEnsemble advance_backward(TrajectoryEnsemble ensemble, const MomentumField& p_tilde,
                                    const FramePath& frame, const PhysicalParams& params,
                                    double dt, const EnsembleOptions& options) {
  if (!(dt < 0.0)) throw PreconditionError("backward step needs dt < 0");
  const std::uint64_t counter = ensemble.backward_steps++;
  return advance(std::move(ensemble), p_tilde, frame, params, dt, StreamTag::backward, counter,
                 options);
}

TrajectoryEnsemble advance_backward(TrajectoryEnsemble ensemble, const MadelungFields& fields,
                                    const FramePath& frame, double dt,
                                    const EnsembleOptions& options) {
  check_consistency(fields);
  return advance_backward(std::move(ensemble), backward_momentum(fields), frame, fields.params, dt,
                          options);
}

void check_consistency(const MadelungFields& f, double tol) {
  const Grid2D& g = f.grid();
  RealField log_rho(g);
  for (std::size_t k = 0; k < g.size(); ++k) {
    log_rho[k] = std::log(std::max(f.rho[k], f.rho_floor > 0.0 ? f.rho_floor : 1e-300));
  }
  const VectorField dlog = gradient(log_rho);
  const double two_m_nu = 2.0 * f.params.mass * f.params.nu;
  double worst = 0.0;
  double scale = 1.0;
  for (std::size_t k = 0; k < g.size(); ++k) {
    if (f.mask[k]) continue;
    scale = std::max({scale, std::abs(f.p_fwd.x[k]), std::abs(f.p_fwd.y[k]),
                      std::abs(f.p_bwd.x[k]), std::abs(f.p_bwd.y[k])});
    const double ox = f.p_fwd.x[k] - f.p_bwd.x[k] - two_m_nu * dlog.x[k];
    const double oy = f.p_fwd.y[k] - f.p_bwd.y[k] - two_m_nu * dlog.y[k];
    const double mx = 0.5 * (f.p_fwd.x[k] + f.p_bwd.x[k]) - f.p_m.x[k];
    const double my = 0.5 * (f.p_fwd.y[k] + f.p_bwd.y[k]) - f.p_m.y[k];
    worst = std::max({worst, std::abs(ox), std::abs(oy), std::abs(mx), std::abs(my)});
  }
  if (worst > tol * scale) {
    std::ostringstream os;
    os << "forward/backward momenta violate the consistency condition (max deviation " << worst
       << ")";
    throw PreconditionError(os.str());
  }
}

void PathStore::record(const TrajectoryEnsemble& ensemble) {
  if (!slices.empty() && slices.front().size() != ensemble.size()) {
    throw ShapeError("PathStore: ensemble size changed between records");
  }
  times.push_back(ensemble.t);
  slices.push_back(ensemble.positions);
}

BinnedVectorEstimate mean_derivative(const PathStore& paths, std::size_t slice, std::size_t lag,
                                     Direction direction, const Grid2D& bins) {
  if (lag == 0) throw PreconditionError("mean derivative needs lag >= 1");
  std::size_t from, to;
  if (direction == Direction::forward) {
    if (slice + lag >= paths.size()) throw PreconditionError("not enough slices after t");
    from = slice;
    to = slice + lag;
  } else {
    if (slice < lag || slice >= paths.size()) throw PreconditionError("not enough slices before t");
    from = slice - lag;
    to = slice;
  }
  const double span = paths.times[to] - paths.times[from];
  if (!(span > 0.0)) throw PreconditionError("path times must increase");
  const auto& conditioned = paths.slices[slice];
  const auto& a = paths.slices[from];
  const auto& b = paths.slices[to];

  const std::size_t nb = bins.size();
  std::vector<double> sx(nb, 0.0), sy(nb, 0.0), qx(nb, 0.0), qy(nb, 0.0);
  std::vector<std::size_t> counts(nb, 0);
  for (std::size_t i = 0; i < conditioned.size(); ++i) {
    const std::size_t k = nearest_node(bins, conditioned[i].x, conditioned[i].y);
    const double vx = (b[i].x - a[i].x) / span;
    const double vy = (b[i].y - a[i].y) / span;
    sx[k] += vx;
    sy[k] += vy;
    qx[k] += vx * vx;
    qy[k] += vy * vy;
    ++counts[k];
  }
  BinnedVectorEstimate out{{RealField(bins), RealField(bins)},
                           {RealField(bins), RealField(bins)},
                           counts,
                           0};
  for (std::size_t k = 0; k < nb; ++k) {
    if (counts[k] == 0) {
      ++out.empty_bins;
      continue;
    }
    const double n = static_cast<double>(counts[k]);
    const double mx = sx[k] / n;
    const double my = sy[k] / n;
    out.mean.x[k] = mx;
    out.mean.y[k] = my;
    if (counts[k] > 1) {
      out.std_err.x[k] = std::sqrt(std::max(0.0, (qx[k] - n * mx * mx) / (n - 1.0)) / n);
      out.std_err.y[k] = std::sqrt(std::max(0.0, (qy[k] - n * my * my) / (n - 1.0)) / n);
    }
  }
  return out;
}

RealField histogram_density(std::span<const Vec2> positions, const Grid2D& bins) {
  RealField out(bins);
  if (positions.empty()) throw PreconditionError("histogram of an empty ensemble");
  for (const Vec2& q : positions) out[nearest_node(bins, q.x, q.y)] += 1.0;
  const double h = bins.spacing();
  const double scale = 1.0 / (static_cast<double>(positions.size()) * h * h);
  for (double& v : out.values()) v *= scale;
  return out;
}

RealField bin_density(const RealField& rho, const Grid2D& bins, int subsamples) {
  if (subsamples < 1) throw PreconditionError("bin_density needs subsamples >= 1");
  const Grid2D& fine = rho.grid();
  const double lo = -fine.half_width();
  const double hi = fine.half_width();
  const double h = bins.spacing();
  RealField out(bins);
  for (std::size_t j = 0; j < bins.n(); ++j) {
    const double y0 = std::max(bins.coord(j) - 0.5 * h, lo);
    const double y1 = std::min(bins.coord(j) + 0.5 * h, hi);
    if (y1 <= y0) continue;
    for (std::size_t i = 0; i < bins.n(); ++i) {
      const double x0 = std::max(bins.coord(i) - 0.5 * h, lo);
      const double x1 = std::min(bins.coord(i) + 0.5 * h, hi);
      if (x1 <= x0) continue;
      const double dx = (x1 - x0) / subsamples;
      const double dy = (y1 - y0) / subsamples;
      double mass = 0.0;
      for (int b = 0; b < subsamples; ++b) {
        for (int a = 0; a < subsamples; ++a) {
          mass += interpolate(rho, x0 + (a + 0.5) * dx, y0 + (b + 0.5) * dy);
        }
      }
      out(i, j) = mass * dx * dy / (h * h);
    }
  }
  return out;
}

double total_variation(const RealField& a, const RealField& b) {
  require_same_grid(a.grid(), b.grid(), "total_variation");
  double acc = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) acc += std::abs(a[k] - b[k]);
  const double h = a.grid().spacing();
  return 0.5 * acc * h * h;
}

ActionEstimate stochastic_action_estimate(const PathStore& paths,
                                          std::span<const MadelungFields> fields_per_slice,
                                          const FramePath& frame, const Potential& potential,
                                          const PhysicalParams& params) {
  const std::size_t slices = paths.size();
  if (slices < 3) {
    throw PreconditionError("action estimate needs forward and backward increments (>= 3 slices)");
  }
  const bool use_fields = !fields_per_slice.empty();
  if (use_fields && fields_per_slice.size() != slices) {
    throw ShapeError("action estimate: one Madelung field set per slice is required");
  }
  const std::size_t n = paths.slices.front().size();
  const double m = params.mass;
  constexpr double kDims = 2.0;

  std::vector<double> total(n, 0.0);
  std::vector<double> total_inc(n, 0.0);
  double correction = 0.0;
  for (std::size_t s = 1; s + 1 < slices; ++s) {
    const double t = paths.times[s];
    const double dt_f = paths.times[s + 1] - t;
    const double dt_b = t - paths.times[s - 1];
    if (!(dt_f > 0.0) || !(dt_b > 0.0)) throw PreconditionError("path times must increase");
    const double weight = 0.5 * (dt_f + dt_b);
    correction += 0.5 * m * params.nu * kDims * (weight / dt_f + weight / dt_b);

    const Mat3 omega = omega_tensor(frame, t);
    const Vec3 c = frame.offset(t);
    const Vec3 b = field_B(frame, t);
    for (std::size_t i = 0; i < n; ++i) {
      const Vec2 q = paths.slices[s][i];
      const double x = q.x - c.x();
      const double y = q.y - c.y();
      const double wx = omega(0, 0) * x + omega(0, 1) * y - omega(0, 2) * c.z() + b.x();
      const double wy = omega(1, 0) * x + omega(1, 1) * y - omega(1, 2) * c.z() + b.y();
      const double v = potential.value(q.x, q.y);

      const Vec2 qf = paths.slices[s + 1][i];
      const Vec2 qb = paths.slices[s - 1][i];
      const double fx = (qf.x - q.x) / dt_f + wx;
      const double fy = (qf.y - q.y) / dt_f + wy;
      const double bx = (q.x - qb.x) / dt_b + wx;
      const double by = (q.y - qb.y) / dt_b + wy;
      total_inc[i] += (0.25 * m * (fx * fx + fy * fy + bx * bx + by * by) - v) * weight;

      if (use_fields) {
        const MadelungFields& f = fields_per_slice[s];
        if (f.mask[nearest_node(f.grid(), q.x, q.y)]) {
          total[i] -= v * weight;
          continue;
        }
        // D q + A + B = p / M.
        const Vec2 pf = interpolate(f.p_fwd, q.x, q.y);
        const Vec2 pb = interpolate(f.p_bwd, q.x, q.y);
        const double kinetic =
            0.25 * (pf.x * pf.x + pf.y * pf.y + pb.x * pb.x + pb.y * pb.y) / m;
        total[i] += (kinetic - v) * weight;
      }
    }
  }

  ActionEstimate est;
  est.steps = slices - 2;
  est.ito_correction = correction;
  const std::vector<double>& primary = use_fields ? total : total_inc;
  const double shift = use_fields ? 0.0 : correction;
  double sum = 0.0, sum_sq = 0.0, sum_inc = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sum += primary[i];
    sum_sq += primary[i] * primary[i];
    sum_inc += total_inc[i];
  }
  const double nn = static_cast<double>(n);
  const double mean = sum / nn;
  est.value = mean - shift;
  est.increment_value = sum_inc / nn - correction;
  if (n > 1) est.stat_err = std::sqrt(std::max(0.0, (sum_sq - nn * mean * mean) / (nn - 1.0)) / nn);
  return est;
}

}  // namespace svmrot
