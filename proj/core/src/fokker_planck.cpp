#include "svmrot/fokker_planck.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <sstream>

namespace svmrot {

DriftField drift_from_madelung(const MadelungFields& fields, const FramePath& frame, double t,
                               Direction direction) {
  const Grid2D& g = fields.grid();
  const VectorField& p = direction == Direction::forward ? fields.p_fwd : fields.p_bwd;
  const Mat3 omega = omega_tensor(frame, t);
  const Vec3 c = frame.offset(t);
  const Vec3 b = field_B(frame, t);
  const double inv_m = 1.0 / fields.params.mass;
  DriftField out{{RealField(g), RealField(g)}, fields.mask, DriftProvenance::from_madelung};
  for (std::size_t j = 0; j < g.n(); ++j) {
    const double y = g.coord(j) - c.y();
    for (std::size_t i = 0; i < g.n(); ++i) {
      const std::size_t k = g.index(i, j);
      if (fields.mask[k]) continue;
      const double x = g.coord(i) - c.x();
      const double ax = omega(0, 0) * x + omega(0, 1) * y - omega(0, 2) * c.z();
      const double ay = omega(1, 0) * x + omega(1, 1) * y - omega(1, 2) * c.z();
      out.values.x[k] = p.x[k] * inv_m - ax - b.x();
      out.values.y[k] = p.y[k] * inv_m - ay - b.y();
    }
  }
  return out;
}

DriftField analytic_drift(const Grid2D& grid, const std::function<Vec2(double, double)>& velocity) {
  DriftField out{{RealField(grid), RealField(grid)}, NodeMask(grid.size(), 0),
                 DriftProvenance::analytic_test};
  for (std::size_t j = 0; j < grid.n(); ++j) {
    for (std::size_t i = 0; i < grid.n(); ++i) {
      const Vec2 v = velocity(grid.coord(i), grid.coord(j));
      out.values.x(i, j) = v.x;
      out.values.y(i, j) = v.y;
    }
  }
  return out;
}

double admissible_dt(const DriftField& drift, double nu) {
  const Grid2D& g = drift.grid();
  const std::size_t n = g.n();
  const double h = g.spacing();
  const bool masked = drift.mask.size() == drift.values.x.size();
  auto vx = [&](std::size_t k) { return masked && drift.mask[k] ? 0.0 : drift.values.x[k]; };
  auto vy = [&](std::size_t k) { return masked && drift.mask[k] ? 0.0 : drift.values.y[k]; };

  double vmax = 0.0;
  for (std::size_t k = 0; k < g.size(); ++k) vmax = std::max(vmax, std::hypot(vx(k), vy(k)));

  // Largest outflow rate of any cell through its upwinded faces; keeping the
  // cell's own update coefficient non-negative also needs this term.
  double outflow = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t k = g.index(i, j);
      double out = 0.0;
      if (i + 1 < n) out += std::max(0.0, 0.5 * (vx(k) + vx(k + 1)));
      if (i > 0) out += std::max(0.0, -0.5 * (vx(k) + vx(k - 1)));
      if (j + 1 < n) out += std::max(0.0, 0.5 * (vy(k) + vy(k + n)));
      if (j > 0) out += std::max(0.0, -0.5 * (vy(k) + vy(k - n)));
      outflow = std::max(outflow, out);
    }
  }
  const double inf = std::numeric_limits<double>::infinity();
  const double diffusive = nu > 0.0 ? h * h / (4.0 * nu) : inf;
  const double advective = vmax > 0.0 ? h / vmax : inf;
  const double rate = (nu > 0.0 ? 4.0 * nu / (h * h) : 0.0) + outflow / h;
  const double combined = rate > 0.0 ? 1.0 / rate : inf;
  return 0.9 * std::min({diffusive, advective, combined});
}

namespace {

double drift_at(const RealField& v, const NodeMask& mask, std::size_t k) {
  return (mask.empty() || !mask[k]) ? v[k] : 0.0;
}

}  // namespace

FpStepResult fp_step(const RealField& rho, const DriftField& drift, double nu, double dt) {
  const Grid2D& g = rho.grid();
  require_same_grid(drift.grid(), g, "fp_step");
  if (!(dt >= 0.0)) throw PreconditionError("Fokker-Planck step needs dt >= 0");
  const double limit = admissible_dt(drift, nu);
  if (dt > limit) {
    std::ostringstream os;
    os << "Fokker-Planck step dt = " << dt << " exceeds the stability bound " << limit;
    throw StabilityError(os.str(), limit);
  }
  const std::size_t n = g.n();
  const double h = g.spacing();
  const double ratio = dt / h;
  const double diff = nu / h;
  const NodeMask& mask = drift.mask;

  FpStepResult out{rho, 0.0};
  RealField& next = out.rho;

  // x faces between (i, j) and (i + 1, j).
  for (std::size_t j = 0; j < n; ++j) {
    for (std::size_t i = 0; i + 1 < n; ++i) {
      const std::size_t l = g.index(i, j);
      const std::size_t r = l + 1;
      const double v = 0.5 * (drift_at(drift.values.x, mask, l) + drift_at(drift.values.x, mask, r));
      const double upwind = v >= 0.0 ? rho[l] : rho[r];
      const double flux = v * upwind - diff * (rho[r] - rho[l]);
      next[l] -= ratio * flux;
      next[r] += ratio * flux;
    }
  }
  // y faces between (i, j) and (i, j + 1).
  for (std::size_t j = 0; j + 1 < n; ++j) {
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t s = g.index(i, j);
      const std::size_t nn = s + n;
      const double v = 0.5 * (drift_at(drift.values.y, mask, s) + drift_at(drift.values.y, mask, nn));
      const double upwind = v >= 0.0 ? rho[s] : rho[nn];
      const double flux = v * upwind - diff * (rho[nn] - rho[s]);
      next[s] -= ratio * flux;
      next[nn] += ratio * flux;
    }
  }

  double negative = 0.0;
  double total = 0.0;
  for (double& v : next.values()) {
    total += v;
    if (v < 0.0) {
      negative -= v;
      v = 0.0;
    }
  }
  if (negative > 0.0) {
    const double scale = total / (total + negative);
    for (double& v : next.values()) v *= scale;
  }
  out.clipped_mass = negative * h * h;
  return out;
}

FpAdvance fp_advance(const RealField& rho, const DriftField& drift, double nu, double dt) {
  const double limit = admissible_dt(drift, nu);
  int substeps = 1;
  if (dt > limit) substeps = static_cast<int>(std::ceil(dt / limit));
  const double sub_dt = dt / substeps;
  FpAdvance out{rho, 0.0, substeps};
  for (int s = 0; s < substeps; ++s) {
    FpStepResult r = fp_step(out.rho, drift, nu, sub_dt);
    out.rho = std::move(r.rho);
    out.clipped_mass += r.clipped_mass;
  }
  return out;
}

FpEvolveResult fp_evolve(const RealField& rho0, const DriftSource& source, double nu, double t0,
                         double t_end, double dt, std::span<const double> snapshot_times,
                         const FpEvolveOptions& options) {
  if (!(dt > 0.0)) throw PreconditionError("Fokker-Planck evolution needs dt > 0");
  if (t_end < t0) throw PreconditionError("t_end precedes t0");
  const double eps = 1e-9 * dt;
  for (double ts : snapshot_times) {
    if (ts < t0 - eps || ts > t_end + eps) {
      throw PreconditionError("snapshot time outside the evolution interval");
    }
  }
  FpEvolveResult result{rho0, {}, {}};
  std::vector<std::optional<DensitySnapshot>> chosen(snapshot_times.size());
  std::vector<double> distance(snapshot_times.size(), 0.0);
  double t = t0;
  auto record = [&](double clipped) {
    double mn = std::numeric_limits<double>::infinity();
    for (double v : result.rho.values()) mn = std::min(mn, v);
    result.series.t.push_back(t);
    result.series.total_mass.push_back(integral(result.rho));
    result.series.clipped_mass.push_back(clipped);
    result.series.min_rho.push_back(mn);
    for (std::size_t s = 0; s < snapshot_times.size(); ++s) {
      const double d = std::abs(t - snapshot_times[s]);
      if (d <= 0.5 * dt + eps && (!chosen[s] || d < distance[s])) {
        chosen[s] = DensitySnapshot{t, result.rho};
        distance[s] = d;
      }
    }
  };
  record(0.0);
  const auto steps = static_cast<long>(std::ceil((t_end - t0) / dt - 1e-9));
  for (long k = 0; k < steps; ++k) {
    const double h = std::min(dt, t_end - t);
    if (h <= eps) break;
    const DriftField drift = source(t);
    double clipped = 0.0;
    if (options.substep) {
      FpAdvance adv = fp_advance(result.rho, drift, nu, h);
      result.rho = std::move(adv.rho);
      clipped = adv.clipped_mass;
    } else {
      FpStepResult r = fp_step(result.rho, drift, nu, h);
      result.rho = std::move(r.rho);
      clipped = r.clipped_mass;
    }
    t = (k + 1 == steps) ? t_end : t + h;
    record(clipped);
  }
  for (auto& snap : chosen) {
    if (snap) result.snapshots.push_back(std::move(*snap));
  }
  return result;
}

double l1_distance(const RealField& a, const RealField& b) {
  require_same_grid(a.grid(), b.grid(), "l1_distance");
  double acc = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) acc += std::abs(a[k] - b[k]);
  const double h = a.grid().spacing();
  return acc * h * h;
}

}  // namespace svmrot
