#include "svmrot/observables.hpp"

#include <algorithm>
#include <cmath>

namespace svmrot {

std::size_t ObservableSeries::append(double time, const WaveFunction& psi) {
  const Vec2 pos = expectation_position(psi);
  const Vec2 mom = expectation_momentum(psi).value;
  t.push_back(time);
  norm.push_back(norm_squared(psi.values));
  mean_x.push_back(pos.x);
  mean_y.push_back(pos.y);
  mean_px.push_back(mom.x);
  mean_py.push_back(mom.y);
  L_z.push_back(angular_momentum_expectation(psi).value);
  Q_ensemble.push_back(kAbsent);
  Q_stat_err.push_back(kAbsent);
  ehrenfest_residual_x.push_back(kAbsent);
  ehrenfest_residual_y.push_back(kAbsent);
  el_residual_norm.push_back(kAbsent);
  return t.size() - 1;
}

Vec2 expectation_position(const WaveFunction& psi) {
  const Grid2D& g = psi.grid();
  double sx = 0.0, sy = 0.0;
  for (std::size_t j = 0; j < g.n(); ++j) {
    const double y = g.coord(j);
    for (std::size_t i = 0; i < g.n(); ++i) {
      const double rho = std::norm(psi.values(i, j));
      sx += rho * g.coord(i);
      sy += rho * y;
    }
  }
  const double area = g.spacing() * g.spacing();
  return {sx * area, sy * area};
}

ExpectationVec2 expectation_momentum(const WaveFunction& psi) {
  const VecField<Complex> d = gradient(psi.values);
  Complex sx{}, sy{};
  for (std::size_t k = 0; k < psi.values.size(); ++k) {
    const Complex c = std::conj(psi.values[k]);
    sx += c * d.x[k];
    sy += c * d.y[k];
  }
  const double h = psi.grid().spacing();
  // -i hbar * (sum psi* grad psi) h^2
  const Complex px = Complex(0.0, -psi.params.hbar) * sx * (h * h);
  const Complex py = Complex(0.0, -psi.params.hbar) * sy * (h * h);
  return {{px.real(), py.real()}, std::max(std::abs(px.imag()), std::abs(py.imag()))};
}

ExpectationScalar angular_momentum_expectation(const WaveFunction& psi) {
  const Grid2D& g = psi.grid();
  const VecField<Complex> d = gradient(psi.values);
  Complex acc{};
  for (std::size_t j = 0; j < g.n(); ++j) {
    const double y = g.coord(j);
    for (std::size_t i = 0; i < g.n(); ++i) {
      const std::size_t k = g.index(i, j);
      acc += std::conj(psi.values[k]) * (g.coord(i) * d.y[k] - y * d.x[k]);
    }
  }
  const double h = g.spacing();
  const Complex lz = Complex(0.0, -psi.params.hbar) * acc * (h * h);
  return {lz.real(), std::abs(lz.imag())};
}

Vec2 expectation_potential_gradient(const WaveFunction& psi, const Potential& potential) {
  const Grid2D& g = psi.grid();
  double sx = 0.0, sy = 0.0;
  for (std::size_t j = 0; j < g.n(); ++j) {
    const double y = g.coord(j);
    for (std::size_t i = 0; i < g.n(); ++i) {
      const double rho = std::norm(psi.values(i, j));
      const Eigen::Vector2d dv = potential.gradient(g.coord(i), y);
      sx += rho * dv.x();
      sy += rho * dv.y();
    }
  }
  const double area = g.spacing() * g.spacing();
  return {sx * area, sy * area};
}

Vec2 madelung_mean_momentum(const MadelungFields& f) {
  double sx = 0.0, sy = 0.0;
  for (std::size_t k = 0; k < f.rho.size(); ++k) {
    if (f.mask[k]) continue;
    sx += f.rho[k] * f.p_m.x[k];
    sy += f.rho[k] * f.p_m.y[k];
  }
  const double area = f.grid().spacing() * f.grid().spacing();
  return {sx * area, sy * area};
}

double madelung_angular_momentum(const MadelungFields& f) {
  const Grid2D& g = f.grid();
  double acc = 0.0;
  for (std::size_t j = 0; j < g.n(); ++j) {
    const double y = g.coord(j);
    for (std::size_t i = 0; i < g.n(); ++i) {
      const std::size_t k = g.index(i, j);
      if (f.mask[k]) continue;
      acc += f.rho[k] * (g.coord(i) * f.p_m.y[k] - y * f.p_m.x[k]);
    }
  }
  return acc * g.spacing() * g.spacing();
}

std::vector<EhrenfestPoint> ehrenfest_residual(std::span<const double> times,
                                               std::span<const Vec2> mean_momentum,
                                               std::span<const Vec2> mean_grad_potential,
                                               const FramePath& frame, double dt) {
  const std::size_t n = times.size();
  if (n < 3) throw PreconditionError("Ehrenfest residual needs at least three snapshots");
  if (mean_momentum.size() != n || mean_grad_potential.size() != n) {
    throw ShapeError("Ehrenfest residual: series lengths differ");
  }
  if (!(dt > 0.0)) throw PreconditionError("snapshot spacing must be positive");
  for (std::size_t k = 1; k < n; ++k) {
    if (std::abs(times[k] - times[k - 1] - dt) > 1e-6 * dt) {
      throw PreconditionError("Ehrenfest residual needs uniformly spaced snapshots");
    }
  }
  std::vector<EhrenfestPoint> out;
  out.reserve(n - 2);
  for (std::size_t k = 1; k + 1 < n; ++k) {
    const Mat3 omega = omega_tensor(frame, times[k]);
    const Vec2& p = mean_momentum[k];
    // (Omega^T p)_i = Omega_ji p_j
    const double fx = omega(0, 0) * p.x + omega(1, 0) * p.y - mean_grad_potential[k].x;
    const double fy = omega(0, 1) * p.x + omega(1, 1) * p.y - mean_grad_potential[k].y;
    const double dpx = (mean_momentum[k + 1].x - mean_momentum[k - 1].x) / (2.0 * dt);
    const double dpy = (mean_momentum[k + 1].y - mean_momentum[k - 1].y) / (2.0 * dt);
    out.push_back({times[k], {dpx - fx, dpy - fy}});
  }
  return out;
}

std::vector<EhrenfestPoint> ehrenfest_residual(std::span<const WaveSnapshot> snapshots,
                                               const FramePath& frame, const Potential& potential,
                                               double dt) {
  if (snapshots.size() < 3) {
    throw PreconditionError("Ehrenfest residual needs at least three snapshots");
  }
  std::vector<double> times;
  std::vector<Vec2> momentum;
  std::vector<Vec2> grad_v;
  for (const WaveSnapshot& s : snapshots) {
    times.push_back(s.t);
    momentum.push_back(expectation_momentum(s.psi).value);
    grad_v.push_back(expectation_potential_gradient(s.psi, potential));
  }
  return ehrenfest_residual(times, momentum, grad_v, frame, dt);
}

ChargeEstimate noether_charge_ensemble(std::span<const Vec2> positions, const VectorField& p_m,
                                       const NodeMask& mask) {
  const Grid2D& g = p_m.x.grid();
  if (mask.size() != g.size()) throw ShapeError("noether charge: mask does not match grid");
  ChargeEstimate est;
  double sum = 0.0;
  double sum_sq = 0.0;
  for (const Vec2& q : positions) {
    if (mask[nearest_node(g, q.x, q.y)]) {
      ++est.masked;
      continue;
    }
    const Vec2 p = interpolate(p_m, q.x, q.y);
    const double lz = q.x * p.y - q.y * p.x;
    sum += lz;
    sum_sq += lz * lz;
    ++est.used;
  }
  if (est.used == 0) return est;
  const double n = static_cast<double>(est.used);
  est.value = sum / n;
  if (est.used > 1) {
    const double var = std::max(0.0, (sum_sq - n * est.value * est.value) / (n - 1.0));
    est.stat_err = std::sqrt(var / n);
  }
  return est;
}

double EulerLagrangeResidual::l2() const { return std::hypot(l2_x, l2_y); }
double EulerLagrangeResidual::linf() const { return std::max(linf_x, linf_y); }

EulerLagrangeResidual euler_lagrange_residual(const MadelungFields& before,
                                              const MadelungFields& middle,
                                              const MadelungFields& after,
                                              const FramePath& frame, const Potential& potential,
                                              double t_middle, double dt,
                                              const EulerLagrangeOptions& options) {
  const Grid2D& g = middle.grid();
  require_same_grid(before.grid(), g, "Euler-Lagrange residual");
  require_same_grid(after.grid(), g, "Euler-Lagrange residual");
  if (!(dt > 0.0)) throw PreconditionError("Euler-Lagrange residual needs a positive dt");
  const std::size_t n = g.n();
  const std::size_t size = g.size();
  const PhysicalParams& pp = middle.params;

  // Nodes whose 5x5 neighbourhood is unmasked at all three times.
  std::vector<std::uint8_t> bad(size, 0);
  for (std::size_t k = 0; k < size; ++k) {
    bad[k] = before.mask[k] || middle.mask[k] || after.mask[k];
  }
  const std::size_t margin = std::max<std::size_t>(options.margin, 2);
  std::vector<std::uint8_t> eval(size, 0);
  for (std::size_t j = margin; j + margin < n; ++j) {
    for (std::size_t i = margin; i + margin < n; ++i) {
      bool ok = true;
      for (std::size_t jj = j - 2; ok && jj <= j + 2; ++jj) {
        for (std::size_t ii = i - 2; ii <= i + 2; ++ii) {
          if (bad[g.index(ii, jj)]) {
            ok = false;
            break;
          }
        }
      }
      eval[g.index(i, j)] = ok;
    }
  }

  const VectorField dpx = gradient(middle.p_m.x);
  const VectorField dpy = gradient(middle.p_m.y);

  RealField sqrt_rho(g);
  for (std::size_t k = 0; k < size; ++k) sqrt_rho[k] = std::sqrt(std::max(middle.rho[k], 0.0));
  const RealField lap = laplacian(sqrt_rho);
  RealField quantum(g);
  for (std::size_t k = 0; k < size; ++k) {
    quantum[k] = middle.mask[k] ? 0.0 : lap[k] / sqrt_rho[k];
  }
  const VectorField dq = gradient(quantum);

  const Mat3 omega = omega_tensor(frame, t_middle);
  const Vec3 c = frame.offset(t_middle);
  const Vec3 b = field_B(frame, t_middle);
  const double qcoef = 2.0 * pp.mass * pp.nu * pp.nu;

  EulerLagrangeResidual out{0.0, 0.0, 0.0, 0.0, 0, RealField(g), RealField(g)};
  double sx = 0.0, sy = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    const double y = g.coord(j);
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t k = g.index(i, j);
      if (!eval[k]) continue;
      const double x = g.coord(i);
      const double px = middle.p_m.x[k];
      const double py = middle.p_m.y[k];
      const double ax = omega(0, 0) * (x - c.x()) + omega(0, 1) * (y - c.y()) - omega(0, 2) * c.z();
      const double ay = omega(1, 0) * (x - c.x()) + omega(1, 1) * (y - c.y()) - omega(1, 2) * c.z();
      const double vx = px / pp.mass - ax - b.x();
      const double vy = py / pp.mass - ay - b.y();

      const double dtx = (after.p_m.x[k] - before.p_m.x[k]) / (2.0 * dt);
      const double dty = (after.p_m.y[k] - before.p_m.y[k]) / (2.0 * dt);
      const double convx = vx * dpx.x[k] + vy * dpx.y[k];
      const double convy = vx * dpy.x[k] + vy * dpy.y[k];

      double couple_x, couple_y;
      if (options.coupling == CouplingForm::gradient_contraction) {
        couple_x = omega(0, 0) * px + omega(1, 0) * py;
        couple_y = omega(0, 1) * px + omega(1, 1) * py;
      } else {
        couple_x = omega(0, 0) * px + omega(0, 1) * py;
        couple_y = omega(1, 0) * px + omega(1, 1) * py;
      }
      const Eigen::Vector2d dv = potential.gradient(x, y);

      const double rx = dtx + convx - qcoef * dq.x[k] - (couple_x - dv.x());
      const double ry = dty + convy - qcoef * dq.y[k] - (couple_y - dv.y());
      out.residual_x[k] = rx;
      out.residual_y[k] = ry;
      sx += rx * rx;
      sy += ry * ry;
      out.linf_x = std::max(out.linf_x, std::abs(rx));
      out.linf_y = std::max(out.linf_y, std::abs(ry));
      ++out.evaluated;
    }
  }
  const double area = g.spacing() * g.spacing();
  out.l2_x = std::sqrt(sx * area);
  out.l2_y = std::sqrt(sy * area);
  return out;
}

}  // namespace svmrot
