#include "svmrot/schrodinger.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <sstream>

namespace svmrot {

namespace {

constexpr Complex kI{0.0, 1.0};

void require_dirichlet(const Grid2D& grid) {
  if (grid.boundary() != Boundary::dirichlet_zero) {
    throw PreconditionError("the Schrodinger solver needs a dirichlet_zero grid");
  }
}

}  // namespace

Hamiltonian::Hamiltonian(const Grid2D& grid, const PhysicalParams& params, const FramePath& frame,
                         const Potential& potential, double t)
    : grid_(grid),
      kinetic_(params.hbar * params.hbar /
               (2.0 * params.mass * grid.spacing() * grid.spacing())),
      cross_(params.hbar / (4.0 * grid.spacing())),
      diagonal_base_(4.0 * kinetic_),
      wx_(grid.size()),
      wy_(grid.size()),
      potential_(grid.size()) {
  const Mat3 omega = omega_tensor(frame, t);
  const Vec3 c = frame.offset(t);
  const Vec3 b = field_B(frame, t);
  const std::size_t n = grid.n();
  for (std::size_t j = 0; j < n; ++j) {
    const double y = grid.coord(j) - c.y();
    for (std::size_t i = 0; i < n; ++i) {
      const double x = grid.coord(i) - c.x();
      const std::size_t k = grid.index(i, j);
      wx_[k] = omega(0, 0) * x + omega(0, 1) * y - omega(0, 2) * c.z() + b.x();
      wy_[k] = omega(1, 0) * x + omega(1, 1) * y - omega(1, 2) * c.z() + b.y();
      potential_[k] = potential.value(grid.coord(i), grid.coord(j));
    }
  }
}

void Hamiltonian::apply(std::span<const Complex> in, std::span<Complex> out) const {
  const std::size_t n = grid_.n();
  if (in.size() != grid_.size() || out.size() != grid_.size()) {
    throw ShapeError("Hamiltonian::apply: vector size does not match grid");
  }
  const double kin = kinetic_;
  const Complex icross = kI * cross_;
  for (std::size_t i = 0; i < n; ++i) {
    out[i] = Complex{};
    out[(n - 1) * n + i] = Complex{};
  }
  for (std::size_t j = 1; j + 1 < n; ++j) {
    const std::size_t row = j * n;
    out[row] = Complex{};
    out[row + n - 1] = Complex{};
    const bool south_edge = (j == 1);
    const bool north_edge = (j + 2 == n);
    for (std::size_t i = 1; i + 1 < n; ++i) {
      const std::size_t k = row + i;
      const Complex c = in[k];
      const Complex e = (i + 2 == n) ? Complex{} : in[k + 1];
      const Complex w = (i == 1) ? Complex{} : in[k - 1];
      const Complex nn = north_edge ? Complex{} : in[k + n];
      const Complex s = south_edge ? Complex{} : in[k - n];
      const double wxc = wx_[k];
      const double wyc = wy_[k];
      const Complex cross = (wxc + wx_[k + 1]) * e - (wxc + wx_[k - 1]) * w +
                            (wyc + wy_[k + n]) * nn - (wyc + wy_[k - n]) * s;
      out[k] = -kin * (e + w + nn + s - 4.0 * c) + potential_[k] * c + icross * cross;
    }
  }
}

ComplexField Hamiltonian::apply(const ComplexField& in) const {
  require_same_grid(in.grid(), grid_, "Hamiltonian::apply");
  ComplexField out(grid_);
  apply(in.values(), out.values());
  return out;
}

ComplexField hamiltonian_apply(const WaveFunction& psi, const FramePath& frame,
                               const Potential& potential, double t) {
  psi.params.require_quantum();
  require_dirichlet(psi.grid());
  return Hamiltonian(psi.grid(), psi.params, frame, potential, t).apply(psi.values);
}

namespace {

using CVec = std::vector<Complex>;

Complex dot(const CVec& a, const CVec& b) {
  Complex acc{};
  for (std::size_t k = 0; k < a.size(); ++k) acc += std::conj(a[k]) * b[k];
  return acc;
}

double norm2(const CVec& a) {
  double acc = 0.0;
  for (const Complex& v : a) acc += std::norm(v);
  return std::sqrt(acc);
}

// (1 + i sign tau H) acting on full-grid vectors.
struct CayleyOperator {
  const Hamiltonian& h;
  Complex coeff;  // i * sign * tau
  mutable CVec scratch;

  void apply(const CVec& x, CVec& y) const {
    scratch.resize(x.size());
    h.apply(x, scratch);
    for (std::size_t k = 0; k < x.size(); ++k) y[k] = x[k] + coeff * scratch[k];
  }
};

struct SolveResult {
  int iterations = 0;
  double residual = 0.0;
  bool converged = false;
};

SolveResult bicgstab(const CayleyOperator& op, const CVec& inv_diag, const CVec& b, CVec& x,
                     double tol, int max_iterations) {
  const std::size_t size = b.size();
  const double b_norm = norm2(b);
  if (b_norm == 0.0) {
    std::fill(x.begin(), x.end(), Complex{});
    return {0, 0.0, true};
  }
  CVec r(size), r_hat(size), p(size, Complex{}), v(size, Complex{}), y(size), s(size), z(size),
      t(size);
  op.apply(x, r);
  for (std::size_t k = 0; k < size; ++k) r[k] = b[k] - r[k];
  double residual = norm2(r) / b_norm;
  if (residual < tol) return {0, residual, true};
  r_hat = r;
  Complex rho{1.0, 0.0}, alpha{1.0, 0.0}, omega{1.0, 0.0};
  for (int it = 1; it <= max_iterations; ++it) {
    const Complex rho_new = dot(r_hat, r);
    if (std::abs(rho_new) == 0.0) {
      // Breakdown: restart from the current residual.
      r_hat = r;
      rho = alpha = omega = Complex{1.0, 0.0};
      std::fill(p.begin(), p.end(), Complex{});
      std::fill(v.begin(), v.end(), Complex{});
      continue;
    }
    const Complex beta = (rho_new / rho) * (alpha / omega);
    rho = rho_new;
    for (std::size_t k = 0; k < size; ++k) p[k] = r[k] + beta * (p[k] - omega * v[k]);
    for (std::size_t k = 0; k < size; ++k) y[k] = inv_diag[k] * p[k];
    op.apply(y, v);
    alpha = rho / dot(r_hat, v);
    for (std::size_t k = 0; k < size; ++k) s[k] = r[k] - alpha * v[k];
    if (norm2(s) / b_norm < tol) {
      for (std::size_t k = 0; k < size; ++k) x[k] += alpha * y[k];
      op.apply(x, r);
      for (std::size_t k = 0; k < size; ++k) r[k] = b[k] - r[k];
      residual = norm2(r) / b_norm;
      if (residual < tol) return {it, residual, true};
      continue;
    }
    for (std::size_t k = 0; k < size; ++k) z[k] = inv_diag[k] * s[k];
    op.apply(z, t);
    const double tt = std::real(dot(t, t));
    omega = tt > 0.0 ? dot(t, s) / tt : Complex{};
    for (std::size_t k = 0; k < size; ++k) {
      x[k] += alpha * y[k] + omega * z[k];
      r[k] = s[k] - omega * t[k];
    }
    residual = norm2(r) / b_norm;
    if (residual < tol) {
      // Confirm against the true residual; the recurrence can drift.
      op.apply(x, t);
      double true_res = 0.0;
      for (std::size_t k = 0; k < size; ++k) true_res += std::norm(b[k] - t[k]);
      residual = std::sqrt(true_res) / b_norm;
      if (residual < tol) return {it, residual, true};
      for (std::size_t k = 0; k < size; ++k) r[k] = b[k] - t[k];
    }
  }
  return {max_iterations, residual, false};
}

SchrodingerRun cayley_step(SchrodingerRun run, double sign, StepStats* stats) {
  if (!(run.dt > 0.0)) throw PreconditionError("time step must be positive");
  if (!(run.solver_tol > 0.0)) throw PreconditionError("solver tolerance must be positive");
  run.psi.params.require_quantum();
  const Grid2D& grid = run.psi.grid();
  require_dirichlet(grid);

  const double t_mid = run.t + sign * 0.5 * run.dt;
  const Hamiltonian h(grid, run.psi.params, run.frame, run.potential, t_mid);
  const double tau = run.dt / (2.0 * run.psi.params.hbar);

  const std::size_t size = grid.size();
  CVec psi(run.psi.values.values().begin(), run.psi.values.values().end());
  CVec h_psi(size);
  h.apply(psi, h_psi);

  // Forward:  (1 + i tau H) x = (1 - i tau H) psi.
  // Backward: (1 - i tau H) x = (1 + i tau H) psi.
  const Complex lhs_coeff = kI * (sign * tau);
  CVec rhs(size);
  for (std::size_t k = 0; k < size; ++k) rhs[k] = psi[k] - lhs_coeff * h_psi[k];

  CVec inv_diag(size, Complex{});
  CVec x(size);
  for (std::size_t k = 0; k < size; ++k) {
    inv_diag[k] = 1.0 / (1.0 + lhs_coeff * h.diagonal(k));
    // First-order guess (1 - 2 i tau H) psi.
    x[k] = psi[k] - 2.0 * lhs_coeff * h_psi[k];
  }

  const CayleyOperator op{h, lhs_coeff, {}};
  const SolveResult res = bicgstab(op, inv_diag, rhs, x, run.solver_tol, run.max_iterations);
  if (!res.converged) {
    std::ostringstream os;
    os << "Crank-Nicolson solve did not reach tolerance " << run.solver_tol << " in "
       << run.max_iterations << " iterations (residual " << res.residual << ")";
    throw ConvergenceError(os.str(), res.residual, res.iterations);
  }
  std::copy(x.begin(), x.end(), run.psi.values.values().begin());
  run.t += sign * run.dt;
  if (stats) *stats = {res.iterations, res.residual};
  return run;
}

}  // namespace

SchrodingerRun step(SchrodingerRun run, StepStats* stats) {
  return cayley_step(std::move(run), 1.0, stats);
}

SchrodingerRun step_back(SchrodingerRun run, StepStats* stats) {
  return cayley_step(std::move(run), -1.0, stats);
}

double boundary_amplitude(const WaveFunction& psi) {
  const Grid2D& g = psi.grid();
  const std::size_t n = g.n();
  double amp = 0.0;
  for (std::size_t k = 1; k + 1 < n; ++k) {
    amp = std::max({amp, std::abs(psi.values(k, 1)), std::abs(psi.values(k, n - 2)),
                    std::abs(psi.values(1, k)), std::abs(psi.values(n - 2, k))});
  }
  return amp;
}

double stiffness_number(const Grid2D& grid, const PhysicalParams& params, double dt) {
  return dt * params.hbar / (params.mass * grid.spacing() * grid.spacing());
}

EvolveResult evolve(SchrodingerRun run, double t_end, std::span<const double> snapshot_times,
                    const StepObserver& observer) {
  if (!(run.dt > 0.0)) throw PreconditionError("time step must be positive");
  const double t0 = run.t;
  if (t_end < t0) throw PreconditionError("t_end precedes the current time");
  const double eps = 1e-9 * run.dt;
  for (double ts : snapshot_times) {
    if (ts < t0 - eps || ts > t_end + eps) {
      throw PreconditionError("snapshot time outside the evolution interval");
    }
  }

  EvolveResult result{run, {}, {}, 0.0, 0};
  const double base_dt = run.dt;
  // Each snapshot takes the recorded state closest to its time.
  std::vector<std::optional<WaveSnapshot>> chosen(snapshot_times.size());
  std::vector<double> distance(snapshot_times.size(), 0.0);

  auto record = [&](const SchrodingerRun& r) {
    result.series.append(r.t, r.psi);
    result.max_boundary_amplitude = std::max(result.max_boundary_amplitude, boundary_amplitude(r.psi));
    for (std::size_t s = 0; s < snapshot_times.size(); ++s) {
      const double d = std::abs(r.t - snapshot_times[s]);
      if (d <= 0.5 * base_dt + eps && (!chosen[s] || d < distance[s])) {
        chosen[s] = WaveSnapshot{r.t, r.psi};
        distance[s] = d;
      }
    }
  };

  record(run);
  if (observer) observer(run, StepStats{});

  const auto steps = static_cast<long>(std::ceil((t_end - t0) / base_dt - 1e-9));
  for (long k = 0; k < steps; ++k) {
    const double remaining = t_end - run.t;
    run.dt = std::min(base_dt, remaining);
    if (run.dt <= eps) break;
    StepStats stats;
    run = step(std::move(run), &stats);
    if (k + 1 == steps) run.t = t_end;
    result.max_solver_iterations = std::max(result.max_solver_iterations, stats.iterations);
    record(run);
    if (observer) observer(run, stats);
  }
  run.dt = base_dt;
  result.run = std::move(run);
  for (auto& snap : chosen) {
    if (snap) result.snapshots.push_back(std::move(*snap));
  }
  return result;
}

GroundState ground_state(const WaveFunction& guess, const FramePath& frame,
                         const Potential& potential, double t, double tol, double shift,
                         int max_iterations) {
  guess.params.require_quantum();
  const Grid2D& grid = guess.grid();
  require_dirichlet(grid);
  const Hamiltonian h(grid, guess.params, frame, potential, t);
  const std::size_t size = grid.size();
  const double area = grid.spacing() * grid.spacing();

  WaveFunction psi = normalize(guess);
  CVec x(psi.values.values().begin(), psi.values.values().end());
  CVec hx(size), r(size), p(size), ap(size), sol(size);

  auto shifted = [&](const CVec& in, CVec& out) {
    h.apply(in, out);
    for (std::size_t k = 0; k < size; ++k) out[k] -= shift * in[k];
  };

  GroundState gs{psi, 0.0, 0.0, 0};
  for (int it = 1; it <= max_iterations; ++it) {
    // Solve (H - shift) sol = x by conjugate gradients.
    std::fill(sol.begin(), sol.end(), Complex{});
    r = x;
    p = r;
    double rr = std::real(dot(r, r));
    const double b_norm = std::sqrt(rr);
    for (int cg = 0; cg < 20000 && std::sqrt(rr) > 1e-14 * b_norm; ++cg) {
      shifted(p, ap);
      const double pap = std::real(dot(p, ap));
      if (!(pap > 0.0)) throw PreconditionError("H - shift is not positive definite");
      const double a = rr / pap;
      for (std::size_t k = 0; k < size; ++k) {
        sol[k] += a * p[k];
        r[k] -= a * ap[k];
      }
      const double rr_new = std::real(dot(r, r));
      const double beta = rr_new / rr;
      rr = rr_new;
      for (std::size_t k = 0; k < size; ++k) p[k] = r[k] + beta * p[k];
    }
    const double scale = 1.0 / (norm2(sol) * grid.spacing());
    for (std::size_t k = 0; k < size; ++k) x[k] = sol[k] * scale;

    h.apply(x, hx);
    const double energy = std::real(dot(x, hx)) * area;
    double res = 0.0;
    for (std::size_t k = 0; k < size; ++k) res += std::norm(hx[k] - energy * x[k]);
    res = std::sqrt(res * area);
    gs.energy = energy;
    gs.residual = res;
    gs.iterations = it;
    if (res < tol) break;
  }
  std::copy(x.begin(), x.end(), gs.psi.values.values().begin());
  return gs;
}

}  // namespace svmrot
