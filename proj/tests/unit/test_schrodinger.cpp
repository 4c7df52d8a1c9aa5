#include <doctest.h>

#include <cmath>
#include <random>

#include "svmrot/schrodinger.hpp"

using namespace svmrot;

namespace {

ComplexField random_state(const Grid2D& g, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n;
  ComplexField f(g);
  for (std::size_t j = 1; j + 1 < g.n(); ++j) {
    for (std::size_t i = 1; i + 1 < g.n(); ++i) f(i, j) = {n(rng), n(rng)};
  }
  return f;
}

Complex at(const ComplexField& f, long i, long j) {
  const long n = static_cast<long>(f.grid().n());
  if (i < 0 || j < 0 || i >= n || j >= n) return {};
  return f(static_cast<std::size_t>(i), static_cast<std::size_t>(j));
}

// (-hbar^2/2M Lap + V - omega L_z) psi with L_z = -i hbar (x d_y - y d_x),
// five-point Laplacian and central first differences, zero outside the grid.
ComplexField h0_minus_omega_lz(const WaveFunction& psi, const Potential& v, double omega) {
  const Grid2D& g = psi.grid();
  const double h = g.spacing();
  const double m = psi.params.mass, hbar = psi.params.hbar;
  const Complex i_unit(0.0, 1.0);
  ComplexField out(g);
  for (long j = 1; j + 1 < static_cast<long>(g.n()); ++j) {
    for (long i = 1; i + 1 < static_cast<long>(g.n()); ++i) {
      const ComplexField& f = psi.values;
      const Complex c = at(f, i, j);
      const Complex lap = (at(f, i + 1, j) + at(f, i - 1, j) + at(f, i, j + 1) + at(f, i, j - 1) - 4.0 * c) / (h * h);
      const Complex dx = (at(f, i + 1, j) - at(f, i - 1, j)) / (2 * h);
      const Complex dy = (at(f, i, j + 1) - at(f, i, j - 1)) / (2 * h);
      const double x = g.coord(i), y = g.coord(j);
      const Complex lz = -i_unit * hbar * (x * dy - y * dx);
      out(i, j) = -hbar * hbar / (2 * m) * lap + v.value(x, y) * c - omega * lz;
    }
  }
  return out;
}

Complex inner(const ComplexField& a, const ComplexField& b) {
  Complex acc{};
  for (std::size_t k = 0; k < a.size(); ++k) acc += std::conj(a[k]) * b[k];
  return acc * a.grid().spacing() * a.grid().spacing();
}

double max_abs(const ComplexField& f) {
  double m = 0.0;
  for (const Complex& v : f.values()) m = std::max(m, std::abs(v));
  return m;
}

SchrodingerRun make_run(const WaveFunction& psi, FramePath frame, Potential v, double dt) {
  return SchrodingerRun{psi, std::move(frame), v, dt, 0.0, 1e-12, 1000};
}

}  // namespace

TEST_SUITE("schrodinger_solver") {

TEST_CASE("rotating-frame Hamiltonian equals H0 - omega L_z") {
  const PhysicalParams params{1.3, 0.9, 0.9 / 2.6};
  for (auto [omega, v] : {std::pair{0.5, Potential::free_particle()},
                          std::pair{-1.7, Potential::harmonic(2.0)},
                          std::pair{0.3, Potential::radial_gaussian(1.5, 0.8)}}) {
    const Grid2D g(48, 7.0);
    const WaveFunction psi{random_state(g, 17), params};
    const ComplexField hpsi = hamiltonian_apply(psi, FramePath::rotating(omega), v, 0.4);
    const ComplexField oracle = h0_minus_omega_lz(psi, v, omega);
    double diff = 0.0;
    for (std::size_t k = 0; k < g.size(); ++k) diff = std::max(diff, std::abs(hpsi[k] - oracle[k]));
    CHECK(diff < 1e-10 * max_abs(hpsi));
  }
}

TEST_CASE("constant interior state has zero kinetic energy away from the walls") {
  const Grid2D g(40, 20.0);
  WaveFunction psi{ComplexField(g), PhysicalParams{}};
  for (std::size_t j = 1; j + 1 < g.n(); ++j) {
    for (std::size_t i = 1; i + 1 < g.n(); ++i) psi.values(i, j) = 1.0;
  }
  const ComplexField hpsi = hamiltonian_apply(psi, FramePath::inertial(), Potential::free_particle(), 0.0);
  for (std::size_t j = 2; j + 2 < g.n(); ++j) {
    for (std::size_t i = 2; i + 2 < g.n(); ++i) CHECK(std::abs(hpsi(i, j)) < 1e-12);
  }
}

TEST_CASE("plane wave is an eigenfunction of the interior stencil") {
  const Grid2D g(64, 9.0);
  const PhysicalParams params{0.7, 1.2, 1.2 / 1.4};
  const double kx = 1.4, ky = -0.9, h = g.spacing();
  WaveFunction psi{ComplexField(g), params};
  for (std::size_t j = 1; j + 1 < g.n(); ++j) {
    for (std::size_t i = 1; i + 1 < g.n(); ++i) {
      psi.values(i, j) = std::polar(1.0, kx * g.coord(i) + ky * g.coord(j));
    }
  }
  const ComplexField hpsi = hamiltonian_apply(psi, FramePath::inertial(), Potential::free_particle(), 0.0);
  const double discrete = params.hbar * params.hbar / (params.mass * h * h) * (2 - std::cos(kx * h) - std::cos(ky * h));
  const double continuum = params.hbar * params.hbar * (kx * kx + ky * ky) / (2 * params.mass);
  CHECK(std::abs(discrete - continuum) < 0.02 * continuum);
  for (std::size_t j = 2; j + 2 < g.n(); ++j) {
    for (std::size_t i = 2; i + 2 < g.n(); ++i) {
      CHECK(std::abs(hpsi(i, j) - discrete * psi.values(i, j)) < 1e-10);
    }
  }
}

TEST_CASE("discrete Hamiltonian is Hermitian for a composite frame") {
  const Grid2D g(40, 6.0);
  const PhysicalParams params;
  const FramePath frame = FramePath::composite(Polynomial({0.0, 0.8, 0.3}),
                                               {Polynomial({0.2, 0.5}), Polynomial({0.0, -0.3, 0.2}), Polynomial{}});
  const Hamiltonian h(g, params, frame, Potential::harmonic(1.0), 1.1);
  const ComplexField f = random_state(g, 1), q = random_state(g, 2);
  const Complex lhs = inner(f, h.apply(q));
  const Complex rhs = inner(h.apply(f), q);
  CHECK(std::abs(lhs - rhs) < 1e-10 * std::abs(lhs));
}

TEST_CASE("Hamiltonian preconditions") {
  const Grid2D g(20, 4.0);
  const WaveFunction bad{random_state(g, 3), PhysicalParams{1.0, 1.0, 0.3}};
  CHECK_THROWS_AS(hamiltonian_apply(bad, FramePath::inertial(), Potential{}, 0.0), ConfigError);
  const WaveFunction neumann{random_state(g.with_boundary(Boundary::no_flux), 3), PhysicalParams{}};
  CHECK_THROWS_AS(hamiltonian_apply(neumann, FramePath::inertial(), Potential{}, 0.0), PreconditionError);
}

TEST_CASE("Crank-Nicolson steps preserve the norm") {
  const Grid2D g(96, 12.0);
  const WaveFunction psi = gaussian_packet(g, PhysicalParams{}, {1.0, -0.5}, 0.7, {1.0, 0.5}, 1);
  SchrodingerRun run = make_run(psi, FramePath::rotation(Polynomial({0.0, 0.4, 0.2})), Potential::harmonic(0.5), 1e-2);
  double previous = norm_squared(run.psi.values);
  for (int k = 0; k < 20; ++k) {
    run = step(std::move(run));
    const double now = norm_squared(run.psi.values);
    CHECK(std::abs(now - previous) < 1e-10);
    previous = now;
  }
  CHECK(run.t == doctest::Approx(0.2));
}

TEST_CASE("step_back inverts step") {
  const Grid2D g(64, 10.0);
  const WaveFunction psi = gaussian_packet(g, PhysicalParams{}, {0.5, 0.0}, 0.8, {0.0, 1.0});
  const FramePath frame = FramePath::composite(Polynomial({0.0, 0.5, 0.1}), {Polynomial({0.0, 0.2}), Polynomial{}, Polynomial{}});
  SchrodingerRun run = make_run(psi, frame, Potential::harmonic(1.0), 5e-3);
  for (int k = 0; k < 10; ++k) run = step(std::move(run));
  for (int k = 0; k < 10; ++k) run = step_back(std::move(run));
  CHECK(std::abs(run.t) < 1e-15);
  double diff = 0.0;
  for (std::size_t k = 0; k < g.size(); ++k) diff = std::max(diff, std::abs(run.psi.values[k] - psi.values[k]));
  CHECK(diff < 1e-9);
}

TEST_CASE("free packet spreads by the analytic law") {
  const Grid2D g(192, 24.0);
  const double sigma0 = 1.0;
  const WaveFunction psi = gaussian_packet(g, PhysicalParams{}, {}, sigma0);
  const double t_end = 2.0 * sigma0 * sigma0 * std::sqrt(3.0);  // sigma doubles
  const EvolveResult r = evolve(make_run(psi, FramePath::inertial(), Potential{}, 1e-2), t_end, {});
  const WaveFunction& out = r.run.psi;
  double var = 0.0;
  for (std::size_t j = 0; j < g.n(); ++j) {
    for (std::size_t i = 0; i < g.n(); ++i) var += std::norm(out.values(i, j)) * g.coord(i) * g.coord(i);
  }
  const double sigma = std::sqrt(var * g.spacing() * g.spacing());
  const double expected = sigma0 * std::sqrt(1 + std::pow(t_end / (2 * sigma0 * sigma0), 2));
  CHECK(std::abs(sigma / expected - 1.0) < 0.01);
}

TEST_CASE("harmonic ground state is stationary") {
  const Grid2D g(64, 12.0);
  const PhysicalParams params;
  const Potential v = Potential::harmonic(1.0);
  const GroundState gs = ground_state(gaussian_packet(g, params, {0.3, 0.2}, 0.9), FramePath::inertial(), v);
  // Continuum ground energy hbar omega_0 d/2 = 1.
  CHECK(gs.energy == doctest::Approx(1.0).epsilon(0.01));
  SchrodingerRun run = make_run(gs.psi, FramePath::inertial(), v, 1e-2);
  for (int k = 0; k < 100; ++k) run = step(std::move(run));
  const Complex overlap = inner(gs.psi.values, run.psi.values);
  CHECK(std::abs(overlap) > 1 - 1e-6);
  // Each Cayley step rotates an eigenvector by 2 atan(E dt / 2 hbar).
  const double phase = -100 * 2 * std::atan(gs.energy * 1e-2 / 2);
  CHECK(std::abs(std::arg(overlap * std::polar(1.0, -phase))) < 1e-7);
}

TEST_CASE("evolve with no steps is the identity") {
  const Grid2D g(32, 8.0);
  const WaveFunction psi = gaussian_packet(g, PhysicalParams{}, {}, 0.6, {0.3, 0.0});
  const EvolveResult r = evolve(make_run(psi, FramePath::rotating(0.4), Potential{}, 1e-2), 0.0, std::vector<double>{0.0});
  CHECK(r.series.size() == 1);
  REQUIRE(r.snapshots.size() == 1);
  for (std::size_t k = 0; k < g.size(); ++k) CHECK(r.run.psi.values[k] == psi.values[k]);
  CHECK_THROWS_AS(evolve(make_run(psi, FramePath::inertial(), Potential{}, 1e-2), 1.0, std::vector<double>{2.0}),
                  PreconditionError);
}

TEST_CASE("evolve lands on t_end and records snapshots") {
  const Grid2D g(32, 8.0);
  const WaveFunction psi = gaussian_packet(g, PhysicalParams{}, {}, 0.6);
  int calls = 0;
  const EvolveResult r = evolve(make_run(psi, FramePath::inertial(), Potential{}, 0.03), 0.1,
                                std::vector<double>{0.03, 0.1},
                                [&](const SchrodingerRun&, const StepStats&) { ++calls; });
  CHECK(r.run.t == 0.1);
  CHECK(r.series.size() == 5);
  CHECK(calls == 5);
  REQUIRE(r.snapshots.size() == 2);
  CHECK(r.snapshots[1].t == 0.1);
}

TEST_CASE("time-step refinement converges at second order") {
  const Grid2D g(48, 10.0);
  const WaveFunction psi = gaussian_packet(g, PhysicalParams{}, {1.0, 0.0}, 0.8, {0.5, 0.0});
  const FramePath frame = FramePath::rotation(Polynomial({0.0, 0.5, 0.5}));
  auto endpoint = [&](double dt) {
    return evolve(make_run(psi, frame, Potential::harmonic(1.0), dt), 0.4, {}).run.psi.values;
  };
  const ComplexField a = endpoint(0.04), b = endpoint(0.02), c = endpoint(0.01), ref = endpoint(0.0025);
  auto err = [&](const ComplexField& f) {
    double e = 0.0;
    for (std::size_t k = 0; k < f.size(); ++k) e += std::norm(f[k] - ref[k]);
    return std::sqrt(e);
  };
  CHECK(std::log2(err(a) / err(b)) >= 1.8);
  CHECK(std::log2(err(b) / err(c)) >= 1.8);
}

TEST_CASE("solver failure reports the achieved residual") {
  const Grid2D g(64, 4.0);
  SchrodingerRun run = make_run(gaussian_packet(g, PhysicalParams{}, {}, 0.3, {3.0, 0.0}),
                                FramePath::rotating(2.0), Potential{}, 0.5);
  run.max_iterations = 1;
  try {
    step(run);
    FAIL("expected a convergence error");
  } catch (const ConvergenceError& e) {
    CHECK(e.achieved_residual() > run.solver_tol);
    CHECK(e.iterations() == 1);
  }
}

TEST_CASE("stiffness number") {
  const Grid2D g(101, 10.0);
  CHECK(stiffness_number(g, PhysicalParams{2.0, 1.0, 0.25}, 0.01) == doctest::Approx(0.5));
}

}  // TEST_SUITE
