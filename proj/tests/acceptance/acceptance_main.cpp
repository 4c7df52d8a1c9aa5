// Acceptance run: one [PASS]/[FAIL] line per criterion. Exit status is the
// number of failed criteria (capped at 125).
#include <CLI11.hpp>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "svmrot/config.hpp"
#include "svmrot/ensemble.hpp"
#include "svmrot/observables.hpp"
#include "svmrot/runner.hpp"
#include "svmrot/schrodinger.hpp"

using namespace svmrot;

namespace {

struct Outcome {
  bool pass = true;
  std::ostringstream detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail << " !" << what;
    }
  }
};

std::string sci(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

double peak(const WaveFunction& psi) {
  double m = 0.0;
  for (std::size_t k = 0; k < psi.values.size(); ++k) m = std::max(m, std::norm(psi.values[k]));
  return m;
}

RealField density(const WaveFunction& psi) {
  RealField rho(psi.grid());
  for (std::size_t k = 0; k < rho.size(); ++k) rho[k] = std::norm(psi.values[k]);
  return rho;
}

SchrodingerRun make_run(WaveFunction psi, FramePath frame, Potential v, double dt) {
  return SchrodingerRun{std::move(psi), std::move(frame), v, dt, 0.0, 1e-12, 1000};
}

// Per-axis spread of |psi|^2 along x.
double sigma_x(const WaveFunction& psi) {
  const Grid2D& g = psi.grid();
  double m0 = 0, m1 = 0, m2 = 0;
  for (std::size_t j = 0; j < g.n(); ++j) {
    for (std::size_t i = 0; i < g.n(); ++i) {
      const double r = std::norm(psi.values(i, j)), x = g.coord(i);
      m0 += r;
      m1 += r * x;
      m2 += r * x * x;
    }
  }
  return std::sqrt(m2 / m0 - std::pow(m1 / m0, 2));
}

Outcome ac1_unitarity() {
  Outcome o;
  const Grid2D g(256, 16.0);
  const PhysicalParams params;
  struct Case {
    const char* name;
    FramePath frame;
    Potential v;
  };
  const std::vector<Case> cases{
      {"rotating harmonic", FramePath::rotating(0.5), Potential::harmonic(1.0)},
      {"composite gaussian", FramePath::composite(Polynomial({0.0, 0.4, 0.1}), {Polynomial({0.0, 0.3}), Polynomial({0.0, 0.0, -0.2}), Polynomial{}}),
       Potential::radial_gaussian(-2.0, 1.5)}};
  for (const Case& c : cases) {
    SchrodingerRun run = make_run(gaussian_packet(g, params, {1.0, 0.0}, 0.5, {0.0, 1.0}), c.frame, c.v, 1e-3);
    double prev = norm_squared(run.psi.values), worst_step = 0.0, worst_total = 0.0;
    for (int k = 0; k < 1000; ++k) {
      run = step(std::move(run));
      const double n = norm_squared(run.psi.values);
      worst_step = std::max(worst_step, std::abs(n - prev));
      worst_total = std::max(worst_total, std::abs(n - 1.0));
      prev = n;
    }
    o.detail << c.name << ": step " << sci(worst_step) << " total " << sci(worst_total) << "; ";
    o.require(worst_step <= 1e-10, "per-step drift");
    o.require(worst_total < 1e-8, "total drift");
  }
  return o;
}

Outcome ac2_free_spreading() {
  Outcome o;
  const Grid2D g(256, 16.0);
  const PhysicalParams params;
  const double s0 = 0.5;
  SchrodingerRun run = make_run(gaussian_packet(g, params, {}, s0), FramePath::inertial(), Potential{}, 1e-3);
  // sigma(t)^2 = sigma0^2 (1 + (hbar t / (2 M sigma0^2))^2); doubles at t = 2 sqrt(3) M sigma0^2 / hbar.
  const double t_double = 2 * std::sqrt(3.0) * params.mass * s0 * s0 / params.hbar;
  double worst = 0.0;
  while (run.t < t_double) {
    run = step(std::move(run));
    const double tau = params.hbar * run.t / (2 * params.mass * s0 * s0);
    worst = std::max(worst, std::abs(sigma_x(run.psi) / (s0 * std::sqrt(1 + tau * tau)) - 1.0));
  }
  o.detail << "max relative sigma error " << sci(worst) << " up to t=" << sci(run.t);
  o.require(worst < 0.01, "spreading law");
  return o;
}

Complex at(const ComplexField& f, long i, long j) {
  const long n = static_cast<long>(f.grid().n());
  if (i < 0 || j < 0 || i >= n || j >= n) return {};
  return f(static_cast<std::size_t>(i), static_cast<std::size_t>(j));
}

Outcome ac3_gauge_form() {
  Outcome o;
  const Grid2D g(96, 10.0);
  const PhysicalParams params;
  const double h = g.spacing();
  std::mt19937_64 rng(2718);
  std::normal_distribution<double> normal;
  double worst = 0.0;
  for (int trial = 0; trial < 5; ++trial) {
    const double omega = std::uniform_real_distribution<double>(-2.0, 2.0)(rng);
    const Potential v = trial % 2 ? Potential::harmonic(1.3) : Potential::radial_gaussian(0.7, 1.1);
    WaveFunction psi{ComplexField(g), params};
    for (std::size_t j = 1; j + 1 < g.n(); ++j)
      for (std::size_t i = 1; i + 1 < g.n(); ++i) psi.values(i, j) = {normal(rng), normal(rng)};
    const ComplexField hpsi = hamiltonian_apply(psi, FramePath::rotating(omega), v, 0.37 * trial);
    double diff = 0.0, scale = 0.0;
    for (long j = 1; j + 1 < static_cast<long>(g.n()); ++j) {
      for (long i = 1; i + 1 < static_cast<long>(g.n()); ++i) {
        const ComplexField& f = psi.values;
        const Complex c = at(f, i, j);
        const Complex lap = (at(f, i + 1, j) + at(f, i - 1, j) + at(f, i, j + 1) + at(f, i, j - 1) - 4.0 * c) / (h * h);
        const Complex dx = (at(f, i + 1, j) - at(f, i - 1, j)) / (2 * h);
        const Complex dy = (at(f, i, j + 1) - at(f, i, j - 1)) / (2 * h);
        const double x = g.coord(i), y = g.coord(j);
        const Complex lz = Complex(0, -params.hbar) * (x * dy - y * dx);
        const Complex ref = -params.hbar * params.hbar / (2 * params.mass) * lap + v.value(x, y) * c - omega * lz;
        diff = std::max(diff, std::abs(hpsi(i, j) - ref));
        scale = std::max(scale, std::abs(ref));
      }
    }
    worst = std::max(worst, diff / scale);
  }
  o.detail << "max relative difference " << sci(worst) << " over 5 random states";
  o.require(worst < 1e-10, "H != H0 - omega Lz");
  return o;
}

Outcome ac4_frame_equivalence() {
  Outcome o;
  // The L_z stencil error in <x> is O(h^2); h = 0.056 keeps it below 1e-3.
  const Grid2D g(320, 18.0);
  const PhysicalParams params;
  const double w = 0.5, dt = 1e-3;
  const WaveFunction psi0 = gaussian_packet(g, params, {2.0, 0.0}, 1.0);
  SchrodingerRun in = make_run(psi0, FramePath::inertial(), Potential{}, dt);
  SchrodingerRun rot = make_run(psi0, FramePath::rotating(w), Potential{}, dt);
  double worst = 0.0;
  for (int k = 1; k <= 2000; ++k) {
    in = step(std::move(in));
    rot = step(std::move(rot));
    if (k % 50) continue;
    const Vec2 a = expectation_position(in.psi), b = expectation_position(rot.psi);
    const double c = std::cos(w * rot.t), s = std::sin(w * rot.t);
    worst = std::max(worst, std::hypot(b.x - (c * a.x + s * a.y), b.y - (-s * a.x + c * a.y)));
  }
  o.detail << "max |<x>_rot - R <x>_in| " << sci(worst) << " over t in [0, 2]";
  o.require(worst < 1e-3, "frame mismatch");
  return o;
}

double max_ehrenfest(std::size_t n, double dt, double t_end, int stride) {
  const Grid2D g(n, 12.0);
  SchrodingerRun run = make_run(gaussian_packet(g, PhysicalParams{}, {1.0, 0.0}, 0.7, {0.0, 0.5}),
                                FramePath::rotating(0.3), Potential::harmonic(1.0), dt);
  std::vector<WaveSnapshot> snaps{{0.0, run.psi}};
  const int steps = static_cast<int>(std::lround(t_end / dt));
  for (int k = 1; k <= steps; ++k) {
    run = step(std::move(run));
    if (k % stride == 0) snaps.push_back({run.t, run.psi});
  }
  double worst = 0.0;
  for (const EhrenfestPoint& e : ehrenfest_residual(snaps, run.frame, run.potential, stride * dt)) {
    worst = std::max(worst, std::hypot(e.residual.x, e.residual.y));
  }
  return worst;
}

Outcome ac5_ehrenfest() {
  Outcome o;
  const double fine = max_ehrenfest(257, 1e-3, 0.6, 10);
  const double coarse = max_ehrenfest(129, 2e-3, 0.6, 10);
  const double order = std::log2(coarse / fine);
  o.detail << "residual " << sci(fine) << " (257^2, dt=1e-3), " << sci(coarse) << " (129^2, dt=2e-3), order "
           << sci(order);
  o.require(fine < 1e-3, "residual");
  o.require(order >= 1.8, "order");
  return o;
}

Outcome ac6_noether() {
  Outcome o;
  // The L_z commutator error of the five-point Laplacian is O(h^2); h = 0.063
  // keeps the drift over t in [0, 2] below 1e-3.
  const Grid2D g(192, 12.0);
  const PhysicalParams params;
  const double dt = 1e-3;
  SchrodingerRun run = make_run(gaussian_packet(g, params, {1.5, 0.0}, 0.8, {0.0, 0.6}), FramePath::rotating(0.5),
                                Potential::harmonic(1.0), dt);
  const double lz0 = angular_momentum_expectation(run.psi).value;
  MadelungFields m = madelung_decompose(run.psi);
  TrajectoryEnsemble e = sample_from_density(m.rho, 200000, 606);
  double drift = 0.0, worst_sigma = 0.0;
  for (int k = 1; k <= 2000; ++k) {
    e = advance_forward(std::move(e), m, run.frame, dt);
    run = step(std::move(run));
    m = madelung_decompose(run.psi);
    const double lz = angular_momentum_expectation(run.psi).value;
    drift = std::max(drift, std::abs(lz - lz0));
    if (k % 500 == 0) {
      const ChargeEstimate q = noether_charge_ensemble(e.positions, m.p_m, m.mask);
      const double z = std::abs(q.value - lz) / q.stat_err;
      worst_sigma = std::max(worst_sigma, z);
      o.detail << "t=" << sci(run.t) << " Q=" << sci(q.value) << "+-" << sci(q.stat_err) << " Lz=" << sci(lz) << "; ";
    }
  }
  o.detail << "Lz drift " << sci(drift) << ", worst |Q-Lz| " << sci(worst_sigma) << " sigma";
  o.require(drift < 1e-3, "Lz drift");
  o.require(worst_sigma < 3.0, "Q vs Lz");
  return o;
}

Outcome ac7_sde_schrodinger(std::size_t n) {
  Outcome o;
  std::istringstream text(
      "[frame]\nkind = z_rotation\nomega = 0.5\n"
      "[potential]\nkind = harmonic\nstrength = 0.25\n"
      "[initial]\ncenter_x = 1\nsigma = 1.5\nk_y = 0.3\n"
      "[grid]\nn = " + std::to_string(n) + "\nlength = 18\n"
      "[run]\ndt = 0.001\nt_end = 1\nn_traj = 200000\nbins = 64\nfp_check_time = 0.5\nensemble_stride = 50\n"
      "master_seed = 7\n");
  const ScenarioConfig c = parse_config(text);
  std::ostringstream log;
  const CrosscheckReport r = crosscheck(c, nullptr, &log);
  o.detail << n << "^2: TV " << sci(r.tv_histogram) << " at t=" << sci(r.t_histogram) << ", FP L1 "
           << sci(r.l1_fokker_planck) << " at t=" << sci(r.t_fokker_planck);
  o.require(r.tv_histogram < 0.05, "TV");
  o.require(r.l1_fokker_planck < 1e-2, "FP L1");
  return o;
}

Outcome ac8_time_reversal() {
  Outcome o;
  const Grid2D g(128, 12.0), bins(64, 12.0);
  const PhysicalParams params;
  const double dt = 1e-3;
  SchrodingerRun run = make_run(gaussian_packet(g, params, {1.0, 0.5}, 0.9, {0.4, -0.3}), FramePath::rotating(0.5),
                                Potential::harmonic(1.0), dt);
  const RealField rho0 = density(run.psi);
  TrajectoryEnsemble e = sample_from_density(rho0, 200000, 88);
  const int steps = 500;
  for (int k = 0; k < steps; ++k) {
    e = advance_forward(std::move(e), madelung_decompose(run.psi), run.frame, dt);
    run = step(std::move(run));
  }
  const double tv_forward = total_variation(histogram_density(e.positions, bins), bin_density(density(run.psi), bins));
  for (int k = 0; k < steps; ++k) {
    e = advance_backward(std::move(e), madelung_decompose(run.psi), run.frame, -dt);
    run = step_back(std::move(run));
  }
  const double tv = total_variation(histogram_density(e.positions, bins), bin_density(rho0, bins));
  o.detail << "TV after forward " << sci(tv_forward) << ", after return to t=" << sci(e.t) << " " << sci(tv);
  o.require(tv < 0.05, "TV at t=0");
  return o;
}

Outcome ac9_euler_lagrange() {
  Outcome o;
  // The residual carries third derivatives of sqrt(rho), so it is evaluated
  // where rho exceeds 10% of its peak. The box is wide enough that the
  // packet's truncation at the Dirichlet wall (which seeds grid-scale waves)
  // stays below round-off.
  const double floor_rel = 0.1;
  // Rotating-frame solution at t = 0.5 with (h, dt) halved together.
  std::vector<double> dynamic;
  for (auto [n, dt] : {std::pair<std::size_t, double>{81, 4e-3}, {161, 2e-3}, {321, 1e-3}}) {
    const Grid2D g(n, 20.0);
    SchrodingerRun run = make_run(gaussian_packet(g, PhysicalParams{}, {1.0, 0.5}, 0.8, {0.6, -0.4}),
                                  FramePath::rotating(0.5), Potential::harmonic(1.0), dt);
    const int steps = static_cast<int>(std::lround(0.5 / dt));
    WaveFunction before = run.psi, middle = run.psi;
    for (int k = 1; k <= steps + 1; ++k) {
      run = step(std::move(run));
      if (k == steps - 1) before = run.psi;
      if (k == steps) middle = run.psi;
    }
    const double floor = floor_rel * peak(middle);
    dynamic.push_back(euler_lagrange_residual(madelung_decompose(before, floor), madelung_decompose(middle, floor),
                                              madelung_decompose(run.psi, floor), run.frame, run.potential, 0.5, dt)
                          .linf());
  }
  const double order_dyn = std::min(std::log2(dynamic[0] / dynamic[1]), std::log2(dynamic[1] / dynamic[2]));

  // Stationary trap ground state: every term but the force balance vanishes.
  std::vector<double> stationary;
  for (std::size_t n : {129, 257, 513}) {
    const Grid2D g(n, 10.0);
    const WaveFunction psi = gaussian_packet(g, PhysicalParams{}, {}, std::sqrt(0.5));
    const MadelungFields m = madelung_decompose(psi, floor_rel * peak(psi));
    stationary.push_back(euler_lagrange_residual(m, m, m, FramePath::rotating(0.3), Potential::harmonic(1.0), 0.0, 1e-3).linf());
  }
  const double order_static = std::min(std::log2(stationary[0] / stationary[1]), std::log2(stationary[1] / stationary[2]));
  o.detail << "dynamic Linf " << sci(dynamic[0]) << " " << sci(dynamic[1]) << " " << sci(dynamic[2]) << " order "
           << sci(order_dyn) << "; stationary " << sci(stationary[0]) << " " << sci(stationary[1]) << " "
           << sci(stationary[2]) << " order " << sci(order_static);
  o.require(order_dyn >= 1.8, "dynamic order");
  o.require(order_static >= 1.8, "stationary order");
  return o;
}

Outcome ac10_classical_limit() {
  Outcome o;
  const PhysicalParams params{1.0, 1.0, 0.0};
  const double w0 = 1.0, dt = 1e-4;
  const Grid2D g(201, 8.0);
  const FramePath frame = FramePath::rotating(0.5);
  // Rigid circulation of the trap, written in frame coordinates.
  const MomentumField p = momentum_field(g, [&](double x, double y) { return Vec2{-params.mass * w0 * y, params.mass * w0 * x}; });
  const std::vector<Vec2> starts{{1.2, 0.3}, {-0.5, 1.0}, {0.2, -2.0}};
  const int steps = 20000;
  std::vector<double> t;
  for (int k = 0; k <= steps; ++k) t.push_back(k * dt);
  TrajectoryEnsemble e = make_ensemble(g, starts, 3);
  std::vector<std::vector<ClassicalState>> ref;
  for (const Vec2& q : starts) {
    ref.push_back(classical_trajectory(params, frame, Potential::harmonic(params.mass * w0 * w0), {q.x, q.y, 0.0},
                                       {-params.mass * w0 * q.y, params.mass * w0 * q.x, 0.0}, t));
  }
  double worst = 0.0;
  for (int k = 1; k <= steps; ++k) {
    e = advance_forward(std::move(e), p, frame, params, dt);
    for (std::size_t i = 0; i < starts.size(); ++i) {
      worst = std::max(worst, std::hypot(e.positions[i].x - ref[i][k].q.x(), e.positions[i].y - ref[i][k].q.y()));
    }
  }
  o.detail << "max path deviation " << sci(worst) << " over t in [0, 2]";
  o.require(worst < 1e-3, "path deviation");
  return o;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app("svmrot acceptance criteria");
  std::vector<int> only;
  std::size_t ac7_grid = 256;
  app.add_option("--only", only, "Run only these criteria (1-10)");
  app.add_option("--ac7-grid", ac7_grid, "Grid points per axis for criterion 7");
  CLI11_PARSE(app, argc, argv);
  const std::set<int> selected(only.begin(), only.end());

  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria{
      {"unitarity and norm", ac1_unitarity},
      {"free-packet spreading", ac2_free_spreading},
      {"rotating Hamiltonian equals H0 - omega Lz", ac3_gauge_form},
      {"frame equivalence", ac4_frame_equivalence},
      {"Ehrenfest residual", ac5_ehrenfest},
      {"Noether charge and Lz conservation", ac6_noether},
      {"SDE and Fokker-Planck against |psi|^2", [&] { return ac7_sde_schrodinger(ac7_grid); }},
      {"time reversal", ac8_time_reversal},
      {"Euler-Lagrange residual", ac9_euler_lagrange},
      {"classical limit", ac10_classical_limit},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int id = static_cast<int>(i) + 1;
    if (!selected.empty() && !selected.contains(id)) continue;
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& ex) {
      o.pass = false;
      o.detail << "exception: " << ex.what();
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    failed += o.pass ? 0 : 1;
    std::cout << (o.pass ? "[PASS] " : "[FAIL] ") << "AC" << id << " " << criteria[i].first << ": " << o.detail.str()
              << " (" << sci(secs) << " s)" << std::endl;
  }
  return std::min(failed, 125);
}
