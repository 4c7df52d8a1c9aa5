#include "svmrot/runner.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <sstream>

#include "svmrot/ensemble.hpp"
#include "svmrot/fokker_planck.hpp"
#include "svmrot/io.hpp"
#include "svmrot/schrodinger.hpp"
#include "svmrot/version.hpp"

namespace svmrot {

namespace {

constexpr double kLeakageWarning = 1e-8;

class Log {
 public:
  Log(std::ostream* os, bool quiet) : os_(os ? os : &std::cerr), quiet_(quiet) {}

  void info(const std::string& message) const {
    if (!quiet_) *os_ << "svmrot: " << message << '\n';
  }
  void warn(const std::string& message) const { *os_ << "svmrot: warning: " << message << '\n'; }

 private:
  std::ostream* os_;
  bool quiet_;
};

std::ofstream open_output(const std::filesystem::path& dir, const std::string& name,
                          const std::string& hash) {
  std::ofstream out(dir / name);
  if (!out) throw Error("cannot write " + (dir / name).string());
  out << provenance_line(hash) << '\n';
  return out;
}

SchrodingerRun initial_run(const ScenarioConfig& c) {
  const Grid2D grid = c.make_grid();
  return SchrodingerRun{gaussian_packet(grid, c.params, c.initial.center, c.initial.sigma,
                                        c.initial.k, c.initial.vortex),
                        c.frame,
                        c.potential,
                        c.run.dt,
                        0.0,
                        c.run.solver_tol,
                        c.run.max_iterations};
}

void check_stiffness(const ScenarioConfig& c, const Log& log) {
  if (c.grid.boundary != Boundary::dirichlet_zero) {
    throw ConfigError("grid.boundary must be dirichlet_zero for wave-function modes");
  }
  const double s = stiffness_number(c.make_grid(), c.params, c.run.dt);
  if (s > 1.0) {
    log.warn("stiffness dt*hbar/(M h^2) = " + format_double(s) +
             " > 1; the linear solves may need many iterations");
  }
}

void check_leakage(double amplitude, const Log& log) {
  if (amplitude > kLeakageWarning) {
    log.warn("wave function reached the boundary (max |psi| there = " + format_double(amplitude) +
             "); enlarge grid.length");
  }
}

std::size_t step_count(const ScenarioConfig& c) {
  return static_cast<std::size_t>(std::ceil(c.run.t_end / c.run.dt - 1e-9));
}

double step_size(const ScenarioConfig& c, double t) { return std::min(c.run.dt, c.run.t_end - t); }

bool is_snapshot_time(const ScenarioConfig& c, double t) {
  return std::any_of(c.run.snapshot_times.begin(), c.run.snapshot_times.end(),
                     [&](double s) { return std::abs(s - t) <= 0.5 * c.run.dt; });
}

std::string snapshot_name(std::string_view prefix, SnapshotKind kind, double t) {
  return std::string(prefix) + std::string(to_string(kind)) + "_t" + format_double(t) + ".dat";
}

void write_wave_snapshots(const std::filesystem::path& dir, const std::string& hash,
                          const WaveFunction& psi, double t) {
  const Grid2D& g = psi.grid();
  RealField rho(g), re(g), im(g);
  for (std::size_t k = 0; k < g.size(); ++k) {
    rho[k] = std::norm(psi.values[k]);
    re[k] = psi.values[k].real();
    im[k] = psi.values[k].imag();
  }
  const std::string prov = provenance_line(hash);
  for (const auto& [kind, field] : {std::pair{SnapshotKind::rho, &rho},
                                    std::pair{SnapshotKind::psi_re, &re},
                                    std::pair{SnapshotKind::psi_im, &im}}) {
    std::ofstream out(dir / snapshot_name("", kind, t));
    if (!out) throw Error("cannot write snapshot");
    write_snapshot(out, *field, t, kind, prov);
  }
}

void write_density_snapshot(const std::filesystem::path& dir, const std::string& hash,
                            std::string_view prefix, const RealField& rho, double t) {
  std::ofstream out(dir / snapshot_name(prefix, SnapshotKind::rho, t));
  if (!out) throw Error("cannot write snapshot");
  write_snapshot(out, rho, t, SnapshotKind::rho, provenance_line(hash));
}

RealField density_of(const WaveFunction& psi) {
  RealField rho(psi.grid());
  for (std::size_t k = 0; k < rho.size(); ++k) rho[k] = std::norm(psi.values[k]);
  return rho;
}

MadelungFields fields_of(const WaveFunction& psi, double rho_floor_rel) {
  double peak = 0.0;
  for (const Complex& v : psi.values.values()) peak = std::max(peak, std::norm(v));
  return madelung_decompose(psi, rho_floor_rel * peak);
}

MadelungFields fields_of(const WaveFunction& psi, const ScenarioConfig& c) {
  return fields_of(psi, c.run.rho_floor_rel);
}

TrajectoryEnsemble initial_ensemble(const ScenarioConfig& c, const WaveFunction& psi) {
  if (c.initial.vortex == 0) {
    return sample_gaussian_ensemble(psi.grid(), c.run.n_traj, c.initial.center, c.initial.sigma,
                                    c.run.master_seed);
  }
  return sample_from_density(density_of(psi), c.run.n_traj, c.run.master_seed);
}

// Fills the Ehrenfest columns of every interior row on the uniform dt grid.
void fill_ehrenfest(ObservableSeries& series, const std::vector<Vec2>& grad_v,
                    const FramePath& frame, double dt) {
  std::size_t uniform = series.size();
  while (uniform >= 2 &&
         std::abs(series.t[uniform - 1] - series.t[uniform - 2] - dt) > 1e-9 * dt) {
    --uniform;
  }
  if (uniform < 3) return;
  std::vector<Vec2> mom(uniform);
  for (std::size_t i = 0; i < uniform; ++i) mom[i] = {series.mean_px[i], series.mean_py[i]};
  const auto points = ehrenfest_residual(std::span(series.t).first(uniform), mom,
                                         std::span(grad_v).first(uniform), frame, dt);
  for (std::size_t i = 0; i < points.size(); ++i) {
    series.ehrenfest_residual_x[i + 1] = points[i].residual.x;
    series.ehrenfest_residual_y[i + 1] = points[i].residual.y;
  }
}

double max_ehrenfest(const ObservableSeries& series) {
  double worst = 0.0;
  for (std::size_t i = 0; i < series.size(); ++i) {
    const double x = series.ehrenfest_residual_x[i];
    const double y = series.ehrenfest_residual_y[i];
    if (!std::isnan(x)) worst = std::max({worst, std::abs(x), std::abs(y)});
  }
  return worst;
}

void schrodinger_mode(const ScenarioConfig& c, const std::filesystem::path& dir,
                      const std::string& hash, const Log& log) {
  check_stiffness(c, log);
  std::vector<Vec2> grad_v;
  auto observer = [&](const SchrodingerRun& r, const StepStats&) {
    grad_v.push_back(expectation_potential_gradient(r.psi, r.potential));
    if (c.output.snapshots && is_snapshot_time(c, r.t)) write_wave_snapshots(dir, hash, r.psi, r.t);
  };
  EvolveResult result = evolve(initial_run(c), c.run.t_end, c.run.snapshot_times, observer);
  fill_ehrenfest(result.series, grad_v, c.frame, c.run.dt);
  check_leakage(result.max_boundary_amplitude, log);
  auto out = open_output(dir, "observables.csv", hash);
  write_observables_csv(out, result.series, hash);
  log.info("schrodinger: " + std::to_string(result.series.size() - 1) + " steps, final norm " +
           format_double(result.series.norm.back()) + ", max Ehrenfest residual " +
           format_double(max_ehrenfest(result.series)));
}

void fokker_planck_mode(const ScenarioConfig& c, const std::filesystem::path& dir,
                        const std::string& hash, const Log& log) {
  check_stiffness(c, log);
  SchrodingerRun run = initial_run(c);
  RealField rho = density_of(run.psi);
  auto out = open_output(dir, "fp_series.csv", hash);
  out << "t,total_mass,clipped_mass,min_rho,l1_vs_psi,substeps\n";
  double boundary = 0.0;
  auto emit = [&](double clipped, int substeps) {
    const RealField exact = density_of(run.psi);
    out << format_double(run.t) << ',' << format_double(integral(rho)) << ','
        << format_double(clipped) << ','
        << format_double(*std::min_element(rho.values().begin(), rho.values().end())) << ','
        << format_double(l1_distance(rho, exact)) << ',' << substeps << '\n';
    if (c.output.snapshots && is_snapshot_time(c, run.t)) {
      write_density_snapshot(dir, hash, "fp_", rho, run.t);
    }
  };
  emit(0.0, 0);
  const std::size_t steps = step_count(c);
  for (std::size_t n = 0; n < steps; ++n) {
    const double dt = step_size(c, run.t);
    const MadelungFields fields = fields_of(run.psi, c);
    const FpAdvance adv =
        fp_advance(rho, drift_from_madelung(fields, c.frame, run.t, Direction::forward),
                   c.params.nu, dt);
    rho = adv.rho;
    run.dt = dt;
    run = step(std::move(run));
    boundary = std::max(boundary, boundary_amplitude(run.psi));
    emit(adv.clipped_mass, adv.substeps);
  }
  check_leakage(boundary, log);
  log.info("fokker_planck: final L1 distance to |psi|^2 " +
           format_double(l1_distance(rho, density_of(run.psi))));
}

void write_path_rows(std::ostream& os, const TrajectoryEnsemble& e, std::size_t limit) {
  const std::size_t n = std::min(limit, e.size());
  for (std::size_t i = 0; i < n; ++i) {
    os << format_double(e.t) << ',' << i << ',' << format_double(e.positions[i].x) << ','
       << format_double(e.positions[i].y) << '\n';
  }
}

double ensemble_tv(const TrajectoryEnsemble& e, const WaveFunction& psi, const Grid2D& bins) {
  return total_variation(histogram_density(e.positions, bins), bin_density(density_of(psi), bins));
}

void ensemble_mode(const ScenarioConfig& c, const std::filesystem::path& dir,
                   const std::string& hash, const Log& log) {
  check_stiffness(c, log);
  SchrodingerRun run = initial_run(c);
  TrajectoryEnsemble ens = initial_ensemble(c, run.psi);
  const Grid2D bins(c.run.bins, c.grid.length);
  const EnsembleOptions opts{c.run.threads};

  auto out = open_output(dir, "ensemble_summary.csv", hash);
  out << "t,mean_x,mean_y,Q_ensemble,Q_stat_err,L_z,tv_histogram\n";
  std::ofstream paths;
  if (c.output.paths) {
    paths = open_output(dir, "paths.csv", hash);
    paths << "t,traj,x,y\n";
  }
  auto emit = [&](const MadelungFields& fields) {
    double mx = 0.0, my = 0.0;
    for (const Vec2& q : ens.positions) {
      mx += q.x;
      my += q.y;
    }
    mx /= static_cast<double>(ens.size());
    my /= static_cast<double>(ens.size());
    const ChargeEstimate q = noether_charge_ensemble(ens.positions, fields.p_m, fields.mask);
    out << format_double(ens.t) << ',' << format_double(mx) << ',' << format_double(my) << ','
        << format_double(q.value) << ',' << format_double(q.stat_err) << ','
        << format_double(angular_momentum_expectation(run.psi).value) << ','
        << format_double(ensemble_tv(ens, run.psi, bins)) << '\n';
    if (paths.is_open()) write_path_rows(paths, ens, c.output.path_traj_limit);
  };

  const std::size_t steps = step_count(c);
  double boundary = 0.0;
  MadelungFields fields = fields_of(run.psi, c);
  emit(fields);
  for (std::size_t n = 0; n < steps; ++n) {
    const double dt = step_size(c, run.t);
    ens = advance_forward(std::move(ens), fields, c.frame, dt, opts);
    run.dt = dt;
    run = step(std::move(run));
    ens.t = run.t;
    boundary = std::max(boundary, boundary_amplitude(run.psi));
    fields = fields_of(run.psi, c);
    if ((n + 1) % c.run.ensemble_stride == 0 || n + 1 == steps) emit(fields);
  }
  check_leakage(boundary, log);
  log.info("ensemble: " + std::to_string(ens.size()) + " trajectories, final TV " +
           format_double(ensemble_tv(ens, run.psi, bins)));
}

void classical_mode(const ScenarioConfig& c, const std::filesystem::path& dir,
                    const std::string& hash, const Log& log) {
  std::vector<double> times;
  const std::size_t steps = step_count(c);
  times.reserve(steps + 1);
  for (std::size_t n = 0; n <= steps; ++n) {
    times.push_back(std::min(static_cast<double>(n) * c.run.dt, c.run.t_end));
  }
  const Vec3 q0(c.initial.center.x, c.initial.center.y, 0.0);
  const Vec3 p0(c.params.hbar * c.initial.k.x, c.params.hbar * c.initial.k.y, 0.0);
  ClassicalOptions opts;
  opts.domain_half_width = c.grid.length / 2;
  const auto states = classical_trajectory(c.params, c.frame, c.potential, q0, p0, times, opts);
  auto out = open_output(dir, "classical.csv", hash);
  out << "t,q_x,q_y,q_z,p_x,p_y,p_z\n";
  for (const ClassicalState& s : states) {
    out << format_double(s.t) << ',' << format_double(s.q.x()) << ',' << format_double(s.q.y())
        << ',' << format_double(s.q.z()) << ',' << format_double(s.p.x()) << ','
        << format_double(s.p.y()) << ',' << format_double(s.p.z()) << '\n';
  }
  log.info("classical: " + std::to_string(states.size()) + " states");
}

nlohmann::json to_json(const CrosscheckReport& r, const std::string& hash) {
  nlohmann::json checks = nlohmann::json::array();
  for (const CheckResult& c : r.checks) {
    checks.push_back({{"name", c.name},
                      {"value", c.value},
                      {"threshold", c.threshold},
                      {"passed", c.passed},
                      {"detail", c.detail}});
  }
  return {{"version", kVersion},
          {"config_hash", hash},
          {"tv_histogram", r.tv_histogram},
          {"t_histogram", r.t_histogram},
          {"l1_fokker_planck", r.l1_fokker_planck},
          {"t_fokker_planck", r.t_fokker_planck},
          {"ehrenfest_max", r.ehrenfest_max},
          {"lz_drift", r.lz_drift},
          {"q_ensemble", r.q_ensemble},
          {"q_stat_err", r.q_stat_err},
          {"lz_final", r.lz_final},
          {"el_residual_max", r.el_residual_max},
          {"checks", checks},
          {"passed", r.passed()}};
}

}  // namespace

std::string_view to_string(RunMode mode) {
  switch (mode) {
    case RunMode::schrodinger: return "schrodinger";
    case RunMode::fokker_planck: return "fokker_planck";
    case RunMode::ensemble: return "ensemble";
    case RunMode::classical: return "classical";
    case RunMode::crosscheck: return "crosscheck";
  }
  return "unknown";
}

RunMode parse_run_mode(std::string_view name) {
  for (RunMode m : {RunMode::schrodinger, RunMode::fokker_planck, RunMode::ensemble,
                    RunMode::classical, RunMode::crosscheck}) {
    if (to_string(m) == name) return m;
  }
  throw ConfigError("unknown mode '" + std::string(name) + "'");
}

bool CrosscheckReport::passed() const {
  return std::all_of(checks.begin(), checks.end(), [](const CheckResult& c) { return c.passed; });
}

void write_observables_csv(std::ostream& os, const ObservableSeries& s, std::string_view) {
  os << "t,norm,mean_x,mean_y,mean_px,mean_py,L_z,Q_ensemble,Q_stat_err,ehrenfest_res_x,"
        "ehrenfest_res_y,el_residual_L2\n";
  for (std::size_t i = 0; i < s.size(); ++i) {
    os << format_double(s.t[i]) << ',' << format_optional(s.norm[i]) << ','
       << format_optional(s.mean_x[i]) << ',' << format_optional(s.mean_y[i]) << ','
       << format_optional(s.mean_px[i]) << ',' << format_optional(s.mean_py[i]) << ','
       << format_optional(s.L_z[i]) << ',' << format_optional(s.Q_ensemble[i]) << ','
       << format_optional(s.Q_stat_err[i]) << ',' << format_optional(s.ehrenfest_residual_x[i])
       << ',' << format_optional(s.ehrenfest_residual_y[i]) << ','
       << format_optional(s.el_residual_norm[i]) << '\n';
  }
}

CrosscheckReport crosscheck(const ScenarioConfig& c, ObservableSeries* series_out,
                            std::ostream* log_stream) {
  const Log log(log_stream, log_stream == nullptr);
  check_stiffness(c, log);
  SchrodingerRun run = initial_run(c);
  TrajectoryEnsemble ens = initial_ensemble(c, run.psi);
  RealField rho_fp = density_of(run.psi);
  const Grid2D bins(c.run.bins, c.grid.length);
  const EnsembleOptions opts{c.run.threads};
  const Tolerances& tol = c.run.tolerances;

  CrosscheckReport report;
  ObservableSeries series;
  std::vector<Vec2> grad_v;
  const std::size_t steps = step_count(c);
  const double fp_check = std::min(c.run.fp_check_time, c.run.t_end);
  bool fp_done = false;
  double last_q = kAbsent, last_q_err = kAbsent, last_q_lz = kAbsent;
  double boundary = 0.0;

  MadelungFields current = fields_of(run.psi, c);
  WaveFunction psi_previous = run.psi;
  std::size_t row = series.append(run.t, run.psi);
  grad_v.push_back(expectation_potential_gradient(run.psi, run.potential));
  const double lz0 = series.L_z[0];

  for (std::size_t n = 0; n < steps; ++n) {
    const double dt = step_size(c, run.t);
    if (n % c.run.ensemble_stride == 0) {
      const ChargeEstimate q = noether_charge_ensemble(ens.positions, current.p_m, current.mask);
      series.Q_ensemble[row] = q.value;
      series.Q_stat_err[row] = q.stat_err;
      last_q = q.value;
      last_q_err = q.stat_err;
      last_q_lz = series.L_z[row];
    }
    const FpAdvance adv = fp_advance(
        rho_fp, drift_from_madelung(current, c.frame, run.t, Direction::forward), c.params.nu, dt);
    rho_fp = adv.rho;
    ens = advance_forward(std::move(ens), current, c.frame, dt, opts);

    const double t_before = run.t;
    WaveFunction psi_current = run.psi;
    run.dt = dt;
    run = step(std::move(run));
    ens.t = run.t;
    boundary = std::max(boundary, boundary_amplitude(run.psi));
    MadelungFields next = fields_of(run.psi, c);

    if (n > 0 && n % c.run.ensemble_stride == 0 && std::abs(dt - c.run.dt) <= 1e-12 * c.run.dt) {
      const double floor = c.run.el_rho_floor_rel;
      const EulerLagrangeResidual el = euler_lagrange_residual(
          fields_of(psi_previous, floor), fields_of(psi_current, floor), fields_of(run.psi, floor),
          c.frame, c.potential, t_before, dt);
      series.el_residual_norm[row] = el.l2();
      report.el_residual_max = std::max(report.el_residual_max, el.l2());
    }

    row = series.append(run.t, run.psi);
    grad_v.push_back(expectation_potential_gradient(run.psi, run.potential));
    psi_previous = std::move(psi_current);
    current = std::move(next);

    if (!fp_done && run.t >= fp_check - 0.5 * c.run.dt) {
      report.l1_fokker_planck = l1_distance(rho_fp, current.rho);
      report.t_fokker_planck = run.t;
      fp_done = true;
    }
  }
  const ChargeEstimate q = noether_charge_ensemble(ens.positions, current.p_m, current.mask);
  series.Q_ensemble[row] = q.value;
  series.Q_stat_err[row] = q.stat_err;
  last_q = q.value;
  last_q_err = q.stat_err;
  last_q_lz = series.L_z[row];

  fill_ehrenfest(series, grad_v, c.frame, c.run.dt);
  check_leakage(boundary, log);

  report.tv_histogram = ensemble_tv(ens, run.psi, bins);
  report.t_histogram = run.t;
  report.ehrenfest_max = max_ehrenfest(series);
  for (double lz : series.L_z) report.lz_drift = std::max(report.lz_drift, std::abs(lz - lz0));
  report.q_ensemble = last_q;
  report.q_stat_err = last_q_err;
  report.lz_final = last_q_lz;

  auto add = [&](std::string name, double value, double threshold, std::string detail) {
    report.checks.push_back({std::move(name), value, threshold, value < threshold,
                             std::move(detail)});
  };
  add("tv_histogram", report.tv_histogram, tol.tv,
      "TV(ensemble histogram, |psi|^2) at t=" + format_double(report.t_histogram));
  add("l1_fokker_planck", report.l1_fokker_planck, tol.fp_l1,
      "L1(rho_FP, |psi|^2) at t=" + format_double(report.t_fokker_planck));
  add("ehrenfest", report.ehrenfest_max, tol.ehrenfest, "max |Ehrenfest residual|");
  const double q_dev = std::abs(report.q_ensemble - report.lz_final);
  const double q_sigma = report.q_stat_err > 0.0 ? q_dev / report.q_stat_err : q_dev > 0 ? 1e300 : 0;
  add("noether_charge", q_sigma, tol.noether_sigma,
      "|Q_ensemble - <L_z>| in standard errors (Q=" + format_double(report.q_ensemble) +
          ", <L_z>=" + format_double(report.lz_final) + ")");
  if (c.frame.kind == FrameKind::z_rotation) {
    add("lz_conservation", report.lz_drift, tol.noether_drift, "max |<L_z>(t) - <L_z>(0)|");
  }
  if (tol.el > 0.0) {
    add("euler_lagrange", report.el_residual_max, tol.el, "max L2 Euler-Lagrange residual");
  }
  if (series_out) *series_out = std::move(series);
  return report;
}

int run(RunMode mode, const ScenarioConfig& config, const RunOptions& options) {
  const Log log(options.log, options.quiet);
  try {
    validate(config);
    const std::filesystem::path dir =
        options.out_dir.empty() ? std::filesystem::path(config.output.directory) : options.out_dir;
    std::filesystem::create_directories(dir);
    const std::string hash = config_hash(config);
    log.info(std::string(to_string(mode)) + " run, config " + hash + ", output " + dir.string());
    {
      std::ofstream cfg(dir / "config_used.ini");
      cfg << "; " << provenance_line(hash).substr(2) << '\n' << serialize(config);
    }
    switch (mode) {
      case RunMode::schrodinger: schrodinger_mode(config, dir, hash, log); break;
      case RunMode::fokker_planck: fokker_planck_mode(config, dir, hash, log); break;
      case RunMode::ensemble: ensemble_mode(config, dir, hash, log); break;
      case RunMode::classical: classical_mode(config, dir, hash, log); break;
      case RunMode::crosscheck: {
        ObservableSeries series;
        const CrosscheckReport report =
            crosscheck(config, &series, options.quiet ? nullptr : &(options.log ? *options.log : std::cerr));
        {
          auto out = open_output(dir, "observables.csv", hash);
          write_observables_csv(out, series, hash);
        }
        {
          std::ofstream out(dir / "crosscheck_report.json");
          out << to_json(report, hash).dump(2) << '\n';
        }
        for (const CheckResult& c : report.checks) {
          log.info(std::string(c.passed ? "PASS " : "FAIL ") + c.name + " = " +
                   format_double(c.value) + " (threshold " + format_double(c.threshold) + ")");
        }
        if (!report.passed()) return kExitCrosscheckFailed;
        break;
      }
    }
  } catch (const ConfigError& e) {
    log.warn(std::string("config error: ") + e.what());
    return kExitConfigError;
  } catch (const ConvergenceError& e) {
    log.warn(std::string("numerical failure: ") + e.what() + " (residual " +
             format_double(e.achieved_residual()) + ")");
    return kExitNumericalError;
  } catch (const StabilityError& e) {
    log.warn(std::string("numerical failure: ") + e.what());
    return kExitNumericalError;
  } catch (const Error& e) {
    log.warn(std::string("numerical failure: ") + e.what());
    return kExitNumericalError;
  }
  return kExitSuccess;
}

}  // namespace svmrot
