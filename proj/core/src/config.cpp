#include "svmrot/config.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "svmrot/io.hpp"

namespace svmrot {

namespace pt = boost::property_tree;

namespace {

const std::map<std::string, std::set<std::string>>& known_keys() {
  static const std::map<std::string, std::set<std::string>> keys{
      {"params", {"mass", "hbar", "nu"}},
      {"frame", {"kind", "omega", "phi", "phi_table", "phi_table_t0", "phi_table_dt", "c_x", "c_y",
                 "c_z"}},
      {"potential", {"kind", "strength", "width"}},
      {"initial", {"center_x", "center_y", "sigma", "k_x", "k_y", "vortex"}},
      {"grid", {"n", "length", "boundary"}},
      {"run", {"dt", "t_end", "snapshot_times", "n_traj", "master_seed", "solver_tol", "max_iter",
               "bins", "threads", "rho_floor_rel", "el_rho_floor_rel", "ensemble_stride", "fp_check_time", "tol_tv",
               "tol_fp_l1", "tol_ehrenfest", "tol_noether_sigma", "tol_noether_drift", "tol_el"}},
      {"output", {"directory", "snapshots", "paths", "path_traj_limit"}},
  };
  return keys;
}

std::string trim(std::string s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

double to_double(const std::string& key, const std::string& text) {
  const std::string s = trim(text);
  double v = 0.0;
  const auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || end != s.data() + s.size() || s.empty()) {
    throw ConfigError(key + ": expected a number, got '" + text + "'");
  }
  return v;
}

std::uint64_t to_uint(const std::string& key, const std::string& text) {
  const std::string s = trim(text);
  std::uint64_t v = 0;
  const auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || end != s.data() + s.size() || s.empty()) {
    throw ConfigError(key + ": expected a non-negative integer, got '" + text + "'");
  }
  return v;
}

long long to_int(const std::string& key, const std::string& text) {
  const std::string s = trim(text);
  long long v = 0;
  const auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || end != s.data() + s.size() || s.empty()) {
    throw ConfigError(key + ": expected an integer, got '" + text + "'");
  }
  return v;
}

bool to_bool(const std::string& key, const std::string& text) {
  const std::string s = trim(text);
  if (s == "true" || s == "1" || s == "yes") return true;
  if (s == "false" || s == "0" || s == "no") return false;
  throw ConfigError(key + ": expected true or false, got '" + text + "'");
}

// Whitespace- or comma-separated numbers.
std::vector<double> to_list(const std::string& key, const std::string& text) {
  std::string s = text;
  for (char& ch : s) {
    if (ch == ',') ch = ' ';
  }
  std::istringstream is(s);
  std::vector<double> out;
  std::string item;
  while (is >> item) out.push_back(to_double(key, item));
  return out;
}

std::string join(const std::vector<double>& values) {
  std::string out;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) out += ' ';
    out += format_double(values[i]);
  }
  return out;
}

// Reads section.key, recording it as defaulted when missing.
class Reader {
 public:
  Reader(const pt::ptree& tree, std::vector<std::string>* defaults)
      : tree_(tree), defaults_(defaults) {}

  std::optional<std::string> get(const std::string& section, const std::string& key) const {
    const auto sec = tree_.get_child_optional(section);
    if (!sec) return std::nullopt;
    const auto value = sec->get_optional<std::string>(pt::ptree::path_type(key, '\0'));
    if (!value) return std::nullopt;
    return trim(*value);
  }

  template <class T, class Convert>
  T read(const std::string& section, const std::string& key, T fallback, Convert convert,
         const std::string& shown) const {
    if (auto v = get(section, key)) return convert(section + "." + key, *v);
    if (defaults_) defaults_->push_back(section + "." + key + " = " + shown);
    return fallback;
  }

  double number(const std::string& section, const std::string& key, double fallback) const {
    return read(section, key, fallback, to_double, format_double(fallback));
  }
  std::uint64_t unsigned_int(const std::string& section, const std::string& key,
                             std::uint64_t fallback) const {
    return read(section, key, fallback, to_uint, std::to_string(fallback));
  }
  bool boolean(const std::string& section, const std::string& key, bool fallback) const {
    return read(section, key, fallback, to_bool, fallback ? "true" : "false");
  }
  std::string text(const std::string& section, const std::string& key,
                   const std::string& fallback) const {
    if (auto v = get(section, key)) return *v;
    if (defaults_) defaults_->push_back(section + "." + key + " = " + fallback);
    return fallback;
  }

 private:
  const pt::ptree& tree_;
  std::vector<std::string>* defaults_;
};

TimeFunction read_polynomial(const Reader& r, const std::string& key) {
  const auto text = r.get("frame", key);
  if (!text) return Polynomial{};
  const auto coefficients = to_list("frame." + key, *text);
  if (coefficients.size() > Polynomial::kMaxDegree + 1) {
    throw ConfigError("frame." + key + ": at most 5 polynomial coefficients are allowed");
  }
  return Polynomial(coefficients);
}

void check_keys(const pt::ptree& tree) {
  const auto& keys = known_keys();
  for (const auto& [section, body] : tree) {
    const auto it = keys.find(section);
    if (it == keys.end()) throw ConfigError("unknown section [" + section + "]");
    if (!body.data().empty()) throw ConfigError("key '" + section + "' outside of any section");
    for (const auto& [key, value] : body) {
      if (!it->second.contains(key)) {
        throw ConfigError("unknown key '" + key + "' in section [" + section + "]");
      }
    }
  }
}

FramePath read_frame(const Reader& r, std::vector<std::string>* defaults) {
  const FrameKind kind = parse_frame_kind(r.text("frame", "kind", "z_rotation"));
  const auto omega = r.get("frame", "omega");
  const auto phi = r.get("frame", "phi");
  const auto table = r.get("frame", "phi_table");
  const int given = (omega ? 1 : 0) + (phi ? 1 : 0) + (table ? 1 : 0);
  if (given > 1) throw ConfigError("frame: give only one of omega, phi and phi_table");
  if (!table && (r.get("frame", "phi_table_t0") || r.get("frame", "phi_table_dt"))) {
    throw ConfigError("frame: phi_table_t0 / phi_table_dt need phi_table");
  }

  TimeFunction angle = Polynomial{};
  if (omega) {
    angle = Polynomial({0.0, to_double("frame.omega", *omega)});
  } else if (phi) {
    angle = read_polynomial(r, "phi");
  } else if (table) {
    const double t0 = r.number("frame", "phi_table_t0", 0.0);
    const auto dt = r.get("frame", "phi_table_dt");
    if (!dt) throw ConfigError("frame.phi_table needs phi_table_dt");
    try {
      angle = TabulatedFunction(t0, to_double("frame.phi_table_dt", *dt),
                                to_list("frame.phi_table", *table));
    } catch (const ConfigError&) {
      throw;
    } catch (const Error& e) {
      throw ConfigError(std::string("frame.phi_table: ") + e.what());
    }
  } else if (kind != FrameKind::translation && defaults) {
    defaults->push_back("frame.omega = 0");
  }
  std::array<TimeFunction, 3> c{read_polynomial(r, "c_x"), read_polynomial(r, "c_y"),
                                read_polynomial(r, "c_z")};
  const bool has_offset = r.get("frame", "c_x") || r.get("frame", "c_y") || r.get("frame", "c_z");

  switch (kind) {
    case FrameKind::z_rotation:
      if (has_offset) throw ConfigError("frame: z_rotation takes no c_x/c_y/c_z; use composite");
      return FramePath::rotation(angle);
    case FrameKind::translation:
      if (given) throw ConfigError("frame: translation takes no rotation angle; use composite");
      return FramePath::translation(c);
    case FrameKind::composite:
      return FramePath::composite(angle, c);
  }
  throw ConfigError("frame: unknown kind");
}

void write_time_function(std::ostream& os, const std::string& key, const TimeFunction& f) {
  if (const auto* p = std::get_if<Polynomial>(&f)) {
    os << key << " = " << join(p->coefficients()) << '\n';
    return;
  }
  const auto& table = std::get<TabulatedFunction>(f);
  os << key << "_table = " << join(table.samples()) << '\n';
  os << key << "_table_t0 = " << format_double(table.t_begin()) << '\n';
  os << key << "_table_dt = " << format_double(table.spacing()) << '\n';
}

}  // namespace

ScenarioConfig parse_config(std::istream& is, std::vector<std::string>* defaults) {
  pt::ptree tree;
  try {
    pt::read_ini(is, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError("parse error at line " + std::to_string(e.line()) + ": " + e.message());
  }
  check_keys(tree);
  const Reader r(tree, defaults);

  ScenarioConfig c;
  try {
    const double mass = r.number("params", "mass", 1.0);
    const double hbar = r.number("params", "hbar", 1.0);
    c.params = PhysicalParams::quantum(mass, hbar);
    if (const auto nu = r.get("params", "nu")) {
      c.params.nu = to_double("params.nu", *nu);
    }

    c.frame = read_frame(r, defaults);

    c.potential.kind = parse_potential_kind(r.text("potential", "kind", "free"));
    c.potential.strength = r.number("potential", "strength", 0.0);
    c.potential.width = r.number("potential", "width", 1.0);

    c.initial.center.x = r.number("initial", "center_x", 0.0);
    c.initial.center.y = r.number("initial", "center_y", 0.0);
    c.initial.sigma = r.number("initial", "sigma", 0.5);
    c.initial.k.x = r.number("initial", "k_x", 0.0);
    c.initial.k.y = r.number("initial", "k_y", 0.0);
    c.initial.vortex =
        static_cast<int>(r.read("initial", "vortex", 0LL, to_int, std::string("0")));

    c.grid.n = r.unsigned_int("grid", "n", 256);
    c.grid.length = r.number("grid", "length", 16.0);
    c.grid.boundary = parse_boundary(r.text("grid", "boundary", "dirichlet_zero"));

    RunConfig& run = c.run;
    run.dt = r.number("run", "dt", 1e-3);
    run.t_end = r.number("run", "t_end", 1.0);
    if (const auto times = r.get("run", "snapshot_times")) {
      run.snapshot_times = to_list("run.snapshot_times", *times);
    } else if (defaults) {
      defaults->push_back("run.snapshot_times = (none)");
    }
    run.n_traj = r.unsigned_int("run", "n_traj", 10000);
    run.master_seed = r.unsigned_int("run", "master_seed", 1);
    run.solver_tol = r.number("run", "solver_tol", 1e-10);
    run.max_iterations = static_cast<int>(r.unsigned_int("run", "max_iter", 500));
    run.bins = r.unsigned_int("run", "bins", 64);
    run.threads = static_cast<unsigned>(r.unsigned_int("run", "threads", 1));
    run.rho_floor_rel = r.number("run", "rho_floor_rel", kDefaultRelativeRhoFloor);
    run.el_rho_floor_rel = r.number("run", "el_rho_floor_rel", 1e-3);
    run.ensemble_stride = r.unsigned_int("run", "ensemble_stride", 10);
    run.fp_check_time = r.number("run", "fp_check_time", 0.5);
    run.tolerances.tv = r.number("run", "tol_tv", 0.05);
    run.tolerances.fp_l1 = r.number("run", "tol_fp_l1", 1e-2);
    run.tolerances.ehrenfest = r.number("run", "tol_ehrenfest", 1e-3);
    run.tolerances.noether_sigma = r.number("run", "tol_noether_sigma", 3.0);
    run.tolerances.noether_drift = r.number("run", "tol_noether_drift", 1e-3);
    run.tolerances.el = r.number("run", "tol_el", 0.0);

    c.output.directory = r.text("output", "directory", "out");
    c.output.snapshots = r.boolean("output", "snapshots", true);
    c.output.paths = r.boolean("output", "paths", false);
    c.output.path_traj_limit = r.unsigned_int("output", "path_traj_limit", 100);
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    throw ConfigError(e.what());
  }

  validate(c);
  return c;
}

ScenarioConfig load_config(const std::string& path, std::vector<std::string>* defaults) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  return parse_config(in, defaults);
}

void validate(const ScenarioConfig& c) {
  auto require = [](bool ok, const std::string& message) {
    if (!ok) throw ConfigError(message);
  };
  auto finite_positive = [](double v) { return std::isfinite(v) && v > 0.0; };
  require(finite_positive(c.params.mass), "params.mass must be positive");
  require(finite_positive(c.params.hbar), "params.hbar must be positive");
  require(c.params.is_quantum(),
          "params.nu must equal hbar / (2 mass) = " +
              format_double(c.params.hbar / (2.0 * c.params.mass)));
  require(c.grid.n >= Grid2D::kMinPoints, "grid.n must be at least 16");
  require(finite_positive(c.grid.length), "grid.length must be positive");
  require(finite_positive(c.initial.sigma), "initial.sigma must be positive");
  require(c.grid.length >= 12.0 * c.initial.sigma,
          "grid.length must be at least 12 * initial.sigma to hold the packet");
  require(std::abs(c.initial.center.x) < c.grid.length / 2 &&
              std::abs(c.initial.center.y) < c.grid.length / 2,
          "initial center must lie inside the grid");
  require(finite_positive(c.run.dt), "run.dt must be positive");
  require(finite_positive(c.run.t_end), "run.t_end must be positive");
  for (double t : c.run.snapshot_times) {
    require(std::isfinite(t) && t >= 0.0 && t <= c.run.t_end,
            "run.snapshot_times must lie in [0, t_end]");
  }
  require(finite_positive(c.run.solver_tol), "run.solver_tol must be positive");
  require(c.run.max_iterations > 0, "run.max_iter must be positive");
  require(c.run.n_traj > 0, "run.n_traj must be positive");
  require(c.run.bins >= Grid2D::kMinPoints, "run.bins must be at least 16");
  require(c.run.threads > 0, "run.threads must be positive");
  require(finite_positive(c.run.el_rho_floor_rel) && c.run.el_rho_floor_rel < 1.0,
          "run.el_rho_floor_rel must lie in (0, 1)");
  require(c.run.ensemble_stride > 0, "run.ensemble_stride must be positive");
  require(finite_positive(c.run.rho_floor_rel) && c.run.rho_floor_rel < 1.0,
          "run.rho_floor_rel must lie in (0, 1)");
  require(std::isfinite(c.run.fp_check_time) && c.run.fp_check_time > 0.0,
          "run.fp_check_time must be positive");
  const Tolerances& tol = c.run.tolerances;
  require(finite_positive(tol.tv) && finite_positive(tol.fp_l1) && finite_positive(tol.ehrenfest) &&
              finite_positive(tol.noether_sigma) && finite_positive(tol.noether_drift),
          "run.tol_* must be positive");
  require(std::isfinite(tol.el), "run.tol_el must be finite");
  require(std::isfinite(c.potential.strength), "potential.strength must be finite");
  require(finite_positive(c.potential.width), "potential.width must be positive");
  require(!c.output.directory.empty(), "output.directory must not be empty");
}

std::string serialize(const ScenarioConfig& c) {
  std::ostringstream os;
  os << "[params]\n"
     << "mass = " << format_double(c.params.mass) << '\n'
     << "hbar = " << format_double(c.params.hbar) << '\n'
     << "nu = " << format_double(c.params.nu) << '\n';

  os << "\n[frame]\n"
     << "kind = " << to_string(c.frame.kind) << '\n';
  if (c.frame.kind != FrameKind::translation) write_time_function(os, "phi", c.frame.phi);
  if (c.frame.kind != FrameKind::z_rotation) {
    write_time_function(os, "c_x", c.frame.c[0]);
    write_time_function(os, "c_y", c.frame.c[1]);
    write_time_function(os, "c_z", c.frame.c[2]);
  }

  os << "\n[potential]\n"
     << "kind = " << to_string(c.potential.kind) << '\n'
     << "strength = " << format_double(c.potential.strength) << '\n'
     << "width = " << format_double(c.potential.width) << '\n';

  os << "\n[initial]\n"
     << "center_x = " << format_double(c.initial.center.x) << '\n'
     << "center_y = " << format_double(c.initial.center.y) << '\n'
     << "sigma = " << format_double(c.initial.sigma) << '\n'
     << "k_x = " << format_double(c.initial.k.x) << '\n'
     << "k_y = " << format_double(c.initial.k.y) << '\n'
     << "vortex = " << c.initial.vortex << '\n';

  os << "\n[grid]\n"
     << "n = " << c.grid.n << '\n'
     << "length = " << format_double(c.grid.length) << '\n'
     << "boundary = " << to_string(c.grid.boundary) << '\n';

  const RunConfig& r = c.run;
  os << "\n[run]\n"
     << "dt = " << format_double(r.dt) << '\n'
     << "t_end = " << format_double(r.t_end) << '\n';
  if (!r.snapshot_times.empty()) os << "snapshot_times = " << join(r.snapshot_times) << '\n';
  os << "n_traj = " << r.n_traj << '\n'
     << "master_seed = " << r.master_seed << '\n'
     << "solver_tol = " << format_double(r.solver_tol) << '\n'
     << "max_iter = " << r.max_iterations << '\n'
     << "bins = " << r.bins << '\n'
     << "threads = " << r.threads << '\n'
     << "rho_floor_rel = " << format_double(r.rho_floor_rel) << '\n'
     << "el_rho_floor_rel = " << format_double(r.el_rho_floor_rel) << '\n'
     << "ensemble_stride = " << r.ensemble_stride << '\n'
     << "fp_check_time = " << format_double(r.fp_check_time) << '\n'
     << "tol_tv = " << format_double(r.tolerances.tv) << '\n'
     << "tol_fp_l1 = " << format_double(r.tolerances.fp_l1) << '\n'
     << "tol_ehrenfest = " << format_double(r.tolerances.ehrenfest) << '\n'
     << "tol_noether_sigma = " << format_double(r.tolerances.noether_sigma) << '\n'
     << "tol_noether_drift = " << format_double(r.tolerances.noether_drift) << '\n'
     << "tol_el = " << format_double(r.tolerances.el) << '\n';

  os << "\n[output]\n"
     << "directory = " << c.output.directory << '\n'
     << "snapshots = " << (c.output.snapshots ? "true" : "false") << '\n'
     << "paths = " << (c.output.paths ? "true" : "false") << '\n'
     << "path_traj_limit = " << c.output.path_traj_limit << '\n';
  return os.str();
}

std::string config_hash(const ScenarioConfig& config) {
  std::uint64_t h = 14695981039346656037ULL;
  for (unsigned char ch : serialize(config)) {
    h ^= ch;
    h *= 1099511628211ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace svmrot
