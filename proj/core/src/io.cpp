#include "svmrot/io.hpp"

#include <charconv>
#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>

#include "svmrot/version.hpp"

namespace svmrot {

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

std::string format_optional(double v) { return std::isnan(v) ? std::string{} : format_double(v); }

std::string provenance_line(std::string_view config_hash) {
  return "# svmrot version=" + std::string(kVersion) + " config_hash=" + std::string(config_hash);
}

std::string_view to_string(SnapshotKind kind) {
  switch (kind) {
    case SnapshotKind::rho:
      return "rho";
    case SnapshotKind::psi_re:
      return "psi_re";
    case SnapshotKind::psi_im:
      return "psi_im";
    case SnapshotKind::pm_x:
      return "pm_x";
    case SnapshotKind::pm_y:
      return "pm_y";
  }
  return "rho";
}

SnapshotKind parse_snapshot_kind(std::string_view name) {
  for (SnapshotKind k : {SnapshotKind::rho, SnapshotKind::psi_re, SnapshotKind::psi_im,
                         SnapshotKind::pm_x, SnapshotKind::pm_y}) {
    if (to_string(k) == name) return k;
  }
  throw ShapeError("unknown snapshot kind '" + std::string(name) + "'");
}

void write_snapshot(std::ostream& os, const RealField& field, double t, SnapshotKind kind,
                    std::optional<std::string_view> provenance) {
  const Grid2D& g = field.grid();
  if (provenance) os << *provenance << '\n';
  os << "# grid n=" << g.n() << " L=" << format_double(g.length()) << " t=" << format_double(t)
     << " kind=" << to_string(kind) << '\n';
  std::string line;
  for (std::size_t j = 0; j < g.n(); ++j) {
    line.clear();
    for (std::size_t i = 0; i < g.n(); ++i) {
      if (i) line += ' ';
      line += format_double(field(i, j));
    }
    os << line << '\n';
  }
}

namespace {

double parse_number(std::string_view token) {
  double v = 0.0;
  const auto res = std::from_chars(token.data(), token.data() + token.size(), v);
  if (res.ec != std::errc{} || res.ptr != token.data() + token.size()) {
    throw ShapeError("malformed number '" + std::string(token) + "' in snapshot");
  }
  return v;
}

}  // namespace

Snapshot read_snapshot(std::istream& is, Boundary boundary) {
  std::string line;
  std::optional<std::size_t> n;
  double length = 0.0;
  double t = 0.0;
  SnapshotKind kind = SnapshotKind::rho;
  while (std::getline(is, line)) {
    if (line.rfind("# grid", 0) != 0) {
      if (line.empty() || line[0] == '#') continue;
      throw ShapeError("snapshot data before '# grid' header");
    }
    std::istringstream hs(line.substr(6));
    std::string item;
    while (hs >> item) {
      const auto eq = item.find('=');
      if (eq == std::string::npos) throw ShapeError("malformed header item '" + item + "'");
      const std::string key = item.substr(0, eq);
      const std::string value = item.substr(eq + 1);
      if (key == "n") {
        n = static_cast<std::size_t>(parse_number(value));
      } else if (key == "L") {
        length = parse_number(value);
      } else if (key == "t") {
        t = parse_number(value);
      } else if (key == "kind") {
        kind = parse_snapshot_kind(value);
      }
    }
    break;
  }
  if (!n) throw ShapeError("snapshot header '# grid' not found");
  const Grid2D grid(*n, length, boundary);
  RealField field(grid);
  for (std::size_t j = 0; j < *n; ++j) {
    if (!std::getline(is, line)) throw ShapeError("snapshot ended after " + std::to_string(j) + " rows");
    std::istringstream ls(line);
    std::string token;
    std::size_t i = 0;
    while (ls >> token) {
      if (i >= *n) throw ShapeError("snapshot row " + std::to_string(j) + " has too many values");
      field(i++, j) = parse_number(token);
    }
    if (i != *n) throw ShapeError("snapshot row " + std::to_string(j) + " has too few values");
  }
  return {t, kind, std::move(field)};
}

}  // namespace svmrot
