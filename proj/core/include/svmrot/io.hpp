#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>

#include "svmrot/grid.hpp"

namespace svmrot {

// Shortest decimal representation that parses back to the same double.
std::string format_double(double v);

// Empty string for NaN (absent CSV fields), format_double otherwise.
std::string format_optional(double v);

// Leading comment line of every output file.
std::string provenance_line(std::string_view config_hash);

enum class SnapshotKind { rho, psi_re, psi_im, pm_x, pm_y };

std::string_view to_string(SnapshotKind kind);
SnapshotKind parse_snapshot_kind(std::string_view name);

// "# grid n=<n> L=<L> t=<t> kind=<kind>" then n rows of n values. Row j holds
// the nodes y = y_j, ordered along x.
void write_snapshot(std::ostream& os, const RealField& field, double t, SnapshotKind kind,
                    std::optional<std::string_view> provenance = std::nullopt);

struct Snapshot {
  double t = 0.0;
  SnapshotKind kind = SnapshotKind::rho;
  RealField field;
};

// Skips leading comment lines other than the grid header. Throws ShapeError on
// malformed input.
Snapshot read_snapshot(std::istream& is, Boundary boundary = Boundary::dirichlet_zero);

}  // namespace svmrot
