#include "svmrot/potential.hpp"

#include <cmath>
#include <string>

#include "svmrot/error.hpp"

namespace svmrot {

double Potential::value(double r2) const {
  switch (kind) {
    case PotentialKind::free:
      return 0.0;
    case PotentialKind::harmonic:
      return 0.5 * strength * r2;
    case PotentialKind::radial_gaussian:
      return strength * std::exp(-r2 / (2.0 * width * width));
  }
  return 0.0;
}

double Potential::dvalue_dr2(double r2) const {
  switch (kind) {
    case PotentialKind::free:
      return 0.0;
    case PotentialKind::harmonic:
      return 0.5 * strength;
    case PotentialKind::radial_gaussian: {
      const double w2 = width * width;
      return -strength * std::exp(-r2 / (2.0 * w2)) / (2.0 * w2);
    }
  }
  return 0.0;
}

std::string_view to_string(PotentialKind kind) {
  switch (kind) {
    case PotentialKind::free:
      return "free";
    case PotentialKind::harmonic:
      return "harmonic";
    case PotentialKind::radial_gaussian:
      return "radial_gaussian";
  }
  return "free";
}

PotentialKind parse_potential_kind(std::string_view name) {
  if (name == "free") return PotentialKind::free;
  if (name == "harmonic") return PotentialKind::harmonic;
  if (name == "radial_gaussian") return PotentialKind::radial_gaussian;
  throw ConfigError("unknown potential kind '" + std::string(name) + "'");
}

}  // namespace svmrot
