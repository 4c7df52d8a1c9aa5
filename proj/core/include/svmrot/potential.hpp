#pragma once

#include <Eigen/Core>

#include <string_view>

namespace svmrot {

enum class PotentialKind { free, harmonic, radial_gaussian };

// Central external potential V(|x|), fixed in the non-inertial frame.
//   harmonic:        V = strength * |x|^2 / 2
//   radial_gaussian: V = strength * exp(-|x|^2 / (2 width^2))
struct Potential {
  PotentialKind kind = PotentialKind::free;
  double strength = 0.0;
  double width = 1.0;

  static Potential free_particle() { return {}; }
  static Potential harmonic(double spring) { return {PotentialKind::harmonic, spring, 1.0}; }
  static Potential radial_gaussian(double height, double width) {
    return {PotentialKind::radial_gaussian, height, width};
  }

  double value(double r2) const;
  // dV/d(r^2); the gradient is 2 * x * dvalue_dr2.
  double dvalue_dr2(double r2) const;

  double value(const Eigen::Vector3d& q) const { return value(q.squaredNorm()); }
  Eigen::Vector3d gradient(const Eigen::Vector3d& q) const {
    return 2.0 * dvalue_dr2(q.squaredNorm()) * q;
  }

  double value(double x, double y) const { return value(x * x + y * y); }
  Eigen::Vector2d gradient(double x, double y) const {
    const double g = 2.0 * dvalue_dr2(x * x + y * y);
    return {g * x, g * y};
  }
};

std::string_view to_string(PotentialKind kind);
PotentialKind parse_potential_kind(std::string_view name);

}  // namespace svmrot
