#pragma once

#include <Eigen/Core>

#include <array>
#include <optional>
#include <span>
#include <string_view>
#include <variant>
#include <vector>

#include "svmrot/error.hpp"
#include "svmrot/params.hpp"
#include "svmrot/potential.hpp"

namespace svmrot {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

// c0 + c1 t + ... + c4 t^4.
class Polynomial {
 public:
  static constexpr std::size_t kMaxDegree = 4;

  Polynomial() = default;
  explicit Polynomial(std::vector<double> coefficients);

  double value(double t) const;
  double derivative(double t) const;
  const std::vector<double>& coefficients() const { return coefficients_; }

 private:
  std::vector<double> coefficients_;
};

// Uniformly spaced samples s_k = f(t0 + k * spacing), interpolated with cubic
// Hermite segments. Node slopes are centered differences at the native
// spacing; the end nodes use one-sided second-order stencils. The derivative
// is the exact derivative of the interpolant.
class TabulatedFunction {
 public:
  TabulatedFunction(double t0, double spacing, std::vector<double> samples);

  double value(double t) const;
  // Throws DegenerateInputError for tables too short to difference.
  double derivative(double t) const;

  double t_begin() const { return t0_; }
  double t_end() const { return t0_ + spacing_ * static_cast<double>(samples_.size() - 1); }
  double spacing() const { return spacing_; }
  const std::vector<double>& samples() const { return samples_; }

 private:
  struct Segment {
    std::size_t k;
    double u;
  };
  Segment locate(double t) const;
  double node_slope(std::size_t k) const;

  double t0_;
  double spacing_;
  std::vector<double> samples_;
};

using TimeFunction = std::variant<Polynomial, TabulatedFunction>;

double evaluate(const TimeFunction& f, double t);
double evaluate_derivative(const TimeFunction& f, double t);

enum class FrameKind { z_rotation, translation, composite };

std::string_view to_string(FrameKind kind);
FrameKind parse_frame_kind(std::string_view name);

// Transform q = R(t) r + c(t) from inertial coordinates r to frame
// coordinates q. R is a rotation about z by phi(t) with
//   R = ((cos, sin, 0), (-sin, cos, 0), (0, 0, 1)),
// so omega = dphi/dt > 0 is a counter-clockwise rotating frame.
struct FramePath {
  FrameKind kind = FrameKind::z_rotation;
  TimeFunction phi = Polynomial{};
  std::array<TimeFunction, 3> c{Polynomial{}, Polynomial{}, Polynomial{}};

  static FramePath inertial();
  static FramePath rotating(double omega);
  static FramePath rotation(TimeFunction phi);
  static FramePath translation(std::array<TimeFunction, 3> c);
  static FramePath composite(TimeFunction phi, std::array<TimeFunction, 3> c);

  double angle(double t) const;
  double angular_rate(double t) const;
  Vec3 offset(double t) const;
  Vec3 offset_rate(double t) const;
};

Mat3 rotation_matrix(const FramePath& frame, double t);

// Omega(t) = R(t) dR^T/dt; antisymmetric.
Mat3 omega_tensor(const FramePath& frame, double t);

// A(x, t) = Omega(t) (x - c(t)).
Vec3 field_A(const FramePath& frame, const Vec3& x, double t);

// B(t) = -dc/dt.
Vec3 field_B(const FramePath& frame, double t);

struct ClassicalState {
  Vec3 q = Vec3::Zero();
  Vec3 p = Vec3::Zero();
  double t = 0.0;
};

class DomainEscapeError : public Error {
 public:
  DomainEscapeError(const std::string& what, ClassicalState last_valid)
      : Error(what), last_valid_(last_valid) {}
  const ClassicalState& last_valid() const noexcept { return last_valid_; }

 private:
  ClassicalState last_valid_;
};

struct ClassicalOptions {
  // Largest RK4 substep; 0 integrates each t_grid interval in one step.
  double max_step = 0.0;
  // |q_x|, |q_y| bound of the potential's domain; unbounded if empty.
  std::optional<double> domain_half_width;
};

// Integrates dq/dt = p/M - A - B, dp_i/dt = Omega_ji p_j - dV/dq_i with
// fixed-step classical RK4 and returns the states at the t_grid points.
std::vector<ClassicalState> classical_trajectory(const PhysicalParams& params,
                                                 const FramePath& frame,
                                                 const Potential& potential, const Vec3& q0,
                                                 const Vec3& p0, std::span<const double> t_grid,
                                                 const ClassicalOptions& options = {});

}  // namespace svmrot
