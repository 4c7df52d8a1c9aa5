#include "svmrot/frame.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <sstream>
#include <string>

namespace svmrot {

Polynomial::Polynomial(std::vector<double> coefficients) : coefficients_(std::move(coefficients)) {
  if (coefficients_.size() > kMaxDegree + 1) {
    throw ConfigError("time polynomials are limited to degree 4");
  }
  for (double c : coefficients_) {
    if (!std::isfinite(c)) throw ConfigError("non-finite polynomial coefficient");
  }
}

double Polynomial::value(double t) const {
  double acc = 0.0;
  for (auto it = coefficients_.rbegin(); it != coefficients_.rend(); ++it) acc = acc * t + *it;
  return acc;
}

double Polynomial::derivative(double t) const {
  double acc = 0.0;
  for (std::size_t k = coefficients_.size(); k-- > 1;) {
    acc = acc * t + static_cast<double>(k) * coefficients_[k];
  }
  return acc;
}

TabulatedFunction::TabulatedFunction(double t0, double spacing, std::vector<double> samples)
    : t0_(t0), spacing_(spacing), samples_(std::move(samples)) {
  if (!(spacing_ > 0.0) || !std::isfinite(spacing_) || !std::isfinite(t0_)) {
    throw DegenerateInputError("tabulated path needs a finite positive spacing");
  }
  if (samples_.size() < 2) {
    throw DegenerateInputError("tabulated path needs at least two samples");
  }
  for (double s : samples_) {
    if (!std::isfinite(s)) throw DegenerateInputError("tabulated path has a non-finite sample");
  }
}

TabulatedFunction::Segment TabulatedFunction::locate(double t) const {
  const double span = t_end() - t0_;
  const double slack = 1e-12 * std::max(1.0, span);
  if (!(t >= t0_ - slack && t <= t_end() + slack)) {
    std::ostringstream os;
    os << "t = " << t << " outside tabulated range [" << t0_ << ", " << t_end() << "]";
    throw OutOfRangeError(os.str());
  }
  const double s = std::clamp((t - t0_) / spacing_, 0.0, static_cast<double>(samples_.size() - 1));
  std::size_t k = static_cast<std::size_t>(std::floor(s));
  if (k >= samples_.size() - 1) k = samples_.size() - 2;
  return {k, s - static_cast<double>(k)};
}

double TabulatedFunction::node_slope(std::size_t k) const {
  const std::size_t n = samples_.size();
  if (n < 3) {
    throw DegenerateInputError("tabulated path with fewer than three samples is not differentiable");
  }
  const auto& s = samples_;
  if (k == 0) return (-3.0 * s[0] + 4.0 * s[1] - s[2]) / (2.0 * spacing_);
  if (k == n - 1) return (3.0 * s[n - 1] - 4.0 * s[n - 2] + s[n - 3]) / (2.0 * spacing_);
  return (s[k + 1] - s[k - 1]) / (2.0 * spacing_);
}

double TabulatedFunction::value(double t) const {
  const auto [k, u] = locate(t);
  if (samples_.size() < 3) return samples_[k] + u * (samples_[k + 1] - samples_[k]);
  const double u2 = u * u;
  const double u3 = u2 * u;
  const double h00 = 2 * u3 - 3 * u2 + 1;
  const double h10 = u3 - 2 * u2 + u;
  const double h01 = -2 * u3 + 3 * u2;
  const double h11 = u3 - u2;
  return h00 * samples_[k] + h10 * spacing_ * node_slope(k) + h01 * samples_[k + 1] +
         h11 * spacing_ * node_slope(k + 1);
}

double TabulatedFunction::derivative(double t) const {
  const auto [k, u] = locate(t);
  const double m0 = node_slope(k);
  const double m1 = node_slope(k + 1);
  const double u2 = u * u;
  const double d00 = 6 * u2 - 6 * u;
  const double d10 = 3 * u2 - 4 * u + 1;
  const double d01 = -6 * u2 + 6 * u;
  const double d11 = 3 * u2 - 2 * u;
  return (d00 * samples_[k] + d01 * samples_[k + 1]) / spacing_ + d10 * m0 + d11 * m1;
}

double evaluate(const TimeFunction& f, double t) {
  return std::visit([t](const auto& g) { return g.value(t); }, f);
}

double evaluate_derivative(const TimeFunction& f, double t) {
  return std::visit([t](const auto& g) { return g.derivative(t); }, f);
}

std::string_view to_string(FrameKind kind) {
  switch (kind) {
    case FrameKind::z_rotation:
      return "z_rotation";
    case FrameKind::translation:
      return "translation";
    case FrameKind::composite:
      return "composite";
  }
  return "z_rotation";
}

FrameKind parse_frame_kind(std::string_view name) {
  if (name == "z_rotation") return FrameKind::z_rotation;
  if (name == "translation") return FrameKind::translation;
  if (name == "composite") return FrameKind::composite;
  throw ConfigError("unknown frame kind '" + std::string(name) + "'");
}

FramePath FramePath::inertial() { return {}; }

FramePath FramePath::rotating(double omega) {
  return rotation(Polynomial({0.0, omega}));
}

FramePath FramePath::rotation(TimeFunction phi) {
  FramePath f;
  f.kind = FrameKind::z_rotation;
  f.phi = std::move(phi);
  return f;
}

FramePath FramePath::translation(std::array<TimeFunction, 3> c) {
  FramePath f;
  f.kind = FrameKind::translation;
  f.c = std::move(c);
  return f;
}

FramePath FramePath::composite(TimeFunction phi, std::array<TimeFunction, 3> c) {
  FramePath f;
  f.kind = FrameKind::composite;
  f.phi = std::move(phi);
  f.c = std::move(c);
  return f;
}

double FramePath::angle(double t) const {
  return kind == FrameKind::translation ? 0.0 : evaluate(phi, t);
}

double FramePath::angular_rate(double t) const {
  return kind == FrameKind::translation ? 0.0 : evaluate_derivative(phi, t);
}

Vec3 FramePath::offset(double t) const {
  if (kind == FrameKind::z_rotation) return Vec3::Zero();
  return {evaluate(c[0], t), evaluate(c[1], t), evaluate(c[2], t)};
}

Vec3 FramePath::offset_rate(double t) const {
  if (kind == FrameKind::z_rotation) return Vec3::Zero();
  return {evaluate_derivative(c[0], t), evaluate_derivative(c[1], t),
          evaluate_derivative(c[2], t)};
}

Mat3 rotation_matrix(const FramePath& frame, double t) {
  const double phi = frame.angle(t);
  const double cs = std::cos(phi);
  const double sn = std::sin(phi);
  Mat3 r;
  r << cs, sn, 0.0,
      -sn, cs, 0.0,
      0.0, 0.0, 1.0;
  return r;
}

Mat3 omega_tensor(const FramePath& frame, double t) {
  const double phi = frame.angle(t);
  const double rate = frame.angular_rate(t);
  const double cs = std::cos(phi);
  const double sn = std::sin(phi);
  Mat3 r_dot;
  r_dot << -sn, cs, 0.0,
      -cs, -sn, 0.0,
      0.0, 0.0, 0.0;
  r_dot *= rate;
  return rotation_matrix(frame, t) * r_dot.transpose();
}

Vec3 field_A(const FramePath& frame, const Vec3& x, double t) {
  return omega_tensor(frame, t) * (x - frame.offset(t));
}

Vec3 field_B(const FramePath& frame, double t) { return -frame.offset_rate(t); }

namespace {

struct PhaseRate {
  Vec3 dq;
  Vec3 dp;
};

PhaseRate rhs(const PhysicalParams& params, const FramePath& frame, const Potential& potential,
              const Vec3& q, const Vec3& p, double t) {
  const Mat3 omega = omega_tensor(frame, t);
  const Vec3 a = omega * (q - frame.offset(t));
  const Vec3 b = field_B(frame, t);
  return {p / params.mass - a - b, omega.transpose() * p - potential.gradient(q)};
}

bool inside(const ClassicalState& s, const ClassicalOptions& options) {
  if (!s.q.allFinite() || !s.p.allFinite()) return false;
  if (!options.domain_half_width) return true;
  const double w = *options.domain_half_width;
  return std::abs(s.q.x()) <= w && std::abs(s.q.y()) <= w;
}

}  // namespace

std::vector<ClassicalState> classical_trajectory(const PhysicalParams& params,
                                                 const FramePath& frame,
                                                 const Potential& potential, const Vec3& q0,
                                                 const Vec3& p0, std::span<const double> t_grid,
                                                 const ClassicalOptions& options) {
  if (t_grid.empty()) return {};
  for (std::size_t k = 1; k < t_grid.size(); ++k) {
    if (!(t_grid[k] > t_grid[k - 1])) {
      throw PreconditionError("t_grid must be strictly increasing");
    }
  }
  if (!(params.mass > 0.0)) throw ConfigError("mass must be positive");

  std::vector<ClassicalState> out;
  out.reserve(t_grid.size());
  ClassicalState state{q0, p0, t_grid[0]};
  if (!inside(state, options)) {
    throw DomainEscapeError("initial state outside the potential's domain", state);
  }
  out.push_back(state);

  for (std::size_t k = 1; k < t_grid.size(); ++k) {
    const double interval = t_grid[k] - t_grid[k - 1];
    int substeps = 1;
    if (options.max_step > 0.0) {
      substeps = static_cast<int>(std::ceil(interval / options.max_step - 1e-9));
      substeps = std::max(substeps, 1);
    }
    const double h = interval / substeps;
    for (int s = 0; s < substeps; ++s) {
      const double t = t_grid[k - 1] + s * h;
      const Vec3& q = state.q;
      const Vec3& p = state.p;
      const PhaseRate k1 = rhs(params, frame, potential, q, p, t);
      const PhaseRate k2 =
          rhs(params, frame, potential, q + 0.5 * h * k1.dq, p + 0.5 * h * k1.dp, t + 0.5 * h);
      const PhaseRate k3 =
          rhs(params, frame, potential, q + 0.5 * h * k2.dq, p + 0.5 * h * k2.dp, t + 0.5 * h);
      const PhaseRate k4 = rhs(params, frame, potential, q + h * k3.dq, p + h * k3.dp, t + h);
      ClassicalState next;
      next.q = q + h / 6.0 * (k1.dq + 2.0 * k2.dq + 2.0 * k3.dq + k4.dq);
      next.p = p + h / 6.0 * (k1.dp + 2.0 * k2.dp + 2.0 * k3.dp + k4.dp);
      next.t = (s + 1 == substeps) ? t_grid[k] : t + h;
      if (!inside(next, options)) {
        std::ostringstream os;
        os << "trajectory left the potential's domain near t = " << next.t;
        throw DomainEscapeError(os.str(), state);
      }
      state = next;
    }
    out.push_back(state);
  }
  return out;
}

}  // namespace svmrot
