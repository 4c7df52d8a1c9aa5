#pragma once

#include <complex>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "svmrot/error.hpp"
#include "svmrot/params.hpp"

namespace svmrot {

using Complex = std::complex<double>;

enum class Boundary { dirichlet_zero, no_flux };

std::string_view to_string(Boundary boundary);
Boundary parse_boundary(std::string_view name);

struct Vec2 {
  double x = 0.0;
  double y = 0.0;
};

// Square node grid on [-L/2, L/2]^2 with n points per axis, spacing
// h = L / (n - 1). Node (i, j) sits at (x_i, y_j); i runs along x and storage
// is row-major in j, so the flat index is j * n + i.
class Grid2D {
 public:
  static constexpr std::size_t kMinPoints = 16;

  Grid2D(std::size_t n, double length, Boundary boundary = Boundary::dirichlet_zero);

  std::size_t n() const { return n_; }
  std::size_t size() const { return n_ * n_; }
  double length() const { return length_; }
  double half_width() const { return 0.5 * length_; }
  double spacing() const { return h_; }
  Boundary boundary() const { return boundary_; }

  double coord(std::size_t i) const { return -half_width() + static_cast<double>(i) * h_; }
  std::size_t index(std::size_t i, std::size_t j) const { return j * n_ + i; }

  Grid2D with_boundary(Boundary b) const { return Grid2D(n_, length_, b); }

  // Same nodes; boundary kind is ignored.
  bool same_nodes(const Grid2D& other) const {
    return n_ == other.n_ && length_ == other.length_;
  }
  bool operator==(const Grid2D& other) const = default;

 private:
  std::size_t n_;
  double length_;
  double h_;
  Boundary boundary_;
};

template <class T>
class Field {
 public:
  explicit Field(const Grid2D& grid, T fill = T{}) : grid_(grid), data_(grid.size(), fill) {}
  Field(const Grid2D& grid, std::vector<T> data);

  const Grid2D& grid() const { return grid_; }
  std::size_t size() const { return data_.size(); }

  T& operator()(std::size_t i, std::size_t j) { return data_[grid_.index(i, j)]; }
  const T& operator()(std::size_t i, std::size_t j) const { return data_[grid_.index(i, j)]; }
  T& operator[](std::size_t k) { return data_[k]; }
  const T& operator[](std::size_t k) const { return data_[k]; }

  std::span<T> values() { return data_; }
  std::span<const T> values() const { return data_; }

 private:
  Grid2D grid_;
  std::vector<T> data_;
};

using RealField = Field<double>;
using ComplexField = Field<Complex>;

template <class T>
struct VecField {
  Field<T> x;
  Field<T> y;
};

using VectorField = VecField<double>;

// Byte per node; nonzero marks a node excluded from drift and residuals.
using NodeMask = std::vector<std::uint8_t>;

void require_same_grid(const Grid2D& a, const Grid2D& b, std::string_view what);

// Centered second-order differences. Out-of-grid neighbours are zero for
// dirichlet_zero and mirrored (f_{-1} = f_1) for no_flux.
template <class T>
VecField<T> gradient(const Field<T>& f);

template <class T>
Field<T> laplacian(const Field<T>& f);

// Sum |f|^2 h^2.
double norm_squared(const ComplexField& f);
// Sum f h^2.
double integral(const RealField& f);

struct WaveFunction {
  ComplexField values;
  PhysicalParams params;

  const Grid2D& grid() const { return values.grid(); }
};

// Scaled so that sum |psi|^2 h^2 = 1. Throws ZeroNormError.
WaveFunction normalize(WaveFunction psi);

// Gaussian exp(-|x - x0|^2 / (4 sigma^2) + i k.x) times ((x - x0) + i (y - y0))^charge
// (conjugated for negative charge), zeroed on Dirichlet boundary nodes and
// normalized. sigma is the per-axis standard deviation of |psi|^2.
WaveFunction gaussian_packet(const Grid2D& grid, const PhysicalParams& params, Vec2 center,
                             double sigma, Vec2 wavenumber = {}, int vortex_charge = 0);

// Density, momentum fields and node mask of psi = sqrt(rho) exp(i theta).
//   p_m   = hbar Im(psi* grad psi) / rho            (= 2 M nu grad theta)
//   p_fwd = p_m + M nu grad ln rho
//   p_bwd = p_m - M nu grad ln rho
// Nodes with rho < rho_floor carry zero momentum and are flagged in mask.
struct MadelungFields {
  RealField rho;
  VectorField p_m;
  VectorField p_fwd;
  VectorField p_bwd;
  NodeMask mask;
  double rho_floor = 0.0;
  PhysicalParams params;

  const Grid2D& grid() const { return rho.grid(); }
  std::size_t masked_count() const;
};

inline constexpr double kDefaultRelativeRhoFloor = 1e-12;

// rho_floor defaults to kDefaultRelativeRhoFloor * max(rho).
MadelungFields madelung_decompose(const WaveFunction& psi,
                                  std::optional<double> rho_floor = std::nullopt);

// Bilinear interpolation at (x, y); points outside the grid are clamped.
double interpolate(const RealField& f, double x, double y);
Vec2 interpolate(const VectorField& f, double x, double y);

// Flat index of the node nearest to (x, y), clamped to the grid.
std::size_t nearest_node(const Grid2D& grid, double x, double y);

}  // namespace svmrot
