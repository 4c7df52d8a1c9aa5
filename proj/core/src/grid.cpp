#include "svmrot/grid.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <string>

namespace svmrot {

std::string_view to_string(Boundary boundary) {
  return boundary == Boundary::no_flux ? "no_flux" : "dirichlet_zero";
}

Boundary parse_boundary(std::string_view name) {
  if (name == "dirichlet_zero") return Boundary::dirichlet_zero;
  if (name == "no_flux") return Boundary::no_flux;
  throw ConfigError("unknown boundary '" + std::string(name) + "'");
}

Grid2D::Grid2D(std::size_t n, double length, Boundary boundary)
    : n_(n), length_(length), h_(0.0), boundary_(boundary) {
  if (n_ < kMinPoints) {
    throw ConfigError("grid needs at least " + std::to_string(kMinPoints) + " points per axis");
  }
  if (!(length_ > 0.0) || !std::isfinite(length_)) {
    throw ConfigError("grid length must be positive and finite");
  }
  h_ = length_ / static_cast<double>(n_ - 1);
}

template <class T>
Field<T>::Field(const Grid2D& grid, std::vector<T> data) : grid_(grid), data_(std::move(data)) {
  if (data_.size() != grid_.size()) {
    std::ostringstream os;
    os << "field has " << data_.size() << " values, grid expects " << grid_.size();
    throw ShapeError(os.str());
  }
}

template class Field<double>;
template class Field<Complex>;

void require_same_grid(const Grid2D& a, const Grid2D& b, std::string_view what) {
  if (!a.same_nodes(b)) {
    throw ShapeError(std::string(what) + ": grid dimensions do not match");
  }
}

namespace {

// Value at (i + di, j + dj) under the grid's boundary rule; di, dj in {-1, 0, 1}.
template <class T>
T neighbour(const Field<T>& f, std::ptrdiff_t i, std::ptrdiff_t j) {
  const auto n = static_cast<std::ptrdiff_t>(f.grid().n());
  if (i < 0 || j < 0 || i >= n || j >= n) {
    if (f.grid().boundary() == Boundary::dirichlet_zero) return T{};
    if (i < 0) i = 1;
    if (j < 0) j = 1;
    if (i >= n) i = n - 2;
    if (j >= n) j = n - 2;
  }
  return f(static_cast<std::size_t>(i), static_cast<std::size_t>(j));
}

}  // namespace

template <class T>
VecField<T> gradient(const Field<T>& f) {
  const Grid2D& g = f.grid();
  const std::size_t n = g.n();
  const double inv2h = 1.0 / (2.0 * g.spacing());
  VecField<T> out{Field<T>(g), Field<T>(g)};
  for (std::size_t j = 0; j < n; ++j) {
    const bool edge_j = (j == 0 || j + 1 == n);
    for (std::size_t i = 0; i < n; ++i) {
      const auto ii = static_cast<std::ptrdiff_t>(i);
      const auto jj = static_cast<std::ptrdiff_t>(j);
      if (edge_j || i == 0 || i + 1 == n) {
        out.x(i, j) = (neighbour(f, ii + 1, jj) - neighbour(f, ii - 1, jj)) * inv2h;
        out.y(i, j) = (neighbour(f, ii, jj + 1) - neighbour(f, ii, jj - 1)) * inv2h;
      } else {
        out.x(i, j) = (f(i + 1, j) - f(i - 1, j)) * inv2h;
        out.y(i, j) = (f(i, j + 1) - f(i, j - 1)) * inv2h;
      }
    }
  }
  return out;
}

template <class T>
Field<T> laplacian(const Field<T>& f) {
  const Grid2D& g = f.grid();
  const std::size_t n = g.n();
  const double inv_h2 = 1.0 / (g.spacing() * g.spacing());
  Field<T> out(g);
  for (std::size_t j = 0; j < n; ++j) {
    const bool edge_j = (j == 0 || j + 1 == n);
    for (std::size_t i = 0; i < n; ++i) {
      const auto ii = static_cast<std::ptrdiff_t>(i);
      const auto jj = static_cast<std::ptrdiff_t>(j);
      const T c = f(i, j);
      T sum;
      if (edge_j || i == 0 || i + 1 == n) {
        sum = neighbour(f, ii + 1, jj) + neighbour(f, ii - 1, jj) + neighbour(f, ii, jj + 1) +
              neighbour(f, ii, jj - 1);
      } else {
        sum = f(i + 1, j) + f(i - 1, j) + f(i, j + 1) + f(i, j - 1);
      }
      out(i, j) = (sum - 4.0 * c) * inv_h2;
    }
  }
  return out;
}

template VecField<double> gradient(const Field<double>&);
template VecField<Complex> gradient(const Field<Complex>&);
template Field<double> laplacian(const Field<double>&);
template Field<Complex> laplacian(const Field<Complex>&);

double norm_squared(const ComplexField& f) {
  double acc = 0.0;
  for (const Complex& v : f.values()) acc += std::norm(v);
  const double h = f.grid().spacing();
  return acc * h * h;
}

double integral(const RealField& f) {
  double acc = 0.0;
  for (double v : f.values()) acc += v;
  const double h = f.grid().spacing();
  return acc * h * h;
}

WaveFunction normalize(WaveFunction psi) {
  const double n2 = norm_squared(psi.values);
  if (!(n2 > 0.0) || !std::isfinite(n2)) {
    throw ZeroNormError("cannot normalize a wave function with zero norm");
  }
  const double scale = 1.0 / std::sqrt(n2);
  for (Complex& v : psi.values.values()) v *= scale;
  return psi;
}

WaveFunction gaussian_packet(const Grid2D& grid, const PhysicalParams& params, Vec2 center,
                             double sigma, Vec2 wavenumber, int vortex_charge) {
  if (!(sigma > 0.0)) throw ConfigError("packet width must be positive");
  ComplexField values(grid);
  const std::size_t n = grid.n();
  const double inv4s2 = 1.0 / (4.0 * sigma * sigma);
  for (std::size_t j = 0; j < n; ++j) {
    const double y = grid.coord(j);
    for (std::size_t i = 0; i < n; ++i) {
      const double x = grid.coord(i);
      const double dx = x - center.x;
      const double dy = y - center.y;
      Complex v = std::exp(Complex(-(dx * dx + dy * dy) * inv4s2, wavenumber.x * x + wavenumber.y * y));
      if (vortex_charge != 0) {
        const Complex z(dx, vortex_charge > 0 ? dy : -dy);
        for (int m = 0; m < std::abs(vortex_charge); ++m) v *= z;
      }
      values(i, j) = v;
    }
  }
  if (grid.boundary() == Boundary::dirichlet_zero) {
    for (std::size_t k = 0; k < n; ++k) {
      values(k, 0) = values(k, n - 1) = values(0, k) = values(n - 1, k) = Complex{};
    }
  }
  return normalize(WaveFunction{std::move(values), params});
}

std::size_t MadelungFields::masked_count() const {
  return static_cast<std::size_t>(std::count_if(mask.begin(), mask.end(), [](auto m) { return m != 0; }));
}

MadelungFields madelung_decompose(const WaveFunction& psi, std::optional<double> rho_floor) {
  const Grid2D& g = psi.grid();
  const std::size_t size = g.size();
  const PhysicalParams& pp = psi.params;

  RealField rho(g);
  double rho_max = 0.0;
  for (std::size_t k = 0; k < size; ++k) {
    rho[k] = std::norm(psi.values[k]);
    rho_max = std::max(rho_max, rho[k]);
  }
  const double floor = rho_floor.value_or(kDefaultRelativeRhoFloor * rho_max);

  RealField log_rho(g);
  for (std::size_t k = 0; k < size; ++k) log_rho[k] = std::log(std::max(rho[k], floor > 0.0 ? floor : 1e-300));

  const VecField<Complex> dpsi = gradient(psi.values);
  const VectorField dlog = gradient(log_rho);

  MadelungFields out{rho,
                     {RealField(g), RealField(g)},
                     {RealField(g), RealField(g)},
                     {RealField(g), RealField(g)},
                     NodeMask(size, 0),
                     floor,
                     pp};
  const double osmotic = pp.mass * pp.nu;
  for (std::size_t k = 0; k < size; ++k) {
    if (!(rho[k] >= floor) || rho[k] == 0.0) {
      out.mask[k] = 1;
      continue;
    }
    const Complex conj_psi = std::conj(psi.values[k]);
    const double pmx = pp.hbar * (conj_psi * dpsi.x[k]).imag() / rho[k];
    const double pmy = pp.hbar * (conj_psi * dpsi.y[k]).imag() / rho[k];
    const double ux = osmotic * dlog.x[k];
    const double uy = osmotic * dlog.y[k];
    out.p_m.x[k] = pmx;
    out.p_m.y[k] = pmy;
    out.p_fwd.x[k] = pmx + ux;
    out.p_fwd.y[k] = pmy + uy;
    out.p_bwd.x[k] = pmx - ux;
    out.p_bwd.y[k] = pmy - uy;
  }
  return out;
}

namespace {

struct Bilinear {
  std::size_t i0, j0;
  double wx, wy;
};

Bilinear locate(const Grid2D& g, double x, double y) {
  const double h = g.spacing();
  const double last = static_cast<double>(g.n() - 1);
  const double sx = std::clamp((x + g.half_width()) / h, 0.0, last);
  const double sy = std::clamp((y + g.half_width()) / h, 0.0, last);
  std::size_t i0 = std::min(static_cast<std::size_t>(sx), g.n() - 2);
  std::size_t j0 = std::min(static_cast<std::size_t>(sy), g.n() - 2);
  return {i0, j0, sx - static_cast<double>(i0), sy - static_cast<double>(j0)};
}

double blend(const RealField& f, const Bilinear& b) {
  const double f00 = f(b.i0, b.j0);
  const double f10 = f(b.i0 + 1, b.j0);
  const double f01 = f(b.i0, b.j0 + 1);
  const double f11 = f(b.i0 + 1, b.j0 + 1);
  return (1.0 - b.wy) * ((1.0 - b.wx) * f00 + b.wx * f10) + b.wy * ((1.0 - b.wx) * f01 + b.wx * f11);
}

}  // namespace

double interpolate(const RealField& f, double x, double y) {
  return blend(f, locate(f.grid(), x, y));
}

Vec2 interpolate(const VectorField& f, double x, double y) {
  const Bilinear b = locate(f.x.grid(), x, y);
  return {blend(f.x, b), blend(f.y, b)};
}

std::size_t nearest_node(const Grid2D& grid, double x, double y) {
  const double h = grid.spacing();
  const double last = static_cast<double>(grid.n() - 1);
  const auto i = static_cast<std::size_t>(std::lround(std::clamp((x + grid.half_width()) / h, 0.0, last)));
  const auto j = static_cast<std::size_t>(std::lround(std::clamp((y + grid.half_width()) / h, 0.0, last)));
  return grid.index(i, j);
}

}  // namespace svmrot
