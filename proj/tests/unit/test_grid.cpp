#include <doctest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "svmrot/grid.hpp"
#include "svmrot/io.hpp"

using namespace svmrot;

namespace {

RealField sample(const Grid2D& g, double (*fn)(double, double)) {
  RealField f(g);
  for (std::size_t j = 0; j < g.n(); ++j) {
    for (std::size_t i = 0; i < g.n(); ++i) f(i, j) = fn(g.coord(i), g.coord(j));
  }
  return f;
}

ComplexField random_complex(const Grid2D& g, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n;
  ComplexField f(g);
  for (auto& v : f.values()) v = {n(rng), n(rng)};
  return f;
}

bool interior(const Grid2D& g, std::size_t i, std::size_t j, std::size_t margin = 1) {
  return i >= margin && j >= margin && i + margin < g.n() && j + margin < g.n();
}

}  // namespace

TEST_SUITE("grid_fields") {

TEST_CASE("grid geometry") {
  const Grid2D g(33, 8.0);
  CHECK(g.spacing() == doctest::Approx(0.25));
  CHECK(g.coord(0) == doctest::Approx(-4.0));
  CHECK(g.coord(16) == doctest::Approx(0.0));
  CHECK(g.coord(32) == doctest::Approx(4.0));
  CHECK(g.index(3, 2) == 2 * 33 + 3);
  CHECK_THROWS_AS(Grid2D(15, 1.0), ConfigError);
  CHECK_THROWS_AS(Grid2D(16, 0.0), ConfigError);
  CHECK_THROWS_AS(RealField(g, std::vector<double>(10)), ShapeError);
  CHECK(parse_boundary("no_flux") == Boundary::no_flux);
  CHECK_THROWS_AS(parse_boundary("periodic"), ConfigError);
}

TEST_CASE("constant field has zero derivatives") {
  for (Boundary b : {Boundary::dirichlet_zero, Boundary::no_flux}) {
    const Grid2D g(24, 5.0, b);
    const RealField f(g, 3.5);
    const VectorField grad = gradient(f);
    const RealField lap = laplacian(f);
    for (std::size_t j = 0; j < g.n(); ++j) {
      for (std::size_t i = 0; i < g.n(); ++i) {
        if (b == Boundary::dirichlet_zero && !interior(g, i, j)) continue;
        CHECK(grad.x(i, j) == 0.0);
        CHECK(grad.y(i, j) == 0.0);
        CHECK(std::abs(lap(i, j)) < 1e-12);
      }
    }
  }
}

TEST_CASE("quadratic field is differentiated exactly") {
  const Grid2D g(41, 6.0);
  const RealField f = sample(g, [](double x, double y) { return x * x + 3 * y; });
  const VectorField grad = gradient(f);
  const RealField lap = laplacian(f);
  double worst = 0.0;
  for (std::size_t j = 1; j + 1 < g.n(); ++j) {
    for (std::size_t i = 1; i + 1 < g.n(); ++i) {
      worst = std::max({worst, std::abs(grad.x(i, j) - 2 * g.coord(i)),
                        std::abs(grad.y(i, j) - 3.0), std::abs(lap(i, j) - 2.0)});
    }
  }
  CHECK(worst < 1e-10);
}

TEST_CASE("gradient of a sine converges at second order") {
  auto error = [](std::size_t n) {
    const Grid2D g(n, 4.0);
    const RealField f = sample(g, [](double x, double) { return std::sin(1.3 * x); });
    const VectorField grad = gradient(f);
    double worst = 0.0;
    for (std::size_t j = 1; j + 1 < n; ++j) {
      for (std::size_t i = 1; i + 1 < n; ++i) {
        worst = std::max(worst, std::abs(grad.x(i, j) - 1.3 * std::cos(1.3 * g.coord(i))));
      }
    }
    return worst;
  };
  const double e1 = error(33), e2 = error(65), e3 = error(129);
  CHECK(std::log2(e1 / e2) >= 1.9);
  CHECK(std::log2(e2 / e3) >= 1.9);
}

TEST_CASE("no-flux ghosts mirror the field") {
  const Grid2D g(20, 3.0, Boundary::no_flux);
  const RealField f = sample(g, [](double x, double y) { return x * x * x + y; });
  const VectorField grad = gradient(f);
  const RealField lap = laplacian(f);
  const double h = g.spacing();
  // Mirrored ghost f(-1) = f(1): zero normal gradient, one-sided second difference.
  CHECK(grad.x(0, 5) == 0.0);
  CHECK(grad.y(4, g.n() - 1) == 0.0);
  const double expected = (2 * f(1, 5) - 2 * f(0, 5) + f(0, 6) + f(0, 4) - 2 * f(0, 5)) / (h * h);
  CHECK(lap(0, 5) == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("stencil operators are linear") {
  const Grid2D g(30, 4.0);
  const ComplexField a = random_complex(g, 1);
  const ComplexField b = random_complex(g, 2);
  const Complex ca(0.7, -1.1), cb(-2.0, 0.3);
  ComplexField mix(g);
  for (std::size_t k = 0; k < g.size(); ++k) mix[k] = ca * a[k] + cb * b[k];
  const auto ga = gradient(a), gb = gradient(b), gm = gradient(mix);
  const auto la = laplacian(a), lb = laplacian(b), lm = laplacian(mix);
  double worst = 0.0, scale = 0.0;
  for (std::size_t k = 0; k < g.size(); ++k) {
    worst = std::max({worst, std::abs(gm.x[k] - ca * ga.x[k] - cb * gb.x[k]),
                      std::abs(gm.y[k] - ca * ga.y[k] - cb * gb.y[k]),
                      std::abs(lm[k] - ca * la[k] - cb * lb[k])});
    scale = std::max(scale, std::abs(lm[k]));
  }
  CHECK(worst < 1e-13 * scale);
}

TEST_CASE("normalize") {
  const Grid2D g(64, 12.0);
  const PhysicalParams params;
  const WaveFunction gauss = gaussian_packet(g, params, {0.3, -0.2}, 0.8);
  CHECK(norm_squared(gauss.values) == doctest::Approx(1.0).epsilon(1e-14));

  const WaveFunction again = normalize(gauss);
  double diff = 0.0;
  for (std::size_t k = 0; k < g.size(); ++k) diff = std::max(diff, std::abs(again.values[k] - gauss.values[k]));
  CHECK(diff < 1e-14);

  WaveFunction twice = gauss;
  for (auto& v : twice.values.values()) v *= 2.0;
  twice = normalize(twice);
  diff = 0.0;
  for (std::size_t k = 0; k < g.size(); ++k) diff = std::max(diff, std::abs(twice.values[k] - gauss.values[k]));
  CHECK(diff < 1e-14);

  WaveFunction noise{random_complex(g, 3), params};
  noise = normalize(noise);
  double direct = 0.0;
  for (const Complex& v : noise.values.values()) direct += std::norm(v);
  CHECK(std::abs(direct * g.spacing() * g.spacing() - 1.0) < 1e-12);

  CHECK_THROWS_AS(normalize(WaveFunction{ComplexField(g), params}), ZeroNormError);
}

TEST_CASE("Gaussian packet vanishes on the Dirichlet boundary") {
  const Grid2D g(48, 6.0);
  const WaveFunction psi = gaussian_packet(g, PhysicalParams{}, {1.0, 0.0}, 1.0, {0.5, 0.0}, 1);
  for (std::size_t k = 0; k < g.n(); ++k) {
    CHECK(psi.values(k, 0) == Complex{});
    CHECK(psi.values(0, k) == Complex{});
    CHECK(psi.values(k, g.n() - 1) == Complex{});
    CHECK(psi.values(g.n() - 1, k) == Complex{});
  }
}

TEST_CASE("Madelung momentum of a plane wave") {
  const Grid2D g(64, 10.0);
  const PhysicalParams params{1.5, 0.8, 0.8 / 3.0};
  const double kx = 1.1, ky = -0.6;
  WaveFunction psi{ComplexField(g), params};
  for (std::size_t j = 0; j < g.n(); ++j) {
    for (std::size_t i = 0; i < g.n(); ++i) {
      psi.values(i, j) = std::polar(1.0, kx * g.coord(i) + ky * g.coord(j));
    }
  }
  psi = normalize(psi);
  const MadelungFields m = madelung_decompose(psi);
  const double h = g.spacing();
  for (std::size_t j = 1; j + 1 < g.n(); j += 7) {
    for (std::size_t i = 1; i + 1 < g.n(); i += 5) {
      // Central differences see sin(kh)/h in place of k.
      CHECK(m.p_m.x(i, j) == doctest::Approx(params.hbar * std::sin(kx * h) / h).epsilon(1e-12));
      CHECK(m.p_m.y(i, j) == doctest::Approx(params.hbar * std::sin(ky * h) / h).epsilon(1e-12));
      CHECK(std::abs(m.p_m.x(i, j) - params.hbar * kx) < 0.01);
    }
  }
}

TEST_CASE("real Gaussian has zero Madelung momentum") {
  const Grid2D g(50, 8.0);
  const MadelungFields m = madelung_decompose(gaussian_packet(g, PhysicalParams{}, {0.5, 0.2}, 0.7));
  for (std::size_t k = 0; k < g.size(); ++k) {
    CHECK(m.p_m.x[k] == 0.0);
    CHECK(m.p_m.y[k] == 0.0);
  }
}

TEST_CASE("forward and backward momenta satisfy the consistency identity") {
  const Grid2D g(64, 10.0);
  const PhysicalParams params{2.0, 1.0, 0.25};
  const WaveFunction psi = gaussian_packet(g, params, {0.5, -0.4}, 1.0, {0.8, 0.3}, 2);
  const MadelungFields m = madelung_decompose(psi);
  RealField lnrho(g);
  for (std::size_t k = 0; k < g.size(); ++k) lnrho[k] = std::log(std::max(m.rho[k], m.rho_floor));
  const VectorField dl = gradient(lnrho);
  double worst = 0.0;
  std::size_t masked = 0;
  for (std::size_t k = 0; k < g.size(); ++k) {
    CHECK(m.rho[k] == std::norm(psi.values[k]));
    if (m.mask[k]) {
      ++masked;
      CHECK(m.p_fwd.x[k] == 0.0);
      CHECK(m.p_bwd.y[k] == 0.0);
      continue;
    }
    const double scale = 1.0 + std::abs(m.p_fwd.x[k]) + std::abs(m.p_bwd.x[k]);
    worst = std::max(worst, std::abs(m.p_fwd.x[k] - m.p_bwd.x[k] - 2 * params.mass * params.nu * dl.x[k]) / scale);
    worst = std::max(worst, std::abs(m.p_fwd.y[k] - m.p_bwd.y[k] - 2 * params.mass * params.nu * dl.y[k]) / scale);
    worst = std::max(worst, std::abs(0.5 * (m.p_fwd.x[k] + m.p_bwd.x[k]) - m.p_m.x[k]) / scale);
  }
  CHECK(worst < 1e-12);
  CHECK(masked == m.masked_count());
  CHECK(masked > 0);  // boundary nodes and the vortex core
  CHECK(m.rho_floor == doctest::Approx(kDefaultRelativeRhoFloor *
                                       *std::max_element(m.rho.values().begin(), m.rho.values().end())));
}

TEST_CASE("Madelung momentum is curl free to second order") {
  auto curl = [](std::size_t n) {
    const Grid2D g(n, 8.0);
    WaveFunction psi{ComplexField(g), PhysicalParams{}};
    for (std::size_t j = 0; j < n; ++j) {
      for (std::size_t i = 0; i < n; ++i) {
        const double x = g.coord(i), y = g.coord(j);
        const double theta = 0.4 * x * x - 0.3 * x * y + 0.1 * y * y * y;
        psi.values(i, j) = std::polar(std::exp(-(x * x + y * y) / 4.0), theta);
      }
    }
    const MadelungFields m = madelung_decompose(normalize(psi));
    const VectorField gx = gradient(m.p_m.x), gy = gradient(m.p_m.y);
    double worst = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      for (std::size_t i = 0; i < n; ++i) {
        if (std::abs(g.coord(i)) > 2.0 || std::abs(g.coord(j)) > 2.0) continue;
        worst = std::max(worst, std::abs(gy.x(i, j) - gx.y(i, j)));
      }
    }
    return worst;
  };
  const double c1 = curl(65), c2 = curl(129);
  CHECK(c1 < 0.05);
  CHECK(std::log2(c1 / c2) > 1.8);
}

TEST_CASE("explicit density floor masks low-density nodes") {
  const Grid2D g(40, 8.0);
  const WaveFunction psi = gaussian_packet(g, PhysicalParams{}, {}, 0.6);
  const MadelungFields m = madelung_decompose(psi, 1e-3);
  for (std::size_t k = 0; k < g.size(); ++k) CHECK((m.mask[k] != 0) == (m.rho[k] < 1e-3));
}

TEST_CASE("bilinear interpolation and nearest node") {
  const Grid2D g(21, 4.0);
  const RealField f = sample(g, [](double x, double y) { return 1.0 + 2.0 * x - y + 0.5 * x * y; });
  for (auto [x, y] : {std::pair{0.13, -0.77}, std::pair{1.9, 1.99}, std::pair{-2.0, 0.0}}) {
    CHECK(interpolate(f, x, y) == doctest::Approx(1.0 + 2.0 * x - y + 0.5 * x * y));
  }
  CHECK(interpolate(f, 10.0, 0.0) == doctest::Approx(interpolate(f, 2.0, 0.0)));
  CHECK(nearest_node(g, -2.0, -2.0) == 0);
  CHECK(nearest_node(g, 2.0, 2.0) == g.size() - 1);
  CHECK(nearest_node(g, 0.09, 0.11) == g.index(10, 11));
  CHECK(nearest_node(g, 50.0, -50.0) == g.index(20, 0));
}

TEST_CASE("snapshot files round-trip at full precision") {
  const Grid2D g(17, 3.0);
  RealField f(g);
  std::mt19937_64 rng(4);
  std::normal_distribution<double> n;
  for (double& v : f.values()) v = n(rng) * 1e-7;
  std::stringstream ss;
  write_snapshot(ss, f, 0.125, SnapshotKind::pm_x, std::string_view("# svmrot version=x config_hash=y"));
  std::string first, header;
  std::getline(ss, first);
  std::getline(ss, header);
  CHECK(first == "# svmrot version=x config_hash=y");
  CHECK(header == "# grid n=17 L=3 t=0.125 kind=pm_x");
  ss.seekg(0);
  const Snapshot s = read_snapshot(ss);
  CHECK(s.t == 0.125);
  CHECK(s.kind == SnapshotKind::pm_x);
  REQUIRE(s.field.grid().same_nodes(g));
  for (std::size_t k = 0; k < g.size(); ++k) CHECK(s.field[k] == f[k]);
}

TEST_CASE("malformed snapshots are rejected") {
  std::istringstream missing("1 2 3\n");
  CHECK_THROWS_AS(read_snapshot(missing), ShapeError);
  std::istringstream short_rows("# grid n=16 L=1 t=0 kind=rho\n1 2 3\n");
  CHECK_THROWS_AS(read_snapshot(short_rows), ShapeError);
  CHECK_THROWS_AS(parse_snapshot_kind("energy"), ShapeError);
}

TEST_CASE("number formatting round-trips") {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u(-1e3, 1e3);
  for (int k = 0; k < 1000; ++k) {
    const double v = u(rng) * std::pow(10.0, k % 40 - 20);
    CHECK(std::stod(format_double(v)) == v);
  }
  CHECK(format_optional(std::nan("")).empty());
  CHECK(format_double(0.5) == "0.5");
}

}  // TEST_SUITE
