#include <doctest.h>

#include "bifi/spectral.hpp"

#include <cmath>
#include <numbers>

using namespace bifi;
using std::numbers::pi;

TEST_CASE("grid weights sum to the domain volume") {
  for (const Grid& g : {Grid::make_1d(64), Grid::make_2d(16, 8, 2.0)}) {
    CHECK(g.spatial_weights().sum() == doctest::Approx(g.domain_volume()).epsilon(1e-14));
    CHECK(g.velocity_volume() * g.n_vel() == doctest::Approx(std::pow(2 * g.v_extent(), g.dim())));
  }
}

TEST_CASE("velocity nodes are symmetric cell centres") {
  const Grid g = Grid::make_1d(8, 32);
  CHECK(g.v_node(0) == doctest::Approx(-8.0 + 0.25));
  for (int k = 0; k < 32; ++k) CHECK(g.v_node(k) == doctest::Approx(-g.v_node(31 - k)));
}

TEST_CASE("periodic neighbours") {
  const Grid g = Grid::make_2d(4);
  CHECK(g.neighbor(3, 0, 1) == 0);
  CHECK(g.neighbor(0, 0, -1) == 3);
  CHECK(g.neighbor(0, 1, -1) == 12);
  CHECK(g.neighbor(13, 1, 1) == 1);
}

TEST_CASE("coarsening nests the spatial nodes") {
  const Grid g = Grid::make_1d(64);
  const Grid c = g.coarsened(4);
  CHECK(c.n_x(0) == 16);
  CHECK(c.x_coord(3, 0) == doctest::Approx(g.x_coord(12, 0)));
  CHECK_THROWS_AS(g.coarsened(3), ConfigError);
}

TEST_CASE("invalid parameters are rejected") {
  ModelParams p;
  p.epsilon = 0.0;
  CHECK_THROWS_AS(p.validate(), ConfigError);
  CHECK_THROWS_AS(Grid(3, {4, 4}, {1, 1}, 8, 8), ConfigError);
}

TEST_CASE("spectral derivative of a resolved mode is exact") {
  const Grid g = Grid::make_1d(32);
  const SpectralOps sp(g);
  Array phi(32), dphi(32);
  for (int c = 0; c < 32; ++c) {
    const double x = g.x_coord(c, 0);
    phi[c] = std::sin(2 * pi * 3 * x);
    dphi[c] = 2 * pi * 3 * std::cos(2 * pi * 3 * x);
  }
  CHECK((sp.gradient(phi).row(0).transpose() - dphi).abs().maxCoeff() < 1e-11);
}

TEST_CASE("projection removes divergence, keeps the mean and is idempotent") {
  const Grid g = Grid::make_2d(16);
  const SpectralOps sp(g);
  Array2D u(2, g.n_cells());
  for (int c = 0; c < g.n_cells(); ++c) {
    const double x = g.x_coord(c, 0), y = g.x_coord(c, 1);
    u(0, c) = 0.3 + std::sin(2 * pi * x) * std::cos(4 * pi * y);
    u(1, c) = -0.1 + std::cos(2 * pi * x) + std::sin(2 * pi * y);
  }
  const Eigen::Array2d mean{u.row(0).mean(), u.row(1).mean()};
  sp.project(u);
  CHECK(sp.divergence(u).abs().maxCoeff() < 1e-12);
  CHECK(u.row(0).mean() == doctest::Approx(mean[0]).epsilon(1e-14));
  CHECK(u.row(1).mean() == doctest::Approx(mean[1]).epsilon(1e-14));
  Array2D v = u;
  sp.project(v);
  CHECK((v - u).abs().maxCoeff() < 1e-14);
}

TEST_CASE("poisson solve inverts the laplacian on mean-free data") {
  const Grid g = Grid::make_1d(32);
  const SpectralOps sp(g);
  Array f(32);
  for (int c = 0; c < 32; ++c) f[c] = std::cos(2 * pi * g.x_coord(c, 0)) + 0.5 * std::sin(6 * pi * g.x_coord(c, 0));
  CHECK((sp.laplacian(sp.solve_poisson(f)) - f).abs().maxCoeff() < 1e-12);
}
