#include "bifi/grid.hpp"

#include <cmath>

namespace bifi {

void ModelParams::validate() const {
  if (!(epsilon > 0.0)) throw ConfigError("epsilon must be positive");
  if (!(kappa > 0.0)) throw ConfigError("kappa must be positive");
  if (!(theta_bar > 0.0)) throw ConfigError("theta_bar must be positive");
  if (n_species < 1) throw ConfigError("n_species must be at least 1");
  if (!(delta > 0.0)) throw ConfigError("delta must be positive");
  if (dim != 1 && dim != 2) throw ConfigError("dim must be 1 or 2");
}

Grid::Grid(int dim, std::array<int, 2> n_x, std::array<double, 2> x_extent, int n_v,
           double v_extent)
    : dim_(dim), n_x_(n_x), x_extent_(x_extent), n_v_(n_v), v_extent_(v_extent) {
  if (dim != 1 && dim != 2) throw ConfigError("grid dimension must be 1 or 2");
  if (dim == 1) {
    n_x_[1] = 1;
    x_extent_[1] = 1.0;
  }
  for (int d = 0; d < dim; ++d) {
    if (n_x_[d] < 2) throw ConfigError("grid needs at least 2 points per dimension");
    if (!(x_extent_[d] > 0.0)) throw ConfigError("grid extent must be positive");
  }
  if (n_v < 2) throw ConfigError("velocity grid needs at least 2 points");
  if (!(v_extent > 0.0)) throw ConfigError("velocity extent must be positive");
}

Grid Grid::make_1d(int n_x, int n_v, double length, double v_extent) {
  return Grid(1, {n_x, 1}, {length, 1.0}, n_v, v_extent);
}

Grid Grid::make_2d(int n_x, int n_v, double length, double v_extent) {
  return Grid(2, {n_x, n_x}, {length, length}, n_v, v_extent);
}

double Grid::x_coord(int cell, int d) const {
  const int j = d == 0 ? cell % n_x_[0] : cell / n_x_[0];
  return j * dx(d);
}

double Grid::v_coord(int k, int d) const {
  const int j = d == 0 ? k % n_v_ : k / n_v_;
  return v_node(j);
}

int Grid::neighbor(int cell, int d, int offset) const {
  if (d == 0) {
    const int row = cell / n_x_[0];
    const int i = ((cell % n_x_[0]) + offset % n_x_[0] + n_x_[0]) % n_x_[0];
    return row * n_x_[0] + i;
  }
  const int i = cell % n_x_[0];
  const int j = ((cell / n_x_[0]) + offset % n_x_[1] + n_x_[1]) % n_x_[1];
  return j * n_x_[0] + i;
}

Array Grid::spatial_weights() const { return Array::Constant(n_cells(), cell_volume()); }

Array Grid::velocity_component(int d) const {
  Array v(n_vel());
  for (int k = 0; k < n_vel(); ++k) v[k] = v_coord(k, d);
  return v;
}

Grid Grid::coarsened(int factor) const {
  if (factor < 1) throw ConfigError("coarsening factor must be positive");
  std::array<int, 2> n = n_x_;
  for (int d = 0; d < dim_; ++d) {
    if (n_x_[d] % factor != 0)
      throw ConfigError("coarsening factor " + std::to_string(factor) + " does not divide n_x");
    n[d] = n_x_[d] / factor;
  }
  return Grid(dim_, n, x_extent_, n_v_, v_extent_);
}

bool Grid::same_shape(const Grid& other) const {
  return dim_ == other.dim_ && n_x_ == other.n_x_ && n_v_ == other.n_v_;
}

bool operator==(const Grid& a, const Grid& b) {
  return a.same_shape(b) && a.x_extent() == b.x_extent() && a.v_extent() == b.v_extent();
}

}  // namespace bifi
