#pragma once

#include "bifi/types.hpp"

#include <array>

namespace bifi {

/// Physical and numerical parameters of the particle-fluid system.
struct ModelParams {
  double epsilon = 1.0;     // Stokes number
  double kappa = 1.0;       // particle/fluid density ratio
  double theta_bar = 1.0;   // reference temperature
  int n_species = 2;        // particle sizes i = 1..N
  double delta = 1e-2;      // perturbation amplitude around global equilibrium
  int dim = 1;              // spatial (= velocity) dimension

  void validate() const;
};

/// Periodic spatial grid times a symmetric, truncated velocity box.
///
/// Spatial nodes sit at x_j = j * dx (so coarse grids nest inside fine ones);
/// velocity nodes are cell centres v_k = -L_v + (k + 1/2) dv. Cells are indexed
/// with x fastest, velocity points with v_1 fastest.
class Grid {
 public:
  Grid() = default;
  Grid(int dim, std::array<int, 2> n_x, std::array<double, 2> x_extent, int n_v, double v_extent);

  static Grid make_1d(int n_x, int n_v = 32, double length = 1.0, double v_extent = 8.0);
  static Grid make_2d(int n_x, int n_v = 32, double length = 1.0, double v_extent = 8.0);

  int dim() const { return dim_; }
  int n_x(int d) const { return n_x_[d]; }
  std::array<int, 2> n_x() const { return n_x_; }
  double x_extent(int d) const { return x_extent_[d]; }
  std::array<double, 2> x_extent() const { return x_extent_; }
  double dx(int d) const { return x_extent_[d] / n_x_[d]; }
  int n_v() const { return n_v_; }
  double v_extent() const { return v_extent_; }
  double dv() const { return 2.0 * v_extent_ / n_v_; }

  int n_cells() const { return dim_ == 1 ? n_x_[0] : n_x_[0] * n_x_[1]; }
  int n_vel() const { return dim_ == 1 ? n_v_ : n_v_ * n_v_; }

  double cell_volume() const { return dim_ == 1 ? dx(0) : dx(0) * dx(1); }
  double velocity_volume() const { return dim_ == 1 ? dv() : dv() * dv(); }
  double domain_volume() const { return dim_ == 1 ? x_extent_[0] : x_extent_[0] * x_extent_[1]; }

  /// 1D velocity node coordinate.
  double v_node(int k) const { return -v_extent_ + (k + 0.5) * dv(); }
  /// Coordinate d of spatial cell c.
  double x_coord(int cell, int d) const;
  /// Velocity component d of velocity point k.
  double v_coord(int k, int d) const;

  /// Neighbour of `cell` shifted by `offset` along dimension d (periodic).
  int neighbor(int cell, int d, int offset) const;

  /// Per-cell spatial quadrature weights (sum = domain volume).
  Array spatial_weights() const;
  /// Component d of all velocity points.
  Array velocity_component(int d) const;

  /// Same domain with n_x divided by `factor` along every dimension.
  Grid coarsened(int factor) const;
  bool same_shape(const Grid& other) const;

 private:
  int dim_ = 1;
  std::array<int, 2> n_x_{1, 1};
  std::array<double, 2> x_extent_{1.0, 1.0};
  int n_v_ = 32;
  double v_extent_ = 8.0;
};

bool operator==(const Grid& a, const Grid& b);

}  // namespace bifi
