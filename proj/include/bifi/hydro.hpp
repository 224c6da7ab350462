#pragma once

#include "bifi/grid.hpp"
#include "bifi/kinetic.hpp"
#include "bifi/spectral.hpp"

#include <vector>

namespace bifi {

/// Macroscopic state of the small-Stokes-number limit: per-species number
/// densities transported by the fluid, which carries the composite density
/// 1 + kappa * sum_i i n_i.
struct FluidState {
  std::vector<Array> n;  // per species, on the spatial grid
  Array2D u;             // dim x n_cells
  Array p;
  double t = 0.0;
};

Array composite_density(const FluidState& state);  // sum_i i n_i

/// Fluid state with the same moments as a kinetic state: n_i copied, u from the
/// conserved total momentum u + kappa * sum_i J_i divided by 1 + kappa rho and
/// made divergence free by the variable-density projection.
FluidState fluid_from_kinetic(const KineticState& state, const ModelParams& params, const Grid& grid);

struct HydroSolverOptions {
  double cfl = 0.5;
  double courant_limit = 1.0;
  double pcg_tolerance = 1e-12;  // relative residual
  int pcg_max_iterations = 500;
};

/// Result of one preconditioned CG solve.
struct PcgReport {
  int iterations = 0;
  double relative_residual = 0.0;
};

/// Variable-density incompressible Navier-Stokes:
///   d_t n_i + div(n_i u) = 0,
///   d_t((1 + kappa rho) u) + Div((1 + kappa rho) u (x) u) + grad(p + kappa rho) - lap u = 0,
///   div u = 0.
/// First-order splitting: upwind finite-volume transport of n_i and of the
/// momentum, backward-Euler viscosity (CG with a spectral preconditioner), then
/// the projection div(b grad phi) = div u, b = 1 / (1 + kappa rho). Momentum
/// integral is preserved to the CG tolerance.
class HydroSolver {
 public:
  HydroSolver(const ModelParams& params, const Grid& grid, HydroSolverOptions options = {});

  const Grid& grid() const { return grid_; }

  /// Same rule as the kinetic solver so the two share time steps on one grid.
  double stable_dt(const FluidState& state) const;
  double courant_number(const FluidState& state, double dt) const;

  FluidState step(const FluidState& state, double dt) const;
  FluidState advance(FluidState state, double t_final) const;

  /// Variable-density projection of u (in place). Returns the potential phi with
  /// u_in = u_out + b grad(phi). Throws ProjectionFailure on non-convergence.
  Array project(Array2D& u, const Array& rho) const;

  const PcgReport& last_projection() const { return last_projection_; }

 private:
  Array2D viscous_solve(const Array2D& m, const Array& coeff, double dt) const;

  ModelParams params_;
  Grid grid_;
  HydroSolverOptions options_;
  SpectralOps spectral_;
  mutable PcgReport last_projection_;
};

/// Conservative first-order upwind transport of a cell field q by the
/// cell-centred velocity u (face velocity = average of neighbours).
Array upwind_transport(const Array& q, const Array2D& u, const Grid& grid, double dt);

}  // namespace bifi
