#pragma once

#include "bifi/grid.hpp"
#include "bifi/spectral.hpp"

#include <vector>

namespace bifi {

/// Phase-space distributions of all particle species plus the carrier fluid.
///
/// F[i] is an (n_vel x n_cells) array for species size i + 1: one column of
/// velocity samples per spatial cell. u is (dim x n_cells), p is per cell.
struct KineticState {
  std::vector<Array2D> F;
  Array2D u;
  Array p;
  double t = 0.0;
};

/// Velocity moments of a kinetic state; per-species entries are indexed by
/// species (size i = index + 1).
struct MomentSet {
  std::vector<Array> n;         // number density
  std::vector<Array> rho;       // mass density i * n_i
  std::vector<Array2D> J;       // momentum density i * int v F (dim x cells)
  std::vector<Array2D> P;       // stress i * int v (x) v F, row-major dim*dim x cells
  Array rho_total;              // sum_i i * n_i
};

/// Normalized Gaussian in velocity with variance theta_bar / i per component,
/// centred at `drift`, scaled to number density `density`.
Array local_maxwellian(int species_size, double density, const std::array<double, 2>& drift,
                       const ModelParams& params, const Grid& grid);

/// Global equilibrium mu_i: unit total mass over the whole phase-space domain.
Array maxwellian(int species_size, const ModelParams& params, const Grid& grid);

MomentSet moments(const KineticState& state, const ModelParams& params, const Grid& grid);

/// Global equilibrium state: F_i = mu_i, u = 0, p = 0.
KineticState equilibrium_state(const ModelParams& params, const Grid& grid);

struct KineticSolverOptions {
  double cfl = 0.5;
  double courant_limit = 1.0;  // sum over dimensions of |v|max dt / dx
  int max_root_iterations = 60;
};

/// First-order IMEX splitting for the coupled Vlasov-Fokker-Planck /
/// incompressible Navier-Stokes system.
///
/// One step is
///   1. explicit conservative upwind transport of every F_i in x, and
///      explicit fluid convection div(u (x) u);
///   2. implicit Fokker-Planck/drag relaxation in velocity, cell by cell and
///      direction by direction, coupled to the fluid through the drag. The
///      fluid velocity inside the relaxation is found by a scalar root solve;
///      the fluid update itself is the exact negative of the particle momentum
///      change, so u + kappa * sum_i J_i is conserved to rounding;
///   3. backward-Euler viscosity and spectral pressure projection.
/// The velocity flux is the exponentially fitted form
///   G = theta/(i dv) (F_{k+1} e^{b} - F_k e^{-b}),  b = i dv (v_{k+1/2} - u) / (2 theta),
/// which vanishes on the sampled Maxwellian, so the global equilibrium is a
/// fixed point for every epsilon.
class KineticSolver {
 public:
  KineticSolver(const ModelParams& params, const Grid& grid, KineticSolverOptions options = {});

  const ModelParams& params() const { return params_; }
  const Grid& grid() const { return grid_; }

  /// dt = cfl * dx / max(|v|max, |u|max).
  double stable_dt(const KineticState& state) const;
  /// Largest per-step Courant sum for the given dt; steps above the limit are rejected.
  double courant_number(const KineticState& state, double dt) const;

  KineticState step(const KineticState& state, double dt) const;

  /// Integrates to `t_final` with uniform steps no larger than stable_dt of the
  /// initial state. `observer` (optional) sees every accepted state.
  KineticState advance(KineticState state, double t_final,
                       const std::function<void(const KineticState&)>& observer = {}) const;

  int steps_for(const KineticState& state, double duration) const;

 private:
  void transport(KineticState& state, double dt) const;
  void relax(KineticState& state, double dt) const;
  void relax_cell_direction(std::vector<Array>& cell_f, double& u_d, int dir, double dt) const;
  void fluid_update(KineticState& state, double dt) const;

  ModelParams params_;
  Grid grid_;
  KineticSolverOptions options_;
  SpectralOps spectral_;
  std::array<Array, 2> velocity_;
};

}  // namespace bifi
