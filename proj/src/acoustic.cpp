#include "bifi/acoustic.hpp"

#include <cmath>

namespace bifi {

AcousticSolver::AcousticSolver(const ModelParams& params, const Grid& grid)
    : params_(params), grid_(grid), spectral_(grid) {
  params_.validate();
  double si = 0.0;
  for (int i = 1; i <= params_.n_species; ++i) si += i;
  inertia_ = 1.0 + params_.kappa * si / grid_.domain_volume();
}

void AcousticSolver::project(Array2D& u) const { spectral_.project(u); }

AcousticState AcousticSolver::step(const AcousticState& state, double dt) const {
  AcousticState next = state;
  next.t = state.t + dt;
  spectral_.project(next.u_tilde);
  const double inertia = inertia_;
  spectral_.apply_symbol(next.u_tilde, [dt, inertia](double k2) { return std::exp(-k2 * dt / inertia); });
  // densities are frozen by div u = 0; the pressure balances the density gradient
  next.p_tilde = Array::Zero(grid_.n_cells());
  for (std::size_t s = 0; s < next.n_tilde.size(); ++s)
    next.p_tilde -= params_.kappa * static_cast<double>(s + 1) * next.n_tilde[s];
  return next;
}

}  // namespace bifi
