#pragma once

#include "bifi/grid.hpp"
#include "bifi/spectral.hpp"

#include <vector>

namespace bifi {

/// Perturbation fields of the linearized limit around the rest state:
/// n_i = nbar (1 + delta n_tilde_i), u = delta u_tilde.
struct AcousticState {
  std::vector<Array> n_tilde;
  Array2D u_tilde;
  Array p_tilde;
  double t = 0.0;
};

/// Linear constant-coefficient model
///   d_t(sum_i i n_tilde_i) + (sum_i i) div u_tilde = 0,
///   (1 + kappa sum_i i nbar) d_t u_tilde + grad(p_tilde + kappa sum_i i n_tilde_i) = lap u_tilde.
/// With div u_tilde = 0 the densities are frozen and u_tilde follows a projected
/// heat equation, integrated exactly in Fourier space (any dt is stable).
class AcousticSolver {
 public:
  AcousticSolver(const ModelParams& params, const Grid& grid);

  /// Decay rate of mode k is |k|^2 / (1 + kappa sum_i i nbar).
  double inertia() const { return inertia_; }

  AcousticState step(const AcousticState& state, double dt) const;
  AcousticState advance(AcousticState state, double t_final) const { return step(state, t_final - state.t); }

  /// Leray projection (idempotent).
  void project(Array2D& u) const;

 private:
  ModelParams params_;
  Grid grid_;
  SpectralOps spectral_;
  double inertia_;
};

}  // namespace bifi
