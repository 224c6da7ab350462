#include "bifi/hydro.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace bifi {

namespace {

// Preconditioned conjugate gradients for an SPD operator on cell fields.
template <typename Op, typename Precond>
PcgReport pcg(const Op& apply, const Precond& precond, const Array& b, Array& x, double tol,
              int max_iterations) {
  PcgReport rep;
  const double bnorm = std::sqrt((b * b).sum());
  if (bnorm == 0.0) {
    x.setZero();
    return rep;
  }
  Array r = b - apply(x);
  double rnorm = std::sqrt((r * r).sum());
  if (rnorm <= tol * bnorm) {
    rep.relative_residual = rnorm / bnorm;
    return rep;
  }
  Array z = precond(r);
  Array p = z;
  double rz = (r * z).sum();
  for (int it = 1; it <= max_iterations; ++it) {
    const Array Ap = apply(p);
    const double alpha = rz / (p * Ap).sum();
    x += alpha * p;
    r -= alpha * Ap;
    rnorm = std::sqrt((r * r).sum());
    rep.iterations = it;
    rep.relative_residual = rnorm / bnorm;
    if (rnorm <= tol * bnorm) return rep;
    z = precond(r);
    const double rz_new = (r * z).sum();
    p = z + (rz_new / rz) * p;
    rz = rz_new;
  }
  return rep;
}

double derivative_k2(const SpectralOps& sp, int m) {
  double k2 = 0.0;
  for (int d = 0; d < sp.grid().dim(); ++d) k2 += sp.k_derivative(m, d) * sp.k_derivative(m, d);
  return k2;
}

}  // namespace

Array composite_density(const FluidState& state) {
  if (state.n.empty()) return Array::Zero(state.u.cols());
  Array rho = Array::Zero(state.n[0].size());
  for (std::size_t s = 0; s < state.n.size(); ++s) rho += static_cast<double>(s + 1) * state.n[s];
  return rho;
}

Array upwind_transport(const Array& q, const Array2D& u, const Grid& grid, double dt) {
  const int nc = grid.n_cells();
  Array out = q;
  for (int d = 0; d < grid.dim(); ++d) {
    const double r = dt / grid.dx(d);
    Array flux(nc);
    for (int c = 0; c < nc; ++c) {
      const int right = grid.neighbor(c, d, 1);
      const double uf = 0.5 * (u(d, c) + u(d, right));
      flux[c] = uf > 0.0 ? uf * q[c] : uf * q[right];
    }
    for (int c = 0; c < nc; ++c) out[c] -= r * (flux[c] - flux[grid.neighbor(c, d, -1)]);
  }
  return out;
}

HydroSolver::HydroSolver(const ModelParams& params, const Grid& grid, HydroSolverOptions options)
    : params_(params), grid_(grid), options_(options), spectral_(grid) {
  params_.validate();
  if (params_.dim != grid_.dim()) throw ConfigError("params.dim does not match grid dimension");
}

double HydroSolver::stable_dt(const FluidState& state) const {
  const double vmax = grid_.v_extent() - 0.5 * grid_.dv();
  double dt = std::numeric_limits<double>::infinity();
  for (int d = 0; d < grid_.dim(); ++d) {
    const double umax = state.u.row(d).abs().maxCoeff();
    dt = std::min(dt, options_.cfl * grid_.dx(d) / std::max(vmax, umax));
  }
  return dt;
}

double HydroSolver::courant_number(const FluidState& state, double dt) const {
  double c = 0.0;
  for (int d = 0; d < grid_.dim(); ++d) c += state.u.row(d).abs().maxCoeff() * dt / grid_.dx(d);
  return c;
}

Array2D HydroSolver::viscous_solve(const Array2D& m, const Array& coeff, double dt) const {
  const double cbar = coeff.mean();
  auto apply = [&](const Array& v) -> Array { return coeff * v - dt * spectral_.laplacian(v); };
  auto precond = [&](const Array& r) -> Array {
    ComplexArray h = spectral_.forward(r);
    for (int k = 0; k < grid_.n_cells(); ++k) h[k] /= cbar + dt * derivative_k2(spectral_, k);
    return spectral_.inverse(h);
  };
  Array2D u(m.rows(), m.cols());
  for (int d = 0; d < m.rows(); ++d) {
    const Array rhs = m.row(d).transpose();
    Array x = rhs / coeff;
    const PcgReport rep = pcg(apply, precond, rhs, x, options_.pcg_tolerance, options_.pcg_max_iterations);
    if (rep.relative_residual > options_.pcg_tolerance)
      throw ProjectionFailure(rep.relative_residual, rep.iterations);
    u.row(d) = x.transpose();
  }
  return u;
}

Array HydroSolver::project(Array2D& u, const Array& rho) const {
  const Array b = 1.0 / (1.0 + params_.kappa * rho);
  const double bbar = b.mean();
  // -div(b grad phi) = -div u, positive semidefinite with constants (and the
  // Nyquist modes, invisible to the spectral gradient) in the kernel
  auto apply = [&](const Array& phi) -> Array {
    Array2D g = spectral_.gradient(phi);
    for (int d = 0; d < grid_.dim(); ++d) g.row(d) *= b.transpose();
    return -spectral_.divergence(g);
  };
  auto precond = [&](const Array& r) -> Array {
    ComplexArray h = spectral_.forward(r);
    for (int k = 0; k < grid_.n_cells(); ++k) {
      const double k2 = derivative_k2(spectral_, k);
      h[k] = k2 > 0.0 ? h[k] / (bbar * k2) : Complex(0.0);
    }
    return spectral_.inverse(h);
  };
  const Array rhs = -spectral_.divergence(u);
  Array phi = Array::Zero(grid_.n_cells());
  last_projection_ = pcg(apply, precond, rhs, phi, options_.pcg_tolerance, options_.pcg_max_iterations);
  if (last_projection_.relative_residual > options_.pcg_tolerance)
    throw ProjectionFailure(last_projection_.relative_residual, last_projection_.iterations);
  Array2D g = spectral_.gradient(phi);
  for (int d = 0; d < grid_.dim(); ++d) u.row(d) -= b.transpose() * g.row(d);
  return phi;
}

FluidState HydroSolver::step(const FluidState& state, double dt) const {
  const double vmax = grid_.v_extent() - 0.5 * grid_.dv();
  double courant = 0.0;
  for (int d = 0; d < grid_.dim(); ++d)
    courant += std::max(vmax, state.u.row(d).abs().maxCoeff()) * dt / grid_.dx(d);
  if (courant > options_.courant_limit * (1.0 + 1e-12)) throw CflViolation(courant, options_.courant_limit);

  const Array coeff0 = 1.0 + params_.kappa * composite_density(state);
  FluidState next;
  next.t = state.t + dt;
  for (const Array& n : state.n) next.n.push_back(upwind_transport(n, state.u, grid_, dt));
  Array2D m(grid_.dim(), grid_.n_cells());
  for (int d = 0; d < grid_.dim(); ++d)
    m.row(d) = upwind_transport(coeff0 * state.u.row(d).transpose(), state.u, grid_, dt).transpose();

  const Array rho = composite_density(next);
  next.u = viscous_solve(m, 1.0 + params_.kappa * rho, dt);
  next.p = project(next.u, rho) / dt;
  return next;
}

FluidState HydroSolver::advance(FluidState state, double t_final) const {
  const double duration = t_final - state.t;
  if (duration <= 0.0) return state;
  const int n = std::max(1, static_cast<int>(std::ceil(duration / stable_dt(state) - 1e-9)));
  const double dt = duration / n;
  const double t0 = state.t;
  for (int k = 0; k < n; ++k) {
    state = step(state, dt);
    state.t = t0 + (k + 1) * dt;
    if (!state.u.allFinite()) throw NumericalFailure("non-finite fluid velocity in limit solver");
  }
  return state;
}

FluidState fluid_from_kinetic(const KineticState& state, const ModelParams& params, const Grid& grid) {
  const MomentSet mom = moments(state, params, grid);
  FluidState fs;
  fs.n = mom.n;
  fs.t = state.t;
  Array2D m = state.u;
  for (const Array2D& J : mom.J) m += params.kappa * J;
  const Array coeff = 1.0 + params.kappa * mom.rho_total;
  for (int d = 0; d < grid.dim(); ++d) m.row(d) /= coeff.transpose();
  fs.u = m;
  HydroSolver(params, grid).project(fs.u, mom.rho_total);
  fs.p = Array::Zero(grid.n_cells());
  return fs;
}

}  // namespace bifi
