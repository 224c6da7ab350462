#include "bifi/kinetic.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace bifi {

namespace {

double species_size(int s) { return static_cast<double>(s + 1); }

// Thomas algorithm for the relaxation matrix, factorized once and applied to
// many right-hand sides (every velocity line of a cell shares the matrix).
struct Tridiagonal {
  Array lower, diag, upper;  // lower[k] couples k to k-1, upper[k] couples k to k+1
  Array c_prime, denom;

  void factorize() {
    const Eigen::Index n = diag.size();
    c_prime.resize(n);
    denom.resize(n);
    denom[0] = diag[0];
    c_prime[0] = upper[0] / denom[0];
    for (Eigen::Index k = 1; k < n; ++k) {
      denom[k] = diag[k] - lower[k] * c_prime[k - 1];
      c_prime[k] = upper[k] / denom[k];
    }
  }

  // Solves in place on a strided line of `data`.
  void solve(double* data, int stride) const {
    const Eigen::Index n = diag.size();
    data[0] /= denom[0];
    for (Eigen::Index k = 1; k < n; ++k)
      data[k * stride] = (data[k * stride] - lower[k] * data[(k - 1) * stride]) / denom[k];
    for (Eigen::Index k = n - 2; k >= 0; --k)
      data[k * stride] -= c_prime[k] * data[(k + 1) * stride];
  }
};

}  // namespace

Array local_maxwellian(int species_size_i, double density, const std::array<double, 2>& drift,
                       const ModelParams& params, const Grid& grid) {
  const double i = species_size_i;
  const double variance = params.theta_bar / i;
  const double norm = std::pow(2.0 * std::numbers::pi * variance, -0.5 * grid.dim());
  Array f(grid.n_vel());
  for (int k = 0; k < grid.n_vel(); ++k) {
    double r2 = 0.0;
    for (int d = 0; d < grid.dim(); ++d) {
      const double c = grid.v_coord(k, d) - drift[d];
      r2 += c * c;
    }
    f[k] = density * norm * std::exp(-0.5 * r2 / variance);
  }
  return f;
}

Array maxwellian(int species_size_i, const ModelParams& params, const Grid& grid) {
  return local_maxwellian(species_size_i, 1.0 / grid.domain_volume(), {0.0, 0.0}, params, grid);
}

MomentSet moments(const KineticState& state, const ModelParams& params, const Grid& grid) {
  const int dim = grid.dim();
  const double dV = grid.velocity_volume();
  MomentSet m;
  m.rho_total = Array::Zero(grid.n_cells());
  std::array<Array, 2> v;
  for (int d = 0; d < dim; ++d) v[d] = grid.velocity_component(d);
  for (int s = 0; s < params.n_species; ++s) {
    const double i = species_size(s);
    const Array2D& F = state.F[s];
    Array n = dV * F.colwise().sum().transpose();
    Array2D J(dim, grid.n_cells());
    Array2D P(dim * dim, grid.n_cells());
    for (int a = 0; a < dim; ++a) {
      J.row(a) = i * dV * (v[a].matrix().transpose() * F.matrix()).array();
      for (int b = 0; b < dim; ++b)
        P.row(a * dim + b) =
            i * dV * ((v[a] * v[b]).matrix().transpose() * F.matrix()).array();
    }
    m.rho_total += i * n;
    m.rho.push_back(i * n);
    m.n.push_back(std::move(n));
    m.J.push_back(std::move(J));
    m.P.push_back(std::move(P));
  }
  return m;
}

KineticState equilibrium_state(const ModelParams& params, const Grid& grid) {
  KineticState st;
  for (int s = 0; s < params.n_species; ++s)
    st.F.push_back(maxwellian(s + 1, params, grid).replicate(1, grid.n_cells()));
  st.u = Array2D::Zero(grid.dim(), grid.n_cells());
  st.p = Array::Zero(grid.n_cells());
  return st;
}

KineticSolver::KineticSolver(const ModelParams& params, const Grid& grid,
                             KineticSolverOptions options)
    : params_(params), grid_(grid), options_(options), spectral_(grid) {
  params_.validate();
  if (params_.dim != grid_.dim()) throw ConfigError("params.dim does not match grid dimension");
  for (int d = 0; d < grid_.dim(); ++d) velocity_[d] = grid_.velocity_component(d);
}

double KineticSolver::stable_dt(const KineticState& state) const {
  const double vmax = grid_.v_extent() - 0.5 * grid_.dv();
  double dt = std::numeric_limits<double>::infinity();
  for (int d = 0; d < grid_.dim(); ++d) {
    const double umax = state.u.row(d).abs().maxCoeff();
    dt = std::min(dt, options_.cfl * grid_.dx(d) / std::max(vmax, umax));
  }
  return dt;
}

double KineticSolver::courant_number(const KineticState& state, double dt) const {
  const double vmax = grid_.v_extent() - 0.5 * grid_.dv();
  double c = 0.0;
  for (int d = 0; d < grid_.dim(); ++d) {
    const double umax = state.u.row(d).abs().maxCoeff();
    c += std::max(vmax, umax) * dt / grid_.dx(d);
  }
  return c;
}

int KineticSolver::steps_for(const KineticState& state, double duration) const {
  const double dt = stable_dt(state);
  return std::max(1, static_cast<int>(std::ceil(duration / dt - 1e-9)));
}

KineticState KineticSolver::step(const KineticState& state, double dt) const {
  const double courant = courant_number(state, dt);
  if (courant > options_.courant_limit * (1.0 + 1e-12))
    throw CflViolation(courant, options_.courant_limit);
  KineticState next = state;
  transport(next, dt);
  relax(next, dt);
  fluid_update(next, dt);
  next.t = state.t + dt;
  return next;
}

KineticState KineticSolver::advance(KineticState state, double t_final,
                                    const std::function<void(const KineticState&)>& observer) const {
  const double duration = t_final - state.t;
  if (duration <= 0.0) return state;
  const int n = steps_for(state, duration);
  const double dt = duration / n;
  const double t0 = state.t;
  for (int k = 0; k < n; ++k) {
    state = step(state, dt);
    state.t = t0 + (k + 1) * dt;
    for (const auto& F : state.F)
      if (!F.allFinite()) throw NumericalFailure("non-finite distribution at t = " + std::to_string(state.t));
    if (!state.u.allFinite()) throw NumericalFailure("non-finite fluid velocity at t = " + std::to_string(state.t));
    if (observer) observer(state);
  }
  return state;
}

void KineticSolver::transport(KineticState& state, double dt) const {
  const int nc = grid_.n_cells();
  for (auto& F : state.F) {
    Array2D next = F;
    for (int d = 0; d < grid_.dim(); ++d) {
      const Array vp = velocity_[d].max(0.0);
      const Array vm = velocity_[d].min(0.0);
      const double r = dt / grid_.dx(d);
      // flux through the face between c and its right neighbour
      Array2D flux(F.rows(), nc);
      for (int c = 0; c < nc; ++c)
        flux.col(c) = vp * F.col(c) + vm * F.col(grid_.neighbor(c, d, 1));
      for (int c = 0; c < nc; ++c)
        next.col(c) -= r * (flux.col(c) - flux.col(grid_.neighbor(c, d, -1)));
    }
    F = std::move(next);
  }
  if (grid_.dim() == 2) {
    // div(u (x) u); the mean of a spectral divergence is exactly zero
    Array2D conv(2, nc);
    for (int a = 0; a < 2; ++a) {
      Array2D flux(2, nc);
      for (int b = 0; b < 2; ++b) flux.row(b) = state.u.row(b) * state.u.row(a);
      conv.row(a) = spectral_.divergence(flux).transpose();
    }
    state.u -= dt * conv;
  }
}

void KineticSolver::relax(KineticState& state, double dt) const {
  const int ns = params_.n_species;
  std::vector<Array> cell_f(ns);
  for (int c = 0; c < grid_.n_cells(); ++c) {
    for (int s = 0; s < ns; ++s) cell_f[s] = state.F[s].col(c);
    for (int d = 0; d < grid_.dim(); ++d) {
      double u_d = state.u(d, c);
      relax_cell_direction(cell_f, u_d, d, dt);
      state.u(d, c) = u_d;
    }
    for (int s = 0; s < ns; ++s) state.F[s].col(c) = cell_f[s];
  }
}

void KineticSolver::relax_cell_direction(std::vector<Array>& cell_f, double& u_d, int dir,
                                         double dt) const {
  const int ns = params_.n_species;
  const int nv = grid_.n_v();
  const int n_lines = grid_.dim() == 1 ? 1 : nv;
  const int stride = dir == 0 ? 1 : nv;
  const int line_step = dir == 0 ? nv : 1;
  const double dv = grid_.dv();
  const double dV = grid_.velocity_volume();
  const double theta = params_.theta_bar;
  const double kappa = params_.kappa;
  const Array& vel = velocity_[dir];

  const std::vector<Array> f_star = cell_f;
  const double u_star = u_d;

  // Particle mass and momentum (sum_i i * ...) before relaxation.
  double rho = 0.0, mom = 0.0, mom_abs = 0.0;
  for (int s = 0; s < ns; ++s) {
    const double i = species_size(s);
    rho += i * dV * f_star[s].sum();
    mom += i * dV * (vel * f_star[s]).sum();
    mom_abs += i * dV * (vel.abs() * f_star[s]).sum();
  }

  std::vector<Array> trial(ns);
  Tridiagonal tri;
  tri.lower.resize(nv);
  tri.diag.resize(nv);
  tri.upper.resize(nv);

  auto solve_for = [&](double u) {
    double dmom = 0.0;
    for (int s = 0; s < ns; ++s) {
      const double i = species_size(s);
      const double tau = dt / (params_.epsilon * std::pow(i, 2.0 / 3.0));
      const double c = tau * theta / (i * dv * dv);
      tri.diag.setOnes();
      tri.lower.setZero();
      tri.upper.setZero();
      for (int k = 0; k + 1 < nv; ++k) {
        const double v_half = -grid_.v_extent() + (k + 1) * dv;
        const double b = i * dv * (v_half - u) / (2.0 * theta);
        const double ep = std::exp(b), em = std::exp(-b);
        // face k+1/2 couples rows k and k+1
        tri.diag[k] += c * em;
        tri.upper[k] = -c * ep;
        tri.diag[k + 1] += c * ep;
        tri.lower[k + 1] = -c * em;
      }
      tri.factorize();
      trial[s] = f_star[s];
      for (int l = 0; l < n_lines; ++l) tri.solve(trial[s].data() + l * line_step, stride);
      dmom += i * dV * (vel * (trial[s] - f_star[s])).sum();
    }
    return u - u_star + kappa * dmom;
  };

  const double scale = std::abs(u_star) + kappa * mom_abs + 1e-300;
  const double tol = 1e-14 * scale;

  // g is increasing in u. The roots of the two limits (no relaxation, full
  // relaxation to the mixture velocity) bracket the solution.
  double a = u_star;
  double ga = solve_for(a);
  std::vector<Array> best = trial;
  double best_u = a, best_g = ga;
  if (std::abs(ga) > tol) {
    double b = (u_star + kappa * mom) / (1.0 + kappa * rho);
    double gb = solve_for(b);
    if (std::abs(gb) < std::abs(best_g)) { best = trial; best_u = b; best_g = gb; }
    // widen until bracketed
    if (a > b) { std::swap(a, b); std::swap(ga, gb); }  // a < b
    double width = std::max(b - a, 1e-12 * (1.0 + std::abs(a)));
    int guard = 0;
    while (ga * gb > 0.0 && guard++ < 60) {
      width *= 2.0;
      if (ga > 0.0) { b = a; gb = ga; a -= width; ga = solve_for(a); }
      else { a = b; ga = gb; b += width; gb = solve_for(b); }
    }
    if (ga * gb > 0.0) throw NumericalFailure("drag relaxation root not bracketed");
    if (ga > 0.0) { std::swap(a, b); std::swap(ga, gb); }  // ga < 0 < gb
    double x0 = a, g0 = ga, x1 = b, g1 = gb;
    for (int it = 0; it < options_.max_root_iterations && std::abs(best_g) > tol; ++it) {
      double x = x1 - g1 * (x1 - x0) / (g1 - g0);
      const double lo = std::min(a, b), hi = std::max(a, b);
      if (!(x > lo && x < hi)) x = 0.5 * (a + b);
      const double gx = solve_for(x);
      if (std::abs(gx) < std::abs(best_g)) { best = trial; best_u = x; best_g = gx; }
      if (gx < 0.0) { a = x; ga = gx; } else { b = x; gb = gx; }
      x0 = x1; g0 = g1; x1 = x; g1 = gx;
      if (std::abs(b - a) <= 4e-16 * (std::abs(a) + std::abs(b)) + 1e-300) break;
    }
  }
  (void)best_u;

  double dmom = 0.0;
  for (int s = 0; s < ns; ++s) {
    const double i = species_size(s);
    const double m_new = best[s].sum();
    if (m_new > 0.0) best[s] *= f_star[s].sum() / m_new;
    dmom += i * dV * (vel * (best[s] - f_star[s])).sum();
    cell_f[s] = std::move(best[s]);
  }
  u_d = u_star - kappa * dmom;
}

void KineticSolver::fluid_update(KineticState& state, double dt) const {
  spectral_.apply_symbol(state.u, [dt](double k2) { return 1.0 / (1.0 + dt * k2); });
  state.p = spectral_.project(state.u) / dt;
}

}  // namespace bifi
