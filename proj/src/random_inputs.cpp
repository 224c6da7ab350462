#include "bifi/random_inputs.hpp"

#include "bifi/spectral.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <numbers>
#include <random>

namespace bifi {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

// Velocity field shared by the particle phases: divergence free in 2D.
std::array<double, 2> base_velocity(const Grid& grid, int c) {
  const double x = grid.x_coord(c, 0) / grid.x_extent(0);
  if (grid.dim() == 1) return {std::sin(kTwoPi * x), 0.0};
  const double y = grid.x_coord(c, 1) / grid.x_extent(1);
  const double sx = std::sin(std::numbers::pi * x), sy = std::sin(std::numbers::pi * y);
  return {sx * sx * std::sin(kTwoPi * y), -sy * sy * std::sin(kTwoPi * x)};
}

double volcano_density(const Grid& grid, int c, double base) {
  double r2 = 0.0;
  for (int d = 0; d < grid.dim(); ++d) {
    const double t = grid.x_coord(c, d) / grid.x_extent(d) - 0.5;
    r2 += t * t;
  }
  return (base + 100.0 * r2) * std::exp(-40.0 * r2);
}

}  // namespace

Matrix assemble_covariance(const Grid& grid, double ell, bool periodic) {
  if (!(ell > 0.0)) throw ConfigError("correlation length must be positive");
  const int n = grid.n_cells();
  Matrix C(n, n);
  for (int a = 0; a < n; ++a) {
    C(a, a) = 1.0;
    for (int b = 0; b < a; ++b) {
      double r2 = 0.0;
      for (int d = 0; d < grid.dim(); ++d) {
        double t = std::abs(grid.x_coord(a, d) - grid.x_coord(b, d));
        if (periodic) t = std::min(t, grid.x_extent(d) - t);
        r2 += t * t;
      }
      C(a, b) = C(b, a) = std::exp(-r2 / (ell * ell));
    }
  }
  return C;
}

KLField kl_decompose(const Matrix& cov, const Grid& grid, double fraction, double ell, double sigma) {
  if (!(fraction > 0.0 && fraction < 1.0)) throw ConfigError("KL spectrum fraction must lie in (0, 1)");
  const int n = grid.n_cells();
  if (cov.rows() != n || cov.cols() != n) throw LayoutMismatch("covariance does not match grid");
  const Vector sw = grid.spatial_weights().sqrt().matrix();
  const Matrix A = sw.asDiagonal() * cov * sw.asDiagonal();
  Eigen::SelfAdjointEigenSolver<Matrix> es(A);
  if (es.info() != Eigen::Success) throw NumericalFailure("covariance eigensolver failed");

  KLField kl;
  kl.ell = ell;
  kl.sigma = sigma;
  kl.grid = grid;
  kl.eigvals = es.eigenvalues().reverse();
  kl.eigvecs = sw.cwiseInverse().asDiagonal() * es.eigenvectors().rowwise().reverse();
  const double tol = 1e-12 * std::max(kl.eigvals[0], 0.0);
  for (int k = 0; k < n; ++k) {
    if (kl.eigvals[k] < -tol) throw NumericalFailure("covariance has a significantly negative eigenvalue");
    kl.eigvals[k] = std::max(kl.eigvals[k], 0.0);
  }
  const double total = kl.eigvals.sum();
  double acc = 0.0;
  for (int k = 0; k < n; ++k) {
    acc += kl.eigvals[k];
    if (acc >= fraction * total) {
      kl.n_modes = k + 1;
      break;
    }
  }
  if (kl.n_modes == 0) kl.n_modes = n;
  kl.spectrum_fraction = kl.eigvals.head(kl.n_modes).sum() / total;
  return kl;
}

KLField KLField::on_grid(const Grid& coarse) const {
  if (coarse.dim() != grid.dim()) throw LayoutMismatch("KL field and grid differ in dimension");
  std::array<int, 2> r{1, 1};
  for (int d = 0; d < grid.dim(); ++d) {
    if (coarse.x_extent(d) != grid.x_extent(d) || grid.n_x(d) % coarse.n_x(d) != 0)
      throw LayoutMismatch("grid is not nested in the KL grid");
    r[d] = grid.n_x(d) / coarse.n_x(d);
  }
  KLField out = *this;
  out.grid = coarse;
  out.eigvecs.resize(coarse.n_cells(), eigvecs.cols());
  for (int c = 0; c < coarse.n_cells(); ++c) {
    const int i = c % coarse.n_x(0), j = c / coarse.n_x(0);
    out.eigvecs.row(c) = eigvecs.row(j * r[1] * grid.n_x(0) + i * r[0]);
  }
  return out;
}

Array sample_field(const KLField& kl, const Vector& z_block, int* clamped) {
  if (z_block.size() != kl.n_modes)
    throw LayoutMismatch("KL block has " + std::to_string(z_block.size()) + " entries, expected " +
                         std::to_string(kl.n_modes));
  const Vector coef = kl.eigvals.head(kl.n_modes).cwiseSqrt().cwiseProduct(z_block);
  Array f = 1.0 + kl.sigma * (kl.eigvecs.leftCols(kl.n_modes) * coef).array();
  for (Eigen::Index k = 0; k < f.size(); ++k) {
    if (f[k] < 1e-8) {
      f[k] = 1e-8;
      if (clamped) ++*clamped;
    }
  }
  return f;
}

std::string to_string(Distribution d) { return d == Distribution::Uniform ? "uniform" : "normal"; }

Distribution distribution_from_string(const std::string& s) {
  if (s == "normal" || s == "gaussian") return Distribution::StandardNormal;
  if (s == "uniform") return Distribution::Uniform;
  throw ConfigError("unknown distribution '" + s + "'");
}

ParameterSample draw_sample(int index, int dim, Distribution dist, std::uint64_t seed, int stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(index)};
  std::mt19937_64 gen(seq);
  ParameterSample s;
  s.index = index;
  s.stream = stream;
  s.z.resize(dim);
  if (dist == Distribution::Uniform) {
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int k = 0; k < dim; ++k) s.z[k] = u(gen);
  } else {
    std::normal_distribution<double> g(0.0, 1.0);
    for (int k = 0; k < dim; ++k) s.z[k] = g(gen);
  }
  return s;
}

std::vector<ParameterSample> draw_samples(int count, int dim, Distribution dist, std::uint64_t seed, int stream) {
  std::vector<ParameterSample> out;
  out.reserve(count);
  for (int k = 0; k < count; ++k) out.push_back(draw_sample(k, dim, dist, seed, stream));
  return out;
}

std::string to_string(Profile p) {
  switch (p) {
    case Profile::Equilibrium: return "equilibrium";
    case Profile::Volcano: return "volcano";
    case Profile::NearEquilibrium: return "near_equilibrium";
  }
  return "unknown";
}

Profile profile_from_string(const std::string& s) {
  if (s == "equilibrium") return Profile::Equilibrium;
  if (s == "volcano") return Profile::Volcano;
  if (s == "near_equilibrium") return Profile::NearEquilibrium;
  throw ConfigError("unknown initial profile '" + s + "'");
}

int InitialDataSpec::z_dim(const ModelParams& params, const KLField& kl) const {
  if (profile == Profile::Equilibrium) return 0;
  if (!random_density && !random_velocity) return 0;
  return (random_density ? params.n_species : 1) * kl.n_modes;
}

KineticState build_initial_state(const InitialDataSpec& spec, const Vector& z, const ModelParams& params,
                                 const Grid& grid, const KLField& kl, InitialDataReport* report) {
  const int nc = grid.n_cells();
  const int ns = params.n_species;
  const int dim = grid.dim();
  const double nbar = 1.0 / grid.domain_volume();
  if (z.size() != spec.z_dim(params, kl))
    throw LayoutMismatch("parameter vector has " + std::to_string(z.size()) + " entries, expected " +
                         std::to_string(spec.z_dim(params, kl)));
  if (spec.z_dim(params, kl) > 0 && kl.grid.n_cells() != nc) throw LayoutMismatch("KL field lives on another grid");

  int clamped = 0;
  auto factor = [&](int block) -> Array {
    return sample_field(kl, z.segment(block * kl.n_modes, kl.n_modes), &clamped);
  };

  std::vector<Array> n(ns, Array::Constant(nc, nbar));
  Array2D raw = Array2D::Zero(dim, nc);
  if (spec.profile != Profile::Equilibrium) {
    const double amp = spec.profile == Profile::Volcano ? spec.velocity_amplitude
                                                         : params.delta * spec.velocity_amplitude;
    for (int c = 0; c < nc; ++c) {
      const auto v = base_velocity(grid, c);
      for (int d = 0; d < dim; ++d) raw(d, c) = amp * v[d];
    }
    if (spec.random_velocity) {
      const Array f = factor(0);
      for (int d = 0; d < dim; ++d) raw.row(d) *= f.transpose();
    }
    for (int s = 0; s < ns; ++s) {
      const Array kf = spec.random_density ? factor(s) : Array::Ones(nc);
      if (spec.profile == Profile::Volcano) {
        for (int c = 0; c < nc; ++c) n[s][c] = volcano_density(grid, c, 0.4 + 0.1 * s) * kf[c];
      } else {
        Array h(nc);
        for (int c = 0; c < nc; ++c) {
          h[c] = std::cos(kTwoPi * grid.x_coord(c, 0) / grid.x_extent(0));
          if (dim == 2) h[c] *= std::cos(kTwoPi * grid.x_coord(c, 1) / grid.x_extent(1));
        }
        h *= kf;
        n[s] = nbar * (1.0 + params.delta * spec.density_amplitude * (h - h.mean()));
      }
    }
  }

  SpectralOps spectral(grid);
  Array2D u = raw;
  spectral.project(u);
  Array2D up = spec.particles_follow_fluid ? u : raw;
  for (int d = 0; d < dim; ++d) up.row(d) += spec.particle_drift[d];

  if (spec.zero_total_momentum) {
    double mass = grid.domain_volume();
    for (int s = 0; s < ns; ++s) mass += params.kappa * (s + 1) * n[s].sum() * grid.cell_volume();
    for (int d = 0; d < dim; ++d) {
      double m = u.row(d).sum() * grid.cell_volume();
      for (int s = 0; s < ns; ++s) m += params.kappa * (s + 1) * (n[s] * up.row(d).transpose()).sum() * grid.cell_volume();
      u.row(d) -= m / mass;
      up.row(d) -= m / mass;
    }
  }

  KineticState st;
  st.t = 0.0;
  for (int s = 0; s < ns; ++s) {
    Array2D F(grid.n_vel(), nc);
    for (int c = 0; c < nc; ++c) {
      const std::array<double, 2> w{up(0, c), dim == 2 ? up(1, c) : 0.0};
      F.col(c) = local_maxwellian(s + 1, n[s][c], w, params, grid);
    }
    st.F.push_back(std::move(F));
  }
  st.u = u;
  st.p = Array::Zero(nc);

  if (spec.zero_total_momentum) {
    // quadrature of the sampled Maxwellians is not exact; absorb the remainder in the fluid
    const MomentSet mom = moments(st, params, grid);
    for (int d = 0; d < dim; ++d) {
      double m = st.u.row(d).sum() * grid.cell_volume();
      for (int s = 0; s < ns; ++s) m += params.kappa * mom.J[s].row(d).sum() * grid.cell_volume();
      st.u.row(d) -= m / grid.domain_volume();
    }
  }
  if (report) report->clamped += clamped;
  return st;
}

}  // namespace bifi
