#pragma once

#include "bifi/kinetic.hpp"

#include <cstdint>
#include <vector>

namespace bifi {

/// Gaussian covariance C_ab = exp(-|x_a - x_b|^2 / ell^2) between cell nodes.
/// With `periodic` the distance per dimension is min(|dx|, L - |dx|).
Matrix assemble_covariance(const Grid& grid, double ell, bool periodic = true);

/// Discrete Karhunen-Loeve expansion: eigenpairs of the covariance operator in
/// the cell-weighted L2 inner product, all modes kept, the first n_modes used.
struct KLField {
  double ell = 0.08;
  double sigma = 0.1;
  Vector eigvals;   // non-increasing, clamped at 0
  Matrix eigvecs;   // n_cells x n_all, weighted-orthonormal columns
  int n_modes = 0;
  double spectrum_fraction = 0.0;
  Grid grid;

  /// Same expansion seen on a grid nested inside this one (nodes are shared,
  /// so the eigenfunctions are subsampled).
  KLField on_grid(const Grid& coarse) const;
};

/// Retains the smallest number of modes whose eigenvalue sum reaches
/// `fraction` of the trace.
KLField kl_decompose(const Matrix& cov, const Grid& grid, double fraction, double ell, double sigma);

/// 1 + sigma sum_i sqrt(lambda_i) g_i z_i over the retained modes, floored at
/// 1e-8; the number of floored cells is added to `clamped` if given.
Array sample_field(const KLField& kl, const Vector& z_block, int* clamped = nullptr);

enum class Distribution { StandardNormal, Uniform };

std::string to_string(Distribution d);
Distribution distribution_from_string(const std::string& s);

struct ParameterSample {
  Vector z;
  int index = 0;
  int stream = 0;
};

/// Stream 0 is the training set, stream 1 the held-out evaluation set. Each
/// sample has its own generator seeded by (seed, stream, index), so draws do not
/// depend on order or on how many samples are requested.
ParameterSample draw_sample(int index, int dim, Distribution dist, std::uint64_t seed, int stream);
std::vector<ParameterSample> draw_samples(int count, int dim, Distribution dist, std::uint64_t seed,
                                          int stream = 0);

enum class Profile { Equilibrium, Volcano, NearEquilibrium };

std::string to_string(Profile p);
Profile profile_from_string(const std::string& s);

/// Macroscopic initial data and how the random vector enters it.
///
/// Volcano: n_i = (b_i + 100 r^2) exp(-40 r^2) * KL factor with b = 0.4, 0.5,
/// ..., r the distance to the domain centre; particle velocities share one
/// divergence-free-in-2D field (A sin(2 pi x) in 1D), fluid u = P(u_p).
///
/// NearEquilibrium: n_i = nbar (1 + delta a_n (h KL_i - mean)), h = cos(2 pi x)
/// (times cos(2 pi y) in 2D); particle velocity delta a_u P(V KL_1) with the
/// volcano velocity field V.
///
/// z holds one block of n_modes variables per species; block s modulates the
/// density of species s and block 0 also the velocity field when
/// `random_velocity` is set.
struct InitialDataSpec {
  Profile profile = Profile::Volcano;
  double velocity_amplitude = 1.0;
  double density_amplitude = 1.0;
  bool random_density = true;
  bool random_velocity = false;
  bool particles_follow_fluid = false;  // u_p = u (projected) instead of the raw field
  bool zero_total_momentum = false;     // shift velocities so u + kappa sum J integrates to 0
  std::array<double, 2> particle_drift{0.0, 0.0};  // constant added to every particle velocity

  int z_dim(const ModelParams& params, const KLField& kl) const;
};

struct InitialDataReport {
  int clamped = 0;
};

/// F_i = n_i M_i(v - u_p,i) (local Maxwellian), u projected divergence free.
/// `kl` must live on `grid` (see KLField::on_grid).
KineticState build_initial_state(const InitialDataSpec& spec, const Vector& z, const ModelParams& params,
                                 const Grid& grid, const KLField& kl, InitialDataReport* report = nullptr);

}  // namespace bifi
