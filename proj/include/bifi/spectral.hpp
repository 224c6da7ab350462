#pragma once

#include "bifi/grid.hpp"

#include <unsupported/Eigen/FFT>

#include <complex>
#include <functional>
#include <vector>

namespace bifi {

using Complex = std::complex<Scalar>;
using ComplexArray = Eigen::Array<Complex, Eigen::Dynamic, 1>;

/// Fourier-space operators on the periodic spatial grid.
///
/// Vector fields are stored as (dim x n_cells) arrays. Derivatives use the
/// spectral symbol i*k with the Nyquist wavenumber mapped to zero, so that
/// divergence(gradient(.)) is a symmetric negative semidefinite operator.
/// Each instance owns its FFT workspace and must not be shared between threads.
class SpectralOps {
 public:
  explicit SpectralOps(const Grid& grid);

  const Grid& grid() const { return grid_; }

  ComplexArray forward(const Array& field) const;
  Array inverse(const ComplexArray& spectrum) const;

  /// Wavenumber along dimension d for spectral index `m` (0 at Nyquist).
  double k_derivative(int m, int d) const { return kd_[d][spectral_index(m, d)]; }
  /// |k|^2 with true Nyquist magnitude, for diffusion symbols.
  double k_squared(int m) const { return k2_[m]; }
  bool is_nyquist(int m) const { return nyquist_[m]; }

  Array divergence(const Array2D& u) const;
  Array2D gradient(const Array& phi) const;
  Array laplacian(const Array& phi) const;

  /// Leray projection: removes the gradient part (and Nyquist content) of u,
  /// keeping the mean. Returns the potential phi with u_in = u_out + grad(phi).
  Array project(Array2D& u) const;

  /// Multiplies every non-mean Fourier mode of each component of u by
  /// symbol(|k|^2). The mean mode is left untouched.
  void apply_symbol(Array2D& u, const std::function<double(double)>& symbol) const;

  /// Solves laplacian(phi) = rhs for mean-free phi (rhs mean is ignored).
  Array solve_poisson(const Array& rhs) const;

 private:
  int spectral_index(int m, int d) const { return d == 0 ? m % grid_.n_x(0) : m / grid_.n_x(0); }
  void transform(ComplexArray& data, bool inverse) const;

  Grid grid_;
  mutable Eigen::FFT<Scalar> fft_;
  std::array<std::vector<double>, 2> kd_;
  std::vector<double> k2_;
  std::vector<bool> nyquist_;
};

}  // namespace bifi
