#include "bifi/spectral.hpp"

#include <cmath>
#include <numbers>

namespace bifi {

SpectralOps::SpectralOps(const Grid& grid) : grid_(grid) {
  std::array<std::vector<double>, 2> ktrue;
  for (int d = 0; d < grid.dim(); ++d) {
    const int n = grid.n_x(d);
    kd_[d].resize(n);
    ktrue[d].resize(n);
    for (int j = 0; j < n; ++j) {
      const int m = j <= n / 2 ? j : j - n;
      const double k = 2.0 * std::numbers::pi * m / grid.x_extent(d);
      ktrue[d][j] = k;
      kd_[d][j] = (n % 2 == 0 && j == n / 2) ? 0.0 : k;
    }
  }
  const int nc = grid.n_cells();
  k2_.resize(nc);
  nyquist_.resize(nc);
  for (int m = 0; m < nc; ++m) {
    double k2 = 0.0;
    bool nyq = false;
    for (int d = 0; d < grid.dim(); ++d) {
      const int j = spectral_index(m, d);
      k2 += ktrue[d][j] * ktrue[d][j];
      nyq = nyq || (grid.n_x(d) % 2 == 0 && j == grid.n_x(d) / 2);
    }
    k2_[m] = k2;
    nyquist_[m] = nyq;
  }
}

void SpectralOps::transform(ComplexArray& data, bool inverse) const {
  const int n0 = grid_.n_x(0);
  std::vector<Complex> in(n0), out(n0);
  const int rows = grid_.dim() == 1 ? 1 : grid_.n_x(1);
  for (int r = 0; r < rows; ++r) {
    for (int i = 0; i < n0; ++i) in[i] = data[r * n0 + i];
    if (inverse) fft_.inv(out, in); else fft_.fwd(out, in);
    for (int i = 0; i < n0; ++i) data[r * n0 + i] = out[i];
  }
  if (grid_.dim() == 2) {
    const int n1 = grid_.n_x(1);
    std::vector<Complex> col(n1), res(n1);
    for (int i = 0; i < n0; ++i) {
      for (int j = 0; j < n1; ++j) col[j] = data[j * n0 + i];
      if (inverse) fft_.inv(res, col); else fft_.fwd(res, col);
      for (int j = 0; j < n1; ++j) data[j * n0 + i] = res[j];
    }
  }
}

ComplexArray SpectralOps::forward(const Array& field) const {
  ComplexArray data = field.cast<Complex>();
  transform(data, false);
  return data;
}

Array SpectralOps::inverse(const ComplexArray& spectrum) const {
  ComplexArray data = spectrum;
  transform(data, true);
  return data.real();
}

Array SpectralOps::divergence(const Array2D& u) const {
  const int nc = grid_.n_cells();
  ComplexArray acc = ComplexArray::Zero(nc);
  const Complex I(0.0, 1.0);
  for (int d = 0; d < grid_.dim(); ++d) {
    const ComplexArray uh = forward(u.row(d).transpose());
    for (int m = 0; m < nc; ++m) acc[m] += I * k_derivative(m, d) * uh[m];
  }
  return inverse(acc);
}

Array2D SpectralOps::gradient(const Array& phi) const {
  const int nc = grid_.n_cells();
  const ComplexArray ph = forward(phi);
  const Complex I(0.0, 1.0);
  Array2D g(grid_.dim(), nc);
  for (int d = 0; d < grid_.dim(); ++d) {
    ComplexArray gd(nc);
    for (int m = 0; m < nc; ++m) gd[m] = I * k_derivative(m, d) * ph[m];
    g.row(d) = inverse(gd).transpose();
  }
  return g;
}

Array SpectralOps::laplacian(const Array& phi) const {
  ComplexArray ph = forward(phi);
  for (int m = 0; m < grid_.n_cells(); ++m) {
    double k2 = 0.0;
    for (int d = 0; d < grid_.dim(); ++d) k2 += k_derivative(m, d) * k_derivative(m, d);
    ph[m] *= -k2;
  }
  return inverse(ph);
}

Array SpectralOps::project(Array2D& u) const {
  const int nc = grid_.n_cells();
  const int dim = grid_.dim();
  const Complex I(0.0, 1.0);
  std::array<ComplexArray, 2> uh;
  for (int d = 0; d < dim; ++d) uh[d] = forward(u.row(d).transpose());
  ComplexArray phi = ComplexArray::Zero(nc);
  for (int m = 1; m < nc; ++m) {
    if (nyquist_[m]) {
      for (int d = 0; d < dim; ++d) uh[d][m] = 0.0;
      continue;
    }
    double k2 = 0.0;
    Complex kdotu = 0.0;
    for (int d = 0; d < dim; ++d) {
      const double k = k_derivative(m, d);
      k2 += k * k;
      kdotu += k * uh[d][m];
    }
    // grad(phi)^ = i k phi^, and k . (u - i k phi^) = 0
    phi[m] = -I * kdotu / k2;
    for (int d = 0; d < dim; ++d) uh[d][m] -= k_derivative(m, d) * kdotu / k2;
  }
  for (int d = 0; d < dim; ++d) u.row(d) = inverse(uh[d]).transpose();
  return inverse(phi);
}

void SpectralOps::apply_symbol(Array2D& u, const std::function<double(double)>& symbol) const {
  for (int d = 0; d < u.rows(); ++d) {
    ComplexArray uh = forward(u.row(d).transpose());
    for (int m = 1; m < grid_.n_cells(); ++m) uh[m] *= symbol(k2_[m]);
    u.row(d) = inverse(uh).transpose();
  }
}

Array SpectralOps::solve_poisson(const Array& rhs) const {
  ComplexArray h = forward(rhs);
  h[0] = 0.0;
  for (int m = 1; m < grid_.n_cells(); ++m) {
    double k2 = 0.0;
    for (int d = 0; d < grid_.dim(); ++d) k2 += k_derivative(m, d) * k_derivative(m, d);
    h[m] = k2 > 0.0 ? -h[m] / k2 : Complex(0.0);
  }
  return inverse(h);
}

}  // namespace bifi
