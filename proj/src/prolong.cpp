#include "bifi/prolong.hpp"

namespace bifi {

namespace {

std::array<int, 2> refinement(const Grid& source, const Grid& target) {
  std::array<int, 2> r{1, 1};
  if (source.dim() != target.dim()) throw LayoutMismatch("prolongation between different dimensions");
  for (int d = 0; d < source.dim(); ++d) {
    if (source.x_extent(d) != target.x_extent(d)) throw LayoutMismatch("prolongation across different domains");
    if (target.n_x(d) % source.n_x(d) != 0) throw LayoutMismatch("grids are not nested");
    r[d] = target.n_x(d) / source.n_x(d);
  }
  return r;
}

}  // namespace

Array prolong_field(const Array& field, const Grid& source, const Grid& target) {
  const auto r = refinement(source, target);
  if (field.size() != source.n_cells()) throw LayoutMismatch("field size does not match source grid");
  const int n0 = source.n_x(0);
  const int n1 = source.dim() == 2 ? source.n_x(1) : 1;
  Array out(target.n_cells());
  for (int c = 0; c < target.n_cells(); ++c) {
    const int m0 = c % target.n_x(0);
    const int m1 = c / target.n_x(0);
    const int j0 = m0 / r[0], j1 = m1 / r[1];
    const double a0 = static_cast<double>(m0 % r[0]) / r[0];
    const double a1 = static_cast<double>(m1 % r[1]) / r[1];
    const int k0 = (j0 + 1) % n0, k1 = (j1 + 1) % n1;
    auto at = [&](int i, int j) { return field[j * n0 + i]; };
    out[c] = (1 - a1) * ((1 - a0) * at(j0, j1) + a0 * at(k0, j1)) +
             a1 * ((1 - a0) * at(j0, k1) + a0 * at(k0, k1));
  }
  return out;
}

Snapshot prolong(const Snapshot& snapshot, const Grid& target) {
  SnapshotLayout layout{snapshot.layout.components, target};
  Snapshot out = Snapshot::zeros(layout);
  out.z = snapshot.z;
  out.fidelity = snapshot.fidelity;
  out.sample = snapshot.sample;
  out.runtime_s = snapshot.runtime_s;
  const int nc = snapshot.layout.n_cells();
  for (std::size_t k = 0; k < layout.components.size(); ++k) {
    const Array src = snapshot.values.segment(k * nc, nc).array();
    out.values.segment(k * target.n_cells(), target.n_cells()) =
        prolong_field(src, snapshot.layout.grid, target).matrix();
  }
  return out;
}

}  // namespace bifi
