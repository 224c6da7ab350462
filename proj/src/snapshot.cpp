#include "bifi/snapshot.hpp"

#include <algorithm>
#include <cmath>

namespace bifi {

std::string to_string(Fidelity f) {
  switch (f) {
    case Fidelity::Low: return "low";
    case Fidelity::High: return "high";
    case Fidelity::Bi: return "bi";
  }
  return "unknown";
}

Fidelity fidelity_from_string(const std::string& s) {
  if (s == "low") return Fidelity::Low;
  if (s == "high") return Fidelity::High;
  if (s == "bi") return Fidelity::Bi;
  throw ConfigError("unknown fidelity tag '" + s + "'");
}

int SnapshotLayout::index_of(const std::string& component) const {
  auto it = std::find(components.begin(), components.end(), component);
  if (it == components.end()) throw LayoutMismatch("snapshot has no component '" + component + "'");
  return static_cast<int>(it - components.begin());
}

bool SnapshotLayout::has(const std::string& component) const {
  return std::find(components.begin(), components.end(), component) != components.end();
}

bool operator==(const SnapshotLayout& a, const SnapshotLayout& b) {
  if (a.components != b.components || a.grid.dim() != b.grid.dim()) return false;
  for (int d = 0; d < a.grid.dim(); ++d)
    if (a.grid.n_x(d) != b.grid.n_x(d) || a.grid.x_extent(d) != b.grid.x_extent(d)) return false;
  return true;
}

Snapshot Snapshot::zeros(const SnapshotLayout& layout) {
  Snapshot s;
  s.layout = layout;
  s.values = Vector::Zero(layout.size());
  s.weights = Vector::Constant(layout.size(), layout.grid.cell_volume());
  return s;
}

Eigen::Ref<const Vector> Snapshot::component(const std::string& name) const {
  const int n = layout.n_cells();
  return values.segment(layout.index_of(name) * n, n);
}

Eigen::Ref<Vector> Snapshot::component(const std::string& name) {
  const int n = layout.n_cells();
  return values.segment(layout.index_of(name) * n, n);
}

Snapshot Snapshot::restrict(const std::vector<std::string>& names) const {
  Snapshot out = *this;
  out.layout.components = names;
  const int n = layout.n_cells();
  out.values.resize(out.layout.size());
  out.weights.resize(out.layout.size());
  for (std::size_t k = 0; k < names.size(); ++k) {
    const int src = layout.index_of(names[k]) * n;
    out.values.segment(k * n, n) = values.segment(src, n);
    out.weights.segment(k * n, n) = weights.segment(src, n);
  }
  return out;
}

void check_homogeneous(const SnapshotSet& set) {
  for (const Snapshot& s : set) {
    if (s.layout != set.front().layout) throw LayoutMismatch("snapshot set mixes layouts");
    if (s.fidelity != set.front().fidelity) throw LayoutMismatch("snapshot set mixes fidelities");
  }
}

Snapshot concatenate(const std::vector<Snapshot>& parts) {
  if (parts.empty()) throw LayoutMismatch("nothing to concatenate");
  Snapshot out = parts.front();
  int total = 0;
  out.layout.components.clear();
  for (const Snapshot& p : parts) {
    if (p.layout.grid.n_x() != out.layout.grid.n_x() || p.layout.grid.dim() != out.layout.grid.dim())
      throw LayoutMismatch("concatenated snapshots live on different grids");
    out.layout.components.insert(out.layout.components.end(), p.layout.components.begin(),
                                 p.layout.components.end());
    total += p.values.size();
  }
  out.values.resize(total);
  out.weights.resize(total);
  int off = 0;
  for (const Snapshot& p : parts) {
    out.values.segment(off, p.values.size()) = p.values;
    out.weights.segment(off, p.values.size()) = p.weights;
    off += p.values.size();
  }
  return out;
}

double inner_product(const Snapshot& a, const Snapshot& b) {
  if (a.layout != b.layout || a.values.size() != b.values.size())
    throw LayoutMismatch("inner product of snapshots with different layouts");
  if (a.fidelity != b.fidelity && a.fidelity != Fidelity::Bi && b.fidelity != Fidelity::Bi)
    throw LayoutMismatch("inner product across fidelities");
  // product first so that <a, b> == <b, a> bit for bit
  return (a.weights.array() * (a.values.array() * b.values.array())).sum();
}

double norm(const Snapshot& a) { return std::sqrt(std::max(0.0, inner_product(a, a))); }

Matrix as_matrix(const SnapshotSet& set) {
  if (set.empty()) return Matrix();
  Matrix m(set.front().values.size(), set.size());
  for (std::size_t k = 0; k < set.size(); ++k) m.col(k) = set[k].values;
  return m;
}

}  // namespace bifi
