#pragma once

#include "bifi/grid.hpp"

#include <string>
#include <vector>

namespace bifi {

enum class Fidelity { Low, High, Bi };

std::string to_string(Fidelity f);
Fidelity fidelity_from_string(const std::string& s);

/// Component names and the spatial grid every component lives on. Values are
/// stored component-major: all cells of component 0, then component 1, ...
struct SnapshotLayout {
  std::vector<std::string> components;
  Grid grid;

  int n_cells() const { return grid.n_cells(); }
  int size() const { return static_cast<int>(components.size()) * grid.n_cells(); }
  int index_of(const std::string& component) const;  // throws LayoutMismatch
  bool has(const std::string& component) const;
};

/// Spatial layouts match (components, dimension, points, extents); the velocity
/// grid is irrelevant for macroscopic fields.
bool operator==(const SnapshotLayout& a, const SnapshotLayout& b);
inline bool operator!=(const SnapshotLayout& a, const SnapshotLayout& b) { return !(a == b); }

/// Flattened macroscopic fields for one parameter sample.
struct Snapshot {
  Vector values;
  Vector weights;  // quadrature weight per value (cell volume)
  SnapshotLayout layout;
  Vector z;
  Fidelity fidelity = Fidelity::High;
  int sample = -1;      // index in its sample stream, -1 if not applicable
  double runtime_s = 0.0;

  static Snapshot zeros(const SnapshotLayout& layout);

  /// View of one component's cell values.
  Eigen::Ref<const Vector> component(const std::string& name) const;
  Eigen::Ref<Vector> component(const std::string& name);

  /// New snapshot with only the listed components (in that order).
  Snapshot restrict(const std::vector<std::string>& names) const;
};

using SnapshotSet = std::vector<Snapshot>;

/// Throws LayoutMismatch unless all entries share layout and fidelity.
void check_homogeneous(const SnapshotSet& set);

/// Concatenates the components of several snapshots on the same grid.
Snapshot concatenate(const std::vector<Snapshot>& parts);

/// Discrete weighted L2 inner product over all components.
double inner_product(const Snapshot& a, const Snapshot& b);
double norm(const Snapshot& a);

/// Column matrix of snapshot values (one column per snapshot).
Matrix as_matrix(const SnapshotSet& set);

}  // namespace bifi
