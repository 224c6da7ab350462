#pragma once

#include "bifi/snapshot.hpp"

namespace bifi {

/// Piecewise-linear (bilinear in 2D) periodic interpolation of every component
/// onto `target`, which must refine the snapshot grid by an integer factor per
/// dimension. Throws LayoutMismatch for non-nested grids.
Snapshot prolong(const Snapshot& snapshot, const Grid& target);

/// Same for a bare cell field.
Array prolong_field(const Array& field, const Grid& source, const Grid& target);

}  // namespace bifi
