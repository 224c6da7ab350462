#pragma once

#include "bifi/snapshot.hpp"

#include <Eigen/Cholesky>

#include <optional>
#include <vector>

namespace bifi {

/// Output of the greedy pivoted Cholesky sweep over M candidates.
struct GreedySelection {
  std::vector<int> pivots;        // candidate indices, in selection order
  Matrix L;                       // M x K; L(t, k) for every candidate t
  Matrix gramian;                 // K x K, rows of L at the pivots times their transpose
  std::vector<double> residuals;  // w(pivot) when each pivot was taken

  int rank() const { return static_cast<int>(pivots.size()); }
};

/// Greedy pivoted Cholesky on the columns of V under the inner product
/// <a, b> = sum_j weights_j a_j b_j. At every step the candidate with the
/// largest residual squared distance to the span of those already taken is
/// selected (lowest index on ties). Raises RankDeficient if that residual
/// drops to tau_rel times the largest initial squared norm before K pivots.
template <typename Derived, typename WDerived>
GreedySelection pivoted_cholesky(const Eigen::MatrixBase<Derived>& V, const Eigen::MatrixBase<WDerived>& weights,
                                 int K, double tau_rel = 1e-12) {
  using Eigen::Index;
  const Index M = V.cols();
  if (K < 0 || K > M) throw ConfigError("requested selection size " + std::to_string(K) + " outside [0, M]");
  if (weights.size() != V.rows()) throw LayoutMismatch("weights do not match snapshot length");
  const Matrix WV = weights.asDiagonal() * V;

  Vector w = (V.cwiseProduct(WV)).colwise().sum().transpose();
  const double tau = tau_rel * (M > 0 ? w.maxCoeff() : 0.0);
  std::vector<bool> taken(M, false);

  GreedySelection sel;
  sel.L = Matrix::Zero(M, K);
  for (int k = 0; k < K; ++k) {
    Index p = -1;
    for (Index t = 0; t < M; ++t)
      if (!taken[t] && (p < 0 || w[t] > w[p])) p = t;
    if (p < 0 || !(w[p] > tau)) {
      sel.L.conservativeResize(M, k);
      throw RankDeficient(k, K);
    }
    taken[p] = true;
    sel.pivots.push_back(static_cast<int>(p));
    sel.residuals.push_back(w[p]);
    const double lkk = std::sqrt(w[p]);
    sel.L(p, k) = lkk;
    // row of inner products <v_t, v_p> for all candidates
    const Vector r = V.transpose() * WV.col(p);
    for (Index t = 0; t < M; ++t) {
      if (taken[t]) continue;
      const double rt = r[t] - sel.L.row(t).head(k).dot(sel.L.row(p).head(k));
      sel.L(t, k) = rt / lkk;
      w[t] -= sel.L(t, k) * sel.L(t, k);
    }
    w[p] = 0.0;
  }
  Matrix Lsel(K, K);
  for (int a = 0; a < K; ++a) Lsel.row(a) = sel.L.row(sel.pivots[a]);
  sel.gramian = Lsel * Lsel.transpose();
  return sel;
}

/// Greedy node selection over a homogeneous candidate set.
GreedySelection greedy_select(const SnapshotSet& candidates, int K, double tau_rel = 1e-12);

/// Spectrum summary of a Gramian (lambda_0 enters the error bound).
struct GramianReport {
  double lambda_min = 0.0;
  double lambda_max = 0.0;
  double condition = 0.0;
};

GramianReport gramian_report(const Matrix& G);

/// Low-fidelity and high-fidelity bases at the selected nodes plus the
/// factorized low-fidelity Gramian.
struct BiFiModel {
  GreedySelection selection;
  SnapshotSet lo_basis;
  SnapshotSet hi_basis;
  Matrix gramian;              // <lo_a, lo_b> recomputed directly
  Eigen::LLT<Matrix> factor;
  double regularization = 0.0; // diagonal shift applied, 0 if none

  int size() const { return static_cast<int>(lo_basis.size()); }
};

/// Builds the model; lo_basis[k] and hi_basis[k] must come from the same node.
/// The Gramian is factorized by Cholesky; if that fails, once more with
/// 1e-12 * trace / K on the diagonal, else SingularGramian.
BiFiModel build_model(GreedySelection selection, SnapshotSet lo_basis, SnapshotSet hi_basis);

/// Galerkin coefficients: G c = f, f_k = <query, lo_basis[k]>.
Vector project_coefficients(const Snapshot& query, const BiFiModel& model);

/// sum_k c_k hi_basis[k], tagged Fidelity::Bi and carrying z if given.
Snapshot reconstruct(const Vector& c, const BiFiModel& model, const std::optional<Vector>& z = std::nullopt);

/// || query - sum_k c_k lo_basis[k] || in the weighted norm.
double projection_error(const Snapshot& query, const BiFiModel& model);

/// A named subset of snapshot components approximated by its own model.
struct ComponentGroup {
  std::string name;
  std::vector<std::string> components;
};

/// The transported moments, either one group per moment ("rho", "mom") or a
/// single concatenated group.
std::vector<ComponentGroup> moment_groups(int dim, bool concatenated);

/// One model per component group, all evaluated from the same low-fidelity run.
struct GroupedModel {
  std::vector<ComponentGroup> groups;
  std::vector<BiFiModel> models;
};

/// Bi-fidelity approximation of all groups, concatenated in group order.
Snapshot approximate(const Snapshot& lo_query, const GroupedModel& model);

}  // namespace bifi
