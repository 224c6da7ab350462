#include "bifi/bifidelity.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>

namespace bifi {

GreedySelection greedy_select(const SnapshotSet& candidates, int K, double tau_rel) {
  if (candidates.empty()) throw ConfigError("greedy selection needs at least one candidate");
  check_homogeneous(candidates);
  return pivoted_cholesky(as_matrix(candidates), candidates.front().weights, K, tau_rel);
}

GramianReport gramian_report(const Matrix& G) {
  GramianReport r;
  if (G.size() == 0) return r;
  Eigen::SelfAdjointEigenSolver<Matrix> es(G, Eigen::EigenvaluesOnly);
  r.lambda_min = es.eigenvalues().minCoeff();
  r.lambda_max = es.eigenvalues().maxCoeff();
  r.condition = r.lambda_min > 0.0 ? r.lambda_max / r.lambda_min : std::numeric_limits<double>::infinity();
  return r;
}

BiFiModel build_model(GreedySelection selection, SnapshotSet lo_basis, SnapshotSet hi_basis) {
  if (lo_basis.size() != hi_basis.size())
    throw LayoutMismatch("low- and high-fidelity bases differ in size");
  if (!lo_basis.empty()) {
    check_homogeneous(lo_basis);
    check_homogeneous(hi_basis);
  }
  BiFiModel m;
  m.selection = std::move(selection);
  m.lo_basis = std::move(lo_basis);
  m.hi_basis = std::move(hi_basis);
  const int K = m.size();
  m.gramian.resize(K, K);
  for (int a = 0; a < K; ++a)
    for (int b = 0; b <= a; ++b) m.gramian(a, b) = m.gramian(b, a) = inner_product(m.lo_basis[a], m.lo_basis[b]);
  if (K == 0) return m;

  auto factor_ok = [](const Eigen::LLT<Matrix>& f) {
    if (f.info() != Eigen::Success) return false;
    const Vector d = f.matrixLLT().diagonal();
    return d.minCoeff() > 1e-8 * d.maxCoeff();  // pivots below ~sqrt(eps) relative carry no digits
  };
  m.factor.compute(m.gramian);
  if (!factor_ok(m.factor)) {
    m.regularization = 1e-12 * m.gramian.trace() / K;
    m.factor.compute(m.gramian + m.regularization * Matrix::Identity(K, K));
    if (m.factor.info() != Eigen::Success) throw SingularGramian(gramian_report(m.gramian).condition);
  }
  return m;
}

Vector project_coefficients(const Snapshot& query, const BiFiModel& model) {
  const int K = model.size();
  Vector f(K);
  for (int k = 0; k < K; ++k) f[k] = inner_product(query, model.lo_basis[k]);
  if (K == 0) return f;
  return model.factor.solve(f);
}

Snapshot reconstruct(const Vector& c, const BiFiModel& model, const std::optional<Vector>& z) {
  if (c.size() != model.size())
    throw LayoutMismatch("coefficient vector has length " + std::to_string(c.size()) + ", model has " +
                         std::to_string(model.size()));
  if (model.hi_basis.empty()) throw LayoutMismatch("cannot reconstruct from an empty basis");
  Snapshot out = Snapshot::zeros(model.hi_basis.front().layout);
  for (int k = 0; k < c.size(); ++k) out.values += c[k] * model.hi_basis[k].values;
  out.fidelity = Fidelity::Bi;
  out.sample = -1;
  if (z) out.z = *z;
  return out;
}

double projection_error(const Snapshot& query, const BiFiModel& model) {
  Vector r = query.values;
  if (model.size() > 0) {
    const Vector c = project_coefficients(query, model);
    for (int k = 0; k < c.size(); ++k) r -= c[k] * model.lo_basis[k].values;
  }
  return std::sqrt((query.weights.array() * r.array().square()).sum());
}

std::vector<ComponentGroup> moment_groups(int dim, bool concatenated) {
  std::vector<std::string> mom{"mom_x"};
  if (dim == 2) mom.push_back("mom_y");
  if (concatenated) {
    std::vector<std::string> all{"rho"};
    all.insert(all.end(), mom.begin(), mom.end());
    return {{"all", all}};
  }
  return {{"rho", {"rho"}}, {"mom", mom}};
}

Snapshot approximate(const Snapshot& lo_query, const GroupedModel& model) {
  std::vector<Snapshot> parts;
  for (std::size_t g = 0; g < model.groups.size(); ++g) {
    const Snapshot q = lo_query.restrict(model.groups[g].components);
    parts.push_back(reconstruct(project_coefficients(q, model.models[g]), model.models[g], lo_query.z));
  }
  Snapshot out = concatenate(parts);
  out.sample = lo_query.sample;
  return out;
}

}  // namespace bifi
