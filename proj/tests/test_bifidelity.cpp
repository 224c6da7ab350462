#include <doctest.h>

#include "bifi/bifidelity.hpp"
#include "oracles.hpp"

#include <cmath>
#include <numbers>
#include <random>

using namespace bifi;
using std::numbers::pi;

namespace {

Snapshot make(const Vector& v, Fidelity f = Fidelity::Low, const std::string& name = "rho") {
  Snapshot s = Snapshot::zeros({{name}, Grid::make_1d(static_cast<int>(v.size()))});
  s.values = v;
  s.fidelity = f;
  return s;
}

SnapshotSet make_set(const Matrix& V, Fidelity f = Fidelity::Low) {
  SnapshotSet out;
  for (int m = 0; m < V.cols(); ++m) {
    out.push_back(make(V.col(m), f));
    out.back().z = Vector::Constant(1, m);
  }
  return out;
}

BiFiModel model_from(const SnapshotSet& lo, const SnapshotSet& hi, int K) {
  GreedySelection sel = greedy_select(lo, K);
  SnapshotSet lb, hb;
  for (int p : sel.pivots) lb.push_back(lo[p]), hb.push_back(hi[p]);
  return build_model(sel, lb, hb);
}

}  // namespace

TEST_CASE("inner product basics") {
  const Grid g = Grid::make_1d(64);
  CHECK(inner_product(make(Vector::Ones(64)), make(Vector::Ones(64))) == doctest::Approx(1.0).epsilon(1e-15));

  Vector s(64), c(64);
  for (int j = 0; j < 64; ++j) s[j] = std::sin(2 * pi * g.x_coord(j, 0)), c[j] = std::cos(2 * pi * g.x_coord(j, 0));
  CHECK(std::abs(inner_product(make(s), make(c))) < 1e-14);

  std::mt19937_64 rng(7);
  std::normal_distribution<double> N;
  for (int t = 0; t < 1000; ++t) {
    Vector a(20), b(20);
    for (int j = 0; j < 20; ++j) a[j] = N(rng), b[j] = N(rng);
    const Snapshot A = make(a), B = make(b);
    const double ab = inner_product(A, B);
    CHECK(ab == inner_product(B, A));
    CHECK(ab * ab <= inner_product(A, A) * inner_product(B, B) * (1 + 1e-14));
  }
  CHECK_THROWS_AS(inner_product(make(Vector::Ones(8)), make(Vector::Ones(16))), LayoutMismatch);
  CHECK_THROWS_AS(inner_product(make(Vector::Ones(8)), make(Vector::Ones(8), Fidelity::High)), LayoutMismatch);
  CHECK_THROWS_AS(inner_product(make(Vector::Ones(8)), make(Vector::Ones(8), Fidelity::Low, "mom_x")), LayoutMismatch);
}

TEST_CASE("greedy selection matches the naive least-squares oracle") {
  std::mt19937_64 rng(42);
  for (int trial = 0; trial < 10; ++trial) {
    const int n = 20 + 15 * trial, M = 10 + 2 * trial, K = std::min(M, 8);
    const Matrix V = oracle::random_candidates(rng, n, M);
    const SnapshotSet set = make_set(V);
    const GreedySelection sel = greedy_select(set, K);
    CHECK(sel.pivots == oracle::naive_greedy(V, set[0].weights, K));
    const Matrix G = oracle::dense_gramian(V, set[0].weights, sel.pivots);
    CHECK((sel.gramian - G).norm() <= 1e-10 * G.norm());
    for (int k = 1; k < K; ++k) CHECK(sel.residuals[k] <= sel.residuals[k - 1] * (1 + 1e-12));
  }
}

TEST_CASE("K = M reproduces the full Gramian") {
  std::mt19937_64 rng(3);
  const Matrix V = oracle::random_candidates(rng, 50, 12);
  const SnapshotSet set = make_set(V);
  const GreedySelection sel = greedy_select(set, 12);
  // L is M x M: rows indexed by candidate, so L L^T is the Gramian in candidate order
  std::vector<int> all(12);
  for (int m = 0; m < 12; ++m) all[m] = m;
  const Matrix G = oracle::dense_gramian(V, set[0].weights, all);
  CHECK((sel.L * sel.L.transpose() - G).norm() <= 1e-10 * G.norm());
  // a dense Cholesky of the permuted Gramian gives the same factor
  Matrix Gp(12, 12), Lp(12, 12);
  for (int a = 0; a < 12; ++a) {
    Lp.row(a) = sel.L.row(sel.pivots[a]);
    for (int b = 0; b < 12; ++b) Gp(a, b) = G(sel.pivots[a], sel.pivots[b]);
  }
  const Matrix Ld = Gp.llt().matrixL();
  CHECK((Lp - Ld).norm() <= 1e-10 * Ld.norm());
}

TEST_CASE("orthonormal candidates give identity factor rows") {
  // orthonormal in the cell-weighted product on 4 cells of size 1/4
  const Matrix V = 2.0 * Matrix::Identity(4, 4);
  const GreedySelection sel = greedy_select(make_set(V), 4);
  CHECK(sel.pivots == std::vector<int>{0, 1, 2, 3});
  for (int a = 0; a < 4; ++a) CHECK((sel.L.row(sel.pivots[a]) - Matrix::Identity(4, 4).row(a)).norm() < 1e-15);
  CHECK((sel.gramian - Matrix::Identity(4, 4)).norm() < 1e-15);
}

TEST_CASE("duplicate candidates are never selected twice") {
  std::mt19937_64 rng(11);
  Matrix V = oracle::random_candidates(rng, 40, 8);
  V.col(5) = V.col(2);
  const SnapshotSet set = make_set(V);
  const GreedySelection sel = greedy_select(set, 7);
  const bool has2 = std::count(sel.pivots.begin(), sel.pivots.end(), 2) > 0;
  const bool has5 = std::count(sel.pivots.begin(), sel.pivots.end(), 5) > 0;
  CHECK(!(has2 && has5));
  CHECK_THROWS_AS(greedy_select(set, 8), RankDeficient);
  // residual of the twin after the first copy was taken
  const int first = std::find_if(sel.pivots.begin(), sel.pivots.end(), [](int p) { return p == 2 || p == 5; }) -
                    sel.pivots.begin();
  const int twin = sel.pivots[first] == 2 ? 5 : 2;
  double w = inner_product(set[twin], set[twin]);
  for (int k = 0; k <= first; ++k) w -= sel.L(twin, k) * sel.L(twin, k);
  CHECK(std::abs(w) < 1e-12);
}

TEST_CASE("rank deficiency reports the achieved rank") {
  Matrix V(10, 5);
  for (int m = 0; m < 5; ++m) V.col(m) = Vector::LinSpaced(10, 0, 1) * (m + 1);
  try {
    greedy_select(make_set(V), 3);
    FAIL("expected RankDeficient");
  } catch (const RankDeficient& e) {
    CHECK(e.achieved_rank() == 1);
    CHECK(e.requested_rank() == 3);
  }
}

TEST_CASE("scaling the candidates scales residuals and keeps pivots") {
  std::mt19937_64 rng(5);
  const Matrix V = oracle::random_candidates(rng, 30, 15);
  const GreedySelection a = greedy_select(make_set(V), 6);
  const GreedySelection b = greedy_select(make_set(3.0 * V), 6);
  CHECK(a.pivots == b.pivots);
  for (int k = 0; k < 6; ++k) CHECK(b.residuals[k] == doctest::Approx(9.0 * a.residuals[k]).epsilon(1e-12));
}

TEST_CASE("projection coefficients and reconstruction") {
  std::mt19937_64 rng(9);
  const Matrix V = oracle::random_candidates(rng, 60, 12);
  const Matrix H = 2.0 * V + Matrix::Constant(60, 12, 0.5);
  const SnapshotSet lo = make_set(V), hi = make_set(H, Fidelity::High);
  const BiFiModel m = model_from(lo, hi, 5);
  CHECK(m.regularization == 0.0);

  for (int j = 0; j < 5; ++j) {
    const Vector c = project_coefficients(m.lo_basis[j], m);
    CHECK((c - Vector::Unit(5, j)).norm() < 1e-10);
    const Snapshot r = reconstruct(Vector::Unit(5, j), m);
    CHECK(r.values == m.hi_basis[j].values);
    CHECK(r.fidelity == Fidelity::Bi);
  }
  Snapshot q = m.lo_basis[0];
  q.values = 2.0 * m.lo_basis[0].values + 3.0 * m.lo_basis[1].values;
  Vector expect = Vector::Zero(5);
  expect << 2, 3, 0, 0, 0;
  CHECK((project_coefficients(q, m) - expect).norm() < 1e-8);
  CHECK(projection_error(q, m) < 1e-8);

  // query orthogonal to every basis element
  Matrix B(60, 5);
  for (int k = 0; k < 5; ++k) B.col(k) = m.lo_basis[k].values;
  const Vector rnd = Vector::Random(60);
  Snapshot orth = m.lo_basis[0];
  orth.values = rnd - B * B.colPivHouseholderQr().solve(rnd);
  CHECK(project_coefficients(orth, m).norm() < 1e-10);

  const Snapshot zero = reconstruct(Vector::Zero(5), m, Vector::Constant(2, 1.5));
  CHECK(zero.values.isZero(0.0));
  CHECK(zero.z == Vector::Constant(2, 1.5));
  CHECK_THROWS_AS(reconstruct(Vector::Zero(4), m), LayoutMismatch);

  // projecting the projection leaves the coefficients unchanged
  Snapshot query = lo[7];
  const Vector c = project_coefficients(query, m);
  Snapshot proj = query;
  proj.values.setZero();
  for (int k = 0; k < 5; ++k) proj.values += c[k] * m.lo_basis[k].values;
  CHECK((project_coefficients(proj, m) - c).norm() < 1e-12 * (1 + c.norm()));
}

TEST_CASE("projection error of the empty model is the norm, and decreases with K") {
  std::mt19937_64 rng(21);
  const Matrix V = oracle::random_candidates(rng, 80, 25);
  const SnapshotSet lo = make_set(V);
  const GreedySelection sel = greedy_select(lo, 10);
  const Snapshot query = make(oracle::random_candidates(rng, 80, 1).col(0));
  const BiFiModel empty = build_model(GreedySelection{}, {}, {});
  CHECK(projection_error(query, empty) == doctest::Approx(norm(query)).epsilon(1e-15));
  double prev = norm(query);
  for (int K = 1; K <= 10; ++K) {
    SnapshotSet lb;
    for (int k = 0; k < K; ++k) lb.push_back(lo[sel.pivots[k]]);
    const double e = projection_error(query, build_model(sel, lb, lb));
    CHECK(e <= prev + 1e-12);
    prev = e;
  }
}

TEST_CASE("an all-zero basis is a singular Gramian") {
  const SnapshotSet zeros = make_set(Matrix::Zero(10, 3));
  CHECK_THROWS_AS(build_model(GreedySelection{}, zeros, zeros), SingularGramian);
}

TEST_CASE("near-singular Gramian falls back to a small diagonal shift") {
  Matrix V(10, 2);
  V.col(0) = Vector::LinSpaced(10, 1, 2);
  V.col(1) = V.col(0) + 1e-10 * Vector::Unit(10, 3);
  const SnapshotSet set = make_set(V);
  const BiFiModel m = build_model(GreedySelection{}, set, set);
  CHECK(m.regularization > 0.0);
  CHECK(m.regularization == doctest::Approx(1e-12 * m.gramian.trace() / 2));
  CHECK(project_coefficients(set[0], m).allFinite());
}

TEST_CASE("gramian report") {
  Matrix G = Matrix::Zero(3, 3);
  G.diagonal() << 4, 1, 0.5;
  const GramianReport r = gramian_report(G);
  CHECK(r.lambda_min == doctest::Approx(0.5));
  CHECK(r.lambda_max == doctest::Approx(4));
  CHECK(r.condition == doctest::Approx(8));
}

TEST_CASE("grouped approximation concatenates per-group reconstructions") {
  const Grid g = Grid::make_1d(16);
  std::mt19937_64 rng(2);
  std::normal_distribution<double> N;
  SnapshotSet lo, hi;
  for (int m = 0; m < 6; ++m) {
    Snapshot s = Snapshot::zeros({{"rho", "mom_x", "n_1"}, g});
    for (int j = 0; j < s.values.size(); ++j) s.values[j] = N(rng);
    s.z = Vector::Constant(1, m);
    s.fidelity = Fidelity::Low;
    lo.push_back(s);
    s.fidelity = Fidelity::High;
    hi.push_back(s);
  }
  GroupedModel gm;
  gm.groups = moment_groups(1, false);
  CHECK(gm.groups.size() == 2);
  CHECK(moment_groups(2, true).front().components == std::vector<std::string>{"rho", "mom_x", "mom_y"});
  for (const ComponentGroup& grp : gm.groups) {
    SnapshotSet l, h;
    for (int m = 0; m < 6; ++m) l.push_back(lo[m].restrict(grp.components)), h.push_back(hi[m].restrict(grp.components));
    gm.models.push_back(model_from(l, h, 6));
  }
  // every candidate is in the span, so the approximation returns the high-fidelity data
  const Snapshot a = approximate(lo[4], gm);
  CHECK(a.layout.components == std::vector<std::string>{"rho", "mom_x"});
  CHECK((a.component("rho") - hi[4].component("rho")).norm() < 1e-10);
  CHECK((a.component("mom_x") - hi[4].component("mom_x")).norm() < 1e-10);
  CHECK(a.fidelity == Fidelity::Bi);
}
