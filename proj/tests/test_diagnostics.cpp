#include <doctest.h>

#include "bifi/diagnostics.hpp"
#include "bifi/prolong.hpp"

#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

using namespace bifi;
using std::numbers::pi;

namespace {

Snapshot field(const Grid& g, std::mt19937_64& rng, int sample, Fidelity f) {
  std::normal_distribution<double> N;
  Snapshot s = Snapshot::zeros({{"rho", "mom_x"}, g});
  // smooth random fields: a few Fourier modes with random amplitudes
  const double a = N(rng), b = N(rng), c = N(rng);
  for (int j = 0; j < g.n_cells(); ++j) {
    const double x = g.x_coord(j, 0);
    s.values[j] = 1.0 + 0.3 * a * std::sin(2 * pi * x) + 0.1 * b * std::cos(4 * pi * x);
    s.values[g.n_cells() + j] = c * std::sin(2 * pi * x) + 0.2 * a * b;
  }
  s.z = Vector::Constant(1, sample);
  s.sample = sample;
  s.fidelity = f;
  return s;
}

// per-sample L2 norms by hand, no library helpers
double hand_error(const SnapshotSet& ref, const SnapshotSet& approx, int comp) {
  double total = 0;
  for (std::size_t k = 0; k < ref.size(); ++k) {
    const int n = ref[k].layout.n_cells();
    double s = 0;
    for (int j = 0; j < n; ++j) {
      const double d = ref[k].values[comp * n + j] - approx[k].values[comp * n + j];
      s += d * d / n;
    }
    total += std::sqrt(s);
  }
  return total / ref.size();
}

KineticState perturbed(const ModelParams& p, const Grid& g, double scale) {
  KineticState st = equilibrium_state(p, g);
  for (int s = 0; s < p.n_species; ++s)
    for (int c = 0; c < g.n_cells(); ++c)
      st.F[s].col(c) += scale * std::cos(2 * pi * g.x_coord(c, 0)) * maxwellian(s + 1, p, g) *
                        g.velocity_component(0).cos();
  for (int c = 0; c < g.n_cells(); ++c) st.u(0, c) = scale * (0.2 + std::sin(2 * pi * g.x_coord(c, 0)));
  return st;
}

}  // namespace

TEST_CASE("mean L2 error") {
  const Grid g = Grid::make_1d(32);
  std::mt19937_64 rng(1);
  SnapshotSet A, B, C;
  for (int k = 0; k < 10; ++k) {
    A.push_back(field(g, rng, k, Fidelity::High));
    B.push_back(field(g, rng, k, Fidelity::Bi));
    C.push_back(field(g, rng, k, Fidelity::Low));
  }
  CHECK(mean_l2_error(A, A).mean_error.isZero(0.0));

  SnapshotSet shifted = A;
  for (Snapshot& s : shifted) s.values.array() += 1.0;
  const ErrorReport r = mean_l2_error(A, shifted);
  CHECK(r["rho"] == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(r["mom_x"] == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(r.n_samples == 10);

  const ErrorReport ab = mean_l2_error(A, B), bc = mean_l2_error(B, C), ac = mean_l2_error(A, C);
  for (int c = 0; c < 2; ++c) {
    CHECK(ac.mean_error[c] <= ab.mean_error[c] + bc.mean_error[c] + 1e-14);
    CHECK(ab.mean_error[c] == doctest::Approx(hand_error(A, B, c)).epsilon(1e-12));
  }

  SnapshotSet bad = B;
  bad[3].z[0] = 99;
  CHECK_THROWS_AS(mean_l2_error(A, bad), LayoutMismatch);
  CHECK_THROWS_AS(mean_l2_error(A, SnapshotSet(B.begin(), B.begin() + 3)), LayoutMismatch);
}

TEST_CASE("mean L2 error of coarse approximations prolongs first") {
  const Grid fine = Grid::make_1d(64), coarse = fine.coarsened(4);
  std::mt19937_64 rng(2);
  SnapshotSet hi, lo, lo_fine;
  for (int k = 0; k < 5; ++k) {
    hi.push_back(field(fine, rng, k, Fidelity::High));
    lo.push_back(field(coarse, rng, k, Fidelity::Low));
    lo_fine.push_back(prolong(lo.back(), fine));
  }
  const ErrorReport r = mean_l2_error(hi, lo);
  for (int c = 0; c < 2; ++c) CHECK(r.mean_error[c] == doctest::Approx(hand_error(hi, lo_fine, c)).epsilon(1e-12));
}

TEST_CASE("energy functional") {
  ModelParams p;
  const Grid g = Grid::make_1d(16);
  for (int s = 0; s <= 2; ++s) CHECK(energy(equilibrium_state(p, g), p, g, s) == 0.0);

  SUBCASE("constant fluid velocity") {
    KineticState st = equilibrium_state(p, g);
    const double c = 0.03;
    st.u.setConstant(c);
    const double expect = (c * c * g.domain_volume() + c * c) / (p.delta * p.delta);
    for (int s = 0; s <= 2; ++s) CHECK(energy(st, p, g, s) == doctest::Approx(expect).epsilon(1e-12));
  }
  SUBCASE("doubling delta quarters the energy") {
    const KineticState st = perturbed(p, g, 1e-3);
    ModelParams p2 = p;
    p2.delta = 2 * p.delta;
    for (int s = 0; s <= 2; ++s)
      CHECK(energy(st, p2, g, s) == doctest::Approx(energy(st, p, g, s) / 4).epsilon(1e-12));
  }
  SUBCASE("direct evaluation of the particle term") {
    const KineticState st = perturbed(p, g, 1e-3);
    KineticState only_f = st;
    only_f.u.setZero();
    double expect = 0;
    for (int sp = 0; sp < 2; ++sp) {
      const Array mu = maxwellian(sp + 1, p, g);
      for (int c = 0; c < g.n_cells(); ++c)
        for (int k = 0; k < g.n_vel(); ++k) {
          const double G = st.F[sp](k, c) - mu[k];
          const double w = mu[k] < 1e-20 * mu.maxCoeff() ? 1.0 : 1.0 / mu[k];
          expect += G * G * w * g.cell_volume() * g.velocity_volume();
        }
    }
    expect *= p.kappa * p.theta_bar / (p.delta * p.delta);
    EnergyInfo info;
    CHECK(energy(only_f, p, g, 0, &info) == doctest::Approx(expect).epsilon(1e-12));
    CHECK(info.tail_points > 0);
  }
  SUBCASE("higher orders add derivative norms") {
    const KineticState st = perturbed(p, g, 1e-3);
    CHECK(energy(st, p, g, 1) > energy(st, p, g, 0));
    CHECK(energy(st, p, g, 2) > energy(st, p, g, 1));
    CHECK_THROWS_AS(energy(st, p, g, 3), ConfigError);
  }
}

TEST_CASE("decay fit") {
  std::vector<double> t, E, flat, noisy;
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> U(-1.0, 1.0);
  for (int k = 0; k <= 40; ++k) {
    t.push_back(0.025 * k);
    E.push_back(3.0 * std::exp(-2.0 * t.back()));
    flat.push_back(5.0);
    noisy.push_back(E.back() + 1e-6 * U(rng));
  }
  DecayFit f = fit_decay(t, E);
  CHECK(f.ok);
  CHECK(f.lambda == doctest::Approx(2.0).epsilon(1e-10));
  CHECK(f.r2 == doctest::Approx(1.0));
  f = fit_decay(t, flat);
  CHECK(f.ok);
  CHECK(std::abs(f.lambda) < 1e-14);
  f = fit_decay(t, noisy);
  CHECK(std::abs(f.lambda - 2.0) < 0.05);

  std::vector<double> bad = E;
  bad[30] = 0.0;
  f = fit_decay(t, bad);
  CHECK(!f.ok);
  CHECK(f.reason.find("non-positive") != std::string::npos);
  f = fit_decay({0, 1, 2}, {3, 2, 1});
  CHECK(!f.ok);
}

TEST_CASE("monotonicity check") {
  CHECK(non_increasing({3, 2, 2, 1}, 0.0));
  CHECK(!non_increasing({3, 2, 2.1, 1}, 1e-10));
  CHECK(non_increasing({1.0, 1.0 + 1e-12}, 1e-10));
}

TEST_CASE("conservation report") {
  ModelParams p;
  const Grid g = Grid::make_1d(16);
  const KineticSolver ks(p, g);
  std::vector<ConservationCheckpoint> traj;
  ks.advance(equilibrium_state(p, g), 0.05, [&](const KineticState& s) { traj.push_back(checkpoint(s, p, g)); });
  traj.insert(traj.begin(), checkpoint(equilibrium_state(p, g), p, g));
  ConservationReport r = conservation_report(traj);
  CHECK(r.mass_drift <= 1e-12);
  CHECK(r.momentum_drift <= 1e-12);

  // inject a source: extra mass in one species and a momentum kick
  KineticState st = equilibrium_state(p, g);
  st.F[1] *= 1.001;
  st.u(0, 3) += 0.5;
  traj.push_back(checkpoint(st, p, g));
  r = conservation_report(traj);
  CHECK(r.mass_drift == doctest::Approx(1e-3).epsilon(1e-8));
  CHECK(r.momentum_drift > 1e-6);
}

TEST_CASE("convergence study with aliased fidelities is exact at the nodes") {
  const Grid g = Grid::make_1d(16);
  std::mt19937_64 rng(8);
  SnapshotSet lo, hi;
  for (int k = 0; k < 6; ++k) {
    hi.push_back(field(g, rng, k, Fidelity::High));
    // the fields above span only three directions per component; add one more
    hi.back().values[k] += 0.5;
    hi.back().values[16 + k] += 0.5;
    lo.push_back(hi.back());
    lo.back().fidelity = Fidelity::Low;
  }
  ConvergenceInput in;
  in.lo_candidates = lo;
  in.lo_eval = lo;
  in.hi_eval = hi;
  in.groups = moment_groups(1, false);
  in.K_list = {6};
  int calls = 0;
  in.high_fidelity = [&](const std::vector<int>& idx) {
    ++calls;
    std::map<int, Snapshot> out;
    for (int i : idx) out[i] = hi[i];
    return out;
  };
  const auto rows = convergence_study(in);
  CHECK(calls == 1);
  REQUIRE(rows.size() == 2);
  for (const ConvergenceRow& r : rows) {
    CHECK(r.K == 6);
    CHECK(r.err_bi < 1e-10);
    CHECK(r.err_lo == 0.0);
  }
}

TEST_CASE("csv output") {
  CHECK(format_double(0.1) == "0.10000000000000001");
  std::vector<ConvergenceRow> rows{{2, "rho", 0.5, 2.0, 1.5, 0.25}};
  std::ostringstream a, b;
  write_convergence_csv(a, rows, false);
  write_convergence_csv(b, rows, true);
  CHECK(a.str() == "K,component,err_bi,err_lo,err_ratio,runtime_hi_s,runtime_lo_s\n2,rho,0.5,2,0.25,1.5,0.25\n");
  CHECK(b.str() == "K,component,err_bi,err_lo,err_ratio,runtime_hi_s,runtime_lo_s\n2,rho,0.5,2,0.25,0,0\n");
  std::ostringstream e;
  write_energy_csv(e, {0.0, 0.5}, {std::vector<double>{1, 2}, {3, 4}, {5, 6}});
  CHECK(e.str() == "t,E0,E1,E2\n0,1,3,5\n0.5,2,4,6\n");
}
