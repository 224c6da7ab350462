#include "bifi/diagnostics.hpp"

#include "bifi/prolong.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <set>

namespace bifi {

double ErrorReport::operator[](const std::string& component) const {
  for (std::size_t k = 0; k < components.size(); ++k)
    if (components[k] == component) return mean_error[k];
  throw LayoutMismatch("error report has no component '" + component + "'");
}

ErrorReport mean_l2_error(const SnapshotSet& reference, const SnapshotSet& approx) {
  if (reference.size() != approx.size())
    throw LayoutMismatch("reference and approximation sets differ in size");
  ErrorReport rep;
  rep.n_samples = static_cast<int>(reference.size());
  if (reference.empty()) return rep;
  rep.components = reference.front().layout.components;
  rep.mean_error = Vector::Zero(rep.components.size());
  for (std::size_t k = 0; k < reference.size(); ++k) {
    const Snapshot& ref = reference[k];
    if (ref.z.size() != approx[k].z.size() || ref.z != approx[k].z)
      throw LayoutMismatch("sample " + std::to_string(k) + ": parameter vectors do not match");
    const Grid& g = ref.layout.grid;
    const Snapshot a = approx[k].layout.grid.n_x() == g.n_x() ? approx[k] : prolong(approx[k], g);
    for (std::size_t c = 0; c < rep.components.size(); ++c) {
      const Vector diff = ref.component(rep.components[c]) - a.component(rep.components[c]);
      rep.mean_error[c] += std::sqrt(g.cell_volume() * diff.squaredNorm());
    }
  }
  rep.mean_error /= static_cast<double>(reference.size());
  return rep;
}

namespace {

// Centred differences along dimension d, applied to every row of G.
Array2D difference(const Array2D& G, const Grid& grid, int d, int order) {
  Array2D out(G.rows(), G.cols());
  const double h = grid.dx(d);
  for (int c = 0; c < grid.n_cells(); ++c) {
    const int r = grid.neighbor(c, d, 1), l = grid.neighbor(c, d, -1);
    if (order == 1) out.col(c) = (G.col(r) - G.col(l)) / (2.0 * h);
    else out.col(c) = (G.col(r) - 2.0 * G.col(c) + G.col(l)) / (h * h);
  }
  return out;
}

// sum over |alpha| <= s of the weighted squared L2 norm of d^alpha G; row r
// carries weight w[r].
double sobolev_sq(const Array2D& G, const Array& w, const Grid& grid, int s) {
  auto sq = [&](const Array2D& D) { return grid.cell_volume() * (D.square().colwise() * w).sum(); };
  double total = sq(G);
  if (s >= 1)
    for (int d = 0; d < grid.dim(); ++d) total += sq(difference(G, grid, d, 1));
  if (s >= 2) {
    for (int d = 0; d < grid.dim(); ++d) total += sq(difference(G, grid, d, 2));
    if (grid.dim() == 2) total += sq(difference(difference(G, grid, 0, 1), grid, 1, 1));
  }
  return total;
}

}  // namespace

double energy(const KineticState& state, const ModelParams& params, const Grid& grid, int s, EnergyInfo* info) {
  if (s < 0 || s > 2) throw ConfigError("energy order must be 0, 1 or 2");
  const double d2 = params.delta * params.delta;
  double E = sobolev_sq(state.u, Array::Ones(state.u.rows()), grid, s) / d2;
  const double dV = grid.velocity_volume();
  int tail = 0;
  for (int sp = 0; sp < params.n_species; ++sp) {
    const Array mu = maxwellian(sp + 1, params, grid);
    const double peak = mu.maxCoeff();
    Array w(mu.size());
    for (Eigen::Index k = 0; k < mu.size(); ++k) {
      if (mu[k] < 1e-20 * peak) {
        w[k] = dV / d2;
        ++tail;
      } else {
        w[k] = dV / (d2 * mu[k]);
      }
    }
    const Array2D G = state.F[sp].colwise() - mu;
    E += params.kappa * params.theta_bar * sobolev_sq(G, w, grid, s);
  }
  for (int d = 0; d < grid.dim(); ++d) {
    const double ubar = state.u.row(d).mean();
    E += ubar * ubar / d2;
  }
  if (info) info->tail_points = tail;
  return E;
}

DecayFit fit_decay(const std::vector<double>& t, const std::vector<double>& E) {
  DecayFit fit;
  if (t.size() != E.size()) {
    fit.reason = "time and energy series differ in length";
    return fit;
  }
  if (t.size() < 5) {
    fit.reason = "fewer than 5 checkpoints";
    return fit;
  }
  for (double e : E)
    if (!(e > 0.0)) {
      fit.reason = "non-positive energy in series";
      return fit;
    }
  const std::size_t first = t.size() / 2;
  const std::size_t n = t.size() - first;
  double st = 0, sy = 0;
  for (std::size_t k = first; k < t.size(); ++k) {
    st += t[k];
    sy += std::log(E[k]);
  }
  const double tm = st / n, ym = sy / n;
  double stt = 0, sty = 0, syy = 0;
  for (std::size_t k = first; k < t.size(); ++k) {
    const double a = t[k] - tm, b = std::log(E[k]) - ym;
    stt += a * a;
    sty += a * b;
    syy += b * b;
  }
  if (stt == 0.0) {
    fit.reason = "degenerate time points";
    return fit;
  }
  const double slope = sty / stt;
  fit.lambda = -slope;
  const double ss_res = std::max(0.0, syy - slope * sty);
  fit.r2 = syy > 0.0 ? 1.0 - ss_res / syy : 1.0;
  fit.ok = true;
  return fit;
}

bool non_increasing(const std::vector<double>& E, double slack) {
  for (std::size_t k = 1; k < E.size(); ++k)
    if (E[k] > E[k - 1] * (1.0 + slack)) return false;
  return true;
}

ConservationCheckpoint checkpoint(const KineticState& state, const ModelParams& params, const Grid& grid) {
  ConservationCheckpoint cp;
  cp.t = state.t;
  const double dx = grid.cell_volume();
  for (const Array2D& F : state.F) cp.mass.push_back(F.sum() * grid.velocity_volume() * dx);
  double inertia = grid.domain_volume();
  for (std::size_t s = 0; s < cp.mass.size(); ++s) inertia += params.kappa * (s + 1) * cp.mass[s];
  cp.thermal_scale = inertia * std::sqrt(params.theta_bar);
  const MomentSet m = moments(state, params, grid);
  for (int d = 0; d < grid.dim(); ++d) {
    double mom = state.u.row(d).sum(), scale = state.u.row(d).abs().sum();
    for (const Array2D& J : m.J) {
      mom += params.kappa * J.row(d).sum();
      scale += params.kappa * J.row(d).abs().sum();
    }
    cp.momentum[d] = mom * dx;
    cp.momentum_scale += scale * dx;
  }
  return cp;
}

ConservationReport conservation_report(const std::vector<ConservationCheckpoint>& trajectory) {
  ConservationReport r;
  if (trajectory.empty()) return r;
  const ConservationCheckpoint& c0 = trajectory.front();
  const double m0 = std::hypot(c0.momentum[0], c0.momentum[1]);
  double denom = std::max(m0, c0.momentum_scale);
  if (denom < 1e-10 * c0.thermal_scale) denom = c0.thermal_scale;
  for (const ConservationCheckpoint& c : trajectory) {
    for (std::size_t s = 0; s < c.mass.size(); ++s)
      r.mass_drift = std::max(r.mass_drift, std::abs(c.mass[s] - c0.mass[s]) / std::abs(c0.mass[s]));
    const double dm = std::hypot(c.momentum[0] - c0.momentum[0], c.momentum[1] - c0.momentum[1]);
    if (denom > 0.0) r.momentum_drift = std::max(r.momentum_drift, dm / denom);
    else if (dm > 0.0) r.momentum_drift = std::numeric_limits<double>::infinity();
  }
  return r;
}

GroupedModel grouped_model(const std::vector<ComponentGroup>& groups, const std::vector<GreedySelection>& selections,
                           const SnapshotSet& lo_candidates, const std::map<int, Snapshot>& hi_by_candidate, int K) {
  GroupedModel gm;
  gm.groups = groups;
  for (std::size_t g = 0; g < groups.size(); ++g) {
    const GreedySelection& full = selections[g];
    if (K > full.rank()) throw RankDeficient(full.rank(), K);
    GreedySelection sel;
    sel.pivots.assign(full.pivots.begin(), full.pivots.begin() + K);
    sel.residuals.assign(full.residuals.begin(), full.residuals.begin() + K);
    sel.L = full.L.leftCols(K);
    sel.gramian = full.gramian.topLeftCorner(K, K);
    SnapshotSet lo, hi;
    for (int p : sel.pivots) {
      lo.push_back(lo_candidates[p].restrict(groups[g].components));
      auto it = hi_by_candidate.find(p);
      if (it == hi_by_candidate.end())
        throw LayoutMismatch("no high-fidelity snapshot for candidate " + std::to_string(p));
      hi.push_back(it->second.restrict(groups[g].components));
    }
    gm.models.push_back(build_model(std::move(sel), std::move(lo), std::move(hi)));
  }
  return gm;
}

std::vector<ConvergenceRow> convergence_study(const ConvergenceInput& in) {
  if (in.K_list.empty()) return {};
  const int Kmax = *std::max_element(in.K_list.begin(), in.K_list.end());
  std::vector<GreedySelection> selections;
  std::set<int> nodes;
  for (const ComponentGroup& g : in.groups) {
    SnapshotSet restricted;
    for (const Snapshot& s : in.lo_candidates) restricted.push_back(s.restrict(g.components));
    selections.push_back(greedy_select(restricted, Kmax));
    nodes.insert(selections.back().pivots.begin(), selections.back().pivots.end());
  }
  const std::map<int, Snapshot> hi = in.high_fidelity(std::vector<int>(nodes.begin(), nodes.end()));

  double rt_hi = 0.0, rt_lo = 0.0;
  for (const auto& [k, s] : hi) rt_hi += s.runtime_s;
  for (const Snapshot& s : in.lo_eval) rt_lo += s.runtime_s;
  if (!hi.empty()) rt_hi /= hi.size();
  if (!in.lo_eval.empty()) rt_lo /= in.lo_eval.size();

  std::vector<std::string> comps;
  for (const ComponentGroup& g : in.groups) comps.insert(comps.end(), g.components.begin(), g.components.end());
  SnapshotSet truth, lo_only;
  for (std::size_t k = 0; k < in.hi_eval.size(); ++k) {
    truth.push_back(in.hi_eval[k].restrict(comps));
    lo_only.push_back(in.lo_eval[k].restrict(comps));
  }
  const ErrorReport lo_err = mean_l2_error(truth, lo_only);

  std::vector<ConvergenceRow> rows;
  for (int K : in.K_list) {
    const GroupedModel gm = grouped_model(in.groups, selections, in.lo_candidates, hi, K);
    SnapshotSet bi;
    for (const Snapshot& q : in.lo_eval) bi.push_back(approximate(q, gm));
    const ErrorReport bi_err = mean_l2_error(truth, bi);
    for (const std::string& c : comps)
      rows.push_back({K, c, bi_err[c], lo_err[c], rt_hi, rt_lo});
  }
  return rows;
}

std::string format_double(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

void write_convergence_csv(std::ostream& os, const std::vector<ConvergenceRow>& rows, bool deterministic) {
  os << "K,component,err_bi,err_lo,err_ratio,runtime_hi_s,runtime_lo_s\n";
  for (const ConvergenceRow& r : rows) {
    os << r.K << ',' << r.component << ',' << format_double(r.err_bi) << ',' << format_double(r.err_lo) << ','
       << format_double(r.ratio()) << ',' << format_double(deterministic ? 0.0 : r.runtime_hi_s) << ','
       << format_double(deterministic ? 0.0 : r.runtime_lo_s) << '\n';
  }
}

void write_energy_csv(std::ostream& os, const std::vector<double>& t, const std::array<std::vector<double>, 3>& E) {
  os << "t,E0,E1,E2\n";
  for (std::size_t k = 0; k < t.size(); ++k)
    os << format_double(t[k]) << ',' << format_double(E[0][k]) << ',' << format_double(E[1][k]) << ','
       << format_double(E[2][k]) << '\n';
}

}  // namespace bifi
