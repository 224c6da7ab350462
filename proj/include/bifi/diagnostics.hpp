#pragma once

#include "bifi/bifidelity.hpp"
#include "bifi/kinetic.hpp"
#include "bifi/snapshot.hpp"

#include <functional>
#include <map>
#include <ostream>
#include <string>
#include <vector>

namespace bifi {

/// Per-component mean over samples of the weighted L2 norm of the difference.
struct ErrorReport {
  std::vector<std::string> components;
  Vector mean_error;
  int K = 0;
  int n_samples = 0;

  double operator[](const std::string& component) const;
};

/// approx entries are prolonged onto the reference grid when they are coarser.
/// Only the reference's components are compared. Throws LayoutMismatch if the
/// two lists do not pair up sample by sample (same z).
ErrorReport mean_l2_error(const SnapshotSet& reference, const SnapshotSet& approx);

struct EnergyInfo {
  int tail_points = 0;  // velocity points where |f|^2 is weighted by 1 instead of 1/mu
};

/// (1/delta^2)|u|_s^2 + kappa theta sum_i |f_i|_s^2 + (1/delta^2)|ubar|^2 with
/// f_i = (F_i - mu_i)/(delta sqrt(mu_i)) and |.|_s^2 summing the L2 norms of all
/// centred-difference x-derivatives of order <= s. Where mu_i/mu_i(0) < 1e-20 the
/// 1/mu weight would overflow, so there the weight is 1 (see EnergyInfo).
double energy(const KineticState& state, const ModelParams& params, const Grid& grid, int s,
              EnergyInfo* info = nullptr);

struct DecayFit {
  bool ok = false;
  std::string reason;
  double lambda = 0.0;
  double r2 = 0.0;
};

/// Least-squares slope of log E against t over the second half of the series.
DecayFit fit_decay(const std::vector<double>& t, const std::vector<double>& E);

/// E_{k+1} <= E_k (1 + slack) for every k.
bool non_increasing(const std::vector<double>& E, double slack);

struct ConservationCheckpoint {
  double t = 0.0;
  std::vector<double> mass;        // per species, integral of F_i over phase space
  std::array<double, 2> momentum{};  // integral of u + kappa sum_i J_i
  double momentum_scale = 0.0;       // integral of |u| + kappa sum_i |J_i|
  double thermal_scale = 0.0;        // (|X| + kappa sum_i i mass_i) sqrt(theta), used when the above is ~0
};

ConservationCheckpoint checkpoint(const KineticState& state, const ModelParams& params, const Grid& grid);

struct ConservationReport {
  double mass_drift = 0.0;      // max over species and checkpoints, relative
  // |m(t) - m(0)| / max(|m(0)|, momentum_scale(0)); when the initial momentum
  // content is at rounding level (below 1e-10 thermal_scale) the thermal scale
  // is used instead, since a relative drift of nothing is meaningless
  double momentum_drift = 0.0;
};

ConservationReport conservation_report(const std::vector<ConservationCheckpoint>& trajectory);

struct ConvergenceRow {
  int K = 0;
  std::string component;
  double err_bi = 0.0;
  double err_lo = 0.0;
  double runtime_hi_s = 0.0;
  double runtime_lo_s = 0.0;

  double ratio() const { return err_lo > 0.0 ? err_bi / err_lo : 0.0; }
};

/// Provides high-fidelity snapshots for the given candidate indices.
using HighFidelityProvider = std::function<std::map<int, Snapshot>(const std::vector<int>&)>;

struct ConvergenceInput {
  SnapshotSet lo_candidates;
  SnapshotSet lo_eval;
  SnapshotSet hi_eval;
  std::vector<ComponentGroup> groups;
  std::vector<int> K_list;
  HighFidelityProvider high_fidelity;
};

/// For each K: greedy selection per group (nested, so one sweep at max K),
/// bi-fidelity approximation of every held-out sample, and its error against
/// the high-fidelity truth next to the low-fidelity baseline error.
std::vector<ConvergenceRow> convergence_study(const ConvergenceInput& input);

/// Selection and models for the first K pivots of each group.
GroupedModel grouped_model(const std::vector<ComponentGroup>& groups, const std::vector<GreedySelection>& selections,
                           const SnapshotSet& lo_candidates, const std::map<int, Snapshot>& hi_by_candidate, int K);

/// "%.17g" formatting.
std::string format_double(double x);

/// CSV writers. With `deterministic` the timing columns are written as 0.
void write_convergence_csv(std::ostream& os, const std::vector<ConvergenceRow>& rows, bool deterministic);
void write_energy_csv(std::ostream& os, const std::vector<double>& t, const std::array<std::vector<double>, 3>& E);

}  // namespace bifi
