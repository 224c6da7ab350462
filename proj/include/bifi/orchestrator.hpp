#pragma once

#include "bifi/acoustic.hpp"
#include "bifi/bifidelity.hpp"
#include "bifi/config.hpp"
#include "bifi/diagnostics.hpp"
#include "bifi/hydro.hpp"
#include "bifi/io.hpp"

#include <exception>
#include <functional>
#include <map>
#include <ostream>
#include <vector>

namespace bifi {

inline constexpr const char* kVersion = "0.1.0";

/// Everything derived once from a config and shared read-only by all runs.
struct RunContext {
  RunConfig cfg;
  Grid hi;
  Grid lo;
  KLField kl_hi;
  KLField kl_lo;

  int z_dim() const { return cfg.initial.z_dim(cfg.params, kl_hi); }
};

RunContext make_context(const RunConfig& cfg);

/// Macroscopic snapshot of a kinetic state: "rho" (sum_i i n_i), "mom_x"
/// ("mom_y") (sum_i J_i), then n_i, particle bulk velocities up_i_* and fluid u_*.
Snapshot kinetic_snapshot(const KineticState& state, const ModelParams& params, const Grid& grid);
/// Same layout from a limit-model state (particles move with the fluid).
Snapshot fluid_snapshot(const FluidState& state, const Grid& grid);

/// One high-fidelity run (kinetic solver on the fine grid) to cfg.t_final.
Snapshot run_high_fidelity(const RunContext& ctx, const Vector& z, int sample = -1);
/// One low-fidelity run of the configured (or given) kind.
Snapshot run_low_fidelity(const RunContext& ctx, const Vector& z, int sample = -1);
Snapshot run_low_fidelity(const RunContext& ctx, const Vector& z, const LoFiKind& kind, int sample = -1);

/// Runs f(0..n-1) on `workers` threads. Returns one exception slot per index
/// (null on success). Each call of f must be independent.
std::vector<std::exception_ptr> parallel_for(int n, int workers, const std::function<void(int)>& f);

/// Offline artifacts: candidates (low fidelity on the training stream), one
/// greedy selection per component group, high-fidelity runs at the union of
/// the selected nodes (keyed by candidate position).
struct OfflineResult {
  std::vector<ComponentGroup> groups;
  SnapshotSet candidates;
  std::vector<GreedySelection> selections;
  std::map<int, Snapshot> hi;
  std::vector<int> failed;  // training-sample indices whose low-fidelity run failed
};

OfflineResult cmd_offline(const RunConfig& cfg, std::ostream& log);
/// Loads what cmd_offline persisted (checksums verified).
OfflineResult load_offline(const RunConfig& cfg);

struct OnlineResult {
  SnapshotSet bi;
  std::vector<double> online_s;  // low-fidelity run + projection + reconstruction, per query
  std::vector<double> lo_s;      // low-fidelity run alone, per query
};

/// Bi-fidelity approximations at the given parameter vectors using the first
/// K (default: largest configured) selected nodes.
OnlineResult cmd_online(const RunConfig& cfg, const std::vector<Vector>& queries, std::ostream& log, int K = -1);

/// Held-out evaluation: high- and low-fidelity runs on the evaluation stream,
/// convergence table for every configured K written to convergence.csv.
std::vector<ConvergenceRow> cmd_evaluate(const RunConfig& cfg, std::ostream& log);

struct EnergyStudy {
  std::vector<double> t;
  std::array<std::vector<double>, 3> E;
  DecayFit fit;       // on E2
  bool monotone = false;
  int tail_points = 0;
  ConservationReport conservation;
};

/// One high-fidelity trajectory (evaluation sample 0) with the energy recorded
/// at cfg.checkpoints equally spaced times; writes energy.csv and energy.json.
EnergyStudy cmd_energy_study(const RunConfig& cfg, std::ostream& log);

/// Offline followed by evaluate.
std::vector<ConvergenceRow> cmd_convergence_study(const RunConfig& cfg, std::ostream& log);

}  // namespace bifi
