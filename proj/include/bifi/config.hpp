#pragma once

#include "bifi/random_inputs.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace bifi {

/// Which cheap model provides the low-fidelity snapshots. `factor` coarsens
/// the high-fidelity spatial grid (1 keeps it).
struct LoFiKind {
  enum class Tag { CoarseKinetic, HydroLimit, Acoustic };
  Tag tag = Tag::CoarseKinetic;
  int factor = 4;

  std::string name() const;
  static LoFiKind parse(const std::string& tag, int factor);
};

struct RunConfig {
  ModelParams params;

  // grids
  int n_x_hi = 64;
  int n_v = 32;
  double length = 1.0;
  double v_extent = 8.0;
  LoFiKind lofi;

  // random input
  double ell = 0.08;
  double sigma = 0.1;
  double kl_fraction = 0.95;
  bool kl_periodic = true;
  std::uint64_t seed = 20240611;
  Distribution distribution = Distribution::StandardNormal;
  InitialDataSpec initial;

  // sweep
  int M = 200;
  std::vector<int> K_list{2, 4, 6, 8, 10};
  int M_eval = 100;
  bool concatenated = false;  // one model for all moments instead of one per moment

  // run control
  double t_final = 0.1;
  int checkpoints = 20;
  int workers = 1;
  std::string output_dir = "out";
  bool deterministic = false;  // zero the timing columns in CSV output

  int K() const;  // largest entry of K_list
  Grid hi_grid() const;
  Grid lo_grid() const;

  void validate() const;
  nlohmann::json to_json() const;
  static RunConfig from_json(const nlohmann::json& j);
  /// SHA-256 of the canonical JSON dump.
  std::string hash() const;
};

/// Reads a config file; missing keys keep their defaults, unknown keys are a
/// ConfigError.
RunConfig load_config(const std::filesystem::path& path);

}  // namespace bifi
