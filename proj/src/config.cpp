#include "bifi/config.hpp"

#include "bifi/io.hpp"

#include <algorithm>
#include <set>

namespace bifi {

using nlohmann::json;

std::string LoFiKind::name() const {
  switch (tag) {
    case Tag::CoarseKinetic: return "coarse_kinetic";
    case Tag::HydroLimit: return "hydro";
    case Tag::Acoustic: return "acoustic";
  }
  return "unknown";
}

LoFiKind LoFiKind::parse(const std::string& tag, int factor) {
  LoFiKind k;
  if (tag == "coarse_kinetic") k.tag = Tag::CoarseKinetic;
  else if (tag == "hydro") k.tag = Tag::HydroLimit;
  else if (tag == "acoustic") k.tag = Tag::Acoustic;
  else throw ConfigError("unknown low-fidelity kind '" + tag + "'");
  if (factor < 1) throw ConfigError("low-fidelity coarsening factor must be >= 1");
  k.factor = factor;
  return k;
}

int RunConfig::K() const { return K_list.empty() ? 0 : *std::max_element(K_list.begin(), K_list.end()); }

Grid RunConfig::hi_grid() const {
  return params.dim == 1 ? Grid::make_1d(n_x_hi, n_v, length, v_extent) : Grid::make_2d(n_x_hi, n_v, length, v_extent);
}

Grid RunConfig::lo_grid() const { return hi_grid().coarsened(lofi.factor); }

void RunConfig::validate() const {
  params.validate();
  if (n_x_hi < 2) throw ConfigError("grid.n_x must be at least 2");
  if (n_x_hi % lofi.factor != 0) throw ConfigError("lofi.factor must divide grid.n_x");
  if (n_x_hi / lofi.factor < 2) throw ConfigError("low-fidelity grid would have fewer than 2 points");
  if (!(ell > 0.0)) throw ConfigError("kl.ell must be positive");
  if (sigma < 0.0) throw ConfigError("kl.sigma must be non-negative");
  if (!(kl_fraction > 0.0 && kl_fraction < 1.0)) throw ConfigError("kl.fraction must lie in (0, 1)");
  if (M < 1) throw ConfigError("sweep.M must be positive");
  if (K_list.empty()) throw ConfigError("sweep.K must list at least one value");
  for (int k : K_list)
    if (k < 1 || k > M) throw ConfigError("every K must satisfy 1 <= K <= M");
  if (M_eval < 0) throw ConfigError("sweep.M_eval must be non-negative");
  if (!(t_final > 0.0)) throw ConfigError("run.t_final must be positive");
  if (checkpoints < 1) throw ConfigError("run.checkpoints must be positive");
  if (workers < 1) throw ConfigError("run.workers must be positive");
}

json RunConfig::to_json() const {
  return {
      {"model",
       {{"epsilon", params.epsilon},
        {"kappa", params.kappa},
        {"theta_bar", params.theta_bar},
        {"n_species", params.n_species},
        {"delta", params.delta},
        {"dim", params.dim}}},
      {"grid", {{"n_x", n_x_hi}, {"n_v", n_v}, {"length", length}, {"v_extent", v_extent}}},
      {"lofi", {{"kind", lofi.name()}, {"factor", lofi.factor}}},
      {"kl",
       {{"ell", ell},
        {"sigma", sigma},
        {"fraction", kl_fraction},
        {"periodic", kl_periodic},
        {"seed", seed},
        {"distribution", to_string(distribution)}}},
      {"initial",
       {{"profile", to_string(initial.profile)},
        {"velocity_amplitude", initial.velocity_amplitude},
        {"density_amplitude", initial.density_amplitude},
        {"random_density", initial.random_density},
        {"random_velocity", initial.random_velocity},
        {"particles_follow_fluid", initial.particles_follow_fluid},
        {"zero_total_momentum", initial.zero_total_momentum},
        {"particle_drift", initial.particle_drift}}},
      {"sweep", {{"M", M}, {"K", K_list}, {"M_eval", M_eval}, {"concatenated", concatenated}}},
      {"run",
       {{"t_final", t_final},
        {"checkpoints", checkpoints},
        {"workers", workers},
        {"output_dir", output_dir},
        {"deterministic", deterministic}}},
  };
}

namespace {

// Copies j[key] into `out` when present; records the key as consumed.
template <typename T>
void take(const json& j, const char* key, T& out, std::set<std::string>& seen) {
  seen.insert(key);
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("bad value for '") + key + "': " + e.what());
  }
}

void reject_unknown(const json& j, const std::set<std::string>& seen, const std::string& where) {
  for (auto it = j.begin(); it != j.end(); ++it)
    if (!seen.count(it.key())) throw ConfigError("unknown config key '" + where + it.key() + "'");
}

const json& section(const json& j, const char* key, std::set<std::string>& seen) {
  static const json empty = json::object();
  seen.insert(key);
  if (!j.contains(key)) return empty;
  if (!j.at(key).is_object()) throw ConfigError(std::string("config section '") + key + "' must be an object");
  return j.at(key);
}

}  // namespace

RunConfig RunConfig::from_json(const json& j) {
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  RunConfig c;
  std::set<std::string> top;
  {
    const json& s = section(j, "model", top);
    std::set<std::string> seen;
    take(s, "epsilon", c.params.epsilon, seen);
    take(s, "kappa", c.params.kappa, seen);
    take(s, "theta_bar", c.params.theta_bar, seen);
    take(s, "n_species", c.params.n_species, seen);
    take(s, "delta", c.params.delta, seen);
    take(s, "dim", c.params.dim, seen);
    reject_unknown(s, seen, "model.");
  }
  {
    const json& s = section(j, "grid", top);
    std::set<std::string> seen;
    take(s, "n_x", c.n_x_hi, seen);
    take(s, "n_v", c.n_v, seen);
    take(s, "length", c.length, seen);
    take(s, "v_extent", c.v_extent, seen);
    reject_unknown(s, seen, "grid.");
  }
  {
    const json& s = section(j, "lofi", top);
    std::set<std::string> seen;
    std::string kind = c.lofi.name();
    int factor = c.lofi.factor;
    take(s, "kind", kind, seen);
    take(s, "factor", factor, seen);
    c.lofi = LoFiKind::parse(kind, factor);
    reject_unknown(s, seen, "lofi.");
  }
  {
    const json& s = section(j, "kl", top);
    std::set<std::string> seen;
    std::string dist = to_string(c.distribution);
    take(s, "ell", c.ell, seen);
    take(s, "sigma", c.sigma, seen);
    take(s, "fraction", c.kl_fraction, seen);
    take(s, "periodic", c.kl_periodic, seen);
    take(s, "seed", c.seed, seen);
    take(s, "distribution", dist, seen);
    c.distribution = distribution_from_string(dist);
    reject_unknown(s, seen, "kl.");
  }
  {
    const json& s = section(j, "initial", top);
    std::set<std::string> seen;
    std::string profile = to_string(c.initial.profile);
    take(s, "profile", profile, seen);
    c.initial.profile = profile_from_string(profile);
    take(s, "velocity_amplitude", c.initial.velocity_amplitude, seen);
    take(s, "density_amplitude", c.initial.density_amplitude, seen);
    take(s, "random_density", c.initial.random_density, seen);
    take(s, "random_velocity", c.initial.random_velocity, seen);
    take(s, "particles_follow_fluid", c.initial.particles_follow_fluid, seen);
    take(s, "zero_total_momentum", c.initial.zero_total_momentum, seen);
    take(s, "particle_drift", c.initial.particle_drift, seen);
    reject_unknown(s, seen, "initial.");
  }
  {
    const json& s = section(j, "sweep", top);
    std::set<std::string> seen;
    take(s, "M", c.M, seen);
    seen.insert("K");
    if (s.contains("K")) {
      if (s.at("K").is_number_integer()) c.K_list = {s.at("K").get<int>()};
      else take(s, "K", c.K_list, seen);
    }
    take(s, "M_eval", c.M_eval, seen);
    take(s, "concatenated", c.concatenated, seen);
    reject_unknown(s, seen, "sweep.");
  }
  {
    const json& s = section(j, "run", top);
    std::set<std::string> seen;
    take(s, "t_final", c.t_final, seen);
    take(s, "checkpoints", c.checkpoints, seen);
    take(s, "workers", c.workers, seen);
    take(s, "output_dir", c.output_dir, seen);
    take(s, "deterministic", c.deterministic, seen);
    reject_unknown(s, seen, "run.");
  }
  reject_unknown(j, top, "");
  c.validate();
  return c;
}

std::string RunConfig::hash() const {
  // run-control keys that cannot change results stay out of the hash
  json j = to_json();
  j["run"].erase("workers");
  j["run"].erase("output_dir");
  return sha256_string(j.dump());
}

RunConfig load_config(const std::filesystem::path& path) {
  json j;
  try {
    j = read_json(path);
  } catch (const Error& e) {
    throw ConfigError(e.what());
  }
  return RunConfig::from_json(j);
}

}  // namespace bifi
