// bifi: offline/online bi-fidelity sweeps for the particle-fluid kinetic model.
#include "bifi/orchestrator.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>

namespace {

enum ExitCode { kOk = 0, kFailure = 1, kConfig = 2, kNumerical = 3, kRank = 4 };

struct Common {
  std::string config;
  std::string out;
  long long seed = -1;
  int workers = 0;
  double epsilon = 0.0;
  bool deterministic = false;
};

void add_common(CLI::App* sub, Common& c) {
  sub->add_option("-c,--config", c.config, "JSON config file (defaults apply to missing keys)");
  sub->add_option("-o,--out", c.out, "output directory (overrides run.output_dir)");
  sub->add_option("--seed", c.seed, "seed override");
  sub->add_option("-j,--workers", c.workers, "worker threads");
  sub->add_option("--epsilon", c.epsilon, "Stokes number override");
  sub->add_flag("--deterministic", c.deterministic, "write zero timing columns so outputs are byte-identical");
}

bifi::RunConfig resolve(const Common& c) {
  bifi::RunConfig cfg = c.config.empty() ? bifi::RunConfig{} : bifi::load_config(c.config);
  if (!c.out.empty()) cfg.output_dir = c.out;
  if (c.seed >= 0) cfg.seed = static_cast<std::uint64_t>(c.seed);
  if (c.workers > 0) cfg.workers = c.workers;
  if (c.epsilon > 0.0) cfg.params.epsilon = c.epsilon;
  if (c.deterministic) cfg.deterministic = true;
  cfg.validate();
  return cfg;
}

std::vector<bifi::Vector> read_queries(const std::string& path) {
  const nlohmann::json j = bifi::read_json(path);
  std::vector<bifi::Vector> out;
  for (const auto& row : j) {
    const auto v = row.get<std::vector<double>>();
    out.push_back(Eigen::Map<const bifi::Vector>(v.data(), v.size()));
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Bi-fidelity stochastic collocation for multi-phase kinetic-fluid flows"};
  app.require_subcommand(1);
  Common common;
  std::string queries;
  int online_K = -1;

  auto* offline = app.add_subcommand("offline", "low-fidelity sweep, greedy selection, high-fidelity runs at the nodes");
  auto* online = app.add_subcommand("online", "bi-fidelity approximation at new parameter samples");
  auto* evaluate = app.add_subcommand("evaluate", "held-out errors for every configured K");
  auto* energy = app.add_subcommand("energy-study", "energy decay of one high-fidelity trajectory");
  auto* convergence = app.add_subcommand("convergence-study", "offline followed by evaluate");
  for (auto* sub : {offline, online, evaluate, energy, convergence}) add_common(sub, common);
  online->add_option("--samples", queries, "JSON array of z vectors (default: the held-out stream)");
  online->add_option("-K", online_K, "number of nodes to use (default: largest configured K)");

  CLI11_PARSE(app, argc, argv);

  try {
    const bifi::RunConfig cfg = resolve(common);
    std::ostream& log = std::cerr;
    if (offline->parsed()) {
      bifi::cmd_offline(cfg, log);
    } else if (online->parsed()) {
      std::vector<bifi::Vector> zs;
      if (!queries.empty()) {
        zs = read_queries(queries);
      } else {
        const bifi::RunContext ctx = bifi::make_context(cfg);
        for (const auto& s : bifi::draw_samples(cfg.M_eval, ctx.z_dim(), cfg.distribution, cfg.seed, 1))
          zs.push_back(s.z);
      }
      const auto res = bifi::cmd_online(cfg, zs, log, online_K);
      double lo = 0, on = 0;
      for (std::size_t k = 0; k < zs.size(); ++k) {
        lo += res.lo_s[k];
        on += res.online_s[k];
      }
      if (!zs.empty())
        log << "mean online time " << on / zs.size() << " s, mean low-fidelity run " << lo / zs.size() << " s\n";
    } else if (evaluate->parsed()) {
      bifi::cmd_evaluate(cfg, log);
    } else if (energy->parsed()) {
      bifi::cmd_energy_study(cfg, log);
    } else if (convergence->parsed()) {
      bifi::cmd_convergence_study(cfg, log);
    }
  } catch (const bifi::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfig;
  } catch (const bifi::RankDeficient& e) {
    std::cerr << "rank deficiency: " << e.what() << '\n';
    return kRank;
  } catch (const bifi::NumericalFailure& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return kNumerical;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kFailure;
  }
  return kOk;
}
