#include <doctest.h>

#include "bifi/orchestrator.hpp"

#include <cstdlib>
#include <fstream>
#include <random>
#include <sstream>

using namespace bifi;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() / ("bifi_orch_" + std::to_string(std::random_device{}()));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

RunConfig smoke(const fs::path& out) {
  RunConfig c = load_config(fs::path(BIFI_SOURCE_DIR) / "configs" / "smoke.json");
  c.output_dir = out.string();
  return c;
}

int count_files(const nlohmann::json& files, const std::string& prefix) {
  int n = 0;
  for (const auto& f : files) {
    const std::string p = f.at("path");
    if (p.rfind(prefix, 0) == 0 && p.size() > 4 && p.substr(p.size() - 4) == ".bin") ++n;
  }
  return n;
}

std::string slurp(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  std::stringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

int cli(const std::string& args) {
  const std::string cmd = std::string(BIFI_CLI) + " " + args + " > /dev/null 2>&1";
  const int rc = std::system(cmd.c_str());
  return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

}  // namespace

TEST_CASE("parallel_for runs every index and keeps failures per index") {
  std::vector<int> hits(50, 0);
  auto errs = parallel_for(50, 4, [&](int k) {
    hits[k] += 1;
    if (k % 7 == 3) throw NumericalFailure("boom");
  });
  for (int k = 0; k < 50; ++k) {
    CHECK(hits[k] == 1);
    CHECK(static_cast<bool>(errs[k]) == (k % 7 == 3));
  }
}

TEST_CASE("smoke offline, online and evaluate") {
  TempDir tmp;
  const RunConfig cfg = smoke(tmp.path);
  std::ostringstream log;
  const OfflineResult off = cmd_offline(cfg, log);
  CHECK(off.candidates.size() == 8);
  REQUIRE(off.selections.size() == 1);
  CHECK(off.selections[0].rank() == 3);
  CHECK(off.hi.size() == 3);

  const nlohmann::json man = read_json(tmp.path / "offline" / "manifest.json");
  CHECK(count_files(man.at("files"), "lo/") == 8);
  CHECK(count_files(man.at("files"), "hi/") == 3);
  CHECK(man.at("config_hash") == cfg.hash());
  CHECK(man.at("software_version") == kVersion);
  for (const auto& f : man.at("files")) CHECK(sha256_file(tmp.path / "offline" / f.at("path").get<std::string>()) == f.at("sha256"));

  SUBCASE("re-running reuses the snapshots and reproduces the pivots") {
    // simulate an interrupted sweep: one candidate missing, one corrupted
    fs::remove(tmp.path / "offline" / "lo" / "lo_00002.json");
    {
      std::ofstream f(tmp.path / "offline" / "lo" / "lo_00005.bin", std::ios::app | std::ios::binary);
      f << "x";
    }
    std::ostringstream log2;
    const OfflineResult again = cmd_offline(cfg, log2);
    CHECK(again.selections[0].pivots == off.selections[0].pivots);
    CHECK(log2.str().find("6 reused") != std::string::npos);
    for (std::size_t m = 0; m < 8; ++m) CHECK(again.candidates[m].values == off.candidates[m].values);
  }
  SUBCASE("loaded artifacts match the fresh ones") {
    const OfflineResult ld = load_offline(cfg);
    CHECK(ld.selections[0].pivots == off.selections[0].pivots);
    CHECK(ld.hi.size() == 3);
    RunConfig other = cfg;
    other.seed += 1;
    CHECK_THROWS_AS(load_offline(other), ConfigError);
  }
  SUBCASE("online batch") {
    const RunContext ctx = make_context(cfg);
    std::vector<Vector> zs;
    for (const auto& s : draw_samples(4, ctx.z_dim(), cfg.distribution, cfg.seed, 1)) zs.push_back(s.z);
    const OnlineResult on = cmd_online(cfg, zs, log);
    CHECK(on.bi.size() == 4);
    for (int k = 0; k < 4; ++k) {
      CHECK(on.bi[k].fidelity == Fidelity::Bi);
      CHECK(on.bi[k].z == zs[k]);
      CHECK(snapshot_valid(tmp.path / "online", "bi_0000" + std::to_string(k)));
    }
    CHECK(read_json(tmp.path / "online" / "manifest.json").at("queries") == 4);
  }
  SUBCASE("evaluate") {
    const auto rows = cmd_evaluate(cfg, log);
    CHECK(rows.size() == 2);  // one K, two moment components
    const std::string csv = slurp(tmp.path / "convergence.csv");
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 3);
    CHECK(read_json(tmp.path / "evaluate.json").at("evaluated") == 4);
    for (const auto& r : rows) {
      CHECK(r.err_bi >= 0.0);
      CHECK(r.err_lo > 0.0);
    }
  }
}

TEST_CASE("online needs offline artifacts") {
  TempDir tmp;
  std::ostringstream log;
  CHECK_THROWS_AS(cmd_online(smoke(tmp.path), {}, log), Error);
}

TEST_CASE("aliased fidelities reproduce the high-fidelity run at the nodes") {
  TempDir tmp;
  RunConfig cfg = smoke(tmp.path);
  cfg.lofi = LoFiKind::parse("coarse_kinetic", 1);
  cfg.M = 10;
  cfg.K_list = {5};
  cfg.concatenated = false;
  std::ostringstream log;
  const OfflineResult off = cmd_offline(cfg, log);
  std::vector<int> nodes;
  for (const auto& [p, s] : off.hi) nodes.push_back(p);
  std::vector<Vector> zs;
  for (int p : nodes) zs.push_back(off.candidates[p].z);
  const OnlineResult on = cmd_online(cfg, zs, log);
  // only nodes selected by both groups are reproduced by both models
  for (std::size_t k = 0; k < nodes.size(); ++k) {
    const Snapshot& truth = off.hi.at(nodes[k]);
    for (std::size_t g = 0; g < off.groups.size(); ++g) {
      const auto& piv = off.selections[g].pivots;
      if (std::find(piv.begin(), piv.end(), nodes[k]) == piv.end()) continue;
      for (const std::string& comp : off.groups[g].components) {
        const double err = (on.bi[k].component(comp) - truth.component(comp)).norm();
        CHECK(err <= 1e-10 * (1.0 + truth.component(comp).norm()));
      }
    }
  }
}

TEST_CASE("energy study") {
  TempDir tmp;
  RunConfig cfg = smoke(tmp.path);
  cfg.checkpoints = 6;
  cfg.t_final = 0.03;
  std::ostringstream log;
  SUBCASE("equilibrium gives a zero series") {
    cfg.initial.profile = Profile::Equilibrium;
    const EnergyStudy es = cmd_energy_study(cfg, log);
    CHECK(es.t.size() == 7);
    for (int s = 0; s < 3; ++s)
      for (double e : es.E[s]) CHECK(e < 1e-20);
    CHECK(!es.fit.ok);
    CHECK(fs::exists(tmp.path / "energy.csv"));
  }
  SUBCASE("near-equilibrium data decays") {
    cfg.initial.profile = Profile::NearEquilibrium;
    cfg.initial.particles_follow_fluid = true;
    cfg.initial.zero_total_momentum = true;
    const EnergyStudy es = cmd_energy_study(cfg, log);
    CHECK(es.monotone);
    CHECK(es.fit.ok);
    CHECK(es.fit.lambda > 0.0);
    CHECK(es.conservation.momentum_drift < 1e-10);
    const nlohmann::json j = read_json(tmp.path / "energy.json");
    CHECK(j.at("tail_reweighted_points").get<int>() == es.tail_points);

  }
}

TEST_CASE("command line") {
  TempDir tmp;
  const std::string conf = (fs::path(BIFI_SOURCE_DIR) / "configs" / "smoke.json").string();

  SUBCASE("config errors exit with 2") {
    std::ofstream(tmp.path / "bad.json") << R"({"model": {"bogus": 1}})";
    CHECK(cli("offline -c " + (tmp.path / "bad.json").string() + " -o " + tmp.path.string()) == 2);
    CHECK(cli("offline -c " + (tmp.path / "missing.json").string()) == 2);
  }
  SUBCASE("rank deficiency exits with 4") {
    // no randomness: every candidate is the same snapshot
    std::ofstream(tmp.path / "rank.json") << R"({"grid": {"n_x": 16, "n_v": 16}, "kl": {"sigma": 0.0},
      "sweep": {"M": 4, "K": 3, "M_eval": 1}, "run": {"t_final": 0.01}})";
    CHECK(cli("offline -c " + (tmp.path / "rank.json").string() + " -o " + (tmp.path / "r").string()) == 4);
  }
  SUBCASE("identical runs write byte-identical tables") {
    const fs::path a = tmp.path / "a", b = tmp.path / "b";
    CHECK(cli("convergence-study -c " + conf + " --deterministic -j 2 -o " + a.string()) == 0);
    CHECK(cli("convergence-study -c " + conf + " --deterministic -j 1 -o " + b.string()) == 0);
    REQUIRE(fs::exists(a / "convergence.csv"));
    CHECK(slurp(a / "convergence.csv") == slurp(b / "convergence.csv"));
    CHECK(slurp(a / "evaluate.json") == slurp(b / "evaluate.json"));
    CHECK(read_json(a / "offline" / "manifest.json").at("selections") ==
          read_json(b / "offline" / "manifest.json").at("selections"));
  }
  SUBCASE("online and energy-study subcommands") {
    const fs::path o = tmp.path / "o";
    CHECK(cli("online -c " + conf + " -o " + o.string()) == 1);  // nothing offline yet
    CHECK(cli("offline -c " + conf + " -o " + o.string()) == 0);
    CHECK(cli("online -c " + conf + " -K 2 -o " + o.string()) == 0);
    CHECK(read_json(o / "online" / "manifest.json").at("queries") == 4);
    CHECK(cli("energy-study -c " + conf + " -o " + o.string()) == 0);
    CHECK(fs::exists(o / "energy.csv"));
    CHECK(cli("no-such-command") != 0);
  }
}
