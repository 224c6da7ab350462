#include "bifi/orchestrator.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <thread>

namespace bifi {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string stem(const char* prefix, int index) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%s_%05d", prefix, index);
  return buf;
}

const char* axis(int d) { return d == 0 ? "x" : "y"; }

SnapshotLayout full_layout(const Grid& grid, int n_species) {
  SnapshotLayout l;
  l.grid = grid;
  l.components.push_back("rho");
  for (int d = 0; d < grid.dim(); ++d) l.components.push_back(std::string("mom_") + axis(d));
  for (int s = 1; s <= n_species; ++s) l.components.push_back("n_" + std::to_string(s));
  for (int s = 1; s <= n_species; ++s)
    for (int d = 0; d < grid.dim(); ++d) l.components.push_back("up_" + std::to_string(s) + "_" + axis(d));
  for (int d = 0; d < grid.dim(); ++d) l.components.push_back(std::string("u_") + axis(d));
  return l;
}

// Re-throws with the sample id in front, keeping the error category.
[[noreturn]] void rethrow_for_sample(int sample) {
  const std::string where = "sample " + std::to_string(sample) + ": ";
  try {
    throw;
  } catch (const RankDeficient&) {
    throw;
  } catch (const ConfigError& e) {
    throw ConfigError(where + e.what());
  } catch (const NumericalFailure& e) {
    throw NumericalFailure(where + e.what());
  }
}

fs::path out_dir(const RunConfig& cfg) { return fs::path(cfg.output_dir); }

nlohmann::json inventory_entry(const fs::path& root, const fs::path& file) {
  return {{"path", fs::relative(file, root).string()}, {"sha256", sha256_file(file)}};
}

// Per-sample run with resume: an existing snapshot whose checksum matches is
// loaded instead of recomputed.
struct SweepOutcome {
  std::vector<Snapshot> snapshots;
  std::vector<bool> ok;
  std::vector<std::string> errors;
  int reused = 0;
};

SweepOutcome sweep(int n, int workers, const fs::path& dir, const char* prefix,
                   const std::function<int(int)>& sample_of, const std::function<Snapshot(int)>& run) {
  fs::create_directories(dir);
  SweepOutcome out;
  out.snapshots.resize(n);
  out.ok.assign(n, false);
  out.errors.resize(n);
  std::atomic<int> reused{0};
  auto errs = parallel_for(n, workers, [&](int k) {
    const std::string st = stem(prefix, sample_of(k));
    if (snapshot_valid(dir, st)) {
      out.snapshots[k] = load_snapshot(dir, st);
      ++reused;
      return;
    }
    Snapshot s = run(k);
    save_snapshot(s, dir, st);
    out.snapshots[k] = std::move(s);
  });
  for (int k = 0; k < n; ++k) {
    if (!errs[k]) {
      out.ok[k] = true;
      continue;
    }
    try {
      std::rethrow_exception(errs[k]);
    } catch (const NumericalFailure& e) {
      out.errors[k] = e.what();
    }
    // anything that is not a numerical failure aborts the whole stage
  }
  out.reused = reused;
  return out;
}

}  // namespace

RunContext make_context(const RunConfig& cfg) {
  cfg.validate();
  RunContext ctx;
  ctx.cfg = cfg;
  ctx.hi = cfg.hi_grid();
  ctx.lo = cfg.lo_grid();
  ctx.kl_hi = kl_decompose(assemble_covariance(ctx.hi, cfg.ell, cfg.kl_periodic), ctx.hi, cfg.kl_fraction, cfg.ell,
                           cfg.sigma);
  ctx.kl_lo = ctx.kl_hi.on_grid(ctx.lo);
  return ctx;
}

Snapshot kinetic_snapshot(const KineticState& state, const ModelParams& params, const Grid& grid) {
  const MomentSet m = moments(state, params, grid);
  Snapshot s = Snapshot::zeros(full_layout(grid, params.n_species));
  s.component("rho") = m.rho_total.matrix();
  for (int d = 0; d < grid.dim(); ++d) {
    Vector mom = Vector::Zero(grid.n_cells());
    for (const Array2D& J : m.J) mom += J.row(d).transpose().matrix();
    s.component(std::string("mom_") + axis(d)) = mom;
    s.component(std::string("u_") + axis(d)) = state.u.row(d).transpose().matrix();
  }
  for (int sp = 0; sp < params.n_species; ++sp) {
    const std::string id = std::to_string(sp + 1);
    s.component("n_" + id) = m.n[sp].matrix();
    for (int d = 0; d < grid.dim(); ++d) {
      const Array rho = m.rho[sp];
      const Array J = m.J[sp].row(d).transpose();
      s.component("up_" + id + "_" + axis(d)) = (rho > 0.0).select(J / rho, 0.0).matrix();
    }
  }
  s.fidelity = Fidelity::High;
  return s;
}

Snapshot fluid_snapshot(const FluidState& state, const Grid& grid) {
  const int ns = static_cast<int>(state.n.size());
  Snapshot s = Snapshot::zeros(full_layout(grid, ns));
  const Array rho = composite_density(state);
  s.component("rho") = rho.matrix();
  for (int d = 0; d < grid.dim(); ++d) {
    const Array u = state.u.row(d).transpose();
    s.component(std::string("mom_") + axis(d)) = (rho * u).matrix();
    s.component(std::string("u_") + axis(d)) = u.matrix();
    for (int sp = 0; sp < ns; ++sp) s.component("up_" + std::to_string(sp + 1) + "_" + axis(d)) = u.matrix();
  }
  for (int sp = 0; sp < ns; ++sp) s.component("n_" + std::to_string(sp + 1)) = state.n[sp].matrix();
  s.fidelity = Fidelity::Low;
  return s;
}

Snapshot run_high_fidelity(const RunContext& ctx, const Vector& z, int sample) {
  const auto t0 = Clock::now();
  try {
    const KineticState init = build_initial_state(ctx.cfg.initial, z, ctx.cfg.params, ctx.hi, ctx.kl_hi);
    const KineticSolver solver(ctx.cfg.params, ctx.hi);
    Snapshot s = kinetic_snapshot(solver.advance(init, ctx.cfg.t_final), ctx.cfg.params, ctx.hi);
    s.z = z;
    s.sample = sample;
    s.fidelity = Fidelity::High;
    s.runtime_s = seconds_since(t0);
    return s;
  } catch (...) {
    rethrow_for_sample(sample);
  }
}

Snapshot run_low_fidelity(const RunContext& ctx, const Vector& z, int sample) {
  return run_low_fidelity(ctx, z, ctx.cfg.lofi, sample);
}

Snapshot run_low_fidelity(const RunContext& ctx, const Vector& z, const LoFiKind& kind, int sample) {
  const auto t0 = Clock::now();
  const ModelParams& p = ctx.cfg.params;
  try {
    const Grid grid = ctx.hi.coarsened(kind.factor);
    const KLField kl = kind.factor == ctx.cfg.lofi.factor ? ctx.kl_lo : ctx.kl_hi.on_grid(grid);
    const KineticState init = build_initial_state(ctx.cfg.initial, z, p, grid, kl);
    Snapshot s;
    switch (kind.tag) {
      case LoFiKind::Tag::CoarseKinetic: {
        const KineticSolver solver(p, grid);
        s = kinetic_snapshot(solver.advance(init, ctx.cfg.t_final), p, grid);
        break;
      }
      case LoFiKind::Tag::HydroLimit: {
        const HydroSolver solver(p, grid);
        s = fluid_snapshot(solver.advance(fluid_from_kinetic(init, p, grid), ctx.cfg.t_final), grid);
        break;
      }
      case LoFiKind::Tag::Acoustic: {
        // linearize around the rest state with the background density 1/|X|
        const FluidState f = fluid_from_kinetic(init, p, grid);
        const double nbar = 1.0 / grid.domain_volume();
        AcousticState a;
        for (const Array& n : f.n) a.n_tilde.push_back((n / nbar - 1.0) / p.delta);
        a.u_tilde = f.u / p.delta;
        a.p_tilde = Array::Zero(grid.n_cells());
        const AcousticState r = AcousticSolver(p, grid).advance(a, ctx.cfg.t_final);
        FluidState back;
        for (const Array& n : r.n_tilde) back.n.push_back(nbar * (1.0 + p.delta * n));
        back.u = p.delta * r.u_tilde;
        back.p = p.delta * r.p_tilde;
        back.t = r.t;
        s = fluid_snapshot(back, grid);
        break;
      }
    }
    s.z = z;
    s.sample = sample;
    s.fidelity = Fidelity::Low;
    s.runtime_s = seconds_since(t0);
    return s;
  } catch (...) {
    rethrow_for_sample(sample);
  }
}

std::vector<std::exception_ptr> parallel_for(int n, int workers, const std::function<void(int)>& f) {
  std::vector<std::exception_ptr> errors(n);
  std::atomic<int> next{0};
  auto worker = [&] {
    for (int k = next++; k < n; k = next++) {
      try {
        f(k);
      } catch (...) {
        errors[k] = std::current_exception();
      }
    }
  };
  const int nt = std::max(1, std::min(workers, n));
  if (nt == 1) {
    worker();
    return errors;
  }
  std::vector<std::thread> pool;
  for (int t = 0; t < nt; ++t) pool.emplace_back(worker);
  for (auto& th : pool) th.join();
  return errors;
}

OfflineResult cmd_offline(const RunConfig& cfg, std::ostream& log) {
  const auto t_start = Clock::now();
  const RunContext ctx = make_context(cfg);
  const fs::path root = out_dir(cfg) / "offline";
  fs::create_directories(root);
  nlohmann::json timings = nlohmann::json::object();
  nlohmann::json warnings = nlohmann::json::array();

  save_kl(ctx.kl_hi, root, "kl");
  log << "KL: " << ctx.kl_hi.n_modes << " modes retain " << ctx.kl_hi.spectrum_fraction << " of the spectrum\n";

  int clamped = 0;
  for (int m = 0; m < cfg.M; ++m) {
    InitialDataReport rep;
    build_initial_state(cfg.initial, draw_sample(m, ctx.z_dim(), cfg.distribution, cfg.seed, 0).z, cfg.params,
                        ctx.lo, ctx.kl_lo, &rep);
    clamped += rep.clamped;
  }
  if (clamped > 0) warnings.push_back("density factor clamped at " + std::to_string(clamped) + " low-fidelity cells");

  // 1. low-fidelity sweep over the training stream
  auto t0 = Clock::now();
  const auto training = draw_samples(cfg.M, ctx.z_dim(), cfg.distribution, cfg.seed, 0);
  const SweepOutcome lo = sweep(cfg.M, cfg.workers, root / "lo", "lo", [](int k) { return k; },
                                [&](int k) { return run_low_fidelity(ctx, training[k].z, k); });
  timings["low_fidelity_s"] = seconds_since(t0);
  OfflineResult res;
  res.groups = moment_groups(cfg.params.dim, cfg.concatenated);
  for (int m = 0; m < cfg.M; ++m) {
    if (lo.ok[m]) {
      res.candidates.push_back(lo.snapshots[m]);
    } else {
      res.failed.push_back(m);
      warnings.push_back(lo.errors[m]);
    }
  }
  log << "low fidelity: " << res.candidates.size() << " of " << cfg.M << " candidates (" << lo.reused << " reused)\n";
  if (res.failed.size() * 100 > static_cast<std::size_t>(cfg.M))
    throw NumericalFailure(std::to_string(res.failed.size()) + " of " + std::to_string(cfg.M) +
                           " low-fidelity candidates failed; first: " + lo.errors[res.failed.front()]);

  // 2. greedy selection per component group
  t0 = Clock::now();
  std::set<int> nodes;
  nlohmann::json sel_json = nlohmann::json::array();
  for (const ComponentGroup& g : res.groups) {
    SnapshotSet restricted;
    for (const Snapshot& s : res.candidates) restricted.push_back(s.restrict(g.components));
    res.selections.push_back(greedy_select(restricted, cfg.K()));
    save_selection(res.selections.back(), root, "selection_" + g.name);
    nodes.insert(res.selections.back().pivots.begin(), res.selections.back().pivots.end());
    const GramianReport gr = gramian_report(res.selections.back().gramian);
    std::vector<int> samples;
    for (int p : res.selections.back().pivots) samples.push_back(res.candidates[p].sample);
    sel_json.push_back({{"group", g.name},
                        {"pivot_samples", samples},
                        {"lambda_min", gr.lambda_min},
                        {"condition", gr.condition}});
    log << "group " << g.name << ": pivots";
    for (int s : samples) log << ' ' << s;
    log << '\n';
  }
  timings["selection_s"] = seconds_since(t0);

  // 3. high-fidelity runs at the selected nodes
  t0 = Clock::now();
  const std::vector<int> node_list(nodes.begin(), nodes.end());
  const SweepOutcome hi = sweep(
      static_cast<int>(node_list.size()), cfg.workers, root / "hi", "hi",
      [&](int k) { return res.candidates[node_list[k]].sample; },
      [&](int k) {
        const Snapshot& c = res.candidates[node_list[k]];
        return run_high_fidelity(ctx, c.z, c.sample);
      });
  for (std::size_t k = 0; k < node_list.size(); ++k) {
    if (!hi.ok[k]) throw NumericalFailure("high-fidelity run failed: " + hi.errors[k]);
    res.hi[node_list[k]] = hi.snapshots[k];
  }
  timings["high_fidelity_s"] = seconds_since(t0);
  log << "high fidelity: " << node_list.size() << " runs (" << hi.reused << " reused)\n";

  nlohmann::json files = nlohmann::json::array();
  for (const auto& entry : fs::recursive_directory_iterator(root)) {
    if (!entry.is_regular_file() || entry.path().filename() == "manifest.json") continue;
    files.push_back(inventory_entry(root, entry.path()));
  }
  std::sort(files.begin(), files.end(), [](const auto& a, const auto& b) { return a["path"] < b["path"]; });
  timings["total_s"] = seconds_since(t_start);
  write_json(root / "manifest.json", {{"kind", "offline"},
                                      {"software_version", kVersion},
                                      {"config_hash", cfg.hash()},
                                      {"config", cfg.to_json()},
                                      {"kl_modes", ctx.kl_hi.n_modes},
                                      {"kl_spectrum_fraction", ctx.kl_hi.spectrum_fraction},
                                      {"candidates", res.candidates.size()},
                                      {"failed_samples", res.failed},
                                      {"selections", sel_json},
                                      {"timings", timings},
                                      {"warnings", warnings},
                                      {"files", files}});
  return res;
}

OfflineResult load_offline(const RunConfig& cfg) {
  const fs::path root = out_dir(cfg) / "offline";
  if (!fs::exists(root / "manifest.json")) throw Error("no offline artifacts in " + root.string());
  const nlohmann::json man = read_json(root / "manifest.json");
  if (man.at("config_hash").get<std::string>() != cfg.hash())
    throw ConfigError("offline artifacts in " + root.string() + " were produced by a different config");
  for (const auto& f : man.at("files"))
    if (sha256_file(root / f.at("path").get<std::string>()) != f.at("sha256").get<std::string>())
      throw Error("checksum mismatch for " + (root / f.at("path").get<std::string>()).string());

  OfflineResult res;
  res.groups = moment_groups(cfg.params.dim, cfg.concatenated);
  res.failed = man.at("failed_samples").get<std::vector<int>>();
  const std::set<int> failed(res.failed.begin(), res.failed.end());
  std::map<int, int> position;  // sample -> candidate position
  for (int m = 0; m < cfg.M; ++m) {
    if (failed.count(m)) continue;
    position[m] = static_cast<int>(res.candidates.size());
    res.candidates.push_back(load_snapshot(root / "lo", stem("lo", m)));
  }
  for (const ComponentGroup& g : res.groups) {
    res.selections.push_back(load_selection(root, "selection_" + g.name));
    for (int p : res.selections.back().pivots) {
      if (res.hi.count(p)) continue;
      res.hi[p] = load_snapshot(root / "hi", stem("hi", res.candidates.at(p).sample));
    }
  }
  return res;
}

OnlineResult cmd_online(const RunConfig& cfg, const std::vector<Vector>& queries, std::ostream& log, int K) {
  const RunContext ctx = make_context(cfg);
  const OfflineResult off = load_offline(cfg);
  if (K < 0) K = cfg.K();
  const GroupedModel model = grouped_model(off.groups, off.selections, off.candidates, off.hi, K);
  const fs::path dir = out_dir(cfg) / "online";
  fs::create_directories(dir);

  OnlineResult res;
  const int n = static_cast<int>(queries.size());
  res.bi.resize(n);
  res.online_s.resize(n);
  res.lo_s.resize(n);
  auto errs = parallel_for(n, cfg.workers, [&](int k) {
    const auto t0 = Clock::now();
    const Snapshot lo = run_low_fidelity(ctx, queries[k], k);
    res.lo_s[k] = lo.runtime_s;
    Snapshot bi = approximate(lo, model);
    res.online_s[k] = seconds_since(t0);
    bi.sample = k;
    bi.runtime_s = res.online_s[k];
    res.bi[k] = std::move(bi);
  });
  for (auto& e : errs)
    if (e) std::rethrow_exception(e);
  nlohmann::json files = nlohmann::json::array();
  for (int k = 0; k < n; ++k) {
    save_snapshot(res.bi[k], dir, stem("bi", k), {{"K", K}, {"lo_runtime_s", res.lo_s[k]}});
    files.push_back(inventory_entry(dir, dir / (stem("bi", k) + ".bin")));
  }
  write_json(dir / "manifest.json", {{"kind", "online"},
                                     {"software_version", kVersion},
                                     {"config_hash", cfg.hash()},
                                     {"K", K},
                                     {"queries", n},
                                     {"files", files}});
  log << "online: " << n << " bi-fidelity snapshots written to " << dir.string() << '\n';
  return res;
}

std::vector<ConvergenceRow> cmd_evaluate(const RunConfig& cfg, std::ostream& log) {
  const RunContext ctx = make_context(cfg);
  OfflineResult off = load_offline(cfg);
  const fs::path root = out_dir(cfg) / "eval";
  const auto eval = draw_samples(cfg.M_eval, ctx.z_dim(), cfg.distribution, cfg.seed, 1);

  auto t0 = Clock::now();
  const SweepOutcome lo = sweep(cfg.M_eval, cfg.workers, root / "lo", "lo", [](int k) { return k; },
                                [&](int k) { return run_low_fidelity(ctx, eval[k].z, k); });
  const SweepOutcome hi = sweep(cfg.M_eval, cfg.workers, root / "hi", "hi", [](int k) { return k; },
                                [&](int k) { return run_high_fidelity(ctx, eval[k].z, k); });
  const double t_runs = seconds_since(t0);

  ConvergenceInput in;
  for (int k = 0; k < cfg.M_eval; ++k) {
    if (!lo.ok[k] || !hi.ok[k]) {
      log << "evaluation sample " << k << " skipped: " << (lo.ok[k] ? hi.errors[k] : lo.errors[k]) << '\n';
      continue;
    }
    in.lo_eval.push_back(lo.snapshots[k]);
    in.hi_eval.push_back(hi.snapshots[k]);
  }
  in.lo_candidates = off.candidates;
  in.groups = off.groups;
  in.K_list = cfg.K_list;
  in.high_fidelity = [&](const std::vector<int>& idx) {
    std::map<int, Snapshot> out;
    for (int p : idx) {
      auto it = off.hi.find(p);
      out[p] = it != off.hi.end() ? it->second : run_high_fidelity(ctx, off.candidates[p].z, off.candidates[p].sample);
    }
    return out;
  };
  const std::vector<ConvergenceRow> rows = convergence_study(in);

  std::ofstream csv(out_dir(cfg) / "convergence.csv", std::ios::trunc);
  write_convergence_csv(csv, rows, cfg.deterministic);
  nlohmann::json man = {{"kind", "evaluate"},
                        {"software_version", kVersion},
                        {"config_hash", cfg.hash()},
                        {"evaluated", in.hi_eval.size()},
                        {"files", {"convergence.csv"}}};
  if (!cfg.deterministic) man["timings"] = {{"runs_s", t_runs}};
  write_json(out_dir(cfg) / "evaluate.json", man);
  log << "evaluate: " << in.hi_eval.size() << " held-out samples, table in "
      << (out_dir(cfg) / "convergence.csv").string() << '\n';
  return rows;
}

EnergyStudy cmd_energy_study(const RunConfig& cfg, std::ostream& log) {
  const RunContext ctx = make_context(cfg);
  const ModelParams& p = cfg.params;
  const Vector z = draw_sample(0, ctx.z_dim(), cfg.distribution, cfg.seed, 1).z;
  KineticState st = build_initial_state(cfg.initial, z, p, ctx.hi, ctx.kl_hi);
  const KineticSolver solver(p, ctx.hi);

  EnergyStudy es;
  std::vector<ConservationCheckpoint> traj;
  auto record = [&](const KineticState& s) {
    es.t.push_back(s.t);
    for (int order = 0; order <= 2; ++order) {
      EnergyInfo info;
      es.E[order].push_back(energy(s, p, ctx.hi, order, &info));
      es.tail_points = info.tail_points;
    }
    traj.push_back(checkpoint(s, p, ctx.hi));
  };
  record(st);
  for (int k = 1; k <= cfg.checkpoints; ++k) {
    st = solver.advance(st, cfg.t_final * k / cfg.checkpoints);
    record(st);
  }
  es.fit = fit_decay(es.t, es.E[2]);
  es.monotone = non_increasing(es.E[2], 1e-10);
  es.conservation = conservation_report(traj);

  fs::create_directories(out_dir(cfg));
  std::ofstream csv(out_dir(cfg) / "energy.csv", std::ios::trunc);
  write_energy_csv(csv, es.t, es.E);
  write_json(out_dir(cfg) / "energy.json",
             {{"kind", "energy_study"},
              {"software_version", kVersion},
              {"config_hash", cfg.hash()},
              {"epsilon", p.epsilon},
              {"fit_ok", es.fit.ok},
              {"fit_reason", es.fit.reason},
              {"lambda_fit", es.fit.lambda},
              {"r2", es.fit.r2},
              {"monotone_E2", es.monotone},
              {"tail_reweighted_points", es.tail_points},
              {"tail_reweighting", "where mu_i/max(mu_i) < 1e-20 the f-term uses weight 1 instead of 1/mu_i"},
              {"mass_drift", es.conservation.mass_drift},
              {"momentum_drift", es.conservation.momentum_drift}});
  log << "energy: E2(0) = " << es.E[2].front() << ", E2(T) = " << es.E[2].back()
      << ", lambda_fit = " << es.fit.lambda << " (R^2 = " << es.fit.r2 << ")"
      << (es.monotone ? ", non-increasing" : ", NOT monotone") << '\n';
  return es;
}

std::vector<ConvergenceRow> cmd_convergence_study(const RunConfig& cfg, std::ostream& log) {
  cmd_offline(cfg, log);
  return cmd_evaluate(cfg, log);
}

}  // namespace bifi
