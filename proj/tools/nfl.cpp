// Command-line front end: nfl <subcommand> [--config FILE|default] [options]
#include "nf/experiments.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <sstream>

using namespace nf;
using nlohmann::json;

namespace {

struct Options {
  std::string config = "default";
  std::string output_dir;
  int threads = -1;
  // simulate / expand
  double epsilon = 0.05;
  int paths = -1;
  long long seed = -1;
  std::vector<double> ladder;
  bool phase = false;
  // report
  bool rerun = false;
  std::vector<int> only;
};

ExperimentConfig configure(const Options& o) {
  ExperimentConfig cfg = load_config(o.config);
  if (!o.output_dir.empty()) cfg.output_dir = o.output_dir;
  if (o.threads >= 0) cfg.experiments.threads = o.threads;
  if (o.seed >= 0) cfg.experiments.seed = static_cast<std::uint64_t>(o.seed);
  if (!o.ladder.empty()) cfg.experiments.epsilon_ladder = o.ladder;
  validate(cfg);
  return cfg;
}

json header(const ExperimentConfig& cfg, const char* kind) {
  return {{"schema_version", kSchemaVersion}, {"kind", kind}, {"config_hash", config_hash(cfg)},
          {"seed", cfg.experiments.seed}};
}

json grid_json(const GridSpec& g) {
  return {{"half_length", g.half_length}, {"n_points", g.n_points}, {"spacing", g.spacing}};
}

std::vector<double> to_std(const Vec& v) { return {v.data(), v.data() + v.size()}; }

int cmd_wave(const Options& o) {
  const ExperimentConfig cfg = configure(o);
  const GridSpec g = cfg.grid();
  const WaveSolution ws = solve_wave(cfg.model, g, 1e-13);
  ensure_dir(cfg.output_dir);
  json j = header(cfg, "wave");
  j["grid"] = grid_json(g);
  j["speed"] = ws.speed;
  j["residual"] = ws.residual;
  j["iterations"] = ws.iterations;
  j["fixed_points"] = {ws.fixed_points.a1, ws.fixed_points.a, ws.fixed_points.a2};
  j["profile"] = to_std(ws.profile);
  j["u_x"] = to_std(ws.d1);
  write_json(cfg.output_dir + "/wave.json", j);
  Table t{"wave", {"x", "u", "u_x", "u_xx"}, {}};
  for (int i = 0; i < g.n_points; ++i) t.rows.push_back({g.x(i), ws.profile[i], ws.d1[i], ws.d2[i]});
  write_csv(cfg.output_dir + "/wave.csv", t);
  write_snapshots(cfg.output_dir + "/wave.bin", g, {0, 1, 2}, {ws.profile, ws.d1, ws.d2});
  std::printf("speed %.15g  residual %.3e  iterations %d\n", ws.speed, ws.residual, ws.iterations);
  return 0;
}

int cmd_adjoint(const Options& o) {
  const ExperimentConfig cfg = configure(o);
  const GridSpec g = cfg.grid();
  const WaveSolution ws = solve_wave(cfg.model, g, 1e-13);
  const SpectralData sd = build_spectral(ws, true);
  ensure_dir(cfg.output_dir);
  json j = header(cfg, "adjoint");
  j["grid"] = grid_json(g);
  j["speed"] = ws.speed;
  j["adjoint_residual"] = sd.adjoint_residual;
  j["sigma_min"] = sd.sigma_min;
  j["sigma_2"] = sd.sigma_2;
  j["kappa_gap"] = sd.gap;
  j["l_rho"] = sd.l_rho;
  j["k_rho"] = sd.k_rho;
  j["m_bound"] = sd.m_bound;
  j["rho_x_ok"] = sd.rho_x_ok;
  j["rho_window"] = {g.x(sd.rho_lo), g.x(sd.rho_hi)};
  j["psi"] = to_std(sd.psi);
  j["rho"] = to_std(sd.rho);
  write_json(cfg.output_dir + "/adjoint.json", j);
  Table t{"adjoint", {"x", "psi", "phi", "rho"}, {}};
  for (int i = 0; i < g.n_points; ++i) t.rows.push_back({g.x(i), sd.psi[i], sd.phi[i], sd.rho[i]});
  write_csv(cfg.output_dir + "/adjoint.csv", t);
  std::printf("residual %.3e  kappa %.6f  L_rho %.4f  K_rho %.4f  M %.4f\n", sd.adjoint_residual, sd.gap, sd.l_rho,
              sd.k_rho, sd.m_bound);
  return 0;
}

int cmd_simulate(const Options& o) {
  const ExperimentConfig cfg = configure(o);
  if (!(o.epsilon >= 0)) throw ConfigError("--epsilon must be nonnegative");
  Lab lab(cfg, false);
  const int np = o.paths > 0 ? o.paths : 1;
  std::vector<SimPath> paths(np);
  parallel_for(
      np, [&](int p) { paths[p] = run_path(lab.sim_config(o.epsilon), *lab.dyn, lab.noise, RngStream(cfg.experiments.seed, p)); },
      cfg.experiments.threads);
  ensure_dir(cfg.output_dir);
  json j = header(cfg, "simulate");
  j["epsilon"] = o.epsilon;
  j["threshold"] = std::pow(o.epsilon, 1 - cfg.sim.q_exponent);
  json arr = json::array();
  for (int p = 0; p < np; ++p) {
    const SimPath& s = paths[p];
    arr.push_back({{"path", p}, {"tau", s.tau}, {"stopped", s.stopped}, {"steps", s.steps},
                   {"final_h1_rho", s.norms.back().h1_rho}});
    Table t{"path", {"t", "l2", "l2_rho", "h1_1plusrho"}, {}};
    for (std::size_t k = 0; k < s.times.size(); ++k)
      t.rows.push_back({s.times[k], s.norms[k].l2, s.norms[k].l2_rho, s.norms[k].h1_rho});
    write_csv(cfg.output_dir + "/path_" + std::to_string(p) + ".csv", t);
  }
  j["paths"] = arr;
  write_json(cfg.output_dir + "/simulate.json", j);
  write_snapshots(cfg.output_dir + "/path_0.bin", lab.grid, paths[0].times, paths[0].snapshots);
  if (o.phase) {
    const SimPath inc = draw_increments(lab.noise, cfg.sim.dt, lab.steps(), cfg.sim.record_stride,
                                        RngStream(cfg.experiments.seed, 0));
    const ExpansionCoefficients ex =
        expand_path(inc, *lab.dyn, lab.noise, lab.eta, {.order = 2, .m_ladder = cfg.experiments.m_ladder});
    Table t{"phase", {"t", "C0", "C1"}, {}};
    for (double m : cfg.experiments.m_ladder) {
      std::ostringstream a, b;
      a << "C0_m" << m;
      b << "C1_m" << m;
      t.columns.push_back(a.str());
      t.columns.push_back(b.str());
    }
    for (std::size_t k = 0; k < ex.times.size(); ++k) {
      std::vector<double> row = {ex.times[k], ex.C0[k], ex.C1[k]};
      for (const FiniteM& f : ex.finite_m) {
        row.push_back(f.C0[k]);
        row.push_back(f.C1[k]);
      }
      t.rows.push_back(row);
    }
    write_csv(cfg.output_dir + "/phase_0.csv", t);
    write_snapshots(cfg.output_dir + "/v0_0.bin", lab.grid, ex.times, ex.v0);
    write_snapshots(cfg.output_dir + "/v1_0.bin", lab.grid, ex.times, ex.v1);
  }
  int stopped = 0;
  for (const SimPath& s : paths) stopped += s.stopped;
  std::printf("%d paths, %d stopped before T\n", np, stopped);
  return 0;
}

int print_and_save(const Report& r, const ExperimentConfig& cfg, const std::string& extra_name = {}) {
  save_report(r, cfg, cfg.output_dir);
  if (!extra_name.empty()) write_json(cfg.output_dir + "/" + extra_name, report_json(r, cfg));
  std::cout << verdict_line(r) << '\n';
  return 0;
}

int cmd_expand(const Options& o) {
  ExperimentConfig cfg = configure(o);
  if (o.paths > 0) cfg.experiments.expansion_paths = o.paths;
  Lab lab(cfg, false);
  return print_and_save(run_criterion(lab, 4), cfg, "expansion.json");
}

int cmd_asymptotics(const Options& o) {
  const ExperimentConfig cfg = configure(o);
  Lab lab(cfg, false);
  return print_and_save(run_criterion(lab, 9), cfg, "asymptotics.json");
}

int cmd_report(const Options& o) {
  const ExperimentConfig cfg = configure(o);
  const std::string hash = config_hash(cfg);
  std::vector<int> which = o.only;
  if (which.empty())
    for (int c = 1; c <= kCriteria; ++c) which.push_back(c);
  std::unique_ptr<Lab> lab;
  json all = header(cfg, "report");
  all["criteria"] = json::array();
  bool ok = true;
  std::printf("%-10s %-40s %s\n", "criterion", "title", "verdict");
  for (int c : which) {
    if (c < 1 || c > kCriteria) throw ConfigError("no criterion " + std::to_string(c));
    const std::string path = cfg.output_dir + "/criterion_" + std::to_string(c) + ".json";
    json j;
    if (!o.rerun && std::filesystem::exists(path)) {
      j = read_json(path);
      if (j.value("config_hash", "") != hash || j.value("schema_version", 0) != kSchemaVersion) j = nullptr;
    }
    if (j.is_null()) {
      if (!lab) lab = std::make_unique<Lab>(cfg);
      const Report r = run_criterion(*lab, c);
      save_report(r, cfg, cfg.output_dir);
      j = report_json(r, cfg);
    }
    const bool pass = j.value("pass", false);
    ok = ok && pass;
    std::printf("%-10d %-40s %s\n", c, j.value("title", "").c_str(), pass ? "PASS" : "FAIL");
    for (const auto& ch : j["checks"]) {
      const double v = ch["value"].is_null() ? NAN : ch["value"].get<double>();
      std::printf("           %s %s: %.6g %s %.6g\n", ch["pass"].get<bool>() ? "ok  " : "FAIL",
                  ch["name"].get<std::string>().c_str(), v, ch["relation"].get<std::string>().c_str(),
                  ch["threshold"].get<double>());
    }
    all["criteria"].push_back({{"criterion", c}, {"title", j["title"]}, {"pass", pass}});
  }
  all["pass"] = ok;
  write_json(cfg.output_dir + "/report.json", all);
  return ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Stochastic neural-field front lab"};
  app.require_subcommand(1);
  Options o;
  app.add_option("--config", o.config, "config file, or 'default'");
  app.add_option("--output-dir", o.output_dir, "overrides output_dir of the config");
  app.add_option("--threads", o.threads, "worker threads (0 = all cores)");
  app.add_option("--seed", o.seed, "overrides experiments.seed");

  auto* wave = app.add_subcommand("wave", "solve for the travelling front");
  auto* adjoint = app.add_subcommand("adjoint", "adjoint eigenfunction, weight and spectral gap");
  auto* simulate = app.add_subcommand("simulate", "simulate paths of the stochastic equation");
  simulate->add_option("--epsilon", o.epsilon, "noise strength");
  simulate->add_option("--paths", o.paths, "number of paths");
  simulate->add_flag("--phase", o.phase, "also write C0, C1 and the finite-m phases of path 0");
  auto* expand = app.add_subcommand("expand", "residual scaling of the multiscale expansion");
  expand->add_option("--epsilon-ladder", o.ladder, "strictly decreasing noise strengths")->delimiter(',');
  expand->add_option("--paths", o.paths, "paths per noise strength");
  auto* asym = app.add_subcommand("verify-asymptotics", "tail rates and weight constants");
  auto* report = app.add_subcommand("report", "run or collect every acceptance criterion");
  report->add_flag("--rerun", o.rerun, "recompute even when a matching summary exists");
  report->add_option("--only", o.only, "criteria to include")->delimiter(',');
  for (auto* sub : {wave, adjoint, simulate, expand, asym, report}) {
    sub->add_option("--config", o.config, "config file, or 'default'");
    sub->add_option("--output-dir", o.output_dir, "overrides output_dir of the config");
    sub->add_option("--threads", o.threads, "worker threads (0 = all cores)");
    sub->add_option("--seed", o.seed, "overrides experiments.seed");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }
  try {
    if (*wave) return cmd_wave(o);
    if (*adjoint) return cmd_adjoint(o);
    if (*simulate) return cmd_simulate(o);
    if (*expand) return cmd_expand(o);
    if (*asym) return cmd_asymptotics(o);
    if (*report) return cmd_report(o);
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 3;
  }
  return 2;
}
