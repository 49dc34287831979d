/*
 Copyright 2026 The ecodrive Authors

 Licensed under the Apache License, Version 2.0 (the "License");
 you may not use this file except in compliance with the License.
 You may obtain a copy of the License at

      https://www.apache.org/licenses/LICENSE-2.0

 Unless required by applicable law or agreed to in writing, software
 distributed under the License is distributed on an "AS IS" BASIS,
 WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 See the License for the specific language governing permissions and
 limitations under the License.
*/
#include <CLI11.hpp>

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <fmt/format.h>
#include <nlohmann/json.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "ecodrive/config.hpp"
#include "ecodrive/experiments.hpp"
#include "ecodrive/io.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace ecodrive;

namespace {

enum Exit { kOk = 0, kConfig = 2, kInfeasible = 3, kSolver = 4 };

// Failure carrying its exit status.
struct RunError : std::runtime_error {
  RunError(Exit c, const std::string& what) : std::runtime_error(what), code(c) {}
  Exit code;
};

struct Globals {
  std::string config;
  std::string route;
  std::string out = "";
  std::string artifacts;
  std::optional<std::uint64_t> seed;
  std::string case_name;
  std::optional<int> n;
  std::string log_level = "info";
  bool no_timing = false;
};

std::string_view kind_of(Exit c) {
  switch (c) {
    case kConfig: return "config";
    case kInfeasible: return "infeasible";
    case kSolver: return "solver";
    default: return "ok";
  }
}

int fail(Exit code, const std::string& message, std::size_t line = 0) {
  json err = {{"error", {{"code", static_cast<int>(code)}, {"kind", kind_of(code)}, {"message", message}}}};
  if (line > 0) err["error"]["line"] = line;
  std::cerr << err.dump() << "\n";
  return code;
}

RunConfig effective_config(const Globals& g) {
  RunConfig cfg = g.config.empty() ? default_run_config(PowertrainKind::Conventional) : load_run_config(g.config);
  if (!g.route.empty()) cfg.route.path = g.route;
  if (!g.out.empty()) cfg.out_dir = g.out;
  if (!g.artifacts.empty()) cfg.artifacts_dir = g.artifacts;
  if (g.seed) {
    cfg.seed = *g.seed;
    cfg.route.synthetic.seed = *g.seed;
  }
  if (!g.case_name.empty()) cfg.case_label = case_from_string(g.case_name);
  if (g.n) {
    if (*g.n < 1) throw RunError(kConfig, "--n must be positive");
    cfg.mpc.route_samples = *g.n;
  }
  if (!cfg.route.path.empty() && !fs::exists(cfg.route.path)) {
    throw RunError(kConfig, "route file '" + cfg.route.path + "' does not exist");
  }
  return cfg;
}

// Planning subcommands consume fitted artifacts; they never refit silently.
Scenario planning_scenario(const RunConfig& cfg, CaseLabel label) {
  if (cfg.artifacts_dir.empty()) {
    throw RunError(kConfig,
                   "no fitted powertrain artifacts given; run `ecodrive fit-maps --out <dir>` first and pass "
                   "--artifacts <dir> (or set powertrain.artifacts in the config)");
  }
  return make_scenario(cfg, label);
}

fs::path out_dir(const RunConfig& cfg) {
  fs::path dir(cfg.out_dir);
  fs::create_directories(dir);
  return dir;
}

std::ofstream open_out(const fs::path& p) {
  std::ofstream f(p);
  if (!f) throw RunError(kConfig, "cannot write '" + p.string() + "'");
  return f;
}

void emit(const json& summary) { std::cout << summary.dump(2) << "\n"; }

int cmd_fit_maps(const Globals& g) {
  auto cfg = effective_config(g);
  auto setup = cfg.powertrain;
  setup.actuator.kind = cfg.kind;
  const auto art = build_powertrain(setup, cfg.vehicle);
  const auto dir = out_dir(cfg);
  save_artifacts(dir.string(), art);
  spdlog::info("wrote powertrain artifacts to {}", dir.string());
  emit({{"kind", to_string(cfg.kind)},
        {"artifacts", dir.string()},
        {"power_fit_max_rel_error", art.power.max_rel_error},
        {"gears", cfg.vehicle.gear_count()}});
  return kOk;
}

int cmd_gear_map(const Globals& g) {
  auto cfg = effective_config(g);
  const auto art = load_or_build_powertrain(cfg);
  const auto dir = out_dir(cfg);
  write_json_file((dir / "gear_map.json").string(), to_json(art.gears));
  auto csv = open_out(dir / "gear_map_contour.csv");
  csv << "E_J,v_kmh,F_N,gear\n";
  const auto& gm = art.gears;
  for (std::size_t i = 0; i < gm.energy.size(); ++i) {
    const double v = speed_of(gm.energy[i], cfg.vehicle) * 3.6;
    for (std::size_t k = 0; k < gm.force.size(); ++k) {
      csv << fmt::format("{:.6e},{:.6f},{:.6e},{}\n", gm.energy[i], v, gm.force[k], gm.gear_at(i, k));
    }
  }
  emit({{"gear_map", (dir / "gear_map.json").string()}, {"contour", (dir / "gear_map_contour.csv").string()}});
  return kOk;
}

int cmd_solve(const Globals& g, std::optional<double> lambda_opt) {
  auto cfg = effective_config(g);
  const auto sc = planning_scenario(cfg, cfg.case_label);
  const double L = sc.road.length();
  const double ds = L / cfg.mpc.route_samples;
  const auto hg = heuristic_velocity(sc.road, sc.params, sc.powertrain.limits, cfg.mpc.v_cru, ds);
  const auto grid = make_horizon(sc.road, sc.params, 0.0, L, ds);
  const State state{0.0, hg.E.front(), 0.0};
  auto E_hat = heuristic_guess(hg, grid, state.E);
  const double t_f = cfg.mpc.budget_scale * hg.t_f;
  SqpOptions opt;
  opt.max_iter = cfg.mpc.sqp_iter;
  opt.beta = cfg.mpc.beta;
  opt.qp = cfg.mpc.qp;

  double lambda = 0.0;
  HorizonSolution sol;
  if (lambda_opt) {
    lambda = *lambda_opt;
    sol = solve_horizon(sc, grid, state, E_hat, lambda, opt);
  } else {
    const double lmax = cfg.mpc.lambda_max > 0.0 ? cfg.mpc.lambda_max : find_lambda_max(sc, grid, state, E_hat, 2);
    auto cal = calibrate_costate(sc, grid, state, E_hat, t_f, lmax, opt);
    lambda = cal.lambda;
    sol = std::move(cal.solution);
  }
  if (!sol.feasible) {
    throw RunError(sol.qp.status == QpStatus::Infeasible ? kInfeasible : kSolver,
                   fmt::format("horizon QP failed: {}", to_string(sol.qp.status)));
  }
  const auto dir = out_dir(cfg);
  auto csv = open_out(dir / "solve_trajectory.csv");
  write_trajectory_csv(csv, plan_trajectory(sc, grid, sol.plan, 0.0));
  json summary = {{"lambda_eur_per_s", lambda},
                  {"cost_eur", sol.cost},
                  {"travel_time_s", sol.time},
                  {"t_f_s", t_f},
                  {"sqp_iterations", sol.history.size()},
                  {"converged", sol.converged},
                  {"N", grid.N}};
  write_json_file((dir / "solve.json").string(), summary);
  emit(summary);
  return kOk;
}

int cmd_mpc(const Globals& g) {
  auto cfg = effective_config(g);
  if (cfg.case_label == CaseLabel::Heuristic) throw RunError(kConfig, "mpc runs case1 or case2; use compare for hg");
  const auto sc = planning_scenario(cfg, cfg.case_label);
  const auto res = run_mpc(cfg.mpc, sc);
  const auto dir = out_dir(cfg);
  auto csv = open_out(dir / "trajectory.csv");
  write_trajectory_csv(csv, res.trajectory);
  auto log = open_out(dir / "updates.jsonl");
  write_update_log(log, res.log, !g.no_timing);
  auto metrics = to_json(res.metrics);
  metrics["case"] = std::string(to_string(cfg.case_label));
  metrics["lambda_max_eur_per_s"] = res.lambda_max;
  metrics["aborted"] = res.aborted;
  metrics["updates"] = res.log.size();
  write_json_file((dir / "metrics.json").string(), metrics);
  emit(metrics);
  if (res.aborted) throw RunError(kSolver, "closed loop aborted after repeated QP failures");
  return kOk;
}

int cmd_compare(const Globals& g) {
  auto cfg = effective_config(g);
  const auto sc = planning_scenario(cfg, CaseLabel::Case1);
  const auto legs = compare_cases(cfg, sc);
  const auto dir = out_dir(cfg);
  json summary = json::object();
  bool aborted = false;
  for (const auto& c : legs) {
    const std::string name(to_string(c.label));
    summary[name] = to_json(c);
    auto csv = open_out(dir / ("trajectory_" + name + ".csv"));
    write_trajectory_csv(csv, c.trajectory);
    aborted = aborted || c.aborted;
  }
  summary["reference_weights"] = {{"w1", cfg.w1}, {"w2", cfg.w2}};
  write_json_file((dir / "summary.json").string(), summary);
  emit(summary);
  if (aborted) throw RunError(kSolver, "a closed-loop leg aborted");
  return kOk;
}

int cmd_sweep(const Globals& g, const std::vector<double>& w2_values) {
  auto cfg = effective_config(g);
  const auto sc = planning_scenario(cfg, CaseLabel::Case2);
  const auto pts = sweep_w2(cfg, sc, w2_values);
  const auto dir = out_dir(cfg);
  auto csv = open_out(dir / "sweep_w2.csv");
  csv << "w2,energy_cost_eur,drivability_cost_eur,total_cost_eur,j_rms_mps3,brake_norm_kN,arrival_s\n";
  json rows = json::array();
  for (const auto& p : pts) {
    const auto& m = p.metrics;
    csv << fmt::format("{:.6g},{:.6f},{:.6f},{:.6f},{:.6e},{:.6f},{:.3f}\n", p.w2, m.energy_cost, m.drivability_cost,
                       m.total_cost, m.j_rms, m.brake_norm, m.arrival_time);
    auto j = to_json(m);
    j["w2"] = p.w2;
    rows.push_back(j);
  }
  emit({{"sweep", rows}});
  return kOk;
}

int cmd_oracle(const Globals& g, OracleSetup setup, bool lambda_given) {
  auto cfg = effective_config(g);
  const auto sc = planning_scenario(cfg, cfg.case_label == CaseLabel::Case2 ? CaseLabel::Case2 : CaseLabel::Case1);
  if (!lambda_given) setup.lambda = route_costate(sc, cfg.mpc);
  const auto rep = oracle_compare(sc, setup);
  const auto dir = out_dir(cfg);
  const auto doc = to_json(rep);
  write_json_file((dir / "oracle.json").string(), doc);
  emit(doc);
  return kOk;
}

int cmd_bench(const Globals& g, const std::vector<int>& Ns, int repeats, std::optional<double> lambda) {
  auto cfg = effective_config(g);
  const auto sc = planning_scenario(cfg, cfg.case_label);
  const double lam = lambda ? *lambda : route_costate(sc, cfg.mpc);
  const auto pts = bench_qp(sc, cfg.mpc.v_cru, lam, Ns, repeats);
  const auto dir = out_dir(cfg);
  auto csv = open_out(dir / "bench.csv");
  csv << "N,solve_ms\n";
  std::vector<double> x, y;
  for (const auto& p : pts) {
    csv << fmt::format("{},{:.4f}\n", p.N, p.solve_ms);
    x.push_back(p.N);
    y.push_back(p.solve_ms);
  }
  json rows = json::array();
  for (const auto& p : pts) rows.push_back({{"N", p.N}, {"solve_ms", p.solve_ms}, {"qp_iterations", p.qp_iterations}});
  emit({{"bench", rows}, {"r2", pts.size() >= 2 ? linear_r2(x, y) : 1.0}, {"lambda_eur_per_s", lam}});
  return kOk;
}

int cmd_config(const Globals& g) {
  std::cout << dump_run_config(effective_config(g));
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Eco-driving MPC for heavy vehicles"};
  app.require_subcommand(1);
  app.fallthrough();
  Globals g;
  app.add_option("--config", g.config, "YAML run configuration")->check(CLI::ExistingFile);
  app.add_option("--route", g.route, "road CSV (distance_m, elevation_m|grade_rad[, vmin_kmh, vmax_kmh])");
  app.add_option("--out", g.out, "output directory");
  app.add_option("--artifacts", g.artifacts, "directory written by fit-maps");
  app.add_option("--seed", g.seed, "seed of the synthetic route");
  app.add_option("--case", g.case_name, "hg | case1 | case2")->check(CLI::IsMember({"hg", "case1", "case2"}));
  app.add_option("--n", g.n, "route samples N");
  app.add_option("--log-level", g.log_level, "trace|debug|info|warn|error|off")
      ->check(CLI::IsMember({"trace", "debug", "info", "warn", "error", "off"}));
  app.add_flag("--no-timing", g.no_timing, "omit wall-clock fields from logs");

  auto* fit = app.add_subcommand("fit-maps", "synthesise the powertrain and write the fitted artifacts");
  auto* gear = app.add_subcommand("gear-map", "write the gear map JSON and its contour table");
  auto* solve = app.add_subcommand("solve", "single full-route horizon solve at a frozen costate");
  std::optional<double> solve_lambda;
  solve->add_option("--lambda", solve_lambda, "time price in EUR/s (default: meet the time budget)");
  auto* mpc = app.add_subcommand("mpc", "closed-loop run with per-update log");
  auto* cmp = app.add_subcommand("compare", "hg, case1 and case2 summary");
  auto* sweep = app.add_subcommand("sweep-w2", "jerk weight trade-off table");
  std::vector<double> w2_values{0, 30, 100, 300, 1000, 3000};
  sweep->add_option("--w2", w2_values, "jerk weights");
  auto* orc = app.add_subcommand("oracle", "dynamic-programming cross-check on a short segment");
  OracleSetup oracle_setup;
  std::optional<double> oracle_lambda;
  double oracle_v0_kmh = oracle_setup.v0 * 3.6;
  orc->add_option("--start", oracle_setup.start, "segment start in m (default: hilliest window)");
  orc->add_option("--length", oracle_setup.length, "segment length in m");
  orc->add_option("--nodes", oracle_setup.N, "horizon intervals");
  orc->add_option("--levels", oracle_setup.energy_points, "DP energy levels per refinement");
  orc->add_option("--lambda", oracle_lambda, "time price in EUR/s (default: full-route costate)");
  orc->add_option("--v0", oracle_v0_kmh, "initial speed in km/h");
  auto* bench = app.add_subcommand("bench", "single-QP time versus N");
  std::vector<int> bench_n{100, 200, 400, 800};
  int repeats = 5;
  std::optional<double> bench_lambda;
  bench->add_option("--sizes", bench_n, "route sample counts");
  bench->add_option("--repeats", repeats, "repeats per size (median reported)");
  bench->add_option("--lambda", bench_lambda, "time price in EUR/s (default: full-route costate)");
  auto* conf = app.add_subcommand("config", "print the effective configuration");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return fail(kConfig, e.what());
  }

  auto logger = spdlog::stderr_color_mt("ecodrive");
  spdlog::set_default_logger(logger);
  spdlog::set_level(spdlog::level::from_str(g.log_level));

  try {
    if (*fit) return cmd_fit_maps(g);
    if (*gear) return cmd_gear_map(g);
    if (*solve) return cmd_solve(g, solve_lambda);
    if (*mpc) return cmd_mpc(g);
    if (*cmp) return cmd_compare(g);
    if (*sweep) return cmd_sweep(g, w2_values);
    if (*orc) {
      oracle_setup.v0 = oracle_v0_kmh / 3.6;
      if (oracle_lambda) oracle_setup.lambda = *oracle_lambda;
      return cmd_oracle(g, oracle_setup, oracle_lambda.has_value());
    }
    if (*bench) return cmd_bench(g, bench_n, repeats, bench_lambda);
    if (*conf) return cmd_config(g);
  } catch (const RunError& e) {
    return fail(e.code, e.what());
  } catch (const ParseError& e) {
    return fail(kConfig, e.what(), e.line());
  } catch (const std::invalid_argument& e) {
    return fail(kConfig, e.what());
  } catch (const std::out_of_range& e) {
    return fail(kConfig, e.what());
  } catch (const std::exception& e) {
    return fail(kSolver, e.what());
  }
  return kOk;
}
