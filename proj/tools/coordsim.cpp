// Command-line driver: seeded simulation runs, exact solves, game analysis,
// beta sweeps and the self-check suite, emitting tidy CSV/JSON for plotting.

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "coordsim/coordsim.hpp"

namespace fs = std::filesystem;
using namespace coordsim;

namespace {

fs::path prepare_out_dir(const std::string& out) {
  const fs::path dir(out);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create output directory '" + out + "'");
  return dir;
}

std::vector<double> parse_beta_list(const std::string& text) {
  std::vector<double> betas;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      const double b = std::stod(item, &used);
      if (used != item.size() || item.empty()) throw std::invalid_argument(item);
      betas.push_back(b);
    } catch (const std::exception&) {
      throw UsageError("bad beta value '" + item + "' in list '" + text + "'");
    }
  }
  if (betas.empty()) throw UsageError("empty beta list '" + text + "'");
  return betas;
}

void write_json(const fs::path& path, const nlohmann::json& j) {
  write_text_file(path, j.dump(2) + "\n");
}

int cmd_run(const std::string& scenario_arg, const std::string& algo,
            long frames, std::optional<std::uint64_t> seed,
            const std::string& out) {
  Scenario sc = load_scenario(scenario_arg);
  if (!algo.empty()) {
    if (algo != "all") parse_algorithm(algo); // validate
    sc.algorithm = algo;
  }
  if (frames > 0) sc.frames = frames;
  if (seed) sc.seeds = {*seed};
  const fs::path dir = prepare_out_dir(out);
  const Network net = sc.network();

  // Each finished cell is flushed immediately so a late failure still
  // leaves completed traces on disk.
  const auto flush = [&](const Trace& trace, const RunSummary& summary) {
    const std::string stem = sc.id + "_" + algorithm_name(trace.algorithm) +
                             "_seed" + std::to_string(trace.seed);
    write_text_file(dir / (stem + ".csv"), trace_csv(net, trace));
    write_json(dir / (stem + ".json"), summary_json(summary));
    std::printf("wrote %s.{csv,json}\n", (dir / stem).string().c_str());
  };
  const ExperimentResult result = run_experiment(sc, flush);
  for (const RunSummary& s : result.summaries) {
    if (s.deviation_inf) {
      std::printf("%s seed %llu: final gain %.6f, deviation %.4f\n",
                  algorithm_name(s.algorithm).c_str(),
                  static_cast<unsigned long long>(s.seed), s.final_gain,
                  *s.deviation_inf);
    } else {
      std::printf("%s seed %llu: final gain %.6f\n",
                  algorithm_name(s.algorithm).c_str(),
                  static_cast<unsigned long long>(s.seed), s.final_gain);
    }
  }
  return 0;
}

int cmd_exact(const std::string& scenario_arg, std::optional<double> beta,
              const std::string& schedule, const std::string& out) {
  const Scenario sc = load_scenario(scenario_arg);
  std::vector<double> betas;
  if (!schedule.empty()) {
    betas = parse_beta_list(schedule);
  } else {
    betas = {beta ? *beta : sc.beta};
  }
  const Network net = sc.network();
  const ObjectiveSpec spec = builtin_objective(sc.objective_name, betas.back());
  const fs::path dir = prepare_out_dir(out);
  try {
    const ExactSolution sol = solve_cg_opt(net, spec, betas);
    write_json(dir / (sc.id + "_exact.json"), exact_json(sol));
    std::printf("beta %.6g: gain %.9f, residual %.3e, %ld iterations\n",
                sol.beta, sol.gain, sol.residual, sol.iterations);
    return 0;
  } catch (const ConvergenceError& e) {
    write_json(dir / (sc.id + "_exact.json"), exact_json(e.best()));
    std::fprintf(stderr, "error: %s (best iterate written)\n", e.what());
    return 2;
  }
}

int cmd_game(const std::string& scenario_arg, std::optional<double> beta,
             const std::string& out) {
  const Scenario sc = load_scenario(scenario_arg);
  const double b = beta ? *beta : sc.beta;
  const Network net = sc.network();
  const GameInstance game = make_game(net, builtin_objective(sc.objective_name, b), b);
  const fs::path dir = prepare_out_dir(out);
  try {
    const NashResult ne = find_ne(game);
    write_json(dir / (sc.id + "_nash.json"), nash_json(ne));
    write_text_file(dir / (sc.id + "_potential.csv"), potential_csv(ne));
    std::printf(
        "equilibrium after %ld rounds: potential %.9f, gap %.6f (bound %.6f)\n",
        ne.rounds, ne.potential_value, ne.gap_to_social_opt, ne.poa_bound);
    return 0;
  } catch (const NashConvergenceError& e) {
    write_json(dir / (sc.id + "_nash.json"), nash_json(e.best()));
    write_text_file(dir / (sc.id + "_potential.csv"), potential_csv(e.best()));
    std::fprintf(stderr, "error: %s (best iterate written)\n", e.what());
    return 2;
  }
}

int cmd_sweep(const std::string& scenario_arg, const std::string& betas_text,
              const std::string& algo, const std::string& out) {
  const Scenario sc = load_scenario(scenario_arg);
  std::optional<Algorithm> algorithm;
  if (!algo.empty()) algorithm = parse_algorithm(algo);
  const SweepResult sweep = sweep_beta(sc, parse_beta_list(betas_text), algorithm);
  const fs::path dir = prepare_out_dir(out);
  write_text_file(dir / (sc.id + "_sweep.csv"), sweep_csv(sweep));
  for (const SweepRow& row : sweep.rows) {
    std::printf("beta %.4g: gain %.6f, converged at frame %ld\n", row.beta,
                row.gain, row.frames_to_convergence);
  }
  return 0;
}

int cmd_verify() {
  const std::vector<CheckResult> results = run_verification();
  bool all = true;
  for (const CheckResult& r : results) {
    all = all && r.pass;
    std::printf("%s  %-34s %s [%.2fs]\n", r.pass ? "PASS" : "FAIL",
                r.name.c_str(), r.detail.c_str(), r.seconds);
  }
  std::printf("%zu/%zu checks passed\n",
              static_cast<std::size_t>(
                  std::count_if(results.begin(), results.end(),
                                [](const CheckResult& r) { return r.pass; })),
              results.size());
  return all ? 0 : 2;
}

int cmd_columns(const std::string& scenario_arg, const std::string& kind) {
  const Scenario sc = load_scenario(scenario_arg);
  std::string header;
  if (kind == "trace") {
    header = trace_csv_header(sc.network());
  } else if (kind == "sweep") {
    header =
        "beta,gain,frames_to_convergence,events_to_convergence,oracle_gain,"
        "gap_bound";
  } else if (kind == "potential") {
    header = "round,potential";
  } else {
    throw UsageError("unknown CSV kind '" + kind +
                     "' (expected trace, sweep or potential)");
  }
  // gnuplot columns are 1-based; `using 1:2` plots gain against frame.
  std::stringstream ss(header);
  std::string col;
  int idx = 0;
  while (std::getline(ss, col, ',')) {
    std::printf("%d\t%s\n", ++idx, col.c_str());
  }
  return 0;
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"coordination-gain simulator and verification toolkit"};
  app.require_subcommand(1);

  std::string scenario;
  std::string algo;
  std::string out;
  std::string schedule;
  std::string betas_text;
  std::string kind = "trace";
  long frames = 0;
  std::optional<std::uint64_t> seed;
  std::optional<double> beta;

  CLI::App* run_cmd = app.add_subcommand("run", "simulate a scenario");
  run_cmd->add_option("--scenario", scenario, "preset name or scenario file")
      ->required();
  run_cmd->add_option("--algo", algo, "dual, steep, ind or all");
  run_cmd->add_option("--frames", frames, "override frame count");
  run_cmd->add_option("--seed", seed, "run a single seed");
  run_cmd->add_option("--out", out, "output directory")->required();

  CLI::App* exact_cmd =
      app.add_subcommand("exact", "solve the regularized program exactly");
  exact_cmd->add_option("--scenario", scenario, "preset name or scenario file")
      ->required();
  exact_cmd->add_option("--beta", beta, "solve at this beta");
  exact_cmd->add_option("--schedule", schedule,
                        "comma-separated increasing beta continuation ladder");
  exact_cmd->add_option("--out", out, "output directory")->required();

  CLI::App* game_cmd =
      app.add_subcommand("game", "compute the Nash equilibrium");
  game_cmd->add_option("--scenario", scenario, "preset name or scenario file")
      ->required();
  game_cmd->add_option("--beta", beta, "override the scenario beta");
  game_cmd->add_option("--out", out, "output directory")->required();

  CLI::App* sweep_cmd = app.add_subcommand("sweep", "sweep over beta values");
  sweep_cmd->add_option("--scenario", scenario, "preset name or scenario file")
      ->required();
  sweep_cmd->add_option("--betas", betas_text, "comma-separated beta list")
      ->required();
  sweep_cmd->add_option("--algo", algo, "dual, steep or ind");
  sweep_cmd->add_option("--out", out, "output directory")->required();

  CLI::App* verify_cmd =
      app.add_subcommand("verify", "run the property self-checks");

  CLI::App* columns_cmd = app.add_subcommand(
      "columns", "describe CSV columns for gnuplot `using` clauses");
  columns_cmd->add_option("--scenario", scenario, "preset name or scenario file")
      ->required();
  columns_cmd->add_option("--kind", kind, "trace, sweep or potential");

  try {
    app.parse(argc, argv);
    if (*run_cmd) return cmd_run(scenario, algo, frames, seed, out);
    if (*exact_cmd) return cmd_exact(scenario, beta, schedule, out);
    if (*game_cmd) return cmd_game(scenario, beta, out);
    if (*sweep_cmd) return cmd_sweep(scenario, betas_text, algo, out);
    if (*verify_cmd) return cmd_verify();
    if (*columns_cmd) return cmd_columns(scenario, kind);
    return 1;
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  } catch (const UsageError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  } catch (const SizeError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  } catch (const IoError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 3;
  } catch (const Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
}
