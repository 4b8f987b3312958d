#include <catch2/catch_amalgamated.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>

#include "coordsim/harness.hpp"

using namespace coordsim;
using Catch::Approx;

namespace {
// Throws are asserted on the message so the diagnostics stay useful.
template <typename Fn>
std::string config_error_message(Fn&& fn) {
  try {
    fn();
  } catch (const ConfigError& e) {
    return e.what();
  }
  FAIL("expected a ConfigError");
  return "";
}

const char* kGoodScenario = R"(# sample configuration
topology.kind = line
topology.n = 3
objective.name = C1
run.beta = 2.0
run.frames = 500      # inline note
run.T = 5
run.alpha = 0.25
run.step_scale = 2
run.seeds = 3, 4
bounds.theta_min = -30
bounds.theta_max = 30
bounds.rate_epsilon = 1e-3
)";
} // namespace

TEST_CASE("scenario text parses into a full configuration", "[scenario]") {
  const Scenario sc = parse_scenario_text(kGoodScenario, "sample");
  REQUIRE(sc.id == "sample");
  REQUIRE(sc.topology_kind == TopologyKind::line);
  REQUIRE(sc.topology_n == 3);
  REQUIRE(sc.objective_name == "C1");
  REQUIRE(sc.beta == Approx(2.0));
  REQUIRE(sc.frames == 500);
  REQUIRE(sc.T == Approx(5.0));
  REQUIRE(sc.alpha == Approx(0.25));
  REQUIRE(sc.step_scale == Approx(2.0));
  REQUIRE(sc.seeds == std::vector<std::uint64_t>{3, 4});
  REQUIRE(sc.algorithm == "steep"); // not a file key; set by preset or CLI

  const ClampBounds b = sc.bounds();
  REQUIRE(b.theta_min == Approx(-30.0));
  REQUIRE(b.theta_max == Approx(30.0));
  REQUIRE(b.rate_epsilon == Approx(1e-3));
  REQUIRE(sc.network().node_count == 3);
  REQUIRE(sc.algorithms().size() == 1);
}

TEST_CASE("defaults fill in for omitted optional keys", "[scenario]") {
  const Scenario sc = parse_scenario_text(
      "topology.kind = star\ntopology.n = 5\nobjective.name = C1\n"
      "run.beta = 5\nrun.frames = 100\n",
      "minimal");
  REQUIRE(sc.T == Approx(10.0));
  REQUIRE(sc.alpha == Approx(0.5));
  REQUIRE(sc.step_scale == Approx(3.0));
  REQUIRE(sc.seeds == std::vector<std::uint64_t>{1});
  // Bounds derive from the objective when no override is present.
  const ClampBounds b = sc.bounds();
  REQUIRE(b.theta_max == Approx(100.0));
  REQUIRE(b.theta_min == Approx(-19.0));
  REQUIRE(b.rate_epsilon == Approx(1e-4));
}

TEST_CASE("scenario diagnostics carry line numbers", "[scenario]") {
  const std::string base =
      "topology.kind = line\ntopology.n = 3\nobjective.name = C1\n"
      "run.beta = 1\nrun.frames = 10\n";

  auto msg = config_error_message(
      [&] { parse_scenario_text(base + "run.frames 20\n", "x"); });
  REQUIRE(msg.find("line 6") != std::string::npos);
  REQUIRE(msg.find("key = value") != std::string::npos);

  msg = config_error_message(
      [&] { parse_scenario_text(base + "run.beta = 7\n", "x"); });
  REQUIRE(msg.find("duplicate key 'run.beta'") != std::string::npos);
  REQUIRE(msg.find("line 6") != std::string::npos);
  REQUIRE(msg.find("line 4") != std::string::npos);

  msg = config_error_message(
      [&] { parse_scenario_text(base + "run.gamma = 7\n", "x"); });
  REQUIRE(msg.find("unknown key 'run.gamma'") != std::string::npos);

  msg = config_error_message(
      [&] { parse_scenario_text("topology.kind = line\n", "x"); });
  REQUIRE(msg.find("missing required key") != std::string::npos);

  msg = config_error_message(
      [&] { parse_scenario_text(base + "run.T = fast\n", "x"); });
  REQUIRE(msg.find("run.T") != std::string::npos);
  REQUIRE(msg.find("line 6") != std::string::npos);

  msg = config_error_message(
      [&] { parse_scenario_text(base + "run.seeds = 1,,2\n", "x"); });
  REQUIRE(msg.find("run.seeds") != std::string::npos);

  msg = config_error_message(
      [&] { parse_scenario_text(base + "topology.m = 4\n", "x"); });
  REQUIRE(msg.find("random") != std::string::npos);

  // Random topologies in turn require the edge count and graph seed.
  msg = config_error_message([&] {
    parse_scenario_text(
        "topology.kind = random\ntopology.n = 5\nobjective.name = C1\n"
        "run.beta = 1\nrun.frames = 10\n",
        "x");
  });
  REQUIRE(msg.find("topology.m") != std::string::npos);

  REQUIRE_THROWS_AS(
      parse_scenario_text(base + "= 3\n", "x"), ConfigError);
  REQUIRE_THROWS_AS(parse_scenario_text(
                        "topology.kind = line\ntopology.n = 3\n"
                        "objective.name = C1\nrun.beta = 1\nrun.frames = 0\n",
                        "x"),
                    ConfigError);
}

TEST_CASE("presets resolve to their frozen configurations", "[scenario]") {
  REQUIRE(preset_names().size() == 5);

  const Scenario line = load_scenario("LINE-EX");
  REQUIRE(line.topology_kind == TopologyKind::line);
  REQUIRE(line.topology_n == 3);
  REQUIRE(line.objective_name == "line-example");
  REQUIRE(line.beta == Approx(100.0));
  REQUIRE(line.algorithm == "steep");
  REQUIRE(line.frames == 20000);
  REQUIRE(line.seeds == std::vector<std::uint64_t>{1, 2, 3, 4, 5});

  const Scenario star = load_scenario("STAR-C1");
  REQUIRE(star.algorithm == "all");
  REQUIRE(star.algorithms().size() == 3);
  REQUIRE(star.frames == 300000);

  const Scenario rand2 = load_scenario("RAND-C2");
  REQUIRE(rand2.topology_kind == TopologyKind::random_gnm);
  REQUIRE(rand2.topology_m == 21);
  REQUIRE(rand2.topology_seed == 1);
  REQUIRE(rand2.objective_name == "C2");
  REQUIRE(rand2.beta == Approx(4.0));
  REQUIRE(rand2.algorithm == "ind");

  REQUIRE_THROWS_AS(load_scenario("NOPE"), ConfigError);
}

TEST_CASE("scenario files load from disk", "[scenario]") {
  const auto dir = std::filesystem::temp_directory_path() / "coordsim-test";
  std::filesystem::create_directories(dir);
  const auto path = dir / "sample.scn";
  {
    std::ofstream out(path);
    out << kGoodScenario;
  }
  const Scenario sc = load_scenario(path.string());
  REQUIRE(sc.id == "sample");
  REQUIRE(sc.frames == 500);
  std::filesystem::remove(path);
}

TEST_CASE("convergence detector reads the gain series", "[harness]") {
  Trace tr;
  tr.gain.assign(50, 1.0);
  REQUIRE(frames_to_convergence(tr) == -1); // shorter than the window

  tr.gain.assign(400, 0.0);
  REQUIRE(frames_to_convergence(tr) == 100);

  // A ramp that flattens at frame 200 settles one window later.
  tr.gain.resize(400);
  for (std::size_t t = 0; t < 400; ++t) {
    tr.gain[t] = t < 200 ? static_cast<double>(t) : 200.0;
  }
  REQUIRE(frames_to_convergence(tr) == 300);

  // A run that never settles reports -1.
  for (std::size_t t = 0; t < 400; ++t) {
    tr.gain[t] = static_cast<double>(t);
  }
  REQUIRE(frames_to_convergence(tr) == -1);

  // Non-finite early frames are skipped, not treated as settled.
  for (std::size_t t = 0; t < 400; ++t) {
    tr.gain[t] = t < 150 ? -kInf : 7.0;
  }
  REQUIRE(frames_to_convergence(tr) == 250);
}

TEST_CASE("summaries compare against the oracle when present", "[harness]") {
  const Network net = build_topology(TopologyKind::line, 3);
  const ObjectiveSpec spec = builtin_objective("C1", 2.0);

  RunConfig cfg;
  cfg.algorithm = Algorithm::steep;
  cfg.beta = 2.0;
  cfg.frames = 200;
  cfg.seed = 1;
  cfg.bounds = a1_bounds(spec, 2.0);
  cfg.scenario_id = "probe";
  const Trace tr = run(net, spec, cfg);

  const RunSummary bare = summarize(net, tr, nullptr);
  REQUIRE(bare.scenario == "probe");
  REQUIRE(bare.final_gain == tr.gain.back());
  REQUIRE_FALSE(bare.oracle_gain.has_value());
  REQUIRE_FALSE(bare.deviation_inf.has_value());
  REQUIRE(bare.gap_bound == Approx(3.0 * std::log(2.0) / 2.0));

  const ExactSolution sol = solve_a_cg_opt(net, spec, 2.0);
  const RunSummary full = summarize(net, tr, &sol);
  REQUIRE(full.oracle_gain == sol.gain);
  REQUIRE(*full.deviation_inf ==
          Approx(inf_norm_diff(tr.s_bar_at(tr.frames() - 1), sol.lambda_star)));
}

TEST_CASE("experiments run every algorithm-seed cell", "[harness]") {
  Scenario sc = parse_scenario_text(
      "topology.kind = line\ntopology.n = 3\nobjective.name = C1\n"
      "run.beta = 2\nrun.frames = 120\nrun.seeds = 1, 2\n",
      "grid");
  sc.algorithm = "all";

  int flushed = 0;
  const ExperimentResult res = run_experiment(
      sc, [&](const Trace&, const RunSummary&) { ++flushed; });
  REQUIRE(flushed == 6);
  REQUIRE(res.traces.size() == 6);
  REQUIRE(res.summaries.size() == 6);
  REQUIRE(res.oracle.has_value());

  // Cells are algorithm-major with the scenario's seed order inside.
  REQUIRE(res.traces[0].algorithm == Algorithm::dual);
  REQUIRE(res.traces[1].algorithm == Algorithm::dual);
  REQUIRE(res.traces[2].algorithm == Algorithm::steep);
  REQUIRE(res.traces[4].algorithm == Algorithm::ind);
  REQUIRE(res.traces[0].seed == 1);
  REQUIRE(res.traces[1].seed == 2);
  for (int k = 0; k < 6; ++k) {
    REQUIRE(res.summaries[k].algorithm == res.traces[k].algorithm);
    REQUIRE(res.summaries[k].seed == res.traces[k].seed);
    REQUIRE(res.summaries[k].deviation_inf.has_value());
  }

  // The pool layout must not leak into the results.
  const ExperimentResult again = run_experiment(sc);
  for (int k = 0; k < 6; ++k) {
    REQUIRE(again.traces[k].theta == res.traces[k].theta);
    REQUIRE(again.summaries[k].final_gain == res.summaries[k].final_gain);
  }
}

TEST_CASE("worker count honors the environment override", "[harness]") {
  unsetenv("COORDSIM_THREADS");
  REQUIRE(worker_count() >= 1);

  setenv("COORDSIM_THREADS", "2", 1);
  REQUIRE(worker_count() == 2);

  setenv("COORDSIM_THREADS", "many", 1);
  REQUIRE_THROWS_AS(worker_count(), ConfigError);
  setenv("COORDSIM_THREADS", "0", 1);
  REQUIRE_THROWS_AS(worker_count(), ConfigError);
  setenv("COORDSIM_THREADS", "3x", 1);
  REQUIRE_THROWS_AS(worker_count(), ConfigError);
  unsetenv("COORDSIM_THREADS");
}

TEST_CASE("trace serialization is stable and schema-tagged", "[harness]") {
  const Network net = build_topology(TopologyKind::line, 3);
  const std::string header = trace_csv_header(net);
  REQUIRE(header ==
          "t,gain,theta_n1,theta_n2,theta_n3,theta_e1_2,theta_e2_3,"
          "sbar_n1,sbar_n2,sbar_n3,sbar_e1_2,sbar_e2_3,"
          "shat_n1,shat_n2,shat_n3,shat_e1_2,shat_e2_3");

  const ObjectiveSpec spec = builtin_objective("C1", 2.0);
  RunConfig cfg;
  cfg.algorithm = Algorithm::steep;
  cfg.beta = 2.0;
  cfg.frames = 5;
  cfg.seed = 1;
  cfg.bounds = a1_bounds(spec, 2.0);
  const Trace tr = run(net, spec, cfg);

  const std::string csv = trace_csv(net, tr);
  const std::string csv2 = trace_csv(net, run(net, spec, cfg));
  REQUIRE(csv == csv2);

  char expected[24];
  std::snprintf(expected, sizeof(expected), "%016llx",
                static_cast<unsigned long long>(fnv1a64(header)));
  REQUIRE(csv.rfind(std::string("# schema=") + expected + "\n", 0) == 0);
  REQUIRE(csv.find(header + "\n") != std::string::npos);
  // One row per frame plus the two leading lines.
  REQUIRE(std::count(csv.begin(), csv.end(), '\n') == 7);
  REQUIRE(csv.find("\n0,") != std::string::npos);
}

TEST_CASE("JSON payloads expose fixed key sets", "[harness]") {
  const Network net = build_topology(TopologyKind::line, 3);
  const ObjectiveSpec spec = builtin_objective("C1", 2.0);
  RunConfig cfg;
  cfg.beta = 2.0;
  cfg.frames = 10;
  cfg.seed = 1;
  cfg.bounds = a1_bounds(spec, 2.0);
  cfg.scenario_id = "keys";
  const Trace tr = run(net, spec, cfg);

  const nlohmann::json bare = summary_json(summarize(net, tr, nullptr));
  const std::vector<std::string> want = {
      "scenario",    "algorithm",     "beta",          "seed",
      "final_gain",  "final_sbar",    "oracle_gain",   "oracle_lambda",
      "deviation_inf", "gap_bound"};
  REQUIRE(bare.size() == want.size());
  for (const auto& k : want) REQUIRE(bare.contains(k));
  REQUIRE(bare["oracle_gain"].is_null());
  REQUIRE(bare["oracle_lambda"].is_null());
  REQUIRE(bare["deviation_inf"].is_null());
  REQUIRE(bare["final_sbar"].size() == 5);

  const ExactSolution sol = solve_a_cg_opt(net, spec, 2.0);
  const nlohmann::json full = summary_json(summarize(net, tr, &sol));
  REQUIRE(full["oracle_gain"].is_number());
  REQUIRE(full["oracle_lambda"].size() == 5);

  const nlohmann::json ex = exact_json(sol);
  for (const auto& k : {"beta", "theta", "lambda", "gain", "dual_value",
                        "residual", "iterations"}) {
    REQUIRE(ex.contains(k));
  }
  REQUIRE(ex.size() == 7);
  REQUIRE(ex["theta"].size() == 5);
}

TEST_CASE("sweeps order rows by regularization strength", "[harness]") {
  const Scenario sc = parse_scenario_text(
      "topology.kind = line\ntopology.n = 3\nobjective.name = C1\n"
      "run.beta = 2\nrun.frames = 400\nrun.seeds = 1, 2\n",
      "sweep-unit");

  const SweepResult swept = sweep_beta(sc, {2.0, 0.5}, Algorithm::steep);
  REQUIRE(swept.scenario == "sweep-unit");
  REQUIRE(swept.algorithm == Algorithm::steep);
  REQUIRE(swept.rows.size() == 2);
  REQUIRE(swept.rows[0].beta == Approx(0.5));
  REQUIRE(swept.rows[1].beta == Approx(2.0));
  for (const SweepRow& row : swept.rows) {
    REQUIRE(row.oracle_gain.has_value());
    REQUIRE(row.gap_bound == Approx(3.0 * std::log(2.0) / row.beta));
    if (row.frames_to_convergence >= 0) {
      REQUIRE(row.events_to_convergence > 0);
    }
  }

  // A single-seed, single-beta sweep reproduces the plain run.
  Scenario one = sc;
  one.seeds = {1};
  one.algorithm = "steep";
  const ExperimentResult direct = run_experiment(one);
  const SweepResult single = sweep_beta(one, {2.0});
  REQUIRE(single.rows.size() == 1);
  REQUIRE(single.rows[0].gain == direct.summaries[0].final_gain);

  // Scenarios that fan out over every algorithm sweep with the dual scheme.
  Scenario fan = sc;
  fan.algorithm = "all";
  REQUIRE(sweep_beta(fan, {1.0}).algorithm == Algorithm::dual);

  REQUIRE_THROWS_AS(sweep_beta(sc, {}), UsageError);
  REQUIRE_THROWS_AS(sweep_beta(sc, {1.0, -2.0}), UsageError);
}

TEST_CASE("sweep serialization leaves absent oracle cells empty",
          "[harness]") {
  SweepResult r;
  r.scenario = "demo";
  r.algorithm = Algorithm::ind;
  SweepRow with;
  with.beta = 1.0;
  with.gain = -2.5;
  with.frames_to_convergence = 120;
  with.events_to_convergence = 3600;
  with.oracle_gain = -2.4;
  with.gap_bound = 2.0;
  SweepRow without;
  without.beta = 4.0;
  without.gain = -2.1;
  r.rows = {with, without};

  const std::string csv = sweep_csv(r);
  REQUIRE(csv.find("beta,gain,frames_to_convergence,events_to_convergence,"
                   "oracle_gain,gap_bound") != std::string::npos);
  REQUIRE(csv.find("1,-2.5,120,3600,-2.4,2") != std::string::npos);
  REQUIRE(csv.find("4,-2.1,-1,0,,") != std::string::npos);
}

TEST_CASE("text files write atomically or fail loudly", "[harness]") {
  const auto dir = std::filesystem::temp_directory_path() / "coordsim-test";
  std::filesystem::create_directories(dir);
  const auto path = dir / "out.csv";
  write_text_file(path, "a,b\n1,2\n");
  std::ifstream in(path);
  std::stringstream buf;
  buf << in.rdbuf();
  REQUIRE(buf.str() == "a,b\n1,2\n");
  std::filesystem::remove(path);

  REQUIRE_THROWS_AS(
      write_text_file(dir / "missing-subdir" / "out.csv", "x"), IoError);
}
