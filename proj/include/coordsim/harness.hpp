#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <filesystem>
#include <fstream>
#include <functional>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "coordsim/coord.hpp"
#include "coordsim/errors.hpp"
#include "coordsim/game.hpp"
#include "coordsim/oracle.hpp"
#include "coordsim/scenario.hpp"

namespace coordsim {

// Worker cap for experiment fan-out. COORDSIM_THREADS overrides the hardware
// count; cells are independent, so results do not depend on it.
inline int worker_count() {
  if (const char* env = std::getenv("COORDSIM_THREADS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end == env || *end != '\0' || v < 1) {
      throw ConfigError("COORDSIM_THREADS must be a positive integer");
    }
    return static_cast<int>(v);
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw ? static_cast<int>(hw) : 1;
}

// First frame t >= 100 where the gain moved by less than 1e-4 (relative)
// over the trailing 100-frame window; -1 when the run never settles.
inline long frames_to_convergence(const Trace& trace) {
  constexpr long kWindow = 100;
  constexpr double kTol = 1e-4;
  for (long t = kWindow; t < trace.frames(); ++t) {
    const double a = trace.gain[static_cast<std::size_t>(t)];
    const double b = trace.gain[static_cast<std::size_t>(t - kWindow)];
    if (!std::isfinite(a) || !std::isfinite(b)) continue;
    if (std::abs(a - b) <= kTol * std::max(1.0, std::abs(a))) return t;
  }
  return -1;
}

struct RunSummary {
  std::string scenario;
  Algorithm algorithm = Algorithm::steep;
  double beta = 1.0;
  std::uint64_t seed = 0;
  double final_gain = 0.0;
  NodeEdgeVector final_sbar;
  std::optional<double> oracle_gain;
  std::optional<NodeEdgeVector> oracle_lambda;
  std::optional<double> deviation_inf;
  double gap_bound = 0.0; // |V| log 2 / beta
};

inline RunSummary summarize(const Network& net, const Trace& trace,
                            const ExactSolution* oracle) {
  RunSummary s;
  s.scenario = trace.scenario;
  s.algorithm = trace.algorithm;
  s.beta = trace.beta;
  s.seed = trace.seed;
  const long last = trace.frames() - 1;
  s.final_gain = trace.gain[static_cast<std::size_t>(last)];
  s.final_sbar = trace.s_bar_at(last);
  s.gap_bound = net.node_count * std::log(2.0) / trace.beta;
  if (oracle) {
    s.oracle_gain = oracle->gain;
    s.oracle_lambda = oracle->lambda_star;
    s.deviation_inf = inf_norm_diff(s.final_sbar, oracle->lambda_star);
  }
  return s;
}

struct ExperimentResult {
  Scenario scenario;
  std::vector<Trace> traces;         // one per (algorithm, seed), algorithm-major
  std::vector<RunSummary> summaries; // parallel to traces
  std::optional<ExactSolution> oracle;
};

// Runs every (algorithm, seed) cell of the scenario, comparing each run
// against the exact solution when the network is small enough to enumerate.
// Cells fan out to a worker pool; on_cell (if given) fires once per finished
// cell under a lock, letting callers flush partial results before any error
// is rethrown.
inline ExperimentResult run_experiment(
    const Scenario& sc,
    const std::function<void(const Trace&, const RunSummary&)>& on_cell = {}) {
  const Network net = sc.network();
  const ObjectiveSpec spec = sc.objective();
  const ClampBounds bounds = sc.bounds();

  ExperimentResult result;
  result.scenario = sc;
  if (net.node_count <= kEnumerationCap) {
    result.oracle = solve_a_cg_opt(net, spec, sc.beta);
  }

  struct Cell {
    Algorithm algorithm;
    std::uint64_t seed;
  };
  std::vector<Cell> cells;
  for (Algorithm a : sc.algorithms()) {
    for (std::uint64_t seed : sc.seeds) cells.push_back({a, seed});
  }

  result.traces.resize(cells.size());
  result.summaries.resize(cells.size());
  std::atomic<std::size_t> next{0};
  std::mutex flush_mutex;
  std::exception_ptr first_error;

  const auto work = [&]() {
    for (;;) {
      const std::size_t k = next.fetch_add(1);
      if (k >= cells.size()) return;
      try {
        RunConfig cfg;
        cfg.algorithm = cells[k].algorithm;
        cfg.beta = sc.beta;
        cfg.frames = sc.frames;
        cfg.T = sc.T;
        cfg.seed = cells[k].seed;
        cfg.alpha = sc.alpha;
        cfg.step_scale = sc.step_scale;
        cfg.bounds = bounds;
        cfg.scenario_id = sc.id;
        Trace trace = run(net, spec, cfg);
        RunSummary summary = summarize(
            net, trace, result.oracle ? &*result.oracle : nullptr);
        {
          std::lock_guard<std::mutex> lock(flush_mutex);
          if (on_cell) on_cell(trace, summary);
          result.traces[k] = std::move(trace);
          result.summaries[k] = std::move(summary);
        }
      } catch (...) {
        std::lock_guard<std::mutex> lock(flush_mutex);
        if (!first_error) first_error = std::current_exception();
      }
    }
  };

  const int threads =
      std::min<int>(worker_count(), static_cast<int>(cells.size()));
  if (threads <= 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(threads);
    for (int i = 0; i < threads; ++i) pool.emplace_back(work);
    for (auto& th : pool) th.join();
  }
  if (first_error) std::rethrow_exception(first_error);
  return result;
}

struct SweepRow {
  double beta = 0.0;
  double gain = 0.0;
  long frames_to_convergence = -1;
  std::uint64_t events_to_convergence = 0;
  std::optional<double> oracle_gain;
  double gap_bound = 0.0;
};

struct SweepResult {
  std::string scenario;
  Algorithm algorithm = Algorithm::steep;
  std::vector<SweepRow> rows; // sorted by beta ascending
};

// One experiment per beta over all scenario seeds with a single algorithm,
// reporting the median seed's settled gain and settling time. Larger beta
// should buy a better converged gain at the price of more frames. Scenarios
// carrying "all" resolve to the dual scheme here: its diminishing 3/t steps
// make the settling time scale with the distance to the optimum, which is
// the trade-off the sweep exists to expose; the fixed-alpha schemes settle
// in noise-bound time that does not order by beta at these sizes.
inline SweepResult sweep_beta(const Scenario& sc,
                              const std::vector<double>& betas,
                              std::optional<Algorithm> algorithm = {}) {
  if (betas.empty()) throw UsageError("sweep needs at least one beta");
  for (double b : betas) {
    if (!(b > 0.0)) throw UsageError("sweep betas must be positive");
  }
  Scenario base = sc;
  if (algorithm) {
    base.algorithm = algorithm_name(*algorithm);
  } else if (base.algorithm == "all") {
    base.algorithm = "dual";
  }

  std::vector<double> sorted = betas;
  std::sort(sorted.begin(), sorted.end());

  SweepResult out;
  out.scenario = sc.id;
  out.algorithm = parse_algorithm(base.algorithm);
  for (double b : sorted) {
    Scenario point = base;
    point.beta = b;
    ExperimentResult exp = run_experiment(point);

    // Lower median across seeds, with the gain and the event count taken
    // from the same trace that supplies the median settling time.
    struct Cell {
      long ftc;
      std::uint64_t events;
      double gain;
    };
    std::vector<Cell> cells;
    for (std::size_t k = 0; k < exp.traces.size(); ++k) {
      const Trace& trace = exp.traces[k];
      Cell c;
      c.ftc = frames_to_convergence(trace);
      c.events = c.ftc >= 0 ? trace.events[static_cast<std::size_t>(c.ftc)] : 0;
      c.gain = exp.summaries[k].final_gain;
      cells.push_back(c);
    }
    std::sort(cells.begin(), cells.end(),
              [](const Cell& a, const Cell& b) { return a.ftc < b.ftc; });
    const Cell& mid = cells[(cells.size() - 1) / 2];

    std::vector<double> gains;
    for (const Cell& c : cells) gains.push_back(c.gain);
    std::sort(gains.begin(), gains.end());

    SweepRow row;
    row.beta = b;
    row.gain = gains[(gains.size() - 1) / 2];
    row.frames_to_convergence = mid.ftc;
    row.events_to_convergence = mid.events;
    row.oracle_gain = exp.summaries.front().oracle_gain;
    row.gap_bound = exp.summaries.front().gap_bound;
    out.rows.push_back(row);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Serialization. CSV floats use %.12g so files bit-reproduce across runs;
// every CSV starts with a schema-hash comment derived from its header row.

namespace detail {
inline std::string fmt_g(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.12g", v);
  return buf;
}

inline std::string schema_line(const std::string& header) {
  char buf[24];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(fnv1a64(header)));
  return std::string("# schema=") + buf;
}
} // namespace detail

inline std::string trace_csv_header(const Network& net) {
  std::string h = "t,gain";
  for (int k = 0; k < net.dimension(); ++k) {
    h += ",theta_" + component_label(net, k);
  }
  for (int k = 0; k < net.dimension(); ++k) {
    h += ",sbar_" + component_label(net, k);
  }
  for (int k = 0; k < net.dimension(); ++k) {
    h += ",shat_" + component_label(net, k);
  }
  return h;
}

inline std::string trace_csv(const Network& net, const Trace& trace) {
  const std::string header = trace_csv_header(net);
  std::string out = detail::schema_line(header) + "\n" + header + "\n";
  const int dim = trace.dimension();
  for (long t = 0; t < trace.frames(); ++t) {
    out += std::to_string(t);
    out += ',';
    out += detail::fmt_g(trace.gain[static_cast<std::size_t>(t)]);
    const std::size_t base = static_cast<std::size_t>(t) * dim;
    for (const std::vector<double>* series :
         {&trace.theta, &trace.s_bar, &trace.s_hat}) {
      for (int k = 0; k < dim; ++k) {
        out += ',';
        out += detail::fmt_g((*series)[base + k]);
      }
    }
    out += '\n';
  }
  return out;
}

inline std::vector<double> flatten(const NodeEdgeVector& v) {
  std::vector<double> out;
  out.reserve(v.size());
  out.insert(out.end(), v.node.begin(), v.node.end());
  out.insert(out.end(), v.edge.begin(), v.edge.end());
  return out;
}

inline nlohmann::json summary_json(const RunSummary& s) {
  nlohmann::json j;
  j["scenario"] = s.scenario;
  j["algorithm"] = algorithm_name(s.algorithm);
  j["beta"] = s.beta;
  j["seed"] = s.seed;
  j["final_gain"] = s.final_gain;
  j["final_sbar"] = flatten(s.final_sbar);
  j["oracle_gain"] = s.oracle_gain ? nlohmann::json(*s.oracle_gain)
                                   : nlohmann::json(nullptr);
  j["oracle_lambda"] = s.oracle_lambda ? nlohmann::json(flatten(*s.oracle_lambda))
                                       : nlohmann::json(nullptr);
  j["deviation_inf"] = s.deviation_inf ? nlohmann::json(*s.deviation_inf)
                                       : nlohmann::json(nullptr);
  j["gap_bound"] = s.gap_bound;
  return j;
}

inline nlohmann::json exact_json(const ExactSolution& sol) {
  nlohmann::json j;
  j["beta"] = sol.beta;
  j["theta"] = flatten(sol.theta_star);
  j["lambda"] = flatten(sol.lambda_star);
  j["gain"] = sol.gain;
  j["dual_value"] = sol.dual_value;
  j["residual"] = sol.residual;
  j["iterations"] = sol.iterations;
  return j;
}

inline nlohmann::json nash_json(const NashResult& r) {
  nlohmann::json j;
  j["theta_ne"] = flatten(r.theta_ne);
  j["potential_value"] = r.potential_value;
  j["gap_to_social_opt"] = r.gap_to_social_opt;
  j["poa_bound"] = r.poa_bound;
  j["residual"] = r.residual;
  j["rounds"] = r.rounds;
  j["ne_gain"] = r.ne_gain;
  j["social_gain"] = r.social_gain;
  j["poa_ratio"] =
      r.poa_ratio ? nlohmann::json(*r.poa_ratio) : nlohmann::json(nullptr);
  return j;
}

inline std::string potential_csv(const NashResult& r) {
  const std::string header = "round,potential";
  std::string out = detail::schema_line(header) + "\n" + header + "\n";
  for (std::size_t i = 0; i < r.potential_series.size(); ++i) {
    out += std::to_string(i + 1);
    out += ',';
    out += detail::fmt_g(r.potential_series[i]);
    out += '\n';
  }
  return out;
}

inline std::string sweep_csv(const SweepResult& r) {
  const std::string header =
      "beta,gain,frames_to_convergence,events_to_convergence,oracle_gain,"
      "gap_bound";
  std::string out = detail::schema_line(header) + "\n" + header + "\n";
  for (const SweepRow& row : r.rows) {
    out += detail::fmt_g(row.beta);
    out += ',';
    out += detail::fmt_g(row.gain);
    out += ',';
    out += std::to_string(row.frames_to_convergence);
    out += ',';
    out += std::to_string(row.events_to_convergence);
    out += ',';
    out += row.oracle_gain ? detail::fmt_g(*row.oracle_gain) : "";
    out += ',';
    out += detail::fmt_g(row.gap_bound);
    out += '\n';
  }
  return out;
}

inline void write_text_file(const std::filesystem::path& path,
                            const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out << text;
  out.flush();
  if (!out) throw IoError("write failed for '" + path.string() + "'");
}

} // namespace coordsim
