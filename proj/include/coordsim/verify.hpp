#pragma once

#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "coordsim/cdm.hpp"
#include "coordsim/coord.hpp"
#include "coordsim/game.hpp"
#include "coordsim/graph.hpp"
#include "coordsim/objective.hpp"
#include "coordsim/oracle.hpp"
#include "coordsim/rng.hpp"
#include "coordsim/scenario.hpp"

namespace coordsim {

struct CheckResult {
  std::string name;
  bool pass = false;
  std::string detail; // measured quantity vs its bound
  double seconds = 0.0;
};

namespace detail {

inline NodeEdgeVector random_theta(const Network& net, std::uint64_t seed,
                                   double lo, double hi) {
  NodeEdgeVector v = NodeEdgeVector::zeros(net);
  for (std::size_t k = 0; k < v.size(); ++k) {
    v[k] = lo + (hi - lo) * unit_double(seed, k);
  }
  return v;
}

inline std::string bound_detail(const std::string& what, double measured,
                                double bound) {
  std::ostringstream os;
  os.precision(3);
  os << std::scientific << what << " " << measured << " (bound " << bound
     << ")";
  return os.str();
}

template <typename Fn>
inline CheckResult timed_check(const std::string& name, Fn&& body) {
  CheckResult r;
  r.name = name;
  const auto t0 = std::chrono::steady_clock::now();
  try {
    body(r);
  } catch (const std::exception& e) {
    r.pass = false;
    r.detail = std::string("exception: ") + e.what();
  }
  r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                            t0)
                  .count();
  return r;
}

} // namespace detail

// Marginal self-gradient ds_n/dtheta_n = s_n(1 - s_n) against central
// finite differences of the enumerated marginals.
inline CheckResult check_self_gradient() {
  return detail::timed_check("self-gradient identity", [](CheckResult& r) {
    const Network net = build_topology(TopologyKind::line, 3);
    const NodeEdgeVector theta = detail::random_theta(net, 3, -2.0, 2.0);
    const double h = 1e-5;
    double worst = 0.0;
    const NodeEdgeVector s = marginals(net, theta);
    for (std::size_t k = 0; k < theta.size(); ++k) {
      NodeEdgeVector up = theta;
      NodeEdgeVector dn = theta;
      up[k] += h;
      dn[k] -= h;
      const double fd =
          (marginals(net, up)[k] - marginals(net, dn)[k]) / (2.0 * h);
      const double an = s[k] * (1.0 - s[k]);
      worst = std::max(worst, std::abs(fd - an) / std::max(std::abs(an), 1e-12));
    }
    r.pass = worst < 1e-6;
    r.detail = detail::bound_detail("max rel err", worst, 1e-6);
  });
}

inline CheckResult check_dual_gradient() {
  return detail::timed_check("dual gradient finite differences",
                             [](CheckResult& r) {
    const Network net = build_topology(TopologyKind::line, 3);
    const double beta = 2.0;
    const ObjectiveSpec spec = builtin_objective("C1", beta);
    const NodeEdgeVector theta = detail::random_theta(net, 11, -2.0, 2.0);
    const NodeEdgeVector grad = dual_gradient(net, spec, beta, theta);
    const double h = 1e-5;
    double worst = 0.0;
    for (std::size_t k = 0; k < theta.size(); ++k) {
      NodeEdgeVector up = theta;
      NodeEdgeVector dn = theta;
      up[k] += h;
      dn[k] -= h;
      const double fd = (dual_value(net, spec, beta, up) -
                         dual_value(net, spec, beta, dn)) /
                        (2.0 * h);
      worst = std::max(worst,
                       std::abs(fd - grad[k]) / std::max(std::abs(grad[k]), 1e-12));
    }
    r.pass = worst < 1e-5;
    r.detail = detail::bound_detail("max rel err", worst, 1e-5);
  });
}

// Dual optimum equals the primal value of its own recovered rates: D(theta°)
// = sum U - sum C + H(p_theta°)/beta.
inline CheckResult check_strong_duality() {
  return detail::timed_check("strong duality", [](CheckResult& r) {
    double worst = 0.0;
    const auto gap_at = [&](const Network& net, const std::string& objective,
                            double beta) {
      const ObjectiveSpec spec = builtin_objective(objective, beta);
      const ExactSolution sol = solve_a_cg_opt(net, spec, beta);
      const double primal = gain(net, spec, sol.lambda_star) +
                            entropy(stationary_distribution(net, sol.theta_star)) /
                                beta;
      return std::abs(sol.dual_value - primal);
    };
    worst = std::max(worst, gap_at(build_topology(TopologyKind::line, 3), "C1", 2.0));
    worst = std::max(worst, gap_at(build_topology(TopologyKind::star, 5), "C1", 5.0));
    r.pass = worst < 1e-5;
    r.detail = detail::bound_detail("max |gap|", worst, 1e-5);
  });
}

// Every player's payoff gradient shares its sign with the matching potential
// gradient component (the ordinal-potential property), on 100 random
// interior strategy profiles.
inline CheckResult check_sign_identity() {
  return detail::timed_check("ordinal potential sign identity",
                             [](CheckResult& r) {
    const Network net = build_topology(TopologyKind::line, 3);
    const double beta = 2.0;
    const GameInstance game = make_game(net, builtin_objective("C1", beta), beta);
    const double band = 1e-9;
    int mismatches = 0;
    for (std::uint64_t draw = 0; draw < 100; ++draw) {
      const NodeEdgeVector theta =
          detail::random_theta(net, 17 + draw, -3.0, 3.0);
      const NodeEdgeVector dgrad = dual_gradient(net, game.spec, beta, theta);
      for (int k = 0; k < player_count(game); ++k) {
        const double pg = payoff_gradient(game, theta, k);
        const double potg = -beta * dgrad[static_cast<std::size_t>(k)];
        const int sa = pg > band ? 1 : (pg < -band ? -1 : 0);
        const int sb = potg > band ? 1 : (potg < -band ? -1 : 0);
        if (sa != sb) ++mismatches;
      }
    }
    r.pass = mismatches == 0;
    r.detail = std::to_string(mismatches) + " sign mismatches over 100 draws";
  });
}

inline CheckResult check_penalty_quadrature() {
  return detail::timed_check("penalty quadrature", [](CheckResult& r) {
    const Network net = build_topology(TopologyKind::line, 3);
    const double beta = 2.0;
    const GameInstance game = make_game(net, builtin_objective("C1", beta), beta);
    double worst = 0.0;
    for (std::uint64_t draw = 0; draw < 5; ++draw) {
      const NodeEdgeVector theta =
          detail::random_theta(net, 23 + draw, -2.0, 2.0);
      for (int k = 0; k < player_count(game); ++k) {
        const double closed = penalty(game, theta, k);
        const double quad = penalty_quadrature(game, theta, k);
        worst = std::max(worst, std::abs(closed - quad));
      }
    }
    r.pass = worst < 1e-6;
    r.detail = detail::bound_detail("max |closed - quadrature|", worst, 1e-6);
  });
}

// Nash equilibrium from Jacobi best-response dynamics against the convex
// solver's fixed point, on the three enumerable presets.
inline CheckResult check_nash_equivalence() {
  return detail::timed_check("nash equilibrium equivalence",
                             [](CheckResult& r) {
    double worst = 0.0;
    for (const std::string name : {"LINE-EX", "STAR-C1", "COMP-C1"}) {
      const Scenario sc = *preset_scenario(name);
      const Network net = sc.network();
      const GameInstance game = make_game(net, sc.objective(), sc.beta);
      const NashResult ne = find_ne(game, 1e-5);
      const ExactSolution sol = solve_a_cg_opt(net, game.spec, sc.beta);
      worst = std::max(worst, inf_norm_diff(ne.theta_ne, sol.theta_star));
    }
    r.pass = worst < 1e-4;
    r.detail = detail::bound_detail("max ||theta_ne - theta*||", worst, 1e-4);
  });
}

inline CheckResult check_alternative_sequence() {
  return detail::timed_check("alternative sequence identity",
                             [](CheckResult& r) {
    const Network net = build_topology(TopologyKind::line, 3);
    const double beta = 1.0;
    const ObjectiveSpec spec = builtin_objective("C1", beta);
    RunConfig cfg;
    cfg.algorithm = Algorithm::steep;
    cfg.beta = beta;
    cfg.frames = 100;
    cfg.seed = 1;
    cfg.bounds.theta_min = -1e6; // wide box so no step clamps
    cfg.bounds.theta_max = 1e6;
    const Trace trace = run(net, spec, cfg);
    const AltSeqResult alt = alternative_sequence_check(net, spec, trace);
    r.pass = !alt.skipped && alt.max_deviation < 1e-8;
    r.detail = alt.skipped
                   ? "skipped: " + alt.reason
                   : detail::bound_detail("max deviation", alt.max_deviation, 1e-8);
  });
}

inline CheckResult check_cdm_single_node() {
  return detail::timed_check("cdm single-node rate", [](CheckResult& r) {
    const Network net = build_topology(TopologyKind::line, 1);
    CdmState state = make_cdm_state(net, 5);
    const FrameStats fs = run_frame(net, NodeEdgeVector::zeros(net), state, 1e4);
    const double err = std::abs(fs.s_hat.node[0] - 0.5);
    r.pass = err <= 0.02;
    r.detail = detail::bound_detail("|s_hat - 0.5|", err, 0.02);
  });
}

inline CheckResult check_cdm_stationarity() {
  return detail::timed_check("cdm stationary distribution", [](CheckResult& r) {
    const Network net = build_topology(TopologyKind::line, 3);
    const NodeEdgeVector theta = detail::random_theta(net, 29, -2.0, 2.0);
    const std::vector<double> emp =
        empirical_distribution(net, theta, 1e6 / net.node_count, 29);
    const std::vector<double> exact = stationary_distribution(net, theta);
    double tv = 0.0;
    for (std::size_t c = 0; c < emp.size(); ++c) {
      tv += std::abs(emp[c] - exact[c]);
    }
    tv *= 0.5;
    r.pass = tv <= 0.02;
    r.detail = detail::bound_detail("total variation", tv, 0.02);
  });
}

// The full deterministic property suite behind the `verify` subcommand.
inline std::vector<CheckResult> run_verification() {
  std::vector<CheckResult> results;
  results.push_back(check_self_gradient());
  results.push_back(check_dual_gradient());
  results.push_back(check_strong_duality());
  results.push_back(check_sign_identity());
  results.push_back(check_penalty_quadrature());
  results.push_back(check_nash_equivalence());
  results.push_back(check_alternative_sequence());
  results.push_back(check_cdm_single_node());
  results.push_back(check_cdm_stationarity());
  return results;
}

} // namespace coordsim
