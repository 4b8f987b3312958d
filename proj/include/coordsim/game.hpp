#pragma once

#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "coordsim/errors.hpp"
#include "coordsim/graph.hpp"
#include "coordsim/numeric.hpp"
#include "coordsim/objective.hpp"
#include "coordsim/oracle.hpp"

namespace coordsim {

// Non-cooperative view of the regularized program: every node and every edge
// is a player, the strategy is that player's own parameter component, and the
// payoff couples to the rest of the network only through the player's
// stationary rate. Player k < |V| is node k; player k >= |V| is edge k - |V|,
// matching the flat NodeEdgeVector order.
struct GameInstance {
  Network net;
  ObjectiveSpec spec;
  double beta = 1.0;
  ClampBounds bounds; // strategy box, also the best-response bracket
};

inline GameInstance make_game(const Network& net, const ObjectiveSpec& spec,
                              double beta) {
  if (!(beta > 0.0)) throw ConfigError("beta must be positive");
  GameInstance g{net, spec, beta, a1_bounds(spec, beta)};
  return g;
}

inline int player_count(const GameInstance& g) { return g.net.dimension(); }

inline bool is_node_player(const GameInstance& g, int player) {
  if (player < 0 || player >= player_count(g)) {
    throw UsageError("player index out of range");
  }
  return player < g.net.node_count;
}

namespace detail {
inline double player_rate(const GameInstance& g, const NodeEdgeVector& theta,
                          int player) {
  const double s = marginals(g.net, theta)[static_cast<std::size_t>(player)];
  if (!(s > 0.0 && s < 1.0)) {
    throw EvalError("player rate " + std::to_string(s) +
                    " outside (0,1); penalty undefined");
  }
  return s;
}
} // namespace detail

// Designed penalty V_n = theta_n s_n + ln(1 - s_n), the closed form of
// integral_{-inf}^{theta_n} x s_n'(x, theta_{-n}) dx.
inline double penalty(const GameInstance& g, const NodeEdgeVector& theta,
                      int player) {
  is_node_player(g, player);
  const double s = detail::player_rate(g, theta, player);
  return theta[static_cast<std::size_t>(player)] * s + std::log1p(-s);
}

// Simpson quadrature of the penalty integrand; the tail below -40 is under
// 1e-15 because s' decays exponentially.
inline double penalty_quadrature(const GameInstance& g,
                                 const NodeEdgeVector& theta, int player,
                                 double tol = 1e-10) {
  is_node_player(g, player);
  const double c = conditional_log_odds(g.net, theta, player);
  const auto integrand = [c](double x) {
    const double s = sigmoid(x + c);
    return x * s * (1.0 - s);
  };
  return adaptive_simpson(integrand, -40.0,
                          theta[static_cast<std::size_t>(player)], tol);
}

inline double payoff(const GameInstance& g, const NodeEdgeVector& theta,
                     int player) {
  const bool node = is_node_player(g, player);
  const double s = detail::player_rate(g, theta, player);
  const double v = theta[static_cast<std::size_t>(player)] * s + std::log1p(-s);
  if (node) return -g.spec.cost(player).value(s) - v / g.beta;
  auto [i, j] = g.net.edges[player - g.net.node_count];
  return g.spec.utility(i, j).value(s) - v / g.beta;
}

inline double payoff_gradient(const GameInstance& g,
                              const NodeEdgeVector& theta, int player) {
  const bool node = is_node_player(g, player);
  const double s = detail::player_rate(g, theta, player);
  const double th = theta[static_cast<std::size_t>(player)];
  if (node) return -s * (1.0 - s) * (g.spec.cost(player).d1(s) + th / g.beta);
  auto [i, j] = g.net.edges[player - g.net.node_count];
  return s * (1.0 - s) * (g.spec.utility(i, j).d1(s) - th / g.beta);
}

// Ordinal potential: every payoff gradient agrees in sign with the matching
// component of this function's gradient.
inline double potential(const GameInstance& g, const NodeEdgeVector& theta) {
  return -dual_value(g.net, g.spec, g.beta, theta);
}

// Exact best response of one player with everything else held fixed. The
// player's rate is sigmoid(x + c) with c independent of x, so the stationary
// condition is a strictly increasing scalar equation
//   node:  x + beta C'(sigmoid(x + c)) = 0
//   edge:  x - beta U'(sigmoid(x + c)) = 0
// solved by bisection on the strategy box.
inline double best_response(const GameInstance& g, const NodeEdgeVector& theta,
                            int player, double tol = 1e-12) {
  const bool node = is_node_player(g, player);
  const double c = conditional_log_odds(g.net, theta, player);
  const double beta = g.beta;
  const ScalarFn* fn = nullptr;
  if (node) {
    fn = &g.spec.cost(player);
  } else {
    auto [i, j] = g.net.edges[player - g.net.node_count];
    fn = &g.spec.utility(i, j);
  }
  const auto h = [&](double x) {
    const double s = sigmoid(x + c);
    return node ? x + beta * fn->d1(s) : x - beta * fn->d1(s);
  };

  double lo = g.bounds.theta_min;
  double hi = g.bounds.theta_max;
  double hlo = h(lo);
  double hhi = h(hi);
  if (hlo == 0.0) return lo;
  if (hhi == 0.0) return hi;
  if (!(hlo < 0.0 && hhi > 0.0)) {
    throw BracketError("best response for " +
                       component_label(g.net, player) +
                       " not bracketed by the strategy box");
  }
  while (hi - lo > tol) {
    const double mid = 0.5 * (lo + hi);
    const double hm = h(mid);
    if (hm == 0.0) return mid;
    (hm < 0.0 ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

struct NashResult {
  NodeEdgeVector theta_ne;
  double potential_value = 0.0;
  double gap_to_social_opt = 0.0;
  double poa_bound = 0.0; // |V| log 2 / beta
  double residual = 0.0;  // sup-norm best-response displacement
  long rounds = 0;
  double ne_gain = 0.0;
  double social_gain = 0.0;
  std::optional<double> poa_ratio; // only meaningful when both gains > 0
  std::vector<double> potential_series; // potential after each sweep
};

struct NashConvergenceError : Error {
  NashConvergenceError(const std::string& what, NashResult best_result)
      : Error(what), best_(std::move(best_result)) {}
  const NashResult& best() const { return best_; }

private:
  NashResult best_;
};

namespace detail {
// The social optimum of the unregularized program, approached from below by
// pushing the regularizer down a geometric beta ladder. The gain settles in
// beta long before the parameters do, so the ladder stops at 10x the game's
// beta (at least 1e3); beyond that, theta grows with beta until the solver's
// absolute residual floor exceeds any fixed tolerance. The stage tolerance is
// relaxed for the same reason; a theta residual of 1e-6 moves the reported
// gain by far less than the gap bound it feeds into.
inline double social_optimum_gain(const GameInstance& g) {
  std::vector<double> schedule;
  double b = g.beta;
  schedule.push_back(b);
  const double top = std::max(1e3, 10.0 * g.beta);
  while (b < top) {
    b = std::min(b * 10.0, top);
    schedule.push_back(b);
  }
  return solve_cg_opt(g.net, g.spec, schedule, 1e-6).gain;
}
} // namespace detail

// Round-robin exact best response. Each player's best response is also the
// coordinate-wise maximizer of the potential (the payoff derivative crosses
// zero exactly where the potential's does), so the sweeps are cyclic
// coordinate ascent on a strictly concave function and need no damping. A
// round's displacement is the largest parameter move inside that sweep; the
// located equilibrium is cross-checked against the fixed point computed by
// the convex solver.
inline NashResult find_ne(const GameInstance& g, double tol = 1e-6,
                          long max_rounds = 5000) {
  if (!(tol > 0.0)) throw UsageError("tol must be positive");

  NodeEdgeVector theta = NodeEdgeVector::zeros(g.net);
  const double br_tol = std::min(tol * 1e-3, 1e-12);

  NashResult res;
  res.poa_bound = g.net.node_count * std::log(2.0) / g.beta;

  long round = 0;
  double disp = kInf;
  double prev = kInf;
  bool settled = false;
  for (round = 1; round <= max_rounds; ++round) {
    disp = 0.0;
    for (int k = 0; k < player_count(g); ++k) {
      const double br = best_response(g, theta, k, br_tol);
      disp = std::max(disp, std::abs(br - theta[static_cast<std::size_t>(k)]));
      theta[static_cast<std::size_t>(k)] = br;
    }
    res.potential_series.push_back(potential(g, theta));
    // The distance still to travel is bounded by the geometric tail of the
    // sweep displacements, which dominates the raw displacement when the
    // per-sweep contraction is close to 1.
    const double rho = std::min(disp / prev, 0.999);
    const double tail = disp * rho / (1.0 - rho);
    if (std::max(disp, tail) <= tol) {
      settled = true;
      break;
    }
    prev = disp;
  }

  if (!settled) {
    res.theta_ne = theta;
    res.residual = disp;
    res.rounds = max_rounds;
    throw NashConvergenceError(
        "best-response sweeps: displacement " + std::to_string(disp) +
            " above tolerance after " + std::to_string(max_rounds) + " rounds",
        res);
  }

  res.theta_ne = theta;
  res.residual = disp;
  res.rounds = round;
  res.potential_value = potential(g, theta);
  res.ne_gain = gain(g.net, g.spec, marginals(g.net, theta));

  const ExactSolution star = solve_a_cg_opt(g.net, g.spec, g.beta);
  const double drift = inf_norm_diff(theta, star.theta_star);
  if (drift > 10.0 * tol) {
    throw EvalError("equilibrium disagrees with the convex solver by " +
                    std::to_string(drift));
  }

  res.social_gain = detail::social_optimum_gain(g);
  res.gap_to_social_opt = res.social_gain - res.ne_gain;
  if (res.ne_gain > 0.0 && res.social_gain > 0.0) {
    res.poa_ratio = res.social_gain / res.ne_gain;
  }
  return res;
}

// One synchronous step of exact gradient dynamics, the oracle-backed
// counterpart of the sampled individual-gradient update.
inline NodeEdgeVector gradient_dynamics_step(const GameInstance& g,
                                             const NodeEdgeVector& theta,
                                             double alpha) {
  if (!(alpha > 0.0 && alpha <= 1.0)) throw UsageError("alpha must be in (0,1]");
  const NodeEdgeVector s = marginals(g.net, theta);
  NodeEdgeVector out = theta;
  for (int i = 0; i < g.net.node_count; ++i) {
    const double si = s.node[i];
    out.node[i] += alpha * (-si * (1.0 - si) *
                            (g.spec.cost(i).d1(si) + theta.node[i] / g.beta));
  }
  for (int e = 0; e < g.net.edge_count(); ++e) {
    auto [i, j] = g.net.edges[e];
    const double se = s.edge[e];
    out.edge[e] += alpha * (se * (1.0 - se) *
                            (g.spec.utility(i, j).d1(se) - theta.edge[e] / g.beta));
  }
  return out;
}

} // namespace coordsim
