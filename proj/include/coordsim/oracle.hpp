#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "coordsim/errors.hpp"
#include "coordsim/graph.hpp"
#include "coordsim/numeric.hpp"
#include "coordsim/objective.hpp"

namespace coordsim {

// Exact brute-force computations over all 2^|V| configurations. Everything
// here is the ground truth the stochastic algorithms are judged against, so
// clarity wins over cleverness; the only concession to speed is that each
// candidate theta costs exactly one enumeration pass.

namespace detail {

// <theta, phi(sigma)> for every configuration, indexed by
// configuration_index.
inline std::vector<double> config_log_weights(const Network& net,
                                              const NodeEdgeVector& theta) {
  require_enumerable(net);
  if (!theta.sized_for(net)) throw UsageError("theta not sized for network");
  const std::uint32_t count = std::uint32_t{1} << net.node_count;
  std::vector<double> dots(count, 0.0);
  for (std::uint32_t k = 0; k < count; ++k) {
    double d = 0.0;
    for (int i = 0; i < net.node_count; ++i) {
      if ((k >> i) & 1u) d += theta.node[i];
    }
    for (int e = 0; e < net.edge_count(); ++e) {
      auto [i, j] = net.edges[e];
      if (((k >> i) & 1u) && ((k >> j) & 1u)) d += theta.edge[e];
    }
    dots[k] = d;
  }
  return dots;
}

struct EnumerationPass {
  double log_z = 0.0;
  NodeEdgeVector marginals; // floored at 1e-300 against exp underflow
};

inline EnumerationPass enumerate_marginals(const Network& net,
                                           const NodeEdgeVector& theta) {
  const std::vector<double> dots = config_log_weights(net, theta);
  const double m = *std::max_element(dots.begin(), dots.end());
  EnumerationPass out;
  out.marginals = NodeEdgeVector::zeros(net);
  double z = 0.0;
  for (std::uint32_t k = 0; k < dots.size(); ++k) {
    const double w = std::exp(dots[k] - m);
    z += w;
    for (int i = 0; i < net.node_count; ++i) {
      if ((k >> i) & 1u) out.marginals.node[i] += w;
    }
    for (int e = 0; e < net.edge_count(); ++e) {
      auto [i, j] = net.edges[e];
      if (((k >> i) & 1u) && ((k >> j) & 1u)) out.marginals.edge[e] += w;
    }
  }
  out.log_z = m + std::log(z);
  for (double& x : out.marginals.node) x = std::max(x / z, 1e-300);
  for (double& x : out.marginals.edge) x = std::max(x / z, 1e-300);
  return out;
}

} // namespace detail

inline double log_partition(const Network& net, const NodeEdgeVector& theta) {
  return log_sum_exp(detail::config_log_weights(net, theta));
}

inline std::vector<double> stationary_distribution(const Network& net,
                                                   const NodeEdgeVector& theta) {
  std::vector<double> p = detail::config_log_weights(net, theta);
  const double lz = log_sum_exp(p);
  for (double& x : p) x = std::exp(x - lz);
  return p;
}

// s_i = E[sigma_i], s_ij = E[sigma_i sigma_j] under the stationary law.
inline NodeEdgeVector marginals(const Network& net,
                                const NodeEdgeVector& theta) {
  return detail::enumerate_marginals(net, theta).marginals;
}

// d s_n / d theta_n = s_n (1 - s_n), for nodes and edges alike.
inline NodeEdgeVector marginal_self_gradient(const Network& net,
                                             const NodeEdgeVector& theta) {
  NodeEdgeVector s = marginals(net, theta);
  for (double& x : s.node) x = x * (1.0 - x);
  for (double& x : s.edge) x = x * (1.0 - x);
  return s;
}

// log-odds offset of one component: with every other entry of theta held
// fixed, s_n(x) = sigmoid(x + offset) as a function of that component's own
// parameter x. Flat component index: nodes first, then edges.
inline double conditional_log_odds(const Network& net,
                                   const NodeEdgeVector& theta,
                                   std::size_t component) {
  if (component >= theta.size()) throw UsageError("component out of range");
  NodeEdgeVector reduced = theta;
  reduced[component] = 0.0;
  const std::vector<double> dots = detail::config_log_weights(net, reduced);
  std::vector<double> with, without;
  with.reserve(dots.size() / 2);
  without.reserve(dots.size() / 2);
  const bool is_node = component < static_cast<std::size_t>(net.node_count);
  const auto [i, j] =
      is_node ? std::make_pair(static_cast<int>(component), -1)
              : net.edges[component - net.node_count];
  for (std::uint32_t k = 0; k < dots.size(); ++k) {
    const bool on = is_node ? ((k >> i) & 1u)
                            : (((k >> i) & 1u) && ((k >> j) & 1u));
    (on ? with : without).push_back(dots[k]);
  }
  return log_sum_exp(with) - log_sum_exp(without);
}

// argmax over y in [0,1] of -C(y) - k*y. Interior stationarity is
// C'(y) = -k; the boundary case is y = 0 when -k <= C'(0). C' is increasing
// so the comparison settles which branch applies before C'^{-1} is touched.
inline double kkt_node_rate(const ScalarFn& cost, double k) {
  if (-k <= cost.d1(0.0)) return 0.0;
  return clamp(cost.inv_d1(-k), 0.0, 1.0);
}

// argmax over y in [0,1] of U(y) - k*y. U' is decreasing with U'(1) the
// smallest slope in range, so k <= U'(1) saturates at y = 1. For log
// utility this covers every k <= 1, where U'^{-1} would be meaningless.
inline double kkt_edge_rate(const ScalarFn& utility, double k) {
  if (k <= utility.d1(1.0)) return 1.0;
  return clamp(utility.inv_d1(k), 0.0, 1.0);
}

// Lagrange dual of the entropy-regularized program:
//   D(theta) = log Z(theta)/beta
//            + sum_edges [ U(y*) - (theta_ij/beta) y* ]
//            + sum_nodes [ -C(y*) - (theta_i/beta) y* ]
// with y* the KKT-recovered rates above.
inline double dual_value(const Network& net, const ObjectiveSpec& spec,
                         double beta, const NodeEdgeVector& theta) {
  double d = log_partition(net, theta) / beta;
  for (int e = 0; e < net.edge_count(); ++e) {
    auto [i, j] = net.edges[e];
    const ScalarFn& u = spec.utility(i, j);
    const double y = kkt_edge_rate(u, theta.edge[e] / beta);
    d += u.value(y) - (theta.edge[e] / beta) * y;
  }
  for (int i = 0; i < net.node_count; ++i) {
    const ScalarFn& c = spec.cost(i);
    const double y = kkt_node_rate(c, theta.node[i] / beta);
    d += -c.value(y) - (theta.node[i] / beta) * y;
  }
  return d;
}

// Gradient of D: (s_n(theta) - y*_n)/beta per component.
inline NodeEdgeVector dual_gradient(const Network& net,
                                    const ObjectiveSpec& spec, double beta,
                                    const NodeEdgeVector& theta) {
  NodeEdgeVector g = marginals(net, theta);
  for (int i = 0; i < net.node_count; ++i) {
    g.node[i] =
        (g.node[i] - kkt_node_rate(spec.cost(i), theta.node[i] / beta)) / beta;
  }
  for (int e = 0; e < net.edge_count(); ++e) {
    auto [i, j] = net.edges[e];
    g.edge[e] =
        (g.edge[e] - kkt_edge_rate(spec.utility(i, j), theta.edge[e] / beta)) /
        beta;
  }
  return g;
}

// sum_edges U(lambda_ij) - sum_nodes C(lambda_i). Returns -inf when a zero
// coordination rate meets log utility; rejects entries outside [0,1].
inline double gain(const Network& net, const ObjectiveSpec& spec,
                   const NodeEdgeVector& lambda) {
  if (!lambda.sized_for(net)) throw UsageError("lambda not sized for network");
  for (std::size_t k = 0; k < lambda.size(); ++k) {
    if (!(lambda[k] >= 0.0 && lambda[k] <= 1.0)) {
      throw UsageError("rate outside [0,1] at component " +
                       component_label(net, k));
    }
  }
  double g = 0.0;
  for (int e = 0; e < net.edge_count(); ++e) {
    auto [i, j] = net.edges[e];
    g += spec.utility(i, j).value(lambda.edge[e]);
  }
  for (int i = 0; i < net.node_count; ++i) {
    g -= spec.cost(i).value(lambda.node[i]);
  }
  return g;
}

struct ExactSolution {
  double beta = 0.0;
  NodeEdgeVector theta_star;
  NodeEdgeVector lambda_star;
  double gain = 0.0;
  double dual_value = 0.0;
  double residual = kInf;
  long iterations = 0;
  double gap_bound = 0.0; // |V| log 2 / beta
};

// Thrown when the solver runs out of budget; carries the best iterate so a
// caller can inspect how close it got.
class ConvergenceError : public Error {
public:
  ConvergenceError(const std::string& what, ExactSolution best)
      : Error(what), best_(std::move(best)) {}
  const ExactSolution& best() const { return best_; }

private:
  ExactSolution best_;
};

namespace detail {

// The fixed-point map of the stationarity conditions:
//   F_i = -beta C_i'(s_i(theta)),  F_ij = beta U_ij'(s_ij(theta)).
inline NodeEdgeVector fixed_point_from_marginals(const Network& net,
                                                 const ObjectiveSpec& spec,
                                                 double beta,
                                                 const NodeEdgeVector& s) {
  NodeEdgeVector f = NodeEdgeVector::zeros(net);
  for (int i = 0; i < net.node_count; ++i) {
    f.node[i] = -beta * spec.cost(i).d1(s.node[i]);
  }
  for (int e = 0; e < net.edge_count(); ++e) {
    auto [i, j] = net.edges[e];
    f.edge[e] = beta * spec.utility(i, j).d1(s.edge[e]);
  }
  return f;
}

struct SolverPoint {
  NodeEdgeVector theta;
  NodeEdgeVector s;
  NodeEdgeVector f;
  double log_z = 0.0;
  double residual = kInf;
};

inline SolverPoint evaluate_point(const Network& net, const ObjectiveSpec& spec,
                                  double beta, NodeEdgeVector theta) {
  SolverPoint p;
  EnumerationPass pass = enumerate_marginals(net, theta);
  p.theta = std::move(theta);
  p.s = std::move(pass.marginals);
  p.log_z = pass.log_z;
  p.f = fixed_point_from_marginals(net, spec, beta, p.s);
  p.residual = inf_norm_diff(p.f, p.theta);
  return p;
}

// D(theta) from an already computed log partition value.
inline double dual_value_from_log_z(const Network& net,
                                    const ObjectiveSpec& spec, double beta,
                                    const NodeEdgeVector& theta, double log_z) {
  double d = log_z / beta;
  for (int e = 0; e < net.edge_count(); ++e) {
    auto [i, j] = net.edges[e];
    const ScalarFn& u = spec.utility(i, j);
    const double y = kkt_edge_rate(u, theta.edge[e] / beta);
    d += u.value(y) - (theta.edge[e] / beta) * y;
  }
  for (int i = 0; i < net.node_count; ++i) {
    const ScalarFn& c = spec.cost(i);
    const double y = kkt_node_rate(c, theta.node[i] / beta);
    d += -c.value(y) - (theta.node[i] / beta) * y;
  }
  return d;
}

inline NodeEdgeVector dual_gradient_from_marginals(const Network& net,
                                                   const ObjectiveSpec& spec,
                                                   double beta,
                                                   const NodeEdgeVector& theta,
                                                   const NodeEdgeVector& s) {
  NodeEdgeVector g = s;
  for (int i = 0; i < net.node_count; ++i) {
    g.node[i] =
        (s.node[i] - kkt_node_rate(spec.cost(i), theta.node[i] / beta)) / beta;
  }
  for (int e = 0; e < net.edge_count(); ++e) {
    auto [i, j] = net.edges[e];
    g.edge[e] =
        (s.edge[e] - kkt_edge_rate(spec.utility(i, j), theta.edge[e] / beta)) /
        beta;
  }
  return g;
}

} // namespace detail

inline NodeEdgeVector fixed_point_map(const Network& net,
                                      const ObjectiveSpec& spec, double beta,
                                      const NodeEdgeVector& theta) {
  return detail::fixed_point_from_marginals(net, spec, beta,
                                            marginals(net, theta));
}

// Solves the stationarity fixed point theta_i = -beta C_i'(s_i(theta)),
// theta_ij = beta U_ij'(s_ij(theta)) to sup-norm residual <= tol.
//
// Phase 1 is damped fixed-point iteration theta <- (1-a) theta + a F(theta)
// with a scalar damping factor: a trial is rejected when its residual is
// non-finite or grows past 1.25x the current one (then a is halved, floor
// 1e-7); after 15 consecutive accepts a is raised by 1.4x up to 1. Strict
// monotone acceptance stalls on the spiral-shaped iterate paths this map
// produces at large beta, while the 1.25x band lets the spiral contract.
//
// Phase 2 polishes from the best iterate by descending the convex dual D
// with Barzilai-Borwein steps under an Armijo backtracking safeguard. The
// descent direction is the plain dual (sub)gradient; BB only chooses its
// length. Cold-started fixed-point iteration alone needs ~2.5e5 iterations
// at beta = 1000 on a 5-node star; the combined scheme stays under ~4e3.
inline ExactSolution solve_a_cg_opt(const Network& net,
                                    const ObjectiveSpec& spec, double beta,
                                    double tol = 1e-8, long max_iter = 100000,
                                    const NodeEdgeVector* warm_start = nullptr) {
  if (!(beta > 0.0)) throw UsageError("beta must be positive");
  if (!(tol > 0.0)) throw UsageError("tol must be positive");
  require_enumerable(net);

  using detail::evaluate_point;
  using detail::SolverPoint;

  SolverPoint cur = evaluate_point(
      net, spec, beta, warm_start ? *warm_start : NodeEdgeVector::zeros(net));
  SolverPoint best = cur;
  long iterations = 0;

  // Phase 1: damped fixed point.
  {
    double damping = 1.0;
    int consecutive_accepts = 0;
    const long budget = std::min<long>(3000, max_iter);
    while (cur.residual > tol && iterations < budget) {
      ++iterations;
      NodeEdgeVector trial = add_scaled(cur.theta, subtract(cur.f, cur.theta),
                                        damping);
      SolverPoint next = evaluate_point(net, spec, beta, std::move(trial));
      if (!std::isfinite(next.residual) ||
          next.residual > 1.25 * cur.residual) {
        damping = std::max(damping / 2.0, 1e-7);
        consecutive_accepts = 0;
        continue;
      }
      cur = std::move(next);
      if (cur.residual < best.residual) best = cur;
      if (++consecutive_accepts >= 15) {
        damping = std::min(damping * 1.4, 1.0);
        consecutive_accepts = 0;
      }
    }
  }

  // Phase 2: safeguarded Barzilai-Borwein descent on D.
  if (cur.residual > tol) {
    cur = best;
    NodeEdgeVector grad =
        detail::dual_gradient_from_marginals(net, spec, beta, cur.theta, cur.s);
    double dval =
        detail::dual_value_from_log_z(net, spec, beta, cur.theta, cur.log_z);
    double step = 1.0;
    bool have_previous = false;
    NodeEdgeVector prev_theta, prev_grad;

    while (cur.residual > tol && iterations < max_iter) {
      ++iterations;
      if (have_previous) {
        NodeEdgeVector dt = subtract(cur.theta, prev_theta);
        NodeEdgeVector dg = subtract(grad, prev_grad);
        const double sy = dot(dt, dg);
        if (sy > 1e-300) step = dot(dt, dt) / sy;
      }

      SolverPoint next;
      double next_dval = kInf;
      bool accepted = false;
      double trial_step = step;
      for (int bt = 0; bt < 60; ++bt) {
        next = evaluate_point(net, spec, beta,
                              add_scaled(cur.theta, grad, -trial_step));
        next_dval = detail::dual_value_from_log_z(net, spec, beta, next.theta,
                                                  next.log_z);
        if (std::isfinite(next_dval) &&
            next_dval <= dval + 1e-12 * (1.0 + std::abs(dval))) {
          accepted = true;
          break;
        }
        trial_step *= 0.25;
      }
      if (!accepted) break;

      prev_theta = std::move(cur.theta);
      prev_grad = std::move(grad);
      have_previous = true;
      cur = std::move(next);
      dval = next_dval;
      grad = detail::dual_gradient_from_marginals(net, spec, beta, cur.theta,
                                                  cur.s);
      step = trial_step;
      if (cur.residual < best.residual) best = cur;
    }
  }

  if (cur.residual > best.residual) cur = best;

  ExactSolution sol;
  sol.beta = beta;
  sol.theta_star = cur.theta;
  sol.lambda_star = cur.s;
  sol.gain = gain(net, spec, cur.s);
  sol.dual_value =
      detail::dual_value_from_log_z(net, spec, beta, cur.theta, cur.log_z);
  sol.residual = cur.residual;
  sol.iterations = iterations;
  sol.gap_bound = net.node_count * std::log(2.0) / beta;

  if (sol.residual > tol) {
    throw ConvergenceError("fixed point not reached after " +
                               std::to_string(iterations) +
                               " iterations (residual " +
                               std::to_string(sol.residual) + ")",
                           sol);
  }
  return sol;
}

// beta-continuation: solve along an increasing schedule, warm-starting each
// leg from the previous solution scaled by the beta ratio (the fixed point
// grows roughly linearly in beta). The final leg approximates the
// unregularized problem within |V| log 2 / beta_final.
inline ExactSolution solve_cg_opt(const Network& net, const ObjectiveSpec& spec,
                                  const std::vector<double>& beta_schedule,
                                  double tol = 1e-8,
                                  std::vector<ExactSolution>* stages = nullptr) {
  if (beta_schedule.empty()) throw UsageError("empty beta schedule");
  for (std::size_t k = 0; k < beta_schedule.size(); ++k) {
    if (!(beta_schedule[k] > 0.0)) throw UsageError("beta must be positive");
    if (k > 0 && beta_schedule[k] <= beta_schedule[k - 1]) {
      throw UsageError("beta schedule must be strictly increasing");
    }
  }
  std::optional<ExactSolution> last;
  for (double beta : beta_schedule) {
    NodeEdgeVector warm;
    const NodeEdgeVector* warm_ptr = nullptr;
    if (last) {
      warm = last->theta_star;
      const double scale = beta / last->beta;
      for (double& x : warm.node) x *= scale;
      for (double& x : warm.edge) x *= scale;
      warm_ptr = &warm;
    }
    last = solve_a_cg_opt(net, spec, beta, tol, 100000, warm_ptr);
    if (stages) stages->push_back(*last);
  }
  return *last;
}

} // namespace coordsim
