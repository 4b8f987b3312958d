#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "coordsim/cdm.hpp"
#include "coordsim/errors.hpp"
#include "coordsim/graph.hpp"
#include "coordsim/objective.hpp"
#include "coordsim/oracle.hpp"

namespace coordsim {

enum class Algorithm { dual, steep, ind };

inline Algorithm parse_algorithm(const std::string& s) {
  if (s == "dual") return Algorithm::dual;
  if (s == "steep") return Algorithm::steep;
  if (s == "ind") return Algorithm::ind;
  throw ConfigError("unknown algorithm '" + s + "'");
}

inline std::string algorithm_name(Algorithm a) {
  switch (a) {
    case Algorithm::dual: return "dual";
    case Algorithm::steep: return "steep";
    case Algorithm::ind: return "ind";
  }
  return "?";
}

// Exact running mean of s_hat[0..t]:
//   s_bar[t] = s_bar[t-1] - (s_bar[t-1] - s_hat[t]) / (t+1).
inline NodeEdgeVector update_cumulative(const NodeEdgeVector& s_bar,
                                        const NodeEdgeVector& s_hat, long t) {
  if (t < 0) throw UsageError("frame index must be nonnegative");
  if (t == 0) return s_hat;
  NodeEdgeVector out = s_bar;
  const double w = 1.0 / static_cast<double>(t + 1);
  for (std::size_t k = 0; k < out.node.size(); ++k)
    out.node[k] -= w * (out.node[k] - s_hat.node[k]);
  for (std::size_t k = 0; k < out.edge.size(); ++k)
    out.edge[k] -= w * (out.edge[k] - s_hat.edge[k]);
  return out;
}

// Scalar update rules. Each is a function of one component's own parameter
// and one scalar rate plus that component's objective; nothing else is in
// scope. The per-node update of every algorithm factors through these, which
// is what makes the one-hop locality claim checkable: feed a component
// arbitrary values for the rest of the network and its update cannot change.
//
// Rates are pushed away from {0,1} by rate_epsilon before U'/C' are applied
// (log utility has U'(0) = inf; an all-idle first frame would otherwise
// produce an infinite target). The returned values are unclamped; callers
// apply the [theta_min, theta_max] box.

inline double dual_node_target(const ScalarFn& cost, double beta, double theta,
                               double s_hat, double a) {
  return theta + a * (kkt_node_rate(cost, theta / beta) - s_hat);
}

inline double dual_edge_target(const ScalarFn& utility, double beta,
                               double theta, double s_hat, double a) {
  return theta + a * (kkt_edge_rate(utility, theta / beta) - s_hat);
}

inline double steep_node_target(const ScalarFn& cost, double beta, double theta,
                                double s_bar, double alpha, double rate_eps) {
  const double r = clamp(s_bar, rate_eps, 1.0 - rate_eps);
  return theta + alpha * (-beta * cost.d1(r) - theta);
}

inline double steep_edge_target(const ScalarFn& utility, double beta,
                                double theta, double s_bar, double alpha,
                                double rate_eps) {
  const double r = clamp(s_bar, rate_eps, 1.0 - rate_eps);
  return theta + alpha * (beta * utility.d1(r) - theta);
}

inline double ind_node_target(const ScalarFn& cost, double beta, double theta,
                              double s_bar, double alpha, double rate_eps) {
  const double r = clamp(s_bar, rate_eps, 1.0 - rate_eps);
  return theta + (alpha / beta) * r * (1.0 - r) * (-beta * cost.d1(r) - theta);
}

inline double ind_edge_target(const ScalarFn& utility, double beta,
                              double theta, double s_bar, double alpha,
                              double rate_eps) {
  const double r = clamp(s_bar, rate_eps, 1.0 - rate_eps);
  return theta + (alpha / beta) * r * (1.0 - r) * (beta * utility.d1(r) - theta);
}

struct CoordState {
  NodeEdgeVector theta;
  NodeEdgeVector s_bar;
  long frame = 0;
  CdmState cdm;
  Algorithm algorithm = Algorithm::steep;
  double step_scale = 3.0; // a[t] = step_scale / t, a[0] = 0
  double alpha = 0.5;
  double beta = 1.0;
  ClampBounds bounds;
  long clamp_events = 0;
};

namespace detail {
inline double box(CoordState& st, double raw) {
  const double v = clamp(raw, st.bounds.theta_min, st.bounds.theta_max);
  if (v != raw) ++st.clamp_events;
  return v;
}
} // namespace detail

// Diminishing-step dual ascent on the instant rates. s_bar is maintained for
// reporting only; the parameter moves on s_hat.
inline void step_dual(const Network& net, const ObjectiveSpec& spec,
                      CoordState& st, const NodeEdgeVector& s_hat) {
  const long t = st.frame;
  const double a = t >= 1 ? st.step_scale / static_cast<double>(t) : 0.0;
  st.s_bar = update_cumulative(st.s_bar, s_hat, t);
  for (int i = 0; i < net.node_count; ++i) {
    st.theta.node[i] = detail::box(
        st, dual_node_target(spec.cost(i), st.beta, st.theta.node[i],
                             s_hat.node[i], a));
  }
  for (int e = 0; e < net.edge_count(); ++e) {
    auto [i, j] = net.edges[e];
    st.theta.edge[e] = detail::box(
        st, dual_edge_target(spec.utility(i, j), st.beta, st.theta.edge[e],
                             s_hat.edge[e], a));
  }
  ++st.frame;
}

// Smoothed fixed-point iteration on the cumulative rates.
inline void step_steep(const Network& net, const ObjectiveSpec& spec,
                       CoordState& st, const NodeEdgeVector& s_hat) {
  st.s_bar = update_cumulative(st.s_bar, s_hat, st.frame);
  const double eps = st.bounds.rate_epsilon;
  for (int i = 0; i < net.node_count; ++i) {
    st.theta.node[i] = detail::box(
        st, steep_node_target(spec.cost(i), st.beta, st.theta.node[i],
                              st.s_bar.node[i], st.alpha, eps));
  }
  for (int e = 0; e < net.edge_count(); ++e) {
    auto [i, j] = net.edges[e];
    st.theta.edge[e] = detail::box(
        st, steep_edge_target(spec.utility(i, j), st.beta, st.theta.edge[e],
                              st.s_bar.edge[e], st.alpha, eps));
  }
  ++st.frame;
}

// Penalized individual gradient: the steep drift scaled by the locally
// estimated self-gradient s_bar(1 - s_bar) and 1/beta.
inline void step_ind(const Network& net, const ObjectiveSpec& spec,
                     CoordState& st, const NodeEdgeVector& s_hat) {
  st.s_bar = update_cumulative(st.s_bar, s_hat, st.frame);
  const double eps = st.bounds.rate_epsilon;
  for (int i = 0; i < net.node_count; ++i) {
    st.theta.node[i] = detail::box(
        st, ind_node_target(spec.cost(i), st.beta, st.theta.node[i],
                            st.s_bar.node[i], st.alpha, eps));
  }
  for (int e = 0; e < net.edge_count(); ++e) {
    auto [i, j] = net.edges[e];
    st.theta.edge[e] = detail::box(
        st, ind_edge_target(spec.utility(i, j), st.beta, st.theta.edge[e],
                            st.s_bar.edge[e], st.alpha, eps));
  }
  ++st.frame;
}

inline void step(const Network& net, const ObjectiveSpec& spec, CoordState& st,
                 const NodeEdgeVector& s_hat) {
  switch (st.algorithm) {
    case Algorithm::dual: step_dual(net, spec, st, s_hat); break;
    case Algorithm::steep: step_steep(net, spec, st, s_hat); break;
    case Algorithm::ind: step_ind(net, spec, st, s_hat); break;
  }
}

struct RunConfig {
  Algorithm algorithm = Algorithm::steep;
  double beta = 1.0;
  long frames = 1000;
  double T = 10.0;
  std::uint64_t seed = 1;
  double alpha = 0.5;
  double step_scale = 3.0;
  ClampBounds bounds;
  NodeEdgeVector theta0; // empty means all zeros
  std::string scenario_id;
};

// Per-frame series of a run, stored row-major (one row per frame, dimension
// |V|+|E|). Row t holds the post-update parameter theta[t+1] together with
// s_hat[t], s_bar[t] and gain(s_bar[t]); theta[0] is kept separately.
struct Trace {
  std::string scenario;
  Algorithm algorithm = Algorithm::steep;
  double beta = 1.0;
  double alpha = 0.5;
  double step_scale = 3.0;
  double T = 10.0;
  std::uint64_t seed = 0;
  ClampBounds bounds;
  int node_count = 0;
  int edge_count = 0;
  NodeEdgeVector theta0;

  std::vector<double> gain;            // gain(s_bar[t])
  std::vector<std::uint64_t> events;   // cumulative CDM events after frame t
  std::vector<double> theta;           // frames x dim
  std::vector<double> s_bar;           // frames x dim
  std::vector<double> s_hat;           // frames x dim
  long clamp_events = 0;

  long frames() const { return static_cast<long>(gain.size()); }
  int dimension() const { return node_count + edge_count; }

  NodeEdgeVector row(const std::vector<double>& flat, long t) const {
    NodeEdgeVector v(node_count, edge_count);
    const double* p = flat.data() + static_cast<std::size_t>(t) * dimension();
    for (int i = 0; i < node_count; ++i) v.node[i] = p[i];
    for (int e = 0; e < edge_count; ++e) v.edge[e] = p[node_count + e];
    return v;
  }
  NodeEdgeVector theta_at(long t) const { return row(theta, t); }
  NodeEdgeVector s_bar_at(long t) const { return row(s_bar, t); }
  NodeEdgeVector s_hat_at(long t) const { return row(s_hat, t); }
};

namespace detail {
inline void append_row(std::vector<double>& flat, const NodeEdgeVector& v) {
  flat.insert(flat.end(), v.node.begin(), v.node.end());
  flat.insert(flat.end(), v.edge.begin(), v.edge.end());
}
} // namespace detail

// The frame loop: run the chain for T under theta[t], read off s_hat[t],
// apply the algorithm's update, record. One trace row per frame.
inline Trace run(const Network& net, const ObjectiveSpec& spec,
                 const RunConfig& cfg) {
  if (cfg.frames < 1) throw UsageError("frames must be >= 1");
  if (!(cfg.alpha > 0.0 && cfg.alpha <= 1.0)) {
    throw UsageError("alpha must be in (0,1]");
  }

  CoordState st;
  st.theta = cfg.theta0.size() ? cfg.theta0 : NodeEdgeVector::zeros(net);
  if (!st.theta.sized_for(net)) throw UsageError("theta0 not sized for network");
  st.s_bar = NodeEdgeVector::zeros(net);
  st.cdm = make_cdm_state(net, cfg.seed);
  st.algorithm = cfg.algorithm;
  st.step_scale = cfg.step_scale;
  st.alpha = cfg.alpha;
  st.beta = cfg.beta;
  st.bounds = cfg.bounds;

  Trace trace;
  trace.scenario = cfg.scenario_id;
  trace.algorithm = cfg.algorithm;
  trace.beta = cfg.beta;
  trace.alpha = cfg.alpha;
  trace.step_scale = cfg.step_scale;
  trace.T = cfg.T;
  trace.seed = cfg.seed;
  trace.bounds = cfg.bounds;
  trace.node_count = net.node_count;
  trace.edge_count = net.edge_count();
  trace.theta0 = st.theta;
  trace.gain.reserve(cfg.frames);
  trace.events.reserve(cfg.frames);
  const std::size_t flat = static_cast<std::size_t>(cfg.frames) * net.dimension();
  trace.theta.reserve(flat);
  trace.s_bar.reserve(flat);
  trace.s_hat.reserve(flat);

  for (long t = 0; t < cfg.frames; ++t) {
    const FrameStats fs = run_frame(net, st.theta, st.cdm, cfg.T);
    step(net, spec, st, fs.s_hat);
    detail::append_row(trace.theta, st.theta);
    detail::append_row(trace.s_bar, st.s_bar);
    detail::append_row(trace.s_hat, fs.s_hat);
    trace.gain.push_back(gain(net, spec, st.s_bar));
    trace.events.push_back(st.cdm.event_count);
  }
  trace.clamp_events = st.clamp_events;
  return trace;
}

struct AltSeqResult {
  bool skipped = false;
  std::string reason;
  double max_deviation = 0.0;
  long frames_checked = 0;
};

// Verifies the algebraic identity behind the smoothed iteration on an
// unclamped steep trace: the auxiliary sequence
//   rho[t+1] = theta[t+1]/alpha + (1 - 1/alpha) theta[t]
// must equal (-beta C'(s_bar[t]), beta U'(s_bar[t])) entrywise (with the
// run's own rate clamp applied), and theta[t] must equal the geometric
// convolution sum_{m=0}^{t-1} alpha (1-alpha)^m rho[t-m] + (1-alpha)^t
// theta[0]. Any parameter-clamp event voids the identity, so the check is
// skipped with a diagnostic in that case.
inline AltSeqResult alternative_sequence_check(const Network& net,
                                               const ObjectiveSpec& spec,
                                               const Trace& trace) {
  if (trace.algorithm != Algorithm::steep) {
    throw UsageError("alternative sequence check applies to steep traces");
  }
  AltSeqResult res;
  if (trace.clamp_events > 0) {
    res.skipped = true;
    res.reason = std::to_string(trace.clamp_events) +
                 " clamp events; the identity holds only on the unclamped path";
    return res;
  }

  const double alpha = trace.alpha;
  const double eps = trace.bounds.rate_epsilon;
  const long n = trace.frames();
  std::vector<NodeEdgeVector> rho(n + 1); // rho[t] defined for t >= 1

  for (long t = 0; t < n; ++t) {
    const NodeEdgeVector th_next = trace.theta_at(t);
    const NodeEdgeVector th_prev = t == 0 ? trace.theta0 : trace.theta_at(t - 1);
    rho[t + 1] = add_scaled(th_next, th_next, 1.0 / alpha - 1.0);
    rho[t + 1] = add_scaled(rho[t + 1], th_prev, 1.0 - 1.0 / alpha);

    const NodeEdgeVector sb = trace.s_bar_at(t);
    NodeEdgeVector target = NodeEdgeVector::zeros(net);
    for (int i = 0; i < net.node_count; ++i) {
      target.node[i] =
          -trace.beta * spec.cost(i).d1(clamp(sb.node[i], eps, 1.0 - eps));
    }
    for (int e = 0; e < net.edge_count(); ++e) {
      auto [i, j] = net.edges[e];
      target.edge[e] = trace.beta *
                       spec.utility(i, j).d1(clamp(sb.edge[e], eps, 1.0 - eps));
    }
    res.max_deviation =
        std::max(res.max_deviation, inf_norm_diff(rho[t + 1], target));
  }

  // theta[t] against the geometric convolution of rho.
  for (long t = 1; t <= n; ++t) {
    NodeEdgeVector sum(trace.node_count, trace.edge_count, 0.0);
    double w = alpha;
    for (long m = 0; m < t; ++m) {
      sum = add_scaled(sum, rho[t - m], w);
      w *= 1.0 - alpha;
    }
    sum = add_scaled(sum, trace.theta0, std::pow(1.0 - alpha, t));
    res.max_deviation =
        std::max(res.max_deviation, inf_norm_diff(sum, trace.theta_at(t - 1)));
  }
  res.frames_checked = n;
  return res;
}

} // namespace coordsim
