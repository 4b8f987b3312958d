#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "coordsim/graph.hpp"
#include "coordsim/numeric.hpp"
#include "coordsim/rng.hpp"

namespace coordsim {

// Continuous-time Glauber dynamics. The |V| unit-rate Poisson clocks are
// simulated as one superposed process of rate |V| with a uniform node pick
// per event, which is equivalent in law and O(1) per event.
//
// Event k consumes three RNG lanes: 3k for its holding time, 3k+1 for the
// node pick, 3k+2 for the flip decision. Event times do not depend on theta
// or on the configuration, so the pending event is carried across frame
// boundaries unchanged; the chain is one continuous trajectory even while
// theta moves between frames.
struct CdmState {
  Configuration sigma;
  double clock = 0.0;
  std::uint64_t seed = 0;
  std::uint64_t event_count = 0;
  double next_event_time = 0.0; // absolute fire time of the pending event
  std::uint64_t message_count = 0;
};

inline CdmState make_cdm_state(const Network& net, std::uint64_t seed,
                               Configuration initial = {}) {
  CdmState st;
  st.sigma = initial.empty() ? Configuration(net.node_count, 0)
                             : std::move(initial);
  st.seed = seed;
  st.next_event_time =
      exponential(seed, 0, static_cast<double>(net.node_count));
  return st;
}

namespace detail {
// Fires the pending event: picks a node, resamples its activation from the
// heat-bath conditional sigmoid(theta_i + sum_{j in N(i), active} theta_ij),
// broadcasts to its neighbors, and schedules the next event. The caller has
// already advanced state.clock to state.next_event_time.
inline void fire_event(const Network& net, const NodeEdgeVector& theta,
                       CdmState& state) {
  const std::uint64_t k = state.event_count;
  const int i = static_cast<int>(
      uniform_index(state.seed, 3 * k + 1, net.node_count));
  double field = theta.node[i];
  for (const Incidence& inc : net.neighbors(i)) {
    if (state.sigma[inc.neighbor]) field += theta.edge[inc.edge];
  }
  const double u = unit_double(state.seed, 3 * k + 2);
  state.sigma[i] = u < sigmoid(field) ? 1 : 0;
  state.message_count += net.neighbors(i).size();
  state.event_count = k + 1;
  state.next_event_time =
      state.clock + exponential(state.seed, 3 * (k + 1),
                                static_cast<double>(net.node_count));
}
} // namespace detail

// Advances exactly one event.
inline void cdm_step(const Network& net, const NodeEdgeVector& theta,
                     CdmState& state) {
  if (!theta.sized_for(net)) throw UsageError("theta not sized for network");
  state.clock = state.next_event_time;
  detail::fire_event(net, theta, state);
}

struct FrameStats {
  NodeEdgeVector s_hat;
  double duration = 0.0;
  std::uint64_t events = 0;
  std::uint64_t messages = 0;
};

// Runs the chain for a window of length T and returns the exact
// time-weighted average of phi(sigma) over it, the final partial holding
// interval included. State persists so consecutive frames continue one
// trajectory.
inline FrameStats run_frame(const Network& net, const NodeEdgeVector& theta,
                            CdmState& state, double T) {
  if (!(T > 0.0)) throw UsageError("frame duration must be positive");
  if (!theta.sized_for(net)) throw UsageError("theta not sized for network");

  const double frame_end = state.clock + T;
  FrameStats fs;
  fs.s_hat = NodeEdgeVector::zeros(net);
  fs.duration = T;
  const std::uint64_t events0 = state.event_count;
  const std::uint64_t messages0 = state.message_count;

  for (;;) {
    const double segment_end = std::min(state.next_event_time, frame_end);
    const double w = segment_end - state.clock;
    if (w > 0.0) {
      for (int i = 0; i < net.node_count; ++i) {
        if (state.sigma[i]) fs.s_hat.node[i] += w;
      }
      for (int e = 0; e < net.edge_count(); ++e) {
        auto [i, j] = net.edges[e];
        if (state.sigma[i] & state.sigma[j]) fs.s_hat.edge[e] += w;
      }
    }
    if (state.next_event_time >= frame_end) {
      state.clock = frame_end;
      break;
    }
    state.clock = state.next_event_time;
    detail::fire_event(net, theta, state);
  }

  for (double& x : fs.s_hat.node) x /= T;
  for (double& x : fs.s_hat.edge) x /= T;
  fs.events = state.event_count - events0;
  fs.messages = state.message_count - messages0;
  return fs;
}

// Time-weighted occupancy of each configuration over [0, total_time],
// indexed by configuration_index. A validation instrument: compare against
// the enumerated stationary law.
inline std::vector<double> empirical_distribution(const Network& net,
                                                  const NodeEdgeVector& theta,
                                                  double total_time,
                                                  std::uint64_t seed) {
  require_enumerable(net);
  if (!(total_time > 0.0)) throw UsageError("total_time must be positive");
  CdmState state = make_cdm_state(net, seed);
  std::vector<double> occupancy(std::size_t{1} << net.node_count, 0.0);
  std::uint32_t index = configuration_index(state.sigma);
  for (;;) {
    const double segment_end = std::min(state.next_event_time, total_time);
    occupancy[index] += segment_end - state.clock;
    if (state.next_event_time >= total_time) break;
    state.clock = state.next_event_time;
    detail::fire_event(net, theta, state);
    index = configuration_index(state.sigma);
  }
  for (double& x : occupancy) x /= total_time;
  return occupancy;
}

} // namespace coordsim
