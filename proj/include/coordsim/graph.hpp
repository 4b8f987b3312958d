#pragma once

#include <algorithm>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "coordsim/errors.hpp"
#include "coordsim/rng.hpp"

namespace coordsim {

// Largest node count for which 2^|V| enumeration is permitted.
inline constexpr int kEnumerationCap = 20;

// Binary activation vector, one entry per node.
using Configuration = std::vector<std::uint8_t>;

struct Incidence {
  int neighbor;
  int edge; // index into Network::edges
};

// Undirected graph. Nodes are 0-based internally; human-facing output is
// 1-based (see component_label). Edges are stored as (i,j) with i < j in
// lexicographic order, and the edge index is the position in that list.
struct Network {
  int node_count = 0;
  std::vector<std::pair<int, int>> edges;
  std::vector<std::vector<Incidence>> adjacency; // per node

  int edge_count() const { return static_cast<int>(edges.size()); }
  int dimension() const { return node_count + edge_count(); }

  const std::vector<Incidence>& neighbors(int i) const { return adjacency[i]; }

  int edge_index(int i, int j) const {
    if (i > j) std::swap(i, j);
    auto it = std::lower_bound(edges.begin(), edges.end(), std::make_pair(i, j));
    if (it == edges.end() || *it != std::make_pair(i, j)) {
      throw UsageError("no edge (" + std::to_string(i + 1) + "," +
                       std::to_string(j + 1) + ")");
    }
    return static_cast<int>(it - edges.begin());
  }
};

// Real vector indexed over V then E. Carries theta, lambda and the empirical
// rates with one layout so every algorithm can treat them uniformly.
struct NodeEdgeVector {
  std::vector<double> node;
  std::vector<double> edge;

  NodeEdgeVector() = default;
  NodeEdgeVector(std::size_t n, std::size_t e, double fill = 0.0)
      : node(n, fill), edge(e, fill) {}

  static NodeEdgeVector zeros(const Network& net) {
    return NodeEdgeVector(net.node_count, net.edges.size(), 0.0);
  }

  std::size_t size() const { return node.size() + edge.size(); }

  // Flat accessors: nodes first, then edges.
  double operator[](std::size_t k) const {
    return k < node.size() ? node[k] : edge[k - node.size()];
  }
  double& operator[](std::size_t k) {
    return k < node.size() ? node[k] : edge[k - node.size()];
  }

  bool sized_for(const Network& net) const {
    return node.size() == static_cast<std::size_t>(net.node_count) &&
           edge.size() == net.edges.size();
  }
};

inline double inf_norm_diff(const NodeEdgeVector& a, const NodeEdgeVector& b) {
  double m = 0.0;
  for (std::size_t k = 0; k < a.node.size(); ++k)
    m = std::max(m, std::abs(a.node[k] - b.node[k]));
  for (std::size_t k = 0; k < a.edge.size(); ++k)
    m = std::max(m, std::abs(a.edge[k] - b.edge[k]));
  return m;
}

inline double inf_norm(const NodeEdgeVector& a) {
  double m = 0.0;
  for (double x : a.node) m = std::max(m, std::abs(x));
  for (double x : a.edge) m = std::max(m, std::abs(x));
  return m;
}

inline double dot(const NodeEdgeVector& a, const NodeEdgeVector& b) {
  double s = 0.0;
  for (std::size_t k = 0; k < a.node.size(); ++k) s += a.node[k] * b.node[k];
  for (std::size_t k = 0; k < a.edge.size(); ++k) s += a.edge[k] * b.edge[k];
  return s;
}

// a + c*b
inline NodeEdgeVector add_scaled(const NodeEdgeVector& a,
                                 const NodeEdgeVector& b, double c) {
  NodeEdgeVector r = a;
  for (std::size_t k = 0; k < r.node.size(); ++k) r.node[k] += c * b.node[k];
  for (std::size_t k = 0; k < r.edge.size(); ++k) r.edge[k] += c * b.edge[k];
  return r;
}

inline NodeEdgeVector subtract(const NodeEdgeVector& a,
                               const NodeEdgeVector& b) {
  return add_scaled(a, b, -1.0);
}

// "n3" for node index 2, "e1_4" for an edge between nodes 0 and 3 (1-based
// labels, matching figure conventions).
inline std::string component_label(const Network& net, std::size_t k) {
  if (k < static_cast<std::size_t>(net.node_count)) {
    return "n" + std::to_string(k + 1);
  }
  auto [i, j] = net.edges[k - net.node_count];
  return "e" + std::to_string(i + 1) + "_" + std::to_string(j + 1);
}

enum class TopologyKind { line, star, complete, random_gnm };

inline TopologyKind parse_topology_kind(const std::string& s) {
  if (s == "line") return TopologyKind::line;
  if (s == "star") return TopologyKind::star;
  if (s == "complete") return TopologyKind::complete;
  if (s == "random") return TopologyKind::random_gnm;
  throw ConfigError("unknown topology kind '" + s + "'");
}

namespace detail {
inline Network finish_network(int n, std::vector<std::pair<int, int>> edges) {
  std::sort(edges.begin(), edges.end());
  Network net;
  net.node_count = n;
  net.edges = std::move(edges);
  net.adjacency.resize(n);
  for (int e = 0; e < net.edge_count(); ++e) {
    auto [i, j] = net.edges[e];
    net.adjacency[i].push_back({j, e});
    net.adjacency[j].push_back({i, e});
  }
  return net;
}
} // namespace detail

// line: path 1-2-...-n. star: hub node 1 joined to 2..n. complete: all
// pairs. random: m distinct edges drawn uniformly without replacement,
// a pure function of (n, m, seed) via a partial Fisher-Yates shuffle of
// the sorted pair list.
inline Network build_topology(TopologyKind kind, int n, int m = -1,
                              std::uint64_t seed = 0) {
  if (n < 1) throw ConfigError("topology needs n >= 1");
  std::vector<std::pair<int, int>> edges;
  switch (kind) {
    case TopologyKind::line:
      for (int i = 0; i + 1 < n; ++i) edges.emplace_back(i, i + 1);
      break;
    case TopologyKind::star:
      for (int i = 1; i < n; ++i) edges.emplace_back(0, i);
      break;
    case TopologyKind::complete:
      for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j) edges.emplace_back(i, j);
      break;
    case TopologyKind::random_gnm: {
      std::vector<std::pair<int, int>> pairs;
      for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j) pairs.emplace_back(i, j);
      if (m < 0 || pairs.size() < static_cast<std::size_t>(m)) {
        throw ConfigError("random topology: m must be in [0, n(n-1)/2]");
      }
      for (int k = 0; k < m; ++k) {
        std::uint64_t r =
            k + uniform_index(seed, k, pairs.size() - static_cast<std::size_t>(k));
        std::swap(pairs[k], pairs[r]);
      }
      edges.assign(pairs.begin(), pairs.begin() + m);
      break;
    }
  }
  return detail::finish_network(n, std::move(edges));
}

inline Network build_topology(const std::string& kind, int n, int m = -1,
                              std::uint64_t seed = 0) {
  return build_topology(parse_topology_kind(kind), n, m, seed);
}

// Coordination configuration: sigma augmented with sigma_i * sigma_j per
// edge.
inline NodeEdgeVector phi(const Network& net, const Configuration& c) {
  if (c.size() != static_cast<std::size_t>(net.node_count)) {
    throw UsageError("configuration length does not match node count");
  }
  NodeEdgeVector v = NodeEdgeVector::zeros(net);
  for (int i = 0; i < net.node_count; ++i) v.node[i] = c[i];
  for (int e = 0; e < net.edge_count(); ++e) {
    auto [i, j] = net.edges[e];
    v.edge[e] = static_cast<double>(c[i] & c[j]);
  }
  return v;
}

// Configurations are identified with integers: node 0 is the least
// significant bit. This order is load-bearing for every enumeration result.
inline std::uint32_t configuration_index(const Configuration& c) {
  std::uint32_t k = 0;
  for (std::size_t i = 0; i < c.size(); ++i) {
    if (c[i]) k |= (1u << i);
  }
  return k;
}

inline Configuration configuration_from_index(int n, std::uint32_t k) {
  Configuration c(n, 0);
  for (int i = 0; i < n; ++i) c[i] = (k >> i) & 1u;
  return c;
}

inline void require_enumerable(const Network& net) {
  if (net.node_count > kEnumerationCap) {
    throw SizeError("refusing to enumerate 2^" +
                    std::to_string(net.node_count) +
                    " configurations (cap is 2^" +
                    std::to_string(kEnumerationCap) + ")");
  }
}

inline std::vector<Configuration> enumerate_configurations(const Network& net) {
  require_enumerable(net);
  std::vector<Configuration> out;
  out.reserve(std::size_t{1} << net.node_count);
  for (std::uint32_t k = 0; k < (std::uint32_t{1} << net.node_count); ++k) {
    out.push_back(configuration_from_index(net.node_count, k));
  }
  return out;
}

} // namespace coordsim
