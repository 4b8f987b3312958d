#pragma once

#include <cmath>
#include <functional>
#include <map>
#include <string>
#include <utility>

#include "coordsim/errors.hpp"
#include "coordsim/graph.hpp"
#include "coordsim/numeric.hpp"

namespace coordsim {

// A twice continuously differentiable scalar function on (0,1) with its
// first two derivatives and the inverse of the first derivative. Utilities
// are strictly concave, costs strictly convex; everything downstream leans
// on those signs.
struct ScalarFn {
  std::string name;
  std::function<double(double)> value;
  std::function<double(double)> d1;
  std::function<double(double)> d2;
  std::function<double(double)> inv_d1;
};

inline ScalarFn log_utility() {
  return {"log",
          [](double x) { return std::log(x); },
          [](double x) { return 1.0 / x; },
          [](double x) { return -1.0 / (x * x); },
          [](double y) { return 1.0 / y; }};
}

inline ScalarFn quadratic_cost(double c) {
  return {"quad(" + std::to_string(c) + ")",
          [c](double x) { return c * x * x; },
          [c](double x) { return 2.0 * c * x; },
          [c](double) { return 2.0 * c; },
          [c](double y) { return y / (2.0 * c); }};
}

// C(x) = 1/(1-x), the hard-activation cost: finite on [0,1), blows up at 1.
inline ScalarFn barrier_cost() {
  return {"barrier",
          [](double x) { return 1.0 / (1.0 - x); },
          [](double x) { return 1.0 / ((1.0 - x) * (1.0 - x)); },
          [](double x) { return 2.0 / ((1.0 - x) * (1.0 - x) * (1.0 - x)); },
          [](double y) { return 1.0 - 1.0 / std::sqrt(y); }};
}

enum class Curvature { concave_utility, convex_cost };

// Finite-difference certification of a function bundle: derivative
// consistency, curvature sign, and inverse round-trip on a grid. Custom
// closures must pass before they are admitted into an ObjectiveSpec.
inline void certify_scalar_fn(const ScalarFn& f, Curvature kind) {
  const double h = 1e-6;
  for (double x = 0.05; x < 0.951; x += 0.05) {
    double fd1 = (f.value(x + h) - f.value(x - h)) / (2.0 * h);
    if (std::abs(fd1 - f.d1(x)) > 1e-4 * std::max(1.0, std::abs(f.d1(x)))) {
      throw ConfigError("objective '" + f.name +
                        "': first derivative disagrees with finite differences");
    }
    double fd2 = (f.d1(x + h) - f.d1(x - h)) / (2.0 * h);
    if (std::abs(fd2 - f.d2(x)) > 1e-4 * std::max(1.0, std::abs(f.d2(x)))) {
      throw ConfigError("objective '" + f.name +
                        "': second derivative disagrees with finite differences");
    }
    double want = kind == Curvature::concave_utility ? -f.d2(x) : f.d2(x);
    if (want <= 0.0) {
      throw ConfigError("objective '" + f.name + "': curvature sign violated at x=" +
                        std::to_string(x));
    }
    if (std::abs(f.inv_d1(f.d1(x)) - x) > 1e-10) {
      throw ConfigError("objective '" + f.name +
                        "': inverse derivative round-trip failed");
    }
  }
}

// Per-edge utilities and per-node costs: a default of each plus sparse
// overrides keyed by component.
struct ObjectiveSpec {
  std::string name;
  ScalarFn default_utility;
  ScalarFn default_cost;
  std::map<std::pair<int, int>, ScalarFn> utility_override;
  std::map<int, ScalarFn> cost_override;

  const ScalarFn& utility(int i, int j) const {
    if (i > j) std::swap(i, j);
    auto it = utility_override.find({i, j});
    return it == utility_override.end() ? default_utility : it->second;
  }

  const ScalarFn& cost(int i) const {
    auto it = cost_override.find(i);
    return it == cost_override.end() ? default_cost : it->second;
  }

  ObjectiveSpec& set_utility(int i, int j, ScalarFn f) {
    certify_scalar_fn(f, Curvature::concave_utility);
    if (i > j) std::swap(i, j);
    utility_override[{i, j}] = std::move(f);
    return *this;
  }

  ObjectiveSpec& set_cost(int i, ScalarFn f) {
    certify_scalar_fn(f, Curvature::convex_cost);
    cost_override[i] = std::move(f);
    return *this;
  }

  // Every distinct cost function in play (default plus overrides); used for
  // worst-case bound computation.
  template <typename Fn>
  void for_each_cost(Fn&& fn) const {
    fn(default_cost);
    for (const auto& [k, f] : cost_override) fn(f);
  }

  template <typename Fn>
  void for_each_utility(Fn&& fn) const {
    fn(default_utility);
    for (const auto& [k, f] : utility_override) fn(f);
  }
};

// C1: log utility with C(x) = 2x^2. C2: log utility with C(x) = 1/(1-x).
// line-example: log utility, C(x) = x^2 on nodes 1 and 2, 3x^2 on node 3.
// beta is validated here but the returned spec does not depend on it.
inline ObjectiveSpec builtin_objective(const std::string& name, double beta) {
  if (!(beta > 0.0)) throw ConfigError("beta must be positive");
  ObjectiveSpec spec;
  spec.name = name;
  spec.default_utility = log_utility();
  if (name == "C1") {
    spec.default_cost = quadratic_cost(2.0);
  } else if (name == "C2") {
    spec.default_cost = barrier_cost();
  } else if (name == "line-example") {
    spec.default_cost = quadratic_cost(1.0);
    spec.cost_override[2] = quadratic_cost(3.0);
  } else {
    throw ConfigError("unknown objective '" + name + "'");
  }
  return spec;
}

// Box for theta plus the epsilon used to keep empirical rates away from
// {0,1} before U'/C' are applied.
struct ClampBounds {
  double theta_min = -50.0;
  double theta_max = 50.0;
  double rate_epsilon = 1e-4;
};

// Parameter box wide enough to contain the fixed point whenever optimal
// rates lie in [eps, 1-eps]:
//   theta_max = beta * max_edges U'(eps)         (U' decreasing)
//   theta_min = min(-beta * max_nodes C'(1-eps),
//                   beta * min_edges U'(1-eps), 0)
inline ClampBounds a1_bounds(const ObjectiveSpec& spec, double beta,
                             double eps = 0.05) {
  if (!(eps > 0.0 && eps < 0.5)) throw UsageError("a1_bounds: eps must be in (0, 0.5)");
  if (!(beta > 0.0)) throw UsageError("a1_bounds: beta must be positive");
  double umax_at_eps = -kInf, umin_at_1eps = kInf, cmax_at_1eps = -kInf;
  spec.for_each_utility([&](const ScalarFn& u) {
    umax_at_eps = std::max(umax_at_eps, u.d1(eps));
    umin_at_1eps = std::min(umin_at_1eps, u.d1(1.0 - eps));
  });
  spec.for_each_cost([&](const ScalarFn& c) {
    cmax_at_1eps = std::max(cmax_at_1eps, c.d1(1.0 - eps));
  });
  ClampBounds b;
  b.theta_max = beta * umax_at_eps;
  b.theta_min = std::min({-beta * cmax_at_1eps, beta * umin_at_1eps, 0.0});
  b.rate_epsilon = 1e-4;
  return b;
}

} // namespace coordsim
