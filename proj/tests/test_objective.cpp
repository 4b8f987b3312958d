#include <catch2/catch_amalgamated.hpp>

#include "coordsim/objective.hpp"

using namespace coordsim;
using Catch::Approx;

TEST_CASE("built-in scalar functions and their inverses", "[objective]") {
  const ScalarFn u = log_utility();
  REQUIRE(u.value(0.5) == Approx(std::log(0.5)));
  REQUIRE(u.d1(0.5) == Approx(2.0));
  REQUIRE(u.inv_d1(2.0) == Approx(0.5));

  const ScalarFn q = quadratic_cost(2.0);
  REQUIRE(q.value(0.5) == Approx(0.5));
  REQUIRE(q.d1(0.5) == Approx(2.0));
  REQUIRE(q.d2(0.1) == Approx(4.0));
  REQUIRE(q.inv_d1(2.0) == Approx(0.5));

  const ScalarFn b = barrier_cost();
  REQUIRE(b.value(0.5) == Approx(2.0));
  REQUIRE(b.d1(0.5) == Approx(4.0));
  REQUIRE(b.inv_d1(4.0) == Approx(0.5));
}

TEST_CASE("certification accepts the built-ins", "[objective]") {
  REQUIRE_NOTHROW(certify_scalar_fn(log_utility(), Curvature::concave_utility));
  REQUIRE_NOTHROW(certify_scalar_fn(quadratic_cost(3.0), Curvature::convex_cost));
  REQUIRE_NOTHROW(certify_scalar_fn(barrier_cost(), Curvature::convex_cost));
}

TEST_CASE("certification rejects inconsistent bundles", "[objective]") {
  ScalarFn broken = quadratic_cost(2.0);
  broken.d1 = [](double x) { return 5.0 * x; };
  REQUIRE_THROWS_AS(certify_scalar_fn(broken, Curvature::convex_cost),
                    ConfigError);

  // Right derivatives, wrong curvature class.
  REQUIRE_THROWS_AS(certify_scalar_fn(quadratic_cost(2.0), Curvature::concave_utility),
                    ConfigError);

  ScalarFn bad_inverse = quadratic_cost(2.0);
  bad_inverse.inv_d1 = [](double y) { return y; };
  REQUIRE_THROWS_AS(certify_scalar_fn(bad_inverse, Curvature::convex_cost),
                    ConfigError);
}

TEST_CASE("objective spec resolves overrides", "[objective]") {
  ObjectiveSpec spec = builtin_objective("line-example", 1.0);
  REQUIRE(spec.cost(0).d1(0.5) == Approx(1.0));  // x^2
  REQUIRE(spec.cost(1).d1(0.5) == Approx(1.0));
  REQUIRE(spec.cost(2).d1(0.5) == Approx(3.0));  // 3x^2 on the third node
  REQUIRE(spec.utility(0, 1).d1(0.5) == Approx(2.0));
  REQUIRE(spec.utility(1, 0).d1(0.5) == Approx(2.0)); // order-insensitive

  spec.set_cost(1, quadratic_cost(5.0));
  REQUIRE(spec.cost(1).d1(0.5) == Approx(5.0));

  int costs = 0;
  spec.for_each_cost([&](const ScalarFn&) { ++costs; });
  REQUIRE(costs == 3); // default + node-3 override + node-2 override
}

TEST_CASE("set_cost certifies custom closures", "[objective]") {
  ObjectiveSpec spec = builtin_objective("C1", 1.0);
  ScalarFn broken = quadratic_cost(1.0);
  broken.d2 = [](double) { return -1.0; };
  REQUIRE_THROWS_AS(spec.set_cost(0, broken), ConfigError);
}

TEST_CASE("built-in objective names and beta validation", "[objective]") {
  REQUIRE(builtin_objective("C1", 5.0).default_cost.d1(0.5) == Approx(2.0));
  REQUIRE(builtin_objective("C2", 4.0).default_cost.name == "barrier");
  REQUIRE_THROWS_AS(builtin_objective("C3", 1.0), ConfigError);
  REQUIRE_THROWS_AS(builtin_objective("C1", 0.0), ConfigError);
  REQUIRE_THROWS_AS(builtin_objective("C1", -2.0), ConfigError);
}

TEST_CASE("parameter box from the rate margin", "[objective]") {
  const ObjectiveSpec c1 = builtin_objective("C1", 5.0);
  const ClampBounds b = a1_bounds(c1, 5.0);
  REQUIRE(b.theta_max == Approx(100.0)); // 5 * U'(0.05) = 5 / 0.05
  REQUIRE(b.theta_min == Approx(-19.0)); // -5 * C'(0.95) = -5 * 4 * 0.95
  REQUIRE(b.rate_epsilon == 1e-4);

  // Overrides participate in the worst case: the steeper node cost widens
  // the lower bound.
  const ObjectiveSpec line = builtin_objective("line-example", 1.0);
  const ClampBounds lb = a1_bounds(line, 1.0);
  REQUIRE(lb.theta_max == Approx(20.0));
  REQUIRE(lb.theta_min == Approx(-5.7)); // -1 * 6 * 0.95 from the 3x^2 node

  REQUIRE_THROWS_AS(a1_bounds(c1, 5.0, 0.0), UsageError);
  REQUIRE_THROWS_AS(a1_bounds(c1, -1.0), UsageError);
}
