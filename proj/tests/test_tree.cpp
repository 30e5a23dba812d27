#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "sdual/tree.hpp"
#include "support/instances.hpp"
#include "support/oracles.hpp"

using namespace sdual;

namespace {

// min -y over [0,1]^2 with a single active row y - 0.5 <= 0. The best
// K=1 aggregation bounds the root at -0.5 while the plain box gives -1;
// below y <= 0.4 the aggregation stops helping.
Model half_cap_model() {
  Model m;
  m.n = 2;
  m.objective = {0.0, -1.0};
  m.boxes = {{0.0, 1.0}, {0.0, 1.0}};
  m.integer_flags = {0, 0};
  m.nonlinear.push_back(testsup::poly({{testsup::mono({{1, 1}}), 1.0}, {Monomial{}, -0.5}}));
  return m;
}

}  // namespace

TEST_CASE("pool admits only aggregations that beat the MILP bound") {
  Model m = half_cap_model();
  BendersConfig cfg;
  cfg.K = 1;
  BendersReport rep = run_benders(m, cfg);
  REQUIRE(!rep.iterations.empty());
  const double milp_bound = rep.iterations.front().sub_bound;  // S(0) = -1

  AggregationPool pool = build_pool(rep, milp_bound, 3);
  REQUIRE(!pool.empty());
  for (const PoolEntry& e : pool.entries) {
    CHECK(e.root_bound > milp_bound + 1e-9);
    CHECK(!e.lambda.is_zero());
  }
  // strongest first
  for (size_t i = 1; i < pool.entries.size(); ++i)
    CHECK(pool.entries[i - 1].root_bound >= pool.entries[i].root_bound);

  SUBCASE("root node reproduces the root surrogate bound and keeps the pool") {
    NodeContext root;
    root.boxes = m.boxes;
    for (int i = 0; i < static_cast<int>(pool.size()); ++i) root.candidates.push_back(i);
    LocalBoundResult res = local_bound(root, m, pool, SolveLimits{});
    CHECK(res.improved);
    CHECK(res.bound == doctest::Approx(pool.entries[0].root_bound).epsilon(1e-6));
    CHECK(res.candidates == root.candidates);
    CHECK(res.bound >= -0.5 - 1e-9);
  }

  SUBCASE("a child box that deactivates the aggregation discards it") {
    NodeContext child;
    child.boxes = {{0.0, 1.0}, {0.0, 0.4}};  // y <= 0.4 makes y <= 0.5 slack
    for (int i = 0; i < static_cast<int>(pool.size()); ++i) child.candidates.push_back(i);
    LocalBoundResult res = local_bound(child, m, pool, SolveLimits{});
    CHECK(!res.improved);
    CHECK(res.bound == doctest::Approx(-0.4));
    CHECK(res.candidates.empty());  // exhausted, every candidate filtered
  }

  SUBCASE("empty pool falls back to the local MILP bound") {
    NodeContext node;
    node.boxes = m.boxes;
    LocalBoundResult res = local_bound(node, m, AggregationPool{}, SolveLimits{});
    CHECK(!res.improved);
    CHECK(res.bound == doctest::Approx(-1.0));
    CHECK(res.candidates.empty());
  }
}

TEST_CASE("returned bound always dominates the local MILP relaxation") {
  Model m = testsup::example1();
  BendersConfig cfg;
  cfg.K = 1;
  BendersReport rep = run_benders(m, cfg);
  const double milp_bound = rep.iterations.front().sub_bound;
  AggregationPool pool = build_pool(rep, milp_bound, 3);

  const std::vector<std::vector<Interval>> node_boxes = {
      {{0.0, 1.0}, {0.0, 1.0}},
      {{0.0, 0.5}, {0.0, 1.0}},
      {{0.5, 1.0}, {0.0, 1.0}},
      {{0.25, 0.75}, {0.25, 0.75}},
  };
  auto reform = shared_reformulation(m);
  for (const auto& boxes : node_boxes) {
    NodeContext node;
    node.boxes = boxes;
    for (int i = 0; i < static_cast<int>(pool.size()); ++i) node.candidates.push_back(i);
    LocalBoundResult res = local_bound(node, m, pool, SolveLimits{});

    SubProblem milp = make_subproblem(m, AggregationMatrix::zero(0, 2), reform);
    SubSolveOutcome base = solve_subproblem_local(milp, boxes, SolveLimits{});
    CHECK(res.bound >= base.dual_bound - 1e-9);

    // soundness: never above the true local optimum
    Model local = m;
    local.boxes = boxes;
    testsup::GridResult truth = testsup::grid_minimize(local, boxes);
    if (std::isfinite(truth.value)) CHECK(res.bound <= truth.value + 1e-4);

    // monotone candidate sets along a path: C_v is a subset of C_p
    for (int idx : res.candidates) {
      CHECK(idx >= 0);
      CHECK(idx < static_cast<int>(pool.size()));
    }
  }
}

TEST_CASE("candidate sets shrink monotonically down a path") {
  Model m = half_cap_model();
  BendersConfig cfg;
  cfg.K = 1;
  BendersReport rep = run_benders(m, cfg);
  AggregationPool pool = build_pool(rep, rep.iterations.front().sub_bound, 3);
  REQUIRE(!pool.empty());

  NodeContext root;
  root.boxes = m.boxes;
  for (int i = 0; i < static_cast<int>(pool.size()); ++i) root.candidates.push_back(i);
  LocalBoundResult root_res = local_bound(root, m, pool, SolveLimits{});

  NodeContext child;
  child.id = 1;
  child.boxes = {{0.0, 1.0}, {0.0, 0.4}};
  child.candidates = root_res.candidates;  // inherit C_p
  LocalBoundResult child_res = local_bound(child, m, pool, SolveLimits{});

  for (int idx : child_res.candidates)
    CHECK(std::find(root_res.candidates.begin(), root_res.candidates.end(), idx) !=
          root_res.candidates.end());

  NodeContext grandchild;
  grandchild.id = 2;
  grandchild.boxes = {{0.0, 0.5}, {0.0, 0.4}};
  grandchild.candidates = child_res.candidates;
  LocalBoundResult gc_res = local_bound(grandchild, m, pool, SolveLimits{});
  for (int idx : gc_res.candidates)
    CHECK(std::find(child_res.candidates.begin(), child_res.candidates.end(), idx) !=
          child_res.candidates.end());
}
