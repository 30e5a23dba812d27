#pragma once

#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "sdual/model.hpp"
#include "sdual/relax.hpp"

namespace sdual {

struct SolveLimits {
  double time_limit = 1e18;
  long node_limit = 500000;
  double gap_limit = 1e-4;
  std::optional<double> early_stop_at;  // stop once a feasible point <= this is found
};

enum class SubStatus { Optimal, EarlyStopped, Infeasible, Limit };

struct SubSolveOutcome {
  SubStatus status = SubStatus::Limit;
  double dual_bound = 0.0;  // valid lower bound; +inf when infeasible
  bool has_incumbent = false;
  std::vector<double> incumbent;    // original variables only
  double incumbent_value = 0.0;
  double gap = 1e18;
  long nodes = 0;
  std::vector<double> bound_history;  // global dual bound after each node
};

const char* to_string(SubStatus s);

// The sub-problem of both Benders loops: min c'x over X' intersected with K
// aggregated rows sum_i lambda^k_i g_i(x) <= 0. K = 0 is the plain MILP
// relaxation S(0). In Lagrangian mode the aggregation moves into the
// objective through an epigraph variable instead.
struct SubProblem {
  Model model;
  std::vector<Polynomial> aggregated;     // zero rows are dropped at build time
  std::optional<Polynomial> epigraph;     // Lagrangian penalty term
  bool use_refined_rows = true;           // X' for sub-problems, X for Lagrangian
  std::shared_ptr<const Reformulation> reform;
};

SubProblem make_subproblem(const Model& model, const AggregationMatrix& lambda,
                           std::shared_ptr<const Reformulation> reform = nullptr);
SubProblem make_lagrangian_problem(const Model& model, std::span<const double> lambda_row,
                                   std::shared_ptr<const Reformulation> reform = nullptr);

// Spatial branch and bound: node LPs from envelope cuts over local boxes,
// integer branching first, then bisection of the worst-violated atom's
// parent variable. Deterministic best-first search.
SubSolveOutcome solve_subproblem(const SubProblem& sp, const SolveLimits& limits);

// Same solver, with the root box replaced by local boxes (tree search use).
SubSolveOutcome solve_subproblem_local(const SubProblem& sp, const std::vector<Interval>& boxes,
                                       const SolveLimits& limits);

// Global minimum of c'x + sum_i lambda_i g_i(x) over X via an epigraph
// variable; the classic Lagrangian evaluator.
double lagrangian_value(const Model& model, std::span<const double> lambda_row,
                        const SolveLimits& limits);
SubSolveOutcome lagrangian_solve(const Model& model, std::span<const double> lambda_row,
                                 const SolveLimits& limits);

// Shared reformulation over the model's nonlinear rows; reused across
// aggregations because atom structure is independent of lambda.
std::shared_ptr<const Reformulation> shared_reformulation(const Model& model);

}  // namespace sdual
