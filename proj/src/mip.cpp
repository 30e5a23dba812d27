#include "sdual/mip.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <stdexcept>

namespace sdual {

namespace {

constexpr double kIntTol = 1e-6;

struct Node {
  std::vector<double> lower;
  std::vector<double> upper;
  double parent_bound;  // LP bound of the parent, minimization space
};

double now_seconds() {
  using clock = std::chrono::steady_clock;
  return std::chrono::duration<double>(clock::now().time_since_epoch()).count();
}

}  // namespace

MipSolution solve_mip(const MipProblem& prob, const MipLimits& limits) {
  const int n = prob.lp.num_vars();
  if (static_cast<int>(prob.integer_flags.size()) != n)
    throw std::invalid_argument("solve_mip: integer flag vector has wrong length");
  for (int j = 0; j < n; ++j)
    if (prob.integer_flags[size_t(j)] &&
        (!std::isfinite(prob.lp.lower[size_t(j)]) || !std::isfinite(prob.lp.upper[size_t(j)])))
      throw std::invalid_argument("solve_mip: integer variables need finite bounds");

  // work in minimization space
  const bool maximize = prob.lp.sense == Sense::Maximize;
  const double sgn = maximize ? -1.0 : 1.0;
  LinearProgram base = prob.lp;
  base.sense = Sense::Minimize;
  if (maximize)
    for (double& c : base.objective) c = -c;

  const bool has_target_primal = limits.target_primal.has_value();
  const double target_primal = has_target_primal ? sgn * *limits.target_primal : 0.0;
  const bool has_target_dual = limits.target_dual.has_value();
  const double target_dual = has_target_dual ? sgn * *limits.target_dual : 0.0;

  MipSolution out;
  const double t0 = now_seconds();

  double incumbent_value = kLpInfinity;
  std::vector<double> incumbent;
  double pruned_floor = kLpInfinity;  // bounds of nodes dropped by limits

  std::vector<Node> stack;
  stack.push_back(Node{base.lower, base.upper, -kLpInfinity});

  auto stack_bound = [&]() {
    double b = pruned_floor;
    for (const Node& nd : stack) b = std::min(b, nd.parent_bound);
    return std::min(b, incumbent_value);
  };
  auto record_bound = [&]() { out.bound_history.push_back(sgn * stack_bound()); };

  bool hit_limit = false;
  bool target_hit = false;
  while (!stack.empty()) {
    if (out.nodes >= limits.node_limit || now_seconds() - t0 > limits.time_limit) {
      hit_limit = true;
      break;
    }
    if (has_target_dual && stack_bound() >= target_dual - 1e-12) {
      target_hit = true;
      break;
    }

    Node nd = std::move(stack.back());
    stack.pop_back();
    ++out.nodes;

    if (nd.parent_bound >= incumbent_value - 1e-9) {
      record_bound();
      continue;
    }

    LinearProgram lp = base;
    lp.lower = nd.lower;
    lp.upper = nd.upper;
    LpSolution sol = solve_lp(lp);
    if (sol.status == LpStatus::Infeasible) {
      record_bound();
      continue;
    }
    if (sol.status == LpStatus::Unbounded)
      throw std::runtime_error("solve_mip: relaxation is unbounded");
    if (sol.status == LpStatus::Stalled)
      throw std::runtime_error("solve_mip: LP solve stalled");

    const double node_bound = std::max(nd.parent_bound, sol.objective);
    if (node_bound >= incumbent_value - 1e-9) {
      record_bound();
      continue;
    }

    // most fractional integer variable
    int branch_var = -1;
    double best_frac = kIntTol;
    for (int j = 0; j < n; ++j) {
      if (!prob.integer_flags[size_t(j)]) continue;
      const double v = sol.primal[size_t(j)];
      const double frac = std::fabs(v - std::round(v));
      if (frac > best_frac) {
        best_frac = frac;
        branch_var = j;
      }
    }

    if (branch_var == -1) {
      // integral point: candidate incumbent
      if (sol.objective < incumbent_value - 1e-12) {
        incumbent_value = sol.objective;
        incumbent = sol.primal;
        for (int j = 0; j < n; ++j)
          if (prob.integer_flags[size_t(j)]) incumbent[size_t(j)] = std::round(incumbent[size_t(j)]);
        if (has_target_primal && incumbent_value <= target_primal + 1e-12) {
          record_bound();
          target_hit = true;
          break;
        }
      }
      record_bound();
      continue;
    }

    const double v = sol.primal[size_t(branch_var)];
    Node down = nd;
    down.parent_bound = node_bound;
    down.upper[size_t(branch_var)] = std::floor(v);
    Node up = std::move(nd);
    up.parent_bound = node_bound;
    up.lower[size_t(branch_var)] = std::ceil(v);

    // plunge toward the nearer integer first (pushed last, popped first)
    if (v - std::floor(v) <= 0.5) {
      stack.push_back(std::move(up));
      stack.push_back(std::move(down));
    } else {
      stack.push_back(std::move(down));
      stack.push_back(std::move(up));
    }
    record_bound();
  }

  for (const Node& nd : stack) pruned_floor = std::min(pruned_floor, nd.parent_bound);
  const double final_bound = std::min(pruned_floor, incumbent_value);

  out.has_incumbent = !incumbent.empty();
  if (out.has_incumbent) {
    out.incumbent = incumbent;
    out.objective = sgn * incumbent_value;
  }
  if (hit_limit || target_hit) {
    out.status = MipStatus::Limit;
    out.dual_bound = sgn * final_bound;
  } else if (!out.has_incumbent) {
    out.status = MipStatus::Infeasible;
    out.dual_bound = sgn * kLpInfinity;
  } else {
    out.status = MipStatus::Optimal;
    out.dual_bound = out.objective;
  }
  if (out.has_incumbent && std::isfinite(final_bound)) {
    out.gap = std::fabs(incumbent_value - final_bound) /
              std::max({1.0, std::fabs(incumbent_value), std::fabs(final_bound)});
  }
  return out;
}

}  // namespace sdual
