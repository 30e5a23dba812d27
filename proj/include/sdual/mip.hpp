#pragma once

#include <optional>
#include <vector>

#include "sdual/lp.hpp"

namespace sdual {

struct MipProblem {
  LinearProgram lp;
  std::vector<char> integer_flags;  // per variable; flagged vars need finite bounds
};

struct MipLimits {
  long node_limit = 1000000;
  double time_limit = 1e18;
  std::optional<double> target_primal;  // stop once the incumbent reaches this
  std::optional<double> target_dual;    // stop once the proven bound reaches this
};

enum class MipStatus { Optimal, Infeasible, Limit };

struct MipSolution {
  MipStatus status = MipStatus::Limit;
  bool has_incumbent = false;
  std::vector<double> incumbent;
  double objective = 0.0;   // incumbent objective (problem sense)
  double dual_bound = 0.0;  // valid bound for the full problem
  double gap = 1e18;
  long nodes = 0;
  std::vector<double> bound_history;  // dual bound after each processed node
};

// Depth-first branch and bound with most-fractional branching and plunging.
MipSolution solve_mip(const MipProblem& prob, const MipLimits& limits = {});

}  // namespace sdual
