#pragma once

#include <limits>
#include <span>
#include <vector>

namespace sdual {

enum class Sense { Minimize, Maximize };
enum class Relation { LessEq, Equal, GreaterEq };

struct LpRow {
  std::vector<std::pair<int, double>> coeffs;
  Relation rel = Relation::LessEq;
  double rhs = 0.0;
};

// Dense-scale LP: lower bounds must be finite, upper bounds may be +inf.
struct LinearProgram {
  Sense sense = Sense::Minimize;
  std::vector<double> objective;
  std::vector<double> lower;
  std::vector<double> upper;
  std::vector<LpRow> rows;

  int num_vars() const { return static_cast<int>(objective.size()); }

  int add_variable(double lo, double hi, double obj = 0.0) {
    lower.push_back(lo);
    upper.push_back(hi);
    objective.push_back(obj);
    return num_vars() - 1;
  }

  void add_row(std::vector<std::pair<int, double>> coeffs, Relation rel, double rhs) {
    rows.push_back(LpRow{std::move(coeffs), rel, rhs});
  }
};

enum class LpStatus { Optimal, Infeasible, Unbounded, Stalled };

struct LpSolution {
  LpStatus status = LpStatus::Stalled;
  double objective = 0.0;
  std::vector<double> primal;         // per variable
  std::vector<double> duals;          // per row, original orientation
  std::vector<double> reduced_costs;  // per variable, c - A'y
  long pivots = 0;
};

inline constexpr double kLpInfinity = std::numeric_limits<double>::infinity();

// Two-phase bounded-variable simplex with Dantzig pricing and a Bland
// fallback after a degeneracy streak. Deterministic for identical input.
LpSolution solve_lp(const LinearProgram& lp);

}  // namespace sdual
