#pragma once

#include <optional>
#include <string>
#include <vector>

#include "sdual/minlp.hpp"
#include "sdual/mip.hpp"
#include "sdual/model.hpp"

namespace sdual {

enum class SymmetryMode { None, FirstComponent, Diagonal };
enum class TerminationReason { PsiBelowEpsilon, IterationLimit, TimeLimit, TargetReached };

const char* to_string(SymmetryMode m);
const char* to_string(TerminationReason r);

// A sub-problem solution retained for the master, with cached g_i values.
struct MasterPoint {
  std::vector<double> x;
  std::vector<double> gvals;  // g_i(x), one per nonlinear row
};

struct Stabilization {
  // per lambda entry (row-major K x m): true entries are fixed to zero
  std::optional<std::vector<char>> support_fix;
  // per lambda entry: [lo, hi] bounds around the last improving solution
  std::optional<std::vector<Interval>> trust_box;
  bool active() const { return support_fix.has_value() || trust_box.has_value(); }
};

struct MasterState {
  int K = 1;
  int m = 0;
  std::vector<MasterPoint> points;
  std::vector<double> psi_history;     // master dual bound per iteration
  double best_bound = -1e300;          // D
  AggregationMatrix best_lambda;
  int stall_counter = 0;
  Stabilization stabilization;
  // upper bound on the master optimum from unrestricted solves only; both
  // the big-M size and the epsilon test rely on it staying valid
  double psi_upper = 1e300;

  // Deduplicates by infinity-norm distance; returns true when appended.
  bool add_point(std::vector<double> x, std::vector<double> gvals, double dedup_tol = 1e-9);
};

struct BendersConfig {
  int K = 1;
  double epsilon = 1e-6;
  double alpha = 0.2;          // master early stop: accept psi_p >= alpha * psi_d_prev
  int stall_limit = 20;
  double trust_radius = 0.1;
  long max_iterations = 1000;
  double time_limit = 1e18;
  std::optional<double> target_bound;
  SymmetryMode symmetry = SymmetryMode::FirstComponent;
  bool stabilize = true;
  SolveLimits sub_limits;       // per sub-problem
  long master_node_limit = 200000;
};

struct IterationRecord {
  int iteration = 0;
  AggregationMatrix lambda;           // multiplier used for this sub-solve
  std::optional<double> early_stop;   // threshold passed to the sub-solver
  SubStatus sub_status = SubStatus::Limit;
  double sub_bound = 0.0;             // sub-solver dual bound
  double sub_value = 0.0;             // incumbent value (when present)
  bool sub_has_point = false;
  std::vector<double> sub_point;      // incumbent point (when present)
  double psi_primal = 0.0;            // master incumbent Psi
  double psi_dual = 0.0;              // master dual bound Psi_d
  bool master_restricted = false;     // stabilization active during the solve
  double best_bound = 0.0;            // D after this iteration
};

struct BendersReport {
  std::vector<IterationRecord> iterations;
  double best_bound = -1e300;
  AggregationMatrix best_lambda;
  TerminationReason reason = TerminationReason::IterationLimit;
  std::string error;  // non-empty when the loop aborted on a solver failure
  double wall_seconds = 0.0;
};

// Support fixing plus trust box around an improving multiplier: zero
// entries are fixed at zero, the rest are boxed to
// [max(0, v - radius), min(1, v + radius)].
Stabilization make_stabilization(const AggregationMatrix& lambda, double trust_radius);

// Exact LP master for K = 1 (max Psi over the accumulated cuts). An active
// trust box can make the restricted master infeasible (no boxed multiplier
// violates the newest point); `feasible` is false in that case and the
// caller drops the stabilization.
struct MasterLpResult {
  bool feasible = true;
  std::vector<double> lambda;
  double psi = 0.0;
};
MasterLpResult solve_master_lp(const MasterState& state, const Model& model);

// Big-M MILP master for K >= 2, including symmetry rows and any active
// stabilization bounds. Index maps expose the layout for tests and
// solution extraction.
struct MasterMilp {
  MipProblem prob;
  int psi_col = -1;
  std::vector<int> lambda_cols;          // row-major K x m
  std::vector<std::vector<int>> z_cols;  // per point, per k
  int n_bigm_rows = 0;
  int n_assign_rows = 0;
  int n_norm_rows = 0;
  int n_symmetry_rows = 0;
};
MasterMilp build_master_milp(const MasterState& state, const Model& model,
                             const BendersConfig& cfg);

// The Benders loops (Algorithms 1 and 2): sub-problem at the current
// multiplier, bound update, point collection, master solve, stabilization.
BendersReport run_benders(const Model& model, const BendersConfig& cfg,
                          const std::optional<AggregationMatrix>& warm_start = std::nullopt);

// F^K(lambda): value of the K-surrogate relaxation.
double evaluate_K_surrogate(const Model& model, const AggregationMatrix& lambda,
                            const SolveLimits& limits);

}  // namespace sdual
