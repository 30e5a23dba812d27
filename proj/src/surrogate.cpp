#include "sdual/surrogate.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <stdexcept>

namespace sdual {

namespace {

double now_seconds() {
  using clock = std::chrono::steady_clock;
  return std::chrono::duration<double>(clock::now().time_since_epoch()).count();
}

double positive_part(double v) { return v > 0.0 ? v : 0.0; }

std::vector<double> eval_gvals(const Model& model, const std::vector<double>& x) {
  std::vector<double> g;
  g.reserve(model.nonlinear.size());
  for (const Polynomial& gi : model.nonlinear) g.push_back(gi.evaluate(x));
  return g;
}

// Entry bounds for one lambda entry under the active stabilization.
Interval lambda_bounds(const Stabilization& stab, int flat_index) {
  Interval b{0.0, 1.0};
  if (stab.support_fix && (*stab.support_fix)[size_t(flat_index)]) return Interval{0.0, 0.0};
  if (stab.trust_box) {
    b.lo = std::max(b.lo, (*stab.trust_box)[size_t(flat_index)].lo);
    b.hi = std::min(b.hi, (*stab.trust_box)[size_t(flat_index)].hi);
  }
  return b;
}

}  // namespace

const char* to_string(SymmetryMode m) {
  switch (m) {
    case SymmetryMode::None: return "none";
    case SymmetryMode::FirstComponent: return "first";
    case SymmetryMode::Diagonal: return "diag";
  }
  return "unknown";
}

const char* to_string(TerminationReason r) {
  switch (r) {
    case TerminationReason::PsiBelowEpsilon: return "psi_below_epsilon";
    case TerminationReason::IterationLimit: return "iteration_limit";
    case TerminationReason::TimeLimit: return "time_limit";
    case TerminationReason::TargetReached: return "target_reached";
  }
  return "unknown";
}

Stabilization make_stabilization(const AggregationMatrix& lambda, double trust_radius) {
  Stabilization stab;
  std::vector<char> fix(lambda.entries.size(), 0);
  std::vector<Interval> box(lambda.entries.size());
  for (size_t i = 0; i < lambda.entries.size(); ++i) {
    const double v = lambda.entries[i];
    fix[i] = (v == 0.0);
    box[i] = Interval{std::max(0.0, v - trust_radius), std::min(1.0, v + trust_radius)};
  }
  stab.support_fix = std::move(fix);
  stab.trust_box = std::move(box);
  return stab;
}

bool MasterState::add_point(std::vector<double> x, std::vector<double> gvals, double dedup_tol) {
  for (const MasterPoint& p : points) {
    double dist = 0.0;
    for (size_t j = 0; j < x.size() && j < p.x.size(); ++j)
      dist = std::max(dist, std::fabs(x[j] - p.x[j]));
    if (dist <= dedup_tol) return false;
  }
  points.push_back(MasterPoint{std::move(x), std::move(gvals)});
  return true;
}

MasterLpResult solve_master_lp(const MasterState& state, const Model& model) {
  const int m = model.num_nonlinear();
  if (state.points.empty()) throw std::invalid_argument("solve_master_lp: no points");

  LinearProgram lp;
  lp.sense = Sense::Maximize;
  for (int i = 0; i < m; ++i) {
    const Interval b = lambda_bounds(state.stabilization, i);
    lp.add_variable(b.lo, b.hi, 0.0);
  }
  const int psi = lp.add_variable(0.0, kLpInfinity, 1.0);

  for (const MasterPoint& p : state.points) {
    std::vector<std::pair<int, double>> coeffs;
    for (int i = 0; i < m; ++i)
      if (p.gvals[size_t(i)] != 0.0) coeffs.emplace_back(i, p.gvals[size_t(i)]);
    coeffs.emplace_back(psi, -1.0);
    lp.add_row(std::move(coeffs), Relation::GreaterEq, 0.0);
  }
  std::vector<std::pair<int, double>> norm;
  for (int i = 0; i < m; ++i) norm.emplace_back(i, 1.0);
  lp.add_row(std::move(norm), Relation::LessEq, 1.0);

  LpSolution sol = solve_lp(lp);
  MasterLpResult out;
  if (sol.status == LpStatus::Infeasible) {
    out.feasible = false;
    return out;
  }
  if (sol.status != LpStatus::Optimal)
    throw std::runtime_error("solve_master_lp: master LP did not solve to optimality");

  out.lambda.assign(sol.primal.begin(), sol.primal.begin() + m);
  for (double& v : out.lambda) v = std::max(0.0, v);
  out.psi = sol.objective;
  return out;
}

MasterMilp build_master_milp(const MasterState& state, const Model& model,
                             const BendersConfig& cfg) {
  const int m = model.num_nonlinear();
  const int K = cfg.K;
  if (K < 2) throw std::invalid_argument("build_master_milp: K must be at least 2");

  MasterMilp mm;
  LinearProgram& lp = mm.prob.lp;
  lp.sense = Sense::Maximize;

  mm.lambda_cols.resize(size_t(K) * m);
  for (int k = 0; k < K; ++k)
    for (int i = 0; i < m; ++i) {
      const Interval b = lambda_bounds(state.stabilization, k * m + i);
      mm.lambda_cols[size_t(k) * m + i] = lp.add_variable(b.lo, b.hi, 0.0);
    }

  // Psi upper bound: previous unrestricted masters and the per-point cap
  // min over points of max_i g_i(x)+ are both valid.
  double psi_cap = state.psi_upper;
  for (const MasterPoint& p : state.points) {
    double point_cap = 0.0;
    for (double g : p.gvals) point_cap = std::max(point_cap, positive_part(g));
    psi_cap = std::min(psi_cap, point_cap);
  }
  psi_cap = std::max(0.0, psi_cap);
  mm.psi_col = lp.add_variable(0.0, std::isfinite(psi_cap) ? psi_cap : kLpInfinity, 1.0);

  for (size_t pi = 0; pi < state.points.size(); ++pi) {
    std::vector<int> zrow;
    for (int k = 0; k < K; ++k) zrow.push_back(lp.add_variable(0.0, 1.0, 0.0));
    mm.z_cols.push_back(std::move(zrow));
  }

  mm.prob.integer_flags.assign(size_t(lp.num_vars()), 0);
  for (const auto& zrow : mm.z_cols)
    for (int col : zrow) mm.prob.integer_flags[size_t(col)] = 1;

  // big-M rows: sum_i lambda^k_i g_i(x) - Psi - M z_k^x >= -M. M absorbs
  // both the Psi level and the most negative aggregation value, keeping the
  // formulation exactly equivalent to the disjunctive enumeration.
  for (size_t pi = 0; pi < state.points.size(); ++pi) {
    const MasterPoint& p = state.points[pi];
    double neg_cap = 0.0;
    for (double g : p.gvals) neg_cap = std::max(neg_cap, positive_part(-g));
    const double big_m = (std::isfinite(psi_cap) ? psi_cap : 0.0) + neg_cap;
    for (int k = 0; k < K; ++k) {
      std::vector<std::pair<int, double>> coeffs;
      for (int i = 0; i < m; ++i)
        if (p.gvals[size_t(i)] != 0.0)
          coeffs.emplace_back(mm.lambda_cols[size_t(k) * m + i], p.gvals[size_t(i)]);
      coeffs.emplace_back(mm.psi_col, -1.0);
      coeffs.emplace_back(mm.z_cols[pi][size_t(k)], -big_m);
      lp.add_row(std::move(coeffs), Relation::GreaterEq, -big_m);
      ++mm.n_bigm_rows;
    }
  }

  for (size_t pi = 0; pi < state.points.size(); ++pi) {
    std::vector<std::pair<int, double>> coeffs;
    for (int k = 0; k < K; ++k) coeffs.emplace_back(mm.z_cols[pi][size_t(k)], 1.0);
    lp.add_row(std::move(coeffs), Relation::Equal, 1.0);
    ++mm.n_assign_rows;
  }

  for (int k = 0; k < K; ++k) {
    std::vector<std::pair<int, double>> coeffs;
    for (int i = 0; i < m; ++i) coeffs.emplace_back(mm.lambda_cols[size_t(k) * m + i], 1.0);
    lp.add_row(std::move(coeffs), Relation::LessEq, 1.0);
    ++mm.n_norm_rows;
  }

  if (cfg.symmetry == SymmetryMode::FirstComponent) {
    // lambda^1_1 >= lambda^2_1 >= ... >= lambda^K_1
    for (int k = 0; k + 1 < K; ++k) {
      lp.add_row({{mm.lambda_cols[size_t(k) * m], 1.0},
                  {mm.lambda_cols[size_t(k + 1) * m], -1.0}},
                 Relation::GreaterEq, 0.0);
      ++mm.n_symmetry_rows;
    }
  } else if (cfg.symmetry == SymmetryMode::Diagonal) {
    // diagonal entries dominate later rows in the same component
    for (int k = 0; k + 1 < K && k < m; ++k)
      for (int k2 = k + 1; k2 < K; ++k2) {
        lp.add_row({{mm.lambda_cols[size_t(k) * m + k], 1.0},
                    {mm.lambda_cols[size_t(k2) * m + k], -1.0}},
                   Relation::GreaterEq, 0.0);
        ++mm.n_symmetry_rows;
      }
  }

  return mm;
}

BendersReport run_benders(const Model& model, const BendersConfig& cfg,
                          const std::optional<AggregationMatrix>& warm_start) {
  model.validate();
  if (cfg.K < 1) throw std::invalid_argument("run_benders: K must be positive");
  if (!(cfg.alpha > 0.0 && cfg.alpha <= 1.0))
    throw std::invalid_argument("run_benders: alpha must be in (0,1]");
  if (!(cfg.trust_radius > 0.0 && cfg.trust_radius < 1.0))
    throw std::invalid_argument("run_benders: trust radius must be in (0,1)");
  const int m = model.num_nonlinear();

  const double t0 = now_seconds();
  auto reform = shared_reformulation(model);

  MasterState state;
  state.K = cfg.K;
  state.m = m;

  AggregationMatrix lambda = AggregationMatrix::zero(cfg.K, m);
  if (warm_start) {
    if (warm_start->m != m) throw std::invalid_argument("run_benders: warm start has wrong m");
    if (warm_start->K > cfg.K)
      throw std::invalid_argument("run_benders: warm start has too many rows");
    for (int k = 0; k < warm_start->K; ++k)
      for (int i = 0; i < m; ++i) {
        const double v = warm_start->at(k, i);
        if (!(v >= 0.0)) throw std::invalid_argument("run_benders: negative warm start entry");
        lambda.at(k, i) = v;
      }
  }
  state.best_lambda = lambda;
  state.best_bound = -kLpInfinity;

  BendersReport report;
  report.best_lambda = lambda;
  report.reason = TerminationReason::IterationLimit;

  double last_psi_dual = kLpInfinity;

  for (long iter = 1; iter <= cfg.max_iterations; ++iter) {
    if (now_seconds() - t0 > cfg.time_limit) {
      report.reason = TerminationReason::TimeLimit;
      break;
    }

    IterationRecord rec;
    rec.iteration = static_cast<int>(iter);
    rec.lambda = lambda;

    // sub-problem, early-stopped at the better of D and the target bound
    SolveLimits sub_limits = cfg.sub_limits;
    sub_limits.time_limit =
        std::min(sub_limits.time_limit, std::max(0.0, cfg.time_limit - (now_seconds() - t0)));
    std::optional<double> early;
    if (std::isfinite(state.best_bound)) early = state.best_bound;
    if (cfg.target_bound && (!early || *cfg.target_bound > *early)) early = *cfg.target_bound;
    sub_limits.early_stop_at = early;
    rec.early_stop = early;

    SubProblem sp = make_subproblem(model, lambda, reform);
    SubSolveOutcome sub = solve_subproblem(sp, sub_limits);
    rec.sub_status = sub.status;
    rec.sub_bound = sub.dual_bound;
    rec.sub_has_point = sub.has_incumbent;
    rec.sub_value = sub.has_incumbent ? sub.incumbent_value : 0.0;
    if (sub.has_incumbent) rec.sub_point = sub.incumbent;

    if (sub.status == SubStatus::Infeasible) {
      // the surrogate relaxation is empty, so the original model is too
      state.best_bound = kLpInfinity;
      state.best_lambda = lambda;
      report.error =
          "sub-problem infeasible: the surrogate relaxation has no point, so the "
          "original model is infeasible";
      report.reason = cfg.target_bound ? TerminationReason::TargetReached
                                       : TerminationReason::PsiBelowEpsilon;
      rec.best_bound = state.best_bound;
      report.iterations.push_back(std::move(rec));
      break;
    }

    const double improve_from =
        std::isfinite(state.best_bound)
            ? state.best_bound + 1e-9 * std::max(1.0, std::fabs(state.best_bound))
            : -kLpInfinity;
    if (sub.dual_bound > improve_from) {
      state.best_bound = sub.dual_bound;
      state.best_lambda = lambda;
      state.stall_counter = 0;
      // fix the zero support and box the rest around the improving lambda;
      // only multipliers discovered by a master solve are stabilization
      // centers, otherwise a warm start would freeze its own zero rows
      if (cfg.stabilize && iter > 1 && !lambda.is_zero())
        state.stabilization = make_stabilization(lambda, cfg.trust_radius);
    } else {
      ++state.stall_counter;
    }

    if (sub.has_incumbent) state.add_point(sub.incumbent, eval_gvals(model, sub.incumbent));

    rec.best_bound = state.best_bound;

    if (cfg.target_bound && state.best_bound >= *cfg.target_bound - 1e-12) {
      report.reason = TerminationReason::TargetReached;
      report.iterations.push_back(std::move(rec));
      break;
    }

    if (state.points.empty()) {
      report.error = "sub-problem produced no point; master cannot progress";
      report.reason = TerminationReason::IterationLimit;
      report.iterations.push_back(std::move(rec));
      break;
    }

    // stalling drops the stabilization so the next master runs unrestricted
    if (cfg.stabilize && state.stabilization.active() && state.stall_counter >= cfg.stall_limit) {
      state.stabilization = Stabilization{};
      state.stall_counter = 0;
    }

    AggregationMatrix next = AggregationMatrix::zero(cfg.K, m);
    double psi_p = 0.0;
    double psi_d = 0.0;
    bool restricted = state.stabilization.active();
    bool master_failed = false;
    for (int attempt = 0; attempt < 2; ++attempt) {
      bool infeasible_restriction = false;
      if (cfg.K == 1) {
        MasterLpResult res = solve_master_lp(state, model);
        if (!res.feasible) {
          infeasible_restriction = true;
        } else {
          for (int i = 0; i < m; ++i) next.at(0, i) = res.lambda[size_t(i)];
          psi_p = psi_d = res.psi;
        }
      } else {
        MasterMilp mm = build_master_milp(state, model, cfg);
        MipLimits ml;
        ml.node_limit = cfg.master_node_limit;
        ml.time_limit = std::max(0.0, cfg.time_limit - (now_seconds() - t0));
        if (cfg.alpha < 1.0 && std::isfinite(last_psi_dual))
          ml.target_primal = cfg.alpha * last_psi_dual;
        MipSolution sol = solve_mip(mm.prob, ml);
        if (sol.status == MipStatus::Infeasible) {
          infeasible_restriction = true;
        } else if (!sol.has_incumbent) {
          master_failed = true;
          break;
        } else {
          for (int k = 0; k < cfg.K; ++k)
            for (int i = 0; i < m; ++i)
              next.at(k, i) =
                  std::max(0.0, sol.incumbent[size_t(mm.lambda_cols[size_t(k) * m + i])]);
          psi_p = sol.objective;
          psi_d = std::max(sol.dual_bound, 0.0);
        }
      }
      // snap LP round-off on the norm rows; scaling a row never changes
      // the surrogate set
      for (int k = 0; k < cfg.K; ++k) {
        double norm = 0.0;
        for (int i = 0; i < m; ++i) norm += next.at(k, i);
        if (norm > 1.0)
          for (int i = 0; i < m; ++i) next.at(k, i) /= norm;
      }
      // The unrestricted master always admits lambda = 0 with psi = 0. A
      // restricted master that is infeasible, or one whose bound drops
      // below epsilon, proves nothing about convergence: drop the
      // stabilization (this is a stall) and re-solve.
      if (restricted && (infeasible_restriction || psi_d < cfg.epsilon)) {
        state.stabilization = Stabilization{};
        state.stall_counter = 0;
        restricted = false;
        continue;
      }
      if (infeasible_restriction) {
        master_failed = true;  // unrestricted master cannot be infeasible
      }
      break;
    }
    if (master_failed) {
      report.error = "master MILP returned no incumbent";
      report.reason = TerminationReason::IterationLimit;
      report.iterations.push_back(std::move(rec));
      break;
    }

    if (!restricted) state.psi_upper = std::min(state.psi_upper, psi_d);
    state.psi_history.push_back(psi_d);
    last_psi_dual = psi_d;

    rec.psi_primal = psi_p;
    rec.psi_dual = psi_d;
    rec.master_restricted = restricted;
    report.iterations.push_back(std::move(rec));

    if (psi_d < cfg.epsilon) {
      report.reason = TerminationReason::PsiBelowEpsilon;
      break;
    }
    if (iter == cfg.max_iterations) {
      report.reason = TerminationReason::IterationLimit;
      break;
    }
    lambda = next;
  }

  report.best_bound = state.best_bound;
  report.best_lambda = state.best_lambda;
  report.wall_seconds = now_seconds() - t0;
  return report;
}

double evaluate_K_surrogate(const Model& model, const AggregationMatrix& lambda,
                            const SolveLimits& limits) {
  SubProblem sp = make_subproblem(model, lambda);
  return solve_subproblem(sp, limits).dual_bound;
}

}  // namespace sdual
