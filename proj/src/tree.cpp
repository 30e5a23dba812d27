#include "sdual/tree.hpp"

#include <algorithm>
#include <cmath>

namespace sdual {

AggregationPool build_pool(const BendersReport& report, double milp_root_bound,
                           size_t max_size) {
  AggregationPool pool;
  for (const IterationRecord& it : report.iterations) {
    if (it.lambda.is_zero()) continue;
    if (!(it.sub_bound > milp_root_bound + 1e-9 * std::max(1.0, std::fabs(milp_root_bound))))
      continue;
    bool duplicate = false;
    for (const PoolEntry& e : pool.entries) {
      double dist = 0.0;
      for (size_t i = 0; i < e.lambda.entries.size(); ++i)
        dist = std::max(dist, std::fabs(e.lambda.entries[i] - it.lambda.entries[i]));
      if (dist <= 1e-9) {
        duplicate = true;
        break;
      }
    }
    if (!duplicate) pool.entries.push_back(PoolEntry{it.lambda, it.sub_bound});
  }
  std::stable_sort(
      pool.entries.begin(), pool.entries.end(),
      [](const PoolEntry& a, const PoolEntry& b) { return a.root_bound > b.root_bound; });
  if (pool.entries.size() > max_size) pool.entries.resize(max_size);
  return pool;
}

LocalBoundResult local_bound(const NodeContext& node, const Model& model,
                             const AggregationPool& pool, const SolveLimits& limits) {
  auto reform = shared_reformulation(model);

  LocalBoundResult out;
  const int m = model.num_nonlinear();

  // D <- F^K_v(0), the local MILP relaxation
  SubProblem milp = make_subproblem(model, AggregationMatrix::zero(0, m), reform);
  SubSolveOutcome base = solve_subproblem_local(milp, node.boxes, limits);
  out.bound = base.dual_bound;  // +inf when the node is infeasible
  if (base.status == SubStatus::Infeasible) {
    out.candidates.clear();
    return out;
  }

  std::vector<int> remaining = node.candidates;
  for (size_t pos = 0; pos < remaining.size();) {
    const int idx = remaining[pos];
    const PoolEntry& entry = pool.entries[size_t(idx)];
    SubProblem sp = make_subproblem(model, entry.lambda, reform);
    SubSolveOutcome res = solve_subproblem_local(sp, node.boxes, limits);

    if (res.status == SubStatus::Infeasible) {
      // the aggregation proves the node empty: the strongest possible bound
      out.bound = res.dual_bound;
      out.candidates = remaining;
      out.used_candidate = idx;
      out.improved = true;
      return out;
    }
    const bool proven = res.status == SubStatus::Optimal;
    if (proven && res.dual_bound > out.bound + 1e-9 * std::max(1.0, std::fabs(out.bound))) {
      out.bound = res.dual_bound;
      out.candidates = remaining;  // the unfiltered remainder survives
      out.used_candidate = idx;
      out.improved = true;
      return out;
    }
    if (proven) {
      remaining.erase(remaining.begin() + static_cast<long>(pos));  // provably no better here
    } else {
      ++pos;  // a limit is not a proof; keep the candidate
    }
  }
  out.candidates.clear();
  return out;
}

}  // namespace sdual
