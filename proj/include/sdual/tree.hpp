#pragma once

#include <vector>

#include "sdual/minlp.hpp"
#include "sdual/surrogate.hpp"

namespace sdual {

// One root aggregation kept for reuse in the tree, tagged with the dual
// bound it proved at the root.
struct PoolEntry {
  AggregationMatrix lambda;
  double root_bound = 0.0;
};

// Aggregations collected from a Benders run that beat the root MILP bound,
// ordered by decreasing root bound (strongest candidate first).
struct AggregationPool {
  std::vector<PoolEntry> entries;

  size_t size() const { return entries.size(); }
  bool empty() const { return entries.empty(); }
};

AggregationPool build_pool(const BendersReport& report, double milp_root_bound,
                           size_t max_size);

struct NodeContext {
  long id = 0;
  std::vector<Interval> boxes;   // local boxes, within the global ones
  std::vector<int> candidates;   // indices into the pool, in pool order
};

struct LocalBoundResult {
  double bound = 0.0;            // valid dual bound for the node
  std::vector<int> candidates;   // surviving candidate set C_v
  int used_candidate = -1;       // pool index that provided the bound, or -1
  bool improved = false;         // bound beat the local MILP relaxation
};

// Local dual bound for a node: start from the local MILP relaxation, then
// try the candidate aggregations in pool order, returning on the first
// proven improvement and discarding candidates that provably fail. A solve
// that hits a limit is treated as non-improving but keeps its candidate.
LocalBoundResult local_bound(const NodeContext& node, const Model& model,
                             const AggregationPool& pool, const SolveLimits& limits);

}  // namespace sdual
