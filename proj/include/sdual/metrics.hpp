#pragma once

#include <vector>

namespace sdual {

// Gap-closed improvement of dual bound d1 over d2 against primal reference
// p, in [-1, 1]. The degenerate case p == d2 (or p == d1 on the mirrored
// branch) returns +/-1 by continuity.
double gap_closed(double p, double d1, double d2);

// (prod (v_i + s))^(1/N) - s; the geometric mean for s = 0.
double shifted_geomean(const std::vector<double>& values, double shift);

// D + (P - D) * 0.2: the dual bound that closes 20% of the gap to P.
double target_bound(double dual, double primal);

}  // namespace sdual
