#include "sdual/lp.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <stdexcept>

namespace sdual {

namespace {

constexpr double kDualTol = 1e-9;
constexpr double kPivotTol = 1e-9;
constexpr double kFeasTol = 1e-7;
constexpr int kDegenerateStreakLimit = 40;

enum class VarState { Basic, AtLower, AtUpper };

// Internal standard form: min c'x, Wx = b, 0 <= x <= U (U may be +inf).
// Columns are [structural | slacks | artificials]; structurals are shifted
// so their lower bound is zero.
struct Tableau {
  int n_struct = 0;
  int n_rows = 0;
  int n_cols = 0;
  std::vector<std::vector<double>> cols;  // column-major, n_rows each
  std::vector<double> upper;              // per column
  std::vector<double> rhs;                // per row
  std::vector<double> cost;               // phase-2 cost
  std::vector<int> basic;                 // column basic in each row
  std::vector<VarState> state;            // per column
  std::vector<std::vector<double>> binv;  // n_rows x n_rows
};

void identity(std::vector<std::vector<double>>& m, int n) {
  m.assign(size_t(n), std::vector<double>(size_t(n), 0.0));
  for (int i = 0; i < n; ++i) m[size_t(i)][size_t(i)] = 1.0;
}

// Rebuilds binv from the basis columns; returns false when singular.
bool refactorize(Tableau& t) {
  const int m = t.n_rows;
  std::vector<std::vector<double>> a(size_t(m), std::vector<double>(size_t(2 * m), 0.0));
  for (int i = 0; i < m; ++i) {
    for (int r = 0; r < m; ++r) a[size_t(r)][size_t(i)] = t.cols[size_t(t.basic[size_t(i)])][size_t(r)];
    a[size_t(i)][size_t(m + i)] = 1.0;
  }
  for (int col = 0; col < m; ++col) {
    int piv = col;
    for (int r = col + 1; r < m; ++r)
      if (std::fabs(a[size_t(r)][size_t(col)]) > std::fabs(a[size_t(piv)][size_t(col)])) piv = r;
    if (std::fabs(a[size_t(piv)][size_t(col)]) < 1e-12) return false;
    std::swap(a[size_t(col)], a[size_t(piv)]);
    const double d = a[size_t(col)][size_t(col)];
    for (int c = 0; c < 2 * m; ++c) a[size_t(col)][size_t(c)] /= d;
    for (int r = 0; r < m; ++r) {
      if (r == col) continue;
      const double f = a[size_t(r)][size_t(col)];
      if (f == 0.0) continue;
      for (int c = 0; c < 2 * m; ++c) a[size_t(r)][size_t(c)] -= f * a[size_t(col)][size_t(c)];
    }
  }
  for (int r = 0; r < m; ++r)
    for (int c = 0; c < m; ++c) t.binv[size_t(r)][size_t(c)] = a[size_t(r)][size_t(m + c)];
  return true;
}

std::vector<double> basic_values(const Tableau& t) {
  const int m = t.n_rows;
  std::vector<double> y(static_cast<size_t>(m));
  for (int i = 0; i < m; ++i) y[size_t(i)] = t.rhs[size_t(i)];
  for (int j = 0; j < t.n_cols; ++j) {
    if (t.state[size_t(j)] != VarState::AtUpper) continue;
    const double u = t.upper[size_t(j)];
    if (u == 0.0) continue;
    for (int i = 0; i < m; ++i) y[size_t(i)] -= t.cols[size_t(j)][size_t(i)] * u;
  }
  std::vector<double> xb(size_t(m), 0.0);
  for (int i = 0; i < m; ++i) {
    double s = 0.0;
    for (int k = 0; k < m; ++k) s += t.binv[size_t(i)][size_t(k)] * y[size_t(k)];
    xb[size_t(i)] = s;
  }
  return xb;
}

enum class CoreResult { Optimal, Unbounded, Stalled };

// Runs the simplex loop with the given cost vector until optimality.
CoreResult simplex_core(Tableau& t, const std::vector<double>& cost, long& pivots, long pivot_cap) {
  const int m = t.n_rows;
  const int N = t.n_cols;
  bool bland = false;
  int degen_streak = 0;
  long since_refactor = 0;

  while (true) {
    if (pivots > pivot_cap) return CoreResult::Stalled;
    if (since_refactor >= 100) {
      if (!refactorize(t)) return CoreResult::Stalled;
      since_refactor = 0;
    }

    std::vector<double> xb = basic_values(t);

    // duals y = c_B B^-1
    std::vector<double> y(size_t(m), 0.0);
    for (int i = 0; i < m; ++i) {
      const double cb = cost[size_t(t.basic[size_t(i)])];
      if (cb == 0.0) continue;
      for (int k = 0; k < m; ++k) y[size_t(k)] += cb * t.binv[size_t(i)][size_t(k)];
    }

    // pricing
    int enter = -1;
    double best = 0.0;
    for (int j = 0; j < N; ++j) {
      const VarState s = t.state[size_t(j)];
      if (s == VarState::Basic) continue;
      if (t.upper[size_t(j)] == 0.0) continue;  // fixed at zero
      double d = cost[size_t(j)];
      for (int i = 0; i < m; ++i) d -= y[size_t(i)] * t.cols[size_t(j)][size_t(i)];
      double score = 0.0;
      if (s == VarState::AtLower && d < -kDualTol) score = -d;
      if (s == VarState::AtUpper && d > kDualTol) score = d;
      if (score == 0.0) continue;
      if (bland) {
        enter = j;
        break;
      }
      if (score > best) {
        best = score;
        enter = j;
      }
    }
    if (enter == -1) return CoreResult::Optimal;

    const double sigma = (t.state[size_t(enter)] == VarState::AtLower) ? 1.0 : -1.0;

    // direction of basic variables: x_B -> x_B - sigma * step * h
    std::vector<double> h(size_t(m), 0.0);
    for (int i = 0; i < m; ++i) {
      double s = 0.0;
      for (int k = 0; k < m; ++k) s += t.binv[size_t(i)][size_t(k)] * t.cols[size_t(enter)][size_t(k)];
      h[size_t(i)] = s;
    }

    double best_step = t.upper[size_t(enter)];  // bound flip candidate (may be inf)
    int leave_row = -1;
    bool leave_at_upper = false;
    for (int i = 0; i < m; ++i) {
      const double delta = -sigma * h[size_t(i)];
      const int bj = t.basic[size_t(i)];
      double ratio = kLpInfinity;
      bool hits_upper = false;
      if (delta < -kPivotTol) {
        ratio = std::max(0.0, xb[size_t(i)]) / (-delta);
      } else if (delta > kPivotTol && std::isfinite(t.upper[size_t(bj)])) {
        ratio = std::max(0.0, t.upper[size_t(bj)] - xb[size_t(i)]) / delta;
        hits_upper = true;
      } else {
        continue;
      }
      bool better = ratio < best_step - 1e-12;
      if (!better && ratio < best_step + 1e-12 && leave_row >= 0) {
        if (bland) {
          better = t.basic[size_t(i)] < t.basic[size_t(leave_row)];
        } else {
          better = std::fabs(h[size_t(i)]) > std::fabs(h[size_t(leave_row)]) + 1e-12;
        }
      }
      if (better) {
        best_step = ratio;
        leave_row = i;
        leave_at_upper = hits_upper;
      }
    }

    if (leave_row == -1 && !std::isfinite(best_step)) return CoreResult::Unbounded;

    ++pivots;
    if (best_step < 1e-11) {
      if (++degen_streak > kDegenerateStreakLimit) bland = true;
    } else {
      degen_streak = 0;
      bland = false;
    }

    if (leave_row == -1) {
      // bound flip, basis unchanged
      t.state[size_t(enter)] =
          (t.state[size_t(enter)] == VarState::AtLower) ? VarState::AtUpper : VarState::AtLower;
      continue;
    }

    // pivot: entering replaces basic[leave_row]
    const int leave_col = t.basic[size_t(leave_row)];
    const double piv = h[size_t(leave_row)];
    if (std::fabs(piv) < 1e-12) {
      if (!refactorize(t)) return CoreResult::Stalled;
      since_refactor = 0;
      continue;
    }
    for (int i = 0; i < m; ++i) {
      if (i == leave_row) continue;
      const double f = h[size_t(i)] / piv;
      if (f == 0.0) continue;
      for (int k = 0; k < m; ++k)
        t.binv[size_t(i)][size_t(k)] -= f * t.binv[size_t(leave_row)][size_t(k)];
    }
    for (int k = 0; k < m; ++k) t.binv[size_t(leave_row)][size_t(k)] /= piv;

    t.basic[size_t(leave_row)] = enter;
    t.state[size_t(enter)] = VarState::Basic;
    t.state[size_t(leave_col)] = leave_at_upper ? VarState::AtUpper : VarState::AtLower;
    ++since_refactor;
  }
}

// Solves B x_B = y by fresh Gaussian elimination for the final report.
bool solve_basis(const Tableau& t, const std::vector<double>& y, std::vector<double>& out,
                 bool transpose) {
  const int m = t.n_rows;
  std::vector<std::vector<double>> a(size_t(m), std::vector<double>(size_t(m + 1), 0.0));
  for (int i = 0; i < m; ++i) {
    for (int r = 0; r < m; ++r) {
      const double v = t.cols[size_t(t.basic[size_t(i)])][size_t(r)];
      if (transpose)
        a[size_t(i)][size_t(r)] = v;
      else
        a[size_t(r)][size_t(i)] = v;
    }
  }
  for (int r = 0; r < m; ++r) a[size_t(r)][size_t(m)] = y[size_t(r)];
  for (int col = 0; col < m; ++col) {
    int piv = col;
    for (int r = col + 1; r < m; ++r)
      if (std::fabs(a[size_t(r)][size_t(col)]) > std::fabs(a[size_t(piv)][size_t(col)])) piv = r;
    if (std::fabs(a[size_t(piv)][size_t(col)]) < 1e-13) return false;
    std::swap(a[size_t(col)], a[size_t(piv)]);
    for (int r = 0; r < m; ++r) {
      if (r == col) continue;
      const double f = a[size_t(r)][size_t(col)] / a[size_t(col)][size_t(col)];
      if (f == 0.0) continue;
      for (int c = col; c <= m; ++c) a[size_t(r)][size_t(c)] -= f * a[size_t(col)][size_t(c)];
    }
  }
  out.assign(size_t(m), 0.0);
  for (int r = 0; r < m; ++r) out[size_t(r)] = a[size_t(r)][size_t(m)] / a[size_t(r)][size_t(r)];
  return true;
}

}  // namespace

LpSolution solve_lp(const LinearProgram& lp) {
  const int n = lp.num_vars();
  const int m = static_cast<int>(lp.rows.size());
  LpSolution sol;

  for (int j = 0; j < n; ++j) {
    if (!std::isfinite(lp.lower[size_t(j)]))
      throw std::invalid_argument("solve_lp: lower bounds must be finite");
    if (lp.upper[size_t(j)] < lp.lower[size_t(j)]) {
      sol.status = LpStatus::Infeasible;
      return sol;
    }
  }

  const double sense_sign = (lp.sense == Sense::Maximize) ? -1.0 : 1.0;

  // Row orientation: GreaterEq rows are negated to LessEq; Equal kept.
  std::vector<double> row_sign(size_t(m), 1.0);
  Tableau t;
  t.n_struct = n;
  t.n_rows = m;
  t.n_cols = n + 2 * m;  // structurals, slacks, artificials
  t.cols.assign(size_t(t.n_cols), std::vector<double>(size_t(m), 0.0));
  t.upper.assign(size_t(t.n_cols), kLpInfinity);
  t.rhs.assign(size_t(m), 0.0);
  t.cost.assign(size_t(t.n_cols), 0.0);
  t.state.assign(size_t(t.n_cols), VarState::AtLower);
  t.basic.assign(size_t(m), -1);
  identity(t.binv, m);

  for (int j = 0; j < n; ++j) {
    t.upper[size_t(j)] = lp.upper[size_t(j)] - lp.lower[size_t(j)];
    t.cost[size_t(j)] = sense_sign * lp.objective[size_t(j)];
  }

  for (int i = 0; i < m; ++i) {
    const LpRow& row = lp.rows[size_t(i)];
    const double rs = (row.rel == Relation::GreaterEq) ? -1.0 : 1.0;
    row_sign[size_t(i)] = rs;
    double b = rs * row.rhs;
    for (const auto& [j, a] : row.coeffs) {
      if (j < 0 || j >= n) throw std::invalid_argument("solve_lp: bad column index in row");
      t.cols[size_t(j)][size_t(i)] += rs * a;
      b -= rs * a * lp.lower[size_t(j)];
    }
    t.rhs[size_t(i)] = b;
    // slack
    const int sj = n + i;
    t.cols[size_t(sj)][size_t(i)] = 1.0;
    if (row.rel == Relation::Equal) t.upper[size_t(sj)] = 0.0;
    // artificial, oriented so its basic value is nonnegative
    const int aj = n + m + i;
    t.cols[size_t(aj)][size_t(i)] = (b >= 0.0) ? 1.0 : -1.0;
    const bool slack_ok = (row.rel != Relation::Equal) && b >= 0.0;
    if (slack_ok) {
      t.basic[size_t(i)] = sj;
      t.state[size_t(sj)] = VarState::Basic;
      t.upper[size_t(aj)] = 0.0;
    } else {
      t.basic[size_t(i)] = aj;
      t.state[size_t(aj)] = VarState::Basic;
    }
  }

  const long pivot_cap = 2000 + 200L * (t.n_cols + m);
  long pivots = 0;

  // initial basis may contain -1 artificial columns
  if (m > 0 && !refactorize(t)) {
    sol.status = LpStatus::Stalled;
    return sol;
  }

  // Phase 1: minimize the artificial sum when any artificial is basic.
  bool need_phase1 = false;
  std::vector<double> phase1_cost(size_t(t.n_cols), 0.0);
  for (int i = 0; i < m; ++i) {
    if (t.basic[size_t(i)] >= n + m) {
      need_phase1 = true;
      phase1_cost[size_t(t.basic[size_t(i)])] = 1.0;
    }
  }
  if (need_phase1) {
    CoreResult r = simplex_core(t, phase1_cost, pivots, pivot_cap);
    sol.pivots = pivots;
    if (r == CoreResult::Stalled) {
      sol.status = LpStatus::Stalled;
      return sol;
    }
    // unbounded is impossible for a nonnegative objective
    std::vector<double> xb = basic_values(t);
    double infeas = 0.0;
    for (int i = 0; i < m; ++i)
      if (t.basic[size_t(i)] >= n + m) infeas += std::max(0.0, xb[size_t(i)]);
    if (infeas > kFeasTol) {
      sol.status = LpStatus::Infeasible;
      return sol;
    }
  }
  // Fix artificials at zero for phase 2.
  for (int j = n + m; j < t.n_cols; ++j) t.upper[size_t(j)] = 0.0;

  CoreResult r = simplex_core(t, t.cost, pivots, pivot_cap);
  sol.pivots = pivots;
  if (r == CoreResult::Stalled) {
    sol.status = LpStatus::Stalled;
    return sol;
  }
  if (r == CoreResult::Unbounded) {
    sol.status = LpStatus::Unbounded;
    return sol;
  }

  // Final solution from a fresh factorization of the basis.
  std::vector<double> y(static_cast<size_t>(m));
  for (int i = 0; i < m; ++i) y[size_t(i)] = t.rhs[size_t(i)];
  for (int j = 0; j < t.n_cols; ++j) {
    if (t.state[size_t(j)] != VarState::AtUpper) continue;
    const double u = t.upper[size_t(j)];
    if (u == 0.0) continue;
    for (int i = 0; i < m; ++i) y[size_t(i)] -= t.cols[size_t(j)][size_t(i)] * u;
  }
  std::vector<double> xb;
  if (!solve_basis(t, y, xb, /*transpose=*/false)) {
    sol.status = LpStatus::Stalled;
    return sol;
  }

  std::vector<double> xfull(size_t(t.n_cols), 0.0);
  for (int j = 0; j < t.n_cols; ++j)
    if (t.state[size_t(j)] == VarState::AtUpper) xfull[size_t(j)] = t.upper[size_t(j)];
  for (int i = 0; i < m; ++i) xfull[size_t(t.basic[size_t(i)])] = xb[size_t(i)];

  sol.primal.assign(size_t(n), 0.0);
  for (int j = 0; j < n; ++j) {
    double v = lp.lower[size_t(j)] + xfull[size_t(j)];
    v = std::max(v, lp.lower[size_t(j)]);
    if (std::isfinite(lp.upper[size_t(j)])) v = std::min(v, lp.upper[size_t(j)]);
    sol.primal[size_t(j)] = v;
  }

  // duals from B' yb = c_B, mapped back to original row orientation
  std::vector<double> cb(static_cast<size_t>(m));
  for (int i = 0; i < m; ++i) cb[size_t(i)] = t.cost[size_t(t.basic[size_t(i)])];
  std::vector<double> yb;
  if (!solve_basis(t, cb, yb, /*transpose=*/true)) {
    sol.status = LpStatus::Stalled;
    return sol;
  }
  sol.duals.assign(size_t(m), 0.0);
  for (int i = 0; i < m; ++i)
    sol.duals[size_t(i)] = sense_sign * row_sign[size_t(i)] * yb[size_t(i)];

  sol.reduced_costs.assign(size_t(n), 0.0);
  for (int j = 0; j < n; ++j) sol.reduced_costs[size_t(j)] = lp.objective[size_t(j)];
  for (int i = 0; i < m; ++i) {
    const double yi = sol.duals[size_t(i)];
    if (yi == 0.0) continue;
    for (const auto& [j, a] : lp.rows[size_t(i)].coeffs) sol.reduced_costs[size_t(j)] -= yi * a;
  }

  double obj = 0.0;
  for (int j = 0; j < n; ++j) obj += lp.objective[size_t(j)] * sol.primal[size_t(j)];
  sol.objective = obj;

  // honesty check: verify primal feasibility of the reported point
  for (int i = 0; i < m; ++i) {
    const LpRow& row = lp.rows[size_t(i)];
    double act = 0.0;
    double scale = std::fabs(row.rhs);
    for (const auto& [j, a] : row.coeffs) {
      act += a * sol.primal[size_t(j)];
      scale = std::max(scale, std::fabs(a));
    }
    const double tol = kFeasTol * std::max(1.0, scale);
    const bool ok = (row.rel == Relation::LessEq && act <= row.rhs + tol) ||
                    (row.rel == Relation::GreaterEq && act >= row.rhs - tol) ||
                    (row.rel == Relation::Equal && std::fabs(act - row.rhs) <= tol);
    if (!ok) {
      sol.status = LpStatus::Stalled;
      return sol;
    }
  }

  sol.status = LpStatus::Optimal;
  return sol;
}

}  // namespace sdual
