#pragma once

// Independent oracles used to freeze expected values and to cross-check the
// solver stack. Everything here is deliberately brute force.

#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <vector>

#include "sdual/lp.hpp"
#include "sdual/model.hpp"

namespace testsup {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct GridResult {
  double value = kInf;           // +inf when no feasible grid point exists
  std::vector<double> argmin;
};

// Brute-force minimization of c'x over box/integrality/linear rows plus
// polynomial rows g_i <= 0. Continuous dimensions are scanned on a uniform
// grid and refined around the best cells; integer dimensions are enumerated
// exactly. Good to ~1e-6 on the smooth desk-scale instances used in tests.
inline GridResult grid_minimize(const sdual::Model& model,
                                const std::vector<sdual::Interval>& boxes,
                                int points_per_dim = 201, int refine_passes = 4) {
  const int n = model.n;
  GridResult best;

  auto feasible = [&](const std::vector<double>& x) {
    for (const auto& row : model.linear_rows) {
      double a = 0.0;
      for (const auto& [j, c] : row.coeffs) a += c * x[size_t(j)];
      if (a > row.rhs + 1e-12) return false;
    }
    for (const auto& row : model.refined_rows) {
      double a = 0.0;
      for (const auto& [j, c] : row.coeffs) a += c * x[size_t(j)];
      if (a > row.rhs + 1e-12) return false;
    }
    for (const auto& g : model.nonlinear)
      if (g.evaluate(x) > 1e-12) return false;
    return true;
  };

  std::vector<sdual::Interval> cur = boxes;
  for (int j = 0; j < n; ++j)
    if (model.integer_flags[size_t(j)]) {
      cur[size_t(j)].lo = std::ceil(cur[size_t(j)].lo - 1e-9);
      cur[size_t(j)].hi = std::floor(cur[size_t(j)].hi + 1e-9);
    }

  for (int pass = 0; pass < refine_passes; ++pass) {
    std::vector<std::vector<double>> levels(static_cast<size_t>(n));
    for (int j = 0; j < n; ++j) {
      if (model.integer_flags[size_t(j)]) {
        for (double v = cur[size_t(j)].lo; v <= cur[size_t(j)].hi + 1e-9; v += 1.0)
          levels[size_t(j)].push_back(v);
      } else {
        const int k = points_per_dim;
        for (int s = 0; s < k; ++s)
          levels[size_t(j)].push_back(cur[size_t(j)].lo +
                                      (cur[size_t(j)].hi - cur[size_t(j)].lo) * double(s) / double(k - 1));
      }
      if (levels[size_t(j)].empty()) return best;  // empty integer slice
    }

    GridResult pass_best;
    std::vector<double> x(size_t(n), 0.0);
    std::vector<size_t> idx(size_t(n), 0);
    while (true) {
      for (int j = 0; j < n; ++j) x[size_t(j)] = levels[size_t(j)][idx[size_t(j)]];
      if (feasible(x)) {
        double obj = 0.0;
        for (int j = 0; j < n; ++j) obj += model.objective[size_t(j)] * x[size_t(j)];
        if (obj < pass_best.value) {
          pass_best.value = obj;
          pass_best.argmin = x;
        }
      }
      int j = 0;
      while (j < n && ++idx[size_t(j)] == levels[size_t(j)].size()) {
        idx[size_t(j)] = 0;
        ++j;
      }
      if (j == n) break;
    }

    if (pass_best.value < best.value) best = pass_best;
    if (pass_best.argmin.empty()) break;  // nothing feasible to refine around

    // zoom continuous dimensions around the incumbent cell
    for (int j = 0; j < n; ++j) {
      if (model.integer_flags[size_t(j)]) continue;
      const double w = (cur[size_t(j)].hi - cur[size_t(j)].lo) / double(points_per_dim - 1);
      const double c = pass_best.argmin[size_t(j)];
      cur[size_t(j)].lo = std::max(boxes[size_t(j)].lo, c - 3.0 * w);
      cur[size_t(j)].hi = std::min(boxes[size_t(j)].hi, c + 3.0 * w);
    }
  }
  return best;
}

// Same oracle with the constraint set replaced by aggregated rows.
inline GridResult grid_minimize_aggregated(const sdual::Model& model,
                                           const sdual::AggregationMatrix& lambda,
                                           const std::vector<sdual::Interval>& boxes,
                                           int points_per_dim = 201, int refine_passes = 4) {
  sdual::Model surrogate = model;
  surrogate.nonlinear.clear();
  for (int k = 0; k < lambda.K; ++k)
    surrogate.nonlinear.push_back(sdual::aggregate(model, lambda.row(k)));
  if (surrogate.nonlinear.empty()) surrogate.nonlinear.push_back(sdual::Polynomial{});
  return grid_minimize(surrogate, boxes, points_per_dim, refine_passes);
}

// Exact vertex enumeration for tiny LPs with finite variable bounds: every
// choice of n active constraints (rows or bounds) is solved as a dense
// system; the best feasible solution wins. Independent of the simplex path.
inline std::optional<double> enumerate_lp_optimum(const sdual::LinearProgram& lp) {
  const int n = lp.num_vars();
  const int m = static_cast<int>(lp.rows.size());
  const int total = m + 2 * n;  // rows, then lower bounds, then upper bounds
  double best = kInf;
  bool found = false;

  auto dense_row = [&](int c, std::vector<double>& a, double& b) {
    a.assign(size_t(n), 0.0);
    if (c < m) {
      for (const auto& [j, v] : lp.rows[size_t(c)].coeffs) a[size_t(j)] += v;
      b = lp.rows[size_t(c)].rhs;
    } else if (c < m + n) {
      a[size_t(c - m)] = 1.0;
      b = lp.lower[size_t(c - m)];
    } else {
      a[size_t(c - m - n)] = 1.0;
      b = lp.upper[size_t(c - m - n)];
    }
  };

  std::vector<int> pick(size_t(n), 0);
  std::function<void(int, int)> rec = [&](int start, int depth) {
    if (depth == n) {
      // solve the n x n system of active constraints
      std::vector<std::vector<double>> a(size_t(n), std::vector<double>(size_t(n + 1), 0.0));
      for (int r = 0; r < n; ++r) {
        std::vector<double> coef;
        double rhs = 0.0;
        dense_row(pick[size_t(r)], coef, rhs);
        for (int c = 0; c < n; ++c) a[size_t(r)][size_t(c)] = coef[size_t(c)];
        a[size_t(r)][size_t(n)] = rhs;
      }
      for (int col = 0; col < n; ++col) {
        int piv = col;
        for (int r = col + 1; r < n; ++r)
          if (std::fabs(a[size_t(r)][size_t(col)]) > std::fabs(a[size_t(piv)][size_t(col)])) piv = r;
        if (std::fabs(a[size_t(piv)][size_t(col)]) < 1e-10) return;  // singular choice
        std::swap(a[size_t(col)], a[size_t(piv)]);
        for (int r = 0; r < n; ++r) {
          if (r == col) continue;
          const double f = a[size_t(r)][size_t(col)] / a[size_t(col)][size_t(col)];
          for (int c = col; c <= n; ++c) a[size_t(r)][size_t(c)] -= f * a[size_t(col)][size_t(c)];
        }
      }
      std::vector<double> x(static_cast<size_t>(n));
      for (int r = 0; r < n; ++r) x[size_t(r)] = a[size_t(r)][size_t(n)] / a[size_t(r)][size_t(r)];

      const double tol = 1e-8;
      for (int j = 0; j < n; ++j)
        if (x[size_t(j)] < lp.lower[size_t(j)] - tol || x[size_t(j)] > lp.upper[size_t(j)] + tol)
          return;
      for (const auto& row : lp.rows) {
        double act = 0.0;
        for (const auto& [j, v] : row.coeffs) act += v * x[size_t(j)];
        if (row.rel == sdual::Relation::LessEq && act > row.rhs + tol) return;
        if (row.rel == sdual::Relation::GreaterEq && act < row.rhs - tol) return;
        if (row.rel == sdual::Relation::Equal && std::fabs(act - row.rhs) > tol) return;
      }
      double obj = 0.0;
      for (int j = 0; j < n; ++j) obj += lp.objective[size_t(j)] * x[size_t(j)];
      if (lp.sense == sdual::Sense::Maximize) obj = -obj;
      if (obj < best) {
        best = obj;
        found = true;
      }
      return;
    }
    for (int c = start; c < total; ++c) {
      pick[size_t(depth)] = c;
      rec(c + 1, depth + 1);
    }
  };
  rec(0, 0);
  if (!found) return std::nullopt;
  return lp.sense == sdual::Sense::Maximize ? -best : best;
}

}  // namespace testsup
