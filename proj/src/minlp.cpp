#include "sdual/minlp.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <queue>
#include <stdexcept>

namespace sdual {

namespace {

constexpr double kFeasTol = 1e-7;
constexpr double kIntTol = 1e-6;
constexpr double kAtomViolationTol = 1e-10;

double now_seconds() {
  using clock = std::chrono::steady_clock;
  return std::chrono::duration<double>(clock::now().time_since_epoch()).count();
}

double int_pow(double base, int exp) {
  double r = 1.0;
  for (int i = 0; i < exp; ++i) r *= base;
  return r;
}

double signed_root(double v, int e) {
  return v < 0.0 ? -std::pow(-v, 1.0 / e) : std::pow(v, 1.0 / e);
}

struct Node {
  long id;
  std::vector<Interval> boxes;  // original variables
  double bound;                 // inherited lower bound
};

struct NodeOrder {
  bool operator()(const Node& a, const Node& b) const {
    if (a.bound != b.bound) return a.bound > b.bound;  // smaller bound first
    return a.id > b.id;                                // then older node
  }
};

// Assembled once per sub-problem; only boxes change across nodes.
struct Workspace {
  const SubProblem* sp;
  int n = 0;
  int n_ext = 0;
  bool has_epi = false;
  int epi_col = -1;
  std::vector<LpRow> structural;  // linear + refined + cutoff + aggregated (+ epigraph)
  std::vector<std::pair<std::vector<std::pair<int, double>>, double>> aggregated_linear;
};

Workspace make_workspace(const SubProblem& sp) {
  Workspace w;
  w.sp = &sp;
  w.n = sp.model.n;
  w.n_ext = sp.reform->num_extended();
  w.has_epi = sp.epigraph.has_value();
  w.epi_col = w.has_epi ? w.n_ext : -1;

  for (const LinearConstraint& row : sp.model.linear_rows)
    w.structural.push_back(LpRow{row.coeffs, Relation::LessEq, row.rhs});
  if (sp.use_refined_rows) {
    for (const LinearConstraint& row : sp.model.refined_rows)
      w.structural.push_back(LpRow{row.coeffs, Relation::LessEq, row.rhs});
    if (sp.model.primal_cutoff) {
      std::vector<std::pair<int, double>> coeffs;
      for (int j = 0; j < w.n; ++j)
        if (sp.model.objective[size_t(j)] != 0.0) coeffs.emplace_back(j, sp.model.objective[size_t(j)]);
      w.structural.push_back(LpRow{std::move(coeffs), Relation::LessEq, *sp.model.primal_cutoff});
    }
  }
  for (const Polynomial& g : sp.aggregated) {
    auto [coeffs, constant] = sp.reform->linearize(g);
    w.aggregated_linear.emplace_back(coeffs, constant);
    w.structural.push_back(LpRow{std::move(coeffs), Relation::LessEq, -constant});
  }
  if (w.has_epi) {
    auto [coeffs, constant] = sp.reform->linearize(*sp.epigraph);
    coeffs.emplace_back(w.epi_col, -1.0);
    w.structural.push_back(LpRow{std::move(coeffs), Relation::LessEq, -constant});
  }
  return w;
}

Interval row_activity(const std::vector<std::pair<int, double>>& coeffs,
                      const std::vector<Interval>& boxes) {
  Interval act{0.0, 0.0};
  for (const auto& [j, a] : coeffs) {
    const Interval& b = boxes[size_t(j)];
    if (a >= 0.0) {
      act.lo += a * b.lo;
      act.hi += a * b.hi;
    } else {
      act.lo += a * b.hi;
      act.hi += a * b.lo;
    }
  }
  return act;
}

// Fixed-point interval tightening over atoms and <= rows. Returns false when
// a box empties (node infeasible). Boxes are in extended space (+ epigraph).
bool propagate(const Workspace& w, std::vector<Interval>& ext) {
  const auto& atoms = w.sp->reform->atoms();
  // pad only by rounding-error scale so that roots do not amplify slack
  const double pad = 4e-16;

  auto tighten = [&](int j, double lo, double hi) {
    Interval& b = ext[size_t(j)];
    b.lo = std::max(b.lo, lo - pad * std::max(1.0, std::fabs(lo)));
    b.hi = std::min(b.hi, hi + pad * std::max(1.0, std::fabs(hi)));
  };

  for (int round = 0; round < 5; ++round) {
    // forward: atom boxes from factor boxes
    for (const Atom& atom : atoms) {
      Interval v;
      switch (atom.kind) {
        case AtomKind::Bilinear:
          v = interval_mul(ext[size_t(atom.a)], ext[size_t(atom.b)]);
          break;
        case AtomKind::Square:
          v = interval_pow(ext[size_t(atom.a)], 2);
          break;
        case AtomKind::Power:
          v = interval_pow(ext[size_t(atom.a)], atom.exponent);
          break;
      }
      tighten(atom.result, v.lo, v.hi);
    }

    // rows: one pass of standard interval tightening on a'v <= b
    for (const LpRow& row : w.structural) {
      const Interval act = row_activity(row.coeffs, ext);
      double abs_total = 0.0;
      for (const auto& [j, a] : row.coeffs)
        abs_total += std::fabs(a) * std::max(std::fabs(ext[size_t(j)].lo), std::fabs(ext[size_t(j)].hi));
      if (act.lo > row.rhs + 1e-9 * std::max(1.0, std::fabs(row.rhs))) return false;
      for (const auto& [j, a] : row.coeffs) {
        if (a == 0.0) continue;
        const Interval& bj = ext[size_t(j)];
        const double own = std::min(a * bj.lo, a * bj.hi);
        const double rest = act.lo - own;
        // rest carries rounding error from the other terms only; a
        // single-term row tightens exactly
        const double rest_err =
            4e-16 * std::max(0.0, abs_total - std::fabs(a) * std::max(std::fabs(bj.lo), std::fabs(bj.hi)));
        const double room = row.rhs - rest + rest_err;
        if (a > 0.0)
          tighten(j, -1e300, room / a);
        else
          tighten(j, room / a, 1e300);
      }
    }

    // backward: factor boxes from atom result boxes
    for (auto it = atoms.rbegin(); it != atoms.rend(); ++it) {
      const Atom& atom = *it;
      const Interval wv = ext[size_t(atom.result)];
      if (atom.kind == AtomKind::Bilinear) {
        const Interval xa = ext[size_t(atom.a)];
        const Interval xb = ext[size_t(atom.b)];
        if (xb.lo > 0.0 || xb.hi < 0.0) {
          const double c[4] = {wv.lo / xb.lo, wv.lo / xb.hi, wv.hi / xb.lo, wv.hi / xb.hi};
          tighten(atom.a, std::min({c[0], c[1], c[2], c[3]}), std::max({c[0], c[1], c[2], c[3]}));
        }
        if (xa.lo > 0.0 || xa.hi < 0.0) {
          const double c[4] = {wv.lo / xa.lo, wv.lo / xa.hi, wv.hi / xa.lo, wv.hi / xa.hi};
          tighten(atom.b, std::min({c[0], c[1], c[2], c[3]}), std::max({c[0], c[1], c[2], c[3]}));
        }
      } else {
        const int e = atom.kind == AtomKind::Square ? 2 : atom.exponent;
        if (e % 2 == 1) {
          tighten(atom.a, signed_root(wv.lo, e), signed_root(wv.hi, e));
        } else {
          if (wv.hi < -1e-12) return false;
          const double s = std::pow(std::max(wv.hi, 0.0), 1.0 / e);
          const Interval xa = ext[size_t(atom.a)];
          if (xa.lo >= 0.0) {
            const double lo = wv.lo > 0.0 ? std::pow(wv.lo, 1.0 / e) : 0.0;
            tighten(atom.a, lo, s);
          } else if (xa.hi <= 0.0) {
            const double lo = wv.lo > 0.0 ? std::pow(wv.lo, 1.0 / e) : 0.0;
            tighten(atom.a, -s, -lo);
          } else {
            tighten(atom.a, -s, s);
          }
        }
      }
    }

    // integer rounding on originals
    for (int j = 0; j < w.n; ++j) {
      if (!w.sp->model.integer_flags[size_t(j)]) continue;
      ext[size_t(j)].lo = std::ceil(ext[size_t(j)].lo - 1e-9);
      ext[size_t(j)].hi = std::floor(ext[size_t(j)].hi + 1e-9);
    }

    for (int j = 0; j < static_cast<int>(ext.size()); ++j)
      if (ext[size_t(j)].empty(1e-11 * std::max(1.0, std::fabs(ext[size_t(j)].lo)))) return false;
  }
  return true;
}

}  // namespace

const char* to_string(SubStatus s) {
  switch (s) {
    case SubStatus::Optimal: return "optimal";
    case SubStatus::EarlyStopped: return "early_stopped";
    case SubStatus::Infeasible: return "infeasible";
    case SubStatus::Limit: return "limit";
  }
  return "unknown";
}

std::shared_ptr<const Reformulation> shared_reformulation(const Model& model) {
  return std::make_shared<Reformulation>(build_reformulation(model.nonlinear, model.boxes));
}

SubProblem make_subproblem(const Model& model, const AggregationMatrix& lambda,
                           std::shared_ptr<const Reformulation> reform) {
  if (lambda.K > 0 && lambda.m != model.num_nonlinear())
    throw std::invalid_argument("make_subproblem: lambda row length mismatch");
  SubProblem sp;
  sp.model = model;
  sp.reform = reform ? std::move(reform) : shared_reformulation(model);
  for (int k = 0; k < lambda.K; ++k) {
    Polynomial row = aggregate(model, lambda.row(k));
    if (!row.is_zero()) sp.aggregated.push_back(std::move(row));
  }
  sp.use_refined_rows = true;
  return sp;
}

SubProblem make_lagrangian_problem(const Model& model, std::span<const double> lambda_row,
                                   std::shared_ptr<const Reformulation> reform) {
  SubProblem sp;
  sp.model = model;
  sp.reform = reform ? std::move(reform) : shared_reformulation(model);
  Polynomial penalty = aggregate(model, lambda_row);
  if (!penalty.is_zero()) sp.epigraph = std::move(penalty);
  sp.use_refined_rows = false;
  return sp;
}

SubSolveOutcome solve_subproblem_local(const SubProblem& sp, const std::vector<Interval>& boxes,
                                       const SolveLimits& limits) {
  const Workspace w = make_workspace(sp);
  const int n = w.n;
  const double t0 = now_seconds();

  SubSolveOutcome out;
  out.dual_bound = -kLpInfinity;

  std::vector<Interval> root = sp.model.boxes;
  for (int j = 0; j < n && j < static_cast<int>(boxes.size()); ++j) {
    root[size_t(j)].lo = std::max(root[size_t(j)].lo, boxes[size_t(j)].lo);
    root[size_t(j)].hi = std::min(root[size_t(j)].hi, boxes[size_t(j)].hi);
  }

  std::priority_queue<Node, std::vector<Node>, NodeOrder> open;
  long next_id = 0;
  open.push(Node{next_id++, root, -kLpInfinity});

  double incumbent_value = kLpInfinity;
  std::vector<double> incumbent;
  double resolved_floor = kLpInfinity;  // fathomed regions, at their bounds
  double dropped_floor = kLpInfinity;   // regions dropped without proof

  auto remaining_bound = [&](const std::priority_queue<Node, std::vector<Node>, NodeOrder>& pq) {
    double b = std::min(resolved_floor, dropped_floor);
    if (!pq.empty()) b = std::min(b, pq.top().bound);
    return std::min(b, incumbent_value);
  };
  auto record_bound = [&]() { out.bound_history.push_back(remaining_bound(open)); };
  auto rel_gap = [&](double primal, double dual) {
    if (!std::isfinite(primal) || !std::isfinite(dual)) return 1e18;
    return (primal - dual) / std::max({1.0, std::fabs(primal), std::fabs(dual)});
  };

  SubStatus status = SubStatus::Limit;
  bool stopped = false;

  auto process_node = [&](Node nd) {
    if (nd.bound >= incumbent_value - 1e-9 * std::max(1.0, std::fabs(incumbent_value))) {
      resolved_floor = std::min(resolved_floor, nd.bound);
      return;
    }

    // propagate and build the node LP
    std::vector<Interval> ext = sp.reform->derive_boxes(nd.boxes);
    if (w.has_epi) {
      auto [coeffs, constant] = sp.reform->linearize(*sp.epigraph);
      const Interval act = row_activity(coeffs, ext);
      ext.push_back(Interval{act.lo + constant, act.hi + constant});
    }
    if (!propagate(w, ext)) return;  // infeasible by intervals
    std::vector<Interval> pbox(ext.begin(), ext.begin() + n);  // tightened originals

    LinearProgram lp;
    lp.sense = Sense::Minimize;
    const int n_vars = static_cast<int>(ext.size());
    for (int j = 0; j < n_vars; ++j) {
      double obj = 0.0;
      if (j < n) obj = sp.model.objective[size_t(j)];
      if (j == w.epi_col) obj = 1.0;
      lp.add_variable(ext[size_t(j)].lo, ext[size_t(j)].hi, obj);
    }
    for (const LpRow& row : w.structural) lp.rows.push_back(row);
    std::vector<Interval> cut_boxes(ext.begin(), ext.begin() + w.sp->reform->num_extended());
    for (LpRow& row : emit_cuts_extended(*sp.reform, cut_boxes)) lp.rows.push_back(std::move(row));

    LpSolution sol = solve_lp(lp);
    if (sol.status == LpStatus::Infeasible) return;
    if (sol.status != LpStatus::Optimal) {
      // no usable relaxation: keep the region's bound without proof
      dropped_floor = std::min(dropped_floor, nd.bound);
      return;
    }

    const double node_bound = std::max(nd.bound, sol.objective);
    if (node_bound >= incumbent_value - 1e-9 * std::max(1.0, std::fabs(incumbent_value))) {
      resolved_floor = std::min(resolved_floor, node_bound);
      return;
    }

    // integer branching first
    int int_var = -1;
    double best_frac = kIntTol;
    for (int j = 0; j < n; ++j) {
      if (!sp.model.integer_flags[size_t(j)]) continue;
      const double frac = std::fabs(sol.primal[size_t(j)] - std::round(sol.primal[size_t(j)]));
      if (frac > best_frac) {
        best_frac = frac;
        int_var = j;
      }
    }

    if (int_var >= 0) {
      const double v = sol.primal[size_t(int_var)];
      Node down{next_id++, pbox, node_bound};
      down.boxes[size_t(int_var)].hi = std::floor(v);
      Node up{next_id++, pbox, node_bound};
      up.boxes[size_t(int_var)].lo = std::ceil(v);
      open.push(std::move(down));
      open.push(std::move(up));
      return;
    }

    // candidate incumbent: check true feasibility of the LP point
    std::vector<double> x(sol.primal.begin(), sol.primal.begin() + n);
    bool feasible = true;
    for (const Polynomial& g : sp.aggregated)
      if (g.evaluate(x) > kFeasTol) {
        feasible = false;
        break;
      }
    if (feasible) {
      double value = 0.0;
      for (int j = 0; j < n; ++j) value += sp.model.objective[size_t(j)] * x[size_t(j)];
      if (w.has_epi) value += sp.epigraph->evaluate(x);
      if (value < incumbent_value - 1e-12) {
        incumbent_value = value;
        incumbent = x;
        if (limits.early_stop_at && value <= *limits.early_stop_at) {
          // the node itself is unresolved; fold its bound back in
          open.push(Node{next_id++, nd.boxes, node_bound});
          status = SubStatus::EarlyStopped;
          stopped = true;
          return;
        }
      }
      // In Lagrangian mode every point of X is feasible, but the epigraph
      // gap may still be open; fall through to spatial branching unless the
      // LP already matches the true value.
      if (!w.has_epi) {
        resolved_floor = std::min(resolved_floor, node_bound);
        return;
      }
      if (value - node_bound <= 1e-9 * std::max(1.0, std::fabs(value))) {
        resolved_floor = std::min(resolved_floor, node_bound);
        return;
      }
    }

    // spatial branching on the worst violated atom
    const auto& atoms = sp.reform->atoms();
    int best_atom = -1;
    double worst = kAtomViolationTol;
    for (int a = 0; a < static_cast<int>(atoms.size()); ++a) {
      const Atom& atom = atoms[size_t(a)];
      double truth = 0.0;
      switch (atom.kind) {
        case AtomKind::Bilinear:
          truth = sol.primal[size_t(atom.a)] * sol.primal[size_t(atom.b)];
          break;
        case AtomKind::Square:
          truth = int_pow(sol.primal[size_t(atom.a)], 2);
          break;
        case AtomKind::Power:
          truth = int_pow(sol.primal[size_t(atom.a)], atom.exponent);
          break;
      }
      const double viol = std::fabs(sol.primal[size_t(atom.result)] - truth);
      if (viol > worst) {
        worst = viol;
        best_atom = a;
      }
    }

    int branch_var = -1;
    if (best_atom >= 0) {
      double best_width = 1e-10;
      for (const auto& [v, _] : atoms[size_t(best_atom)].product.exponents()) {
        const double width = pbox[size_t(v)].width();
        if (width > best_width) {
          best_width = width;
          branch_var = v;
        }
      }
    }
    if (branch_var == -1 && !feasible) {
      // fallback: widest variable among the violated rows' support
      double best_width = 1e-10;
      for (const Polynomial& g : sp.aggregated) {
        if (g.evaluate(x) <= kFeasTol) continue;
        for (const auto& [mono, _] : g.terms())
          for (const auto& [v, __] : mono.exponents())
            if (pbox[size_t(v)].width() > best_width) {
              best_width = pbox[size_t(v)].width();
              branch_var = v;
            }
      }
    }

    if (branch_var == -1) {
      // nothing to refine: keep the region's bound without optimality proof
      dropped_floor = std::min(dropped_floor, node_bound);
      return;
    }

    const Interval box = pbox[size_t(branch_var)];
    if (sp.model.integer_flags[size_t(branch_var)] && box.width() >= 1.0 - 1e-9) {
      const double v =
          std::max(box.lo, std::min(box.hi - 1.0, std::floor(sol.primal[size_t(branch_var)])));
      Node down{next_id++, pbox, node_bound};
      down.boxes[size_t(branch_var)].hi = v;
      Node up{next_id++, pbox, node_bound};
      up.boxes[size_t(branch_var)].lo = v + 1.0;
      open.push(std::move(down));
      open.push(std::move(up));
      return;
    }

    const double w10 = 0.1 * box.width();
    const double v = std::min(box.hi - w10, std::max(box.lo + w10, sol.primal[size_t(branch_var)]));
    Node left{next_id++, pbox, node_bound};
    left.boxes[size_t(branch_var)].hi = v;
    Node right{next_id++, pbox, node_bound};
    right.boxes[size_t(branch_var)].lo = v;
    open.push(std::move(left));
    open.push(std::move(right));
  };

  while (!open.empty() && !stopped) {
    if (out.nodes >= limits.node_limit || now_seconds() - t0 > limits.time_limit) break;
    if (incumbent_value < kLpInfinity &&
        rel_gap(incumbent_value, remaining_bound(open)) <= limits.gap_limit) {
      status = SubStatus::Optimal;
      stopped = true;
      break;
    }

    Node nd = open.top();
    open.pop();
    ++out.nodes;
    process_node(std::move(nd));
    record_bound();
  }

  // drain whatever remains into the reported bound
  double final_bound = std::min(resolved_floor, dropped_floor);
  while (!open.empty()) {
    final_bound = std::min(final_bound, open.top().bound);
    open.pop();
  }

  out.has_incumbent = !incumbent.empty();
  if (out.has_incumbent) {
    out.incumbent = incumbent;
    out.incumbent_value = incumbent_value;
  }

  if (stopped && status == SubStatus::EarlyStopped) {
    out.status = SubStatus::EarlyStopped;
    out.dual_bound = std::min(final_bound, incumbent_value);
  } else if (stopped && status == SubStatus::Optimal) {
    out.status = SubStatus::Optimal;
    out.dual_bound = std::min(final_bound, incumbent_value);
  } else if (!out.has_incumbent && !std::isfinite(final_bound) && final_bound > 0) {
    // every region was fathomed infeasible
    out.status = SubStatus::Infeasible;
    out.dual_bound = kLpInfinity;
    out.gap = 0.0;
    return out;
  } else if (out.has_incumbent && rel_gap(incumbent_value, final_bound) <= limits.gap_limit) {
    out.status = SubStatus::Optimal;
    out.dual_bound = std::min(final_bound, incumbent_value);
  } else {
    out.status = SubStatus::Limit;
    out.dual_bound = final_bound;
  }
  out.gap = out.has_incumbent ? rel_gap(incumbent_value, out.dual_bound) : 1e18;
  return out;
}

SubSolveOutcome solve_subproblem(const SubProblem& sp, const SolveLimits& limits) {
  return solve_subproblem_local(sp, sp.model.boxes, limits);
}

SubSolveOutcome lagrangian_solve(const Model& model, std::span<const double> lambda_row,
                                 const SolveLimits& limits) {
  for (double v : lambda_row)
    if (!(v >= 0.0)) throw std::invalid_argument("lagrangian_value: negative entry");
  SubProblem sp = make_lagrangian_problem(model, lambda_row);
  return solve_subproblem(sp, limits);
}

double lagrangian_value(const Model& model, std::span<const double> lambda_row,
                        const SolveLimits& limits) {
  return lagrangian_solve(model, lambda_row, limits).dual_bound;
}

}  // namespace sdual
