#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "sdual/surrogate.hpp"
#include "support/instances.hpp"
#include "support/oracles.hpp"

using namespace sdual;

namespace {

MasterState state_from_gvals(int K, std::vector<std::vector<double>> gvals) {
  MasterState st;
  st.K = K;
  st.m = gvals.empty() ? 0 : static_cast<int>(gvals[0].size());
  double tag = 0.0;
  for (auto& g : gvals) {
    st.points.push_back(MasterPoint{{tag}, std::move(g)});
    tag += 1.0;  // distinct x so dedup never kicks in
  }
  return st;
}

Model dummy_model(int m) {
  Model md;
  md.n = 1;
  md.objective = {0.0};
  md.boxes = {{0.0, 1.0}};
  md.integer_flags = {0};
  for (int i = 0; i < m; ++i)
    md.nonlinear.push_back(testsup::poly({{testsup::mono({{0, 1}}), 1.0}}));
  return md;
}

// Exact solution of the disjunctive master by enumerating all K^|X| ways of
// assigning one disjunct per point and solving the resulting LP.
double disjunctive_oracle(const MasterState& st, int K) {
  const int m = st.m;
  const size_t npts = st.points.size();
  double best = 0.0;  // lambda = 0, psi = 0 is always feasible

  std::vector<int> assign(npts, 0);
  while (true) {
    LinearProgram lp;
    lp.sense = Sense::Maximize;
    for (int k = 0; k < K; ++k)
      for (int i = 0; i < m; ++i) lp.add_variable(0.0, 1.0, 0.0);
    const int psi = lp.add_variable(0.0, kLpInfinity, 1.0);
    for (size_t p = 0; p < npts; ++p) {
      std::vector<std::pair<int, double>> coeffs;
      for (int i = 0; i < m; ++i)
        coeffs.emplace_back(assign[p] * m + i, st.points[p].gvals[size_t(i)]);
      coeffs.emplace_back(psi, -1.0);
      lp.add_row(std::move(coeffs), Relation::GreaterEq, 0.0);
    }
    for (int k = 0; k < K; ++k) {
      std::vector<std::pair<int, double>> coeffs;
      for (int i = 0; i < m; ++i) coeffs.emplace_back(k * m + i, 1.0);
      lp.add_row(std::move(coeffs), Relation::LessEq, 1.0);
    }
    LpSolution sol = solve_lp(lp);
    if (sol.status == LpStatus::Optimal) best = std::max(best, sol.objective);

    size_t p = 0;
    while (p < npts && ++assign[p] == K) assign[p++] = 0;
    if (p == npts) break;
  }
  return best;
}

}  // namespace

TEST_CASE("master LP vertex cases") {
  Model md = dummy_model(2);

  SUBCASE("single violated point concentrates the multiplier") {
    MasterState st = state_from_gvals(1, {{2.0, -1.0}});
    MasterLpResult res = solve_master_lp(st, md);
    CHECK(res.psi == doctest::Approx(2.0));
    CHECK(res.lambda[0] == doctest::Approx(1.0));
    CHECK(res.lambda[1] == doctest::Approx(0.0));
  }
  SUBCASE("a feasible point forces psi to zero") {
    MasterState st = state_from_gvals(1, {{-0.5, -0.25}});
    MasterLpResult res = solve_master_lp(st, md);
    CHECK(res.psi == doctest::Approx(0.0));
  }
  SUBCASE("two opposed points cancel") {
    MasterState st = state_from_gvals(1, {{1.0, -1.0}, {-1.0, 1.0}});
    MasterLpResult res = solve_master_lp(st, md);
    CHECK(res.psi == doctest::Approx(0.0).epsilon(1e-9));
  }
}

TEST_CASE("master MILP structure for one point, K=2, m=2") {
  Model md = dummy_model(2);
  BendersConfig cfg;
  cfg.K = 2;
  MasterState st = state_from_gvals(2, {{1.5, -0.5}});
  MasterMilp mm = build_master_milp(st, md, cfg);
  CHECK(mm.n_bigm_rows == 2);
  CHECK(mm.n_assign_rows == 1);
  CHECK(mm.z_cols.size() == 1);
  CHECK(mm.z_cols[0].size() == 2);
  CHECK(mm.n_norm_rows == 2);
  int binaries = 0;
  for (char f : mm.prob.integer_flags) binaries += f;
  CHECK(binaries == 2);
  // objective is the single psi column
  for (int j = 0; j < mm.prob.lp.num_vars(); ++j)
    CHECK(mm.prob.lp.objective[size_t(j)] == (j == mm.psi_col ? 1.0 : 0.0));
}

TEST_CASE("first-component symmetry rows for K=3") {
  Model md = dummy_model(2);
  BendersConfig cfg;
  cfg.K = 3;
  cfg.symmetry = SymmetryMode::FirstComponent;
  MasterState st = state_from_gvals(3, {{1.0, -1.0}});
  MasterMilp mm = build_master_milp(st, md, cfg);
  CHECK(mm.n_symmetry_rows == 2);  // l1_1 >= l2_1 >= l3_1

  cfg.symmetry = SymmetryMode::Diagonal;
  MasterMilp dm = build_master_milp(st, md, cfg);
  CHECK(dm.n_symmetry_rows == 3);  // l1_1>=l2_1, l1_1>=l3_1, l2_2>=l3_2

  cfg.symmetry = SymmetryMode::None;
  CHECK(build_master_milp(st, md, cfg).n_symmetry_rows == 0);
}

TEST_CASE("stabilization formula around an improving multiplier") {
  AggregationMatrix lam = AggregationMatrix::zero(1, 2);
  lam.at(0, 0) = 0.05;
  lam.at(0, 1) = 0.5;
  Stabilization stab = make_stabilization(lam, 0.1);
  REQUIRE(stab.trust_box.has_value());
  CHECK((*stab.trust_box)[0].lo == doctest::Approx(0.0));
  CHECK((*stab.trust_box)[0].hi == doctest::Approx(0.15));
  CHECK((*stab.trust_box)[1].lo == doctest::Approx(0.4));
  CHECK((*stab.trust_box)[1].hi == doctest::Approx(0.6));
  REQUIRE(stab.support_fix.has_value());
  CHECK((*stab.support_fix)[0] == 0);
  CHECK((*stab.support_fix)[1] == 0);

  AggregationMatrix sparse = AggregationMatrix::zero(1, 2);
  sparse.at(0, 1) = 0.95;
  Stabilization s2 = make_stabilization(sparse, 0.1);
  CHECK((*s2.support_fix)[0] == 1);  // zero entry stays fixed at zero
  CHECK((*s2.trust_box)[1].hi == doctest::Approx(1.0));
}

TEST_CASE("trust box and support fixing shape the lambda bounds") {
  Model md = dummy_model(2);
  BendersConfig cfg;
  cfg.K = 2;
  MasterState st = state_from_gvals(2, {{1.0, -1.0}});
  st.stabilization.trust_box = std::vector<Interval>{
      {0.0, 0.15}, {0.4, 0.6}, {0.0, 0.15}, {0.4, 0.6}};
  MasterMilp mm = build_master_milp(st, md, cfg);
  CHECK(mm.prob.lp.lower[size_t(mm.lambda_cols[0])] == doctest::Approx(0.0));
  CHECK(mm.prob.lp.upper[size_t(mm.lambda_cols[0])] == doctest::Approx(0.15));
  CHECK(mm.prob.lp.lower[size_t(mm.lambda_cols[1])] == doctest::Approx(0.4));
  CHECK(mm.prob.lp.upper[size_t(mm.lambda_cols[1])] == doctest::Approx(0.6));

  st.stabilization.support_fix = std::vector<char>{1, 0, 0, 0};
  MasterMilp fixed = build_master_milp(st, md, cfg);
  CHECK(fixed.prob.lp.upper[size_t(fixed.lambda_cols[0])] == 0.0);
}

TEST_CASE("big-M master equals the disjunctive enumeration oracle") {
  std::mt19937 rng(31337);
  BendersConfig cfg;
  cfg.K = 2;
  for (int trial = 0; trial < 50; ++trial) {
    const int m = testsup::rnd_int(rng, 1, 3);
    const int npts = testsup::rnd_int(rng, 1, 5);
    std::vector<std::vector<double>> gvals;
    for (int p = 0; p < npts; ++p) {
      std::vector<double> g;
      for (int i = 0; i < m; ++i) g.push_back(testsup::rnd(rng, -2.0, 2.0));
      gvals.push_back(std::move(g));
    }
    MasterState st = state_from_gvals(2, gvals);
    Model md = dummy_model(m);
    MasterMilp mm = build_master_milp(st, md, cfg);
    MipSolution sol = solve_mip(mm.prob);
    REQUIRE(sol.status == MipStatus::Optimal);
    const double oracle = disjunctive_oracle(st, 2);
    CHECK(sol.objective == doctest::Approx(oracle).epsilon(1e-6).scale(1.0));
  }
}

TEST_CASE("example 2: K-surrogate values and non-quasi-concavity") {
  Model m = testsup::example2();
  AggregationMatrix lam = AggregationMatrix::zero(2, 2);
  lam.at(0, 0) = 0.7;
  lam.at(0, 1) = 0.3;
  lam.at(1, 0) = 0.3;
  lam.at(1, 1) = 0.7;
  AggregationMatrix mu = AggregationMatrix::zero(2, 2);
  mu.at(0, 0) = 0.3;
  mu.at(0, 1) = 0.7;
  mu.at(1, 0) = 0.7;
  mu.at(1, 1) = 0.3;
  AggregationMatrix mid = AggregationMatrix::zero(2, 2);
  for (int k = 0; k < 2; ++k)
    for (int i = 0; i < 2; ++i) mid.at(k, i) = 0.5 * (lam.at(k, i) + mu.at(k, i));

  SolveLimits limits;
  const double f_lam = evaluate_K_surrogate(m, lam, limits);
  const double f_mu = evaluate_K_surrogate(m, mu, limits);
  const double f_mid = evaluate_K_surrogate(m, mid, limits);
  CHECK(f_lam == doctest::Approx(0.30).epsilon(0.04));
  CHECK(f_mu == doctest::Approx(f_lam).epsilon(1e-6));
  CHECK(f_mid == doctest::Approx(0.19).epsilon(0.06));
  CHECK(f_lam > f_mid + 0.05);  // strictly not quasi-concave
  CHECK(f_mu > f_mid + 0.05);

  // zero aggregation falls back to S(0)
  const double f0 = evaluate_K_surrogate(m, AggregationMatrix::zero(2, 2), limits);
  CHECK(f0 == doctest::Approx(0.0));  // min y over the box alone
}

TEST_CASE("per-row scaling does not change the K-surrogate value") {
  Model m = testsup::example2();
  AggregationMatrix lam = AggregationMatrix::zero(2, 2);
  lam.at(0, 0) = 0.7;
  lam.at(0, 1) = 0.3;
  lam.at(1, 0) = 0.3;
  lam.at(1, 1) = 0.7;
  AggregationMatrix scaled = lam;
  for (int i = 0; i < 2; ++i) scaled.at(0, i) *= 0.35;
  for (int i = 0; i < 2; ++i) scaled.at(1, i) *= 1.6;
  SolveLimits limits;
  CHECK(evaluate_K_surrogate(m, lam, limits) ==
        doctest::Approx(evaluate_K_surrogate(m, scaled, limits)).epsilon(1e-4));
}

TEST_CASE("benders on example 1 reaches the surrogate dual") {
  Model m = testsup::example1();
  BendersConfig cfg;
  cfg.K = 1;
  cfg.epsilon = 1e-6;
  BendersReport rep = run_benders(m, cfg);
  CHECK(rep.best_bound == doctest::Approx(-0.38).epsilon(0.03));
  CHECK(rep.iterations.size() <= 50);
  CHECK(rep.error.empty());

  // D never decreases along the run
  double prev = -1e300;
  for (const IterationRecord& it : rep.iterations) {
    CHECK(it.best_bound >= prev - 1e-12);
    prev = it.best_bound;
  }
}

TEST_CASE("immediately feasible first point terminates with psi 0") {
  // g = x^2 - 2 <= 0 never binds on [0,1], so S(0)'s point is optimal
  Model m;
  m.n = 1;
  m.objective = {1.0};
  m.boxes = {{0.0, 1.0}};
  m.integer_flags = {0};
  m.nonlinear.push_back(testsup::poly({{testsup::mono({{0, 2}}), 1.0}, {Monomial{}, -2.0}}));
  BendersConfig cfg;
  cfg.K = 1;
  BendersReport rep = run_benders(m, cfg);
  CHECK(rep.reason == TerminationReason::PsiBelowEpsilon);
  CHECK(rep.best_bound == doctest::Approx(0.0));
  CHECK(rep.iterations.size() <= 2);
  CHECK(rep.iterations.back().psi_dual == doctest::Approx(0.0));
}

TEST_CASE("exact masters: psi non-increasing, cuts stay violated") {
  Model m = testsup::example1();
  BendersConfig cfg;
  cfg.K = 2;
  cfg.alpha = 1.0;        // exact master solves
  cfg.stabilize = false;  // psi monotonicity is a property of unrestricted masters
  cfg.max_iterations = 12;
  BendersReport rep = run_benders(m, cfg);
  REQUIRE(rep.iterations.size() >= 3);
  double prev_psi = 1e300;
  double prev_d = -1e300;
  for (const IterationRecord& it : rep.iterations) {
    CHECK(it.psi_dual <= prev_psi + 1e-7);
    CHECK(it.best_bound >= prev_d - 1e-12);
    prev_psi = it.psi_dual;
    prev_d = it.best_bound;
  }

  // cut validity: the lambda produced at the end of iteration t violates
  // every point collected so far by at least that master's psi
  for (size_t t = 1; t < rep.iterations.size(); ++t) {
    const double psi = rep.iterations[t - 1].psi_dual;
    if (psi < cfg.epsilon) break;
    const AggregationMatrix& lam = rep.iterations[t].lambda;
    for (size_t s = 0; s < t; ++s) {
      const IterationRecord& past = rep.iterations[s];
      if (!past.sub_has_point) continue;
      double viol = -1e300;
      for (int k = 0; k < lam.K; ++k) {
        double act = 0.0;
        for (int i = 0; i < m.num_nonlinear(); ++i)
          act += lam.at(k, i) * m.nonlinear[size_t(i)].evaluate(past.sub_point);
        viol = std::max(viol, act);
      }
      CHECK(viol >= psi - 1e-6);
    }
  }
}

TEST_CASE("warm-started runs are monotone in K") {
  Model m = testsup::example1();
  SolveLimits sub;
  BendersConfig cfg1;
  cfg1.K = 1;
  cfg1.max_iterations = 40;
  BendersReport r1 = run_benders(m, cfg1);

  BendersConfig cfg2 = cfg1;
  cfg2.K = 2;
  cfg2.max_iterations = 25;
  BendersReport r2 = run_benders(m, cfg2, r1.best_lambda.padded());
  CHECK(r2.best_bound >= r1.best_bound - 1e-6);

  BendersConfig cfg3 = cfg2;
  cfg3.K = 3;
  cfg3.max_iterations = 12;
  BendersReport r3 = run_benders(m, cfg3, r2.best_lambda.padded());
  CHECK(r3.best_bound >= r2.best_bound - 1e-6);
}

TEST_CASE("warm-started chain cracks the boxed cubic instance") {
  // single aggregations stay weak here; by K=3 the chain proves the origin
  Model m = testsup::example3_boxed();
  std::optional<AggregationMatrix> warm;
  double prev = -1e300;
  double final_bound = -1e300;
  for (int K = 1; K <= 3; ++K) {
    BendersConfig cfg;
    cfg.K = K;
    cfg.max_iterations = 15;
    BendersReport rep = run_benders(m, cfg, warm);
    CHECK(rep.best_bound >= prev - 1e-6);
    prev = rep.best_bound;
    final_bound = rep.best_bound;
    warm = rep.best_lambda.padded();
  }
  CHECK(final_bound >= -0.05);
  CHECK(final_bound <= 1e-6);  // never above the true optimum 0
}

TEST_CASE("report trace replays against the sub-solver") {
  Model m = testsup::example1();
  BendersConfig cfg;
  cfg.K = 1;
  cfg.max_iterations = 8;
  BendersReport rep = run_benders(m, cfg);
  auto reform = shared_reformulation(m);
  for (const IterationRecord& it : rep.iterations) {
    SolveLimits limits = cfg.sub_limits;
    limits.early_stop_at = it.early_stop;
    SubSolveOutcome redo = solve_subproblem(make_subproblem(m, it.lambda, reform), limits);
    CHECK(redo.status == it.sub_status);
    CHECK(redo.dual_bound == doctest::Approx(it.sub_bound).epsilon(1e-9));
  }
}

TEST_CASE("master state deduplicates nearby points") {
  MasterState st;
  CHECK(st.add_point({0.5, 0.5}, {1.0, -1.0}));
  CHECK(!st.add_point({0.5, 0.5 + 5e-10}, {1.0, -1.0}));
  CHECK(st.add_point({0.5, 0.6}, {1.0, -1.0}));
  CHECK(st.points.size() == 2);
}

TEST_CASE("target bound returns immediately once reached") {
  Model m = testsup::example1();
  BendersConfig cfg;
  cfg.K = 1;
  cfg.target_bound = -0.99;  // S(0) already proves -1 >= target? no: -1 < -0.99
  // S(0) = -1 misses the target; the first aggregated bound should pass it
  BendersReport rep = run_benders(m, cfg);
  CHECK(rep.reason == TerminationReason::TargetReached);
  CHECK(rep.best_bound >= -0.99 - 1e-12);
}
