// Command-line runner for the surrogate-dual solver: rootgap-style Benders
// runs, single-aggregation evaluation, and the tree-search reuse demo.

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <deque>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include "sdual/metrics.hpp"
#include "sdual/minlp.hpp"
#include "sdual/model.hpp"
#include "sdual/surrogate.hpp"
#include "sdual/tree.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace sdual;

namespace {

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.12g", v);
  return buf;
}

struct CommonOpts {
  std::string instance;
  std::string out_dir = ".";
  int k = 1;
  double epsilon = 1e-6;
  double alpha = 0.2;
  int stall_limit = 20;
  double trust_radius = 0.1;
  std::string symmetry = "first";
  double target_bound_flag = std::numeric_limits<double>::quiet_NaN();
  double time_limit = 1e18;
  long node_limit = 500000;
  long iterations = 1000;
  double gap_limit = 1e-4;
  bool no_stabilize = false;
  long seed = 0;
};

void add_common(CLI::App* cmd, CommonOpts& o, bool with_k = true) {
  cmd->add_option("--instance", o.instance, "instance JSON file")->required();
  cmd->add_option("--out", o.out_dir, "output directory");
  if (with_k) cmd->add_option("--k", o.k, "number of aggregations");
  cmd->add_option("--epsilon", o.epsilon, "termination threshold on psi");
  cmd->add_option("--alpha", o.alpha, "master early-stop factor in (0,1]");
  cmd->add_option("--stall-limit", o.stall_limit, "iterations before stabilization resets");
  cmd->add_option("--trust-radius", o.trust_radius, "trust box half width");
  cmd->add_option("--symmetry", o.symmetry, "symmetry rows: none, first, diag");
  cmd->add_option("--target-bound", o.target_bound_flag, "stop once the dual bound reaches this");
  cmd->add_option("--time-limit", o.time_limit, "wall clock limit in seconds");
  cmd->add_option("--node-limit", o.node_limit, "node limit per sub-problem solve");
  cmd->add_option("--iterations", o.iterations, "iteration limit for the Benders loop");
  cmd->add_option("--gap-limit", o.gap_limit, "relative gap limit per sub-problem");
  cmd->add_flag("--no-stabilize", o.no_stabilize, "disable support and trust-region stabilization");
  cmd->add_option("--seed", o.seed, "seed echoed into the summary (no stochastic core)");
}

Model load_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ModelError("/", "cannot open instance file '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_model(buf.str());
}

BendersConfig to_config(const CommonOpts& o) {
  BendersConfig cfg;
  cfg.K = o.k;
  cfg.epsilon = o.epsilon;
  cfg.alpha = o.alpha;
  cfg.stall_limit = o.stall_limit;
  cfg.trust_radius = o.trust_radius;
  cfg.max_iterations = o.iterations;
  cfg.time_limit = o.time_limit;
  cfg.stabilize = !o.no_stabilize;
  cfg.sub_limits.node_limit = o.node_limit;
  cfg.sub_limits.gap_limit = o.gap_limit;
  if (!std::isnan(o.target_bound_flag)) cfg.target_bound = o.target_bound_flag;
  if (o.symmetry == "none")
    cfg.symmetry = SymmetryMode::None;
  else if (o.symmetry == "first")
    cfg.symmetry = SymmetryMode::FirstComponent;
  else if (o.symmetry == "diag")
    cfg.symmetry = SymmetryMode::Diagonal;
  else
    throw CLI::ValidationError("--symmetry", "expected none, first, or diag");
  return cfg;
}

void write_trace_csv(const fs::path& path, const BendersReport& rep, int K, int m) {
  std::ofstream out(path, std::ios::binary);
  out << "iteration,psi_primal,psi_dual,sub_status,sub_bound,best_bound,early_stop";
  for (int k = 0; k < K; ++k)
    for (int i = 0; i < m; ++i) out << ",lambda_" << (k + 1) << "_" << (i + 1);
  out << "\n";
  for (const IterationRecord& it : rep.iterations) {
    out << it.iteration << ',' << fmt(it.psi_primal) << ',' << fmt(it.psi_dual) << ','
        << to_string(it.sub_status) << ',' << fmt(it.sub_bound) << ',' << fmt(it.best_bound)
        << ',' << (it.early_stop ? fmt(*it.early_stop) : std::string("none"));
    for (double v : it.lambda.entries) out << ',' << fmt(v);
    out << "\n";
  }
}

json lambda_to_json(const AggregationMatrix& lam) {
  json rows = json::array();
  for (int k = 0; k < lam.K; ++k) {
    json row = json::array();
    for (int i = 0; i < lam.m; ++i) row.push_back(lam.at(k, i));
    rows.push_back(row);
  }
  return rows;
}

json report_to_json(const BendersReport& rep) {
  json j;
  j["best_bound"] = rep.best_bound;
  j["termination"] = to_string(rep.reason);
  j["iterations"] = rep.iterations.size();
  j["best_lambda"] = lambda_to_json(rep.best_lambda);
  j["wall_seconds"] = rep.wall_seconds;
  if (!rep.error.empty()) j["error"] = rep.error;
  return j;
}

void write_summary(const fs::path& path, const json& j) {
  std::ofstream out(path, std::ios::binary);
  out << j.dump(2) << "\n";
}

int cmd_solve_dual(const CommonOpts& o) {
  Model model = load_model(o.instance);
  BendersConfig cfg = to_config(o);
  BendersReport rep = run_benders(model, cfg);

  fs::create_directories(o.out_dir);
  write_trace_csv(fs::path(o.out_dir) / "trace.csv", rep, cfg.K, model.num_nonlinear());
  json summary;
  summary["command"] = "solve-dual";
  summary["instance"] = o.instance;
  summary["k"] = cfg.K;
  summary["seed"] = o.seed;
  summary["result"] = report_to_json(rep);
  write_summary(fs::path(o.out_dir) / "summary.json", summary);
  std::cout << "best_bound " << fmt(rep.best_bound) << " after " << rep.iterations.size()
            << " iterations (" << to_string(rep.reason) << ")\n";
  return 0;
}

int cmd_rootgap(const CommonOpts& o, int max_k, double primal) {
  Model model = load_model(o.instance);
  fs::create_directories(o.out_dir);

  json summary;
  summary["command"] = "rootgap";
  summary["instance"] = o.instance;
  summary["seed"] = o.seed;
  json per_k = json::array();

  std::optional<AggregationMatrix> warm;
  double milp_bound = std::numeric_limits<double>::quiet_NaN();
  double best = -std::numeric_limits<double>::infinity();
  for (int k = 1; k <= max_k; ++k) {
    CommonOpts ok = o;
    ok.k = k;
    BendersConfig cfg = to_config(ok);
    BendersReport rep = run_benders(model, cfg, warm);
    write_trace_csv(fs::path(o.out_dir) / ("trace_k" + std::to_string(k) + ".csv"), rep, k,
                    model.num_nonlinear());
    if (k == 1 && !rep.iterations.empty()) milp_bound = rep.iterations.front().sub_bound;

    json entry = report_to_json(rep);
    entry["k"] = k;
    if (!std::isnan(primal) && !std::isnan(milp_bound) && std::isfinite(rep.best_bound))
      entry["gap_closed_vs_milp"] = gap_closed(primal, rep.best_bound, milp_bound);
    per_k.push_back(entry);

    best = std::max(best, rep.best_bound);
    warm = rep.best_lambda.padded();
  }
  summary["milp_bound"] = milp_bound;
  summary["per_k"] = per_k;
  summary["best_bound"] = best;
  write_summary(fs::path(o.out_dir) / "summary.json", summary);
  std::cout << "rootgap best_bound " << fmt(best) << "\n";
  return 0;
}

int cmd_evaluate(const CommonOpts& o, const std::string& lambda_text) {
  Model model = load_model(o.instance);
  json lam_json;
  try {
    lam_json = json::parse(lambda_text);
  } catch (const json::exception& e) {
    throw ModelError("/lambda", std::string("invalid lambda JSON: ") + e.what());
  }
  if (!lam_json.is_array() || lam_json.empty())
    throw ModelError("/lambda", "expected a non-empty array");
  if (!lam_json[0].is_array()) lam_json = json::array({lam_json});  // flat row means K=1

  const int m = model.num_nonlinear();
  AggregationMatrix lam = AggregationMatrix::zero(static_cast<int>(lam_json.size()), m);
  for (size_t k = 0; k < lam_json.size(); ++k) {
    if (!lam_json[k].is_array() || static_cast<int>(lam_json[k].size()) != m)
      throw ModelError("/lambda/" + std::to_string(k), "row length must equal m");
    for (int i = 0; i < m; ++i) {
      const double v = lam_json[k][size_t(i)].get<double>();
      if (!(v >= 0.0)) throw ModelError("/lambda/" + std::to_string(k), "negative entry");
      lam.at(static_cast<int>(k), i) = v;
    }
  }

  SolveLimits limits;
  limits.node_limit = o.node_limit;
  limits.gap_limit = o.gap_limit;
  limits.time_limit = o.time_limit;
  SubProblem sp = make_subproblem(model, lam);
  SubSolveOutcome res = solve_subproblem(sp, limits);

  fs::create_directories(o.out_dir);
  json summary;
  summary["command"] = "evaluate";
  summary["instance"] = o.instance;
  summary["k"] = lam.K;
  summary["lambda"] = lambda_to_json(lam);
  summary["value"] = res.dual_bound;
  summary["status"] = to_string(res.status);
  summary["nodes"] = res.nodes;
  if (res.has_incumbent) {
    summary["point"] = res.incumbent;
    summary["point_value"] = res.incumbent_value;
  }
  write_summary(fs::path(o.out_dir) / "summary.json", summary);
  std::cout << "value " << fmt(res.dual_bound) << " (" << to_string(res.status) << ")\n";
  return 0;
}

int cmd_tree_demo(const CommonOpts& o, int pool_size, int depth, double primal) {
  Model model = load_model(o.instance);
  BendersConfig cfg = to_config(o);
  BendersReport rep = run_benders(model, cfg);
  const double milp_bound =
      rep.iterations.empty() ? -std::numeric_limits<double>::infinity()
                             : rep.iterations.front().sub_bound;
  AggregationPool pool = build_pool(rep, milp_bound, size_t(pool_size));

  double cutoff = std::numeric_limits<double>::infinity();
  if (!std::isnan(primal)) cutoff = primal;
  else if (model.primal_cutoff) cutoff = *model.primal_cutoff;

  SolveLimits limits;
  limits.node_limit = o.node_limit;
  limits.gap_limit = o.gap_limit;

  fs::create_directories(o.out_dir);
  std::ofstream nodes_csv(fs::path(o.out_dir) / "nodes.csv", std::ios::binary);
  nodes_csv << "node,depth,parent,candidates,bound,pruned\n";

  // breadth-first bisection on the widest variable, bounded depth
  struct DemoNode {
    long id;
    int depth;
    long parent;
    std::vector<Interval> boxes;
    std::vector<int> candidates;
  };
  std::deque<DemoNode> queue;
  DemoNode root{0, 0, -1, model.boxes, {}};
  for (int i = 0; i < static_cast<int>(pool.size()); ++i) root.candidates.push_back(i);
  queue.push_back(std::move(root));
  long next_id = 1;
  long improved_nodes = 0;
  long pruned_nodes = 0;
  long visited = 0;

  while (!queue.empty()) {
    DemoNode nd = std::move(queue.front());
    queue.pop_front();
    ++visited;

    NodeContext ctx{nd.id, nd.boxes, nd.candidates};
    LocalBoundResult res = local_bound(ctx, model, pool, limits);
    const bool pruned = res.bound > cutoff - 1e-9;
    if (res.improved) ++improved_nodes;
    if (pruned) ++pruned_nodes;

    nodes_csv << nd.id << ',' << nd.depth << ',' << nd.parent << ',' << res.candidates.size()
              << ',' << fmt(res.bound) << ',' << (pruned ? 1 : 0) << "\n";

    if (pruned || nd.depth >= depth) continue;

    int widest = 0;
    for (int j = 1; j < model.n; ++j)
      if (nd.boxes[size_t(j)].width() > nd.boxes[size_t(widest)].width()) widest = j;
    const double mid = nd.boxes[size_t(widest)].mid();
    DemoNode left{next_id++, nd.depth + 1, nd.id, nd.boxes, res.candidates};
    left.boxes[size_t(widest)].hi = mid;
    DemoNode right{next_id++, nd.depth + 1, nd.id, nd.boxes, res.candidates};
    right.boxes[size_t(widest)].lo = mid;
    queue.push_back(std::move(left));
    queue.push_back(std::move(right));
  }

  json summary;
  summary["command"] = "tree-demo";
  summary["instance"] = o.instance;
  summary["k"] = cfg.K;
  summary["pool_size"] = pool.size();
  summary["milp_bound"] = milp_bound;
  summary["root"] = report_to_json(rep);
  summary["nodes_visited"] = visited;
  summary["nodes_improved"] = improved_nodes;
  summary["nodes_pruned"] = pruned_nodes;
  write_summary(fs::path(o.out_dir) / "summary.json", summary);
  std::cout << "tree-demo visited " << visited << " nodes, improved " << improved_nodes
            << ", pruned " << pruned_nodes << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"surrogate dual bounds for polynomial MINLPs"};
  app.require_subcommand(1);

  CommonOpts solve_opts;
  CLI::App* solve = app.add_subcommand("solve-dual", "run the Benders loop for one K");
  add_common(solve, solve_opts);

  CommonOpts root_opts;
  int max_k = 3;
  double root_primal = std::numeric_limits<double>::quiet_NaN();
  CLI::App* rootgap = app.add_subcommand("rootgap", "run K=1..3 with warm-start chaining");
  add_common(rootgap, root_opts, /*with_k=*/false);
  rootgap->add_option("--max-k", max_k, "largest K to run");
  rootgap->add_option("--primal", root_primal, "primal reference for gap-closed reporting");

  CommonOpts eval_opts;
  std::string lambda_text;
  CLI::App* evaluate = app.add_subcommand("evaluate", "evaluate F^K at a fixed lambda");
  add_common(evaluate, eval_opts, /*with_k=*/false);
  evaluate->add_option("--lambda", lambda_text, "aggregation matrix as JSON rows")->required();

  CommonOpts tree_opts;
  int pool_size = 3;
  int depth = 3;
  double tree_primal = std::numeric_limits<double>::quiet_NaN();
  CLI::App* tree = app.add_subcommand("tree-demo", "reuse root aggregations down a demo tree");
  add_common(tree, tree_opts);
  tree->add_option("--pool", pool_size, "aggregation pool size cap");
  tree->add_option("--depth", depth, "demo tree depth");
  tree->add_option("--primal", tree_primal, "cutoff for marking pruned nodes");

  try {
    app.parse(argc, argv);
    if (*solve) return cmd_solve_dual(solve_opts);
    if (*rootgap) return cmd_rootgap(root_opts, max_k, root_primal);
    if (*evaluate) return cmd_evaluate(eval_opts, lambda_text);
    if (*tree) return cmd_tree_demo(tree_opts, pool_size, depth, tree_primal);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  } catch (const ModelError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
