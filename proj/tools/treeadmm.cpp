#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "treeadmm/admm_central.hpp"
#include "treeadmm/admm_distributed.hpp"
#include "treeadmm/experiment.hpp"
#include "treeadmm/format.hpp"
#include "treeadmm/model_mcf.hpp"
#include "treeadmm/oracle.hpp"
#include "treeadmm/projection.hpp"
#include "treeadmm/rng.hpp"

namespace fs = std::filesystem;
using namespace treeadmm;

namespace {

struct InstanceArgs {
  std::string path;
  int n = 10;
  double p = 0.5;
  std::uint64_t seed = 0;
  int hop_slack = 2;
  int commodities = 0;
  double cost_scale = 10.0;

  void attach(CLI::App* app) {
    app->add_option("--instance", path, "Instance file (overrides generation)");
    app->add_option("--n", n, "Node count")->check(CLI::Range(2, 1000));
    app->add_option("--p", p, "Edge probability")->check(CLI::Range(0.0, 1.0));
    app->add_option("--seed", seed, "Generator seed");
    app->add_option("--hop-slack", hop_slack, "Hop bound slack over the largest commodity distance");
    app->add_option("--commodities", commodities, "Commodity count (default floor(n/5), at least 1)");
    app->add_option("--cost-scale", cost_scale, "Edge costs are drawn from (0, cost-scale]");
  }

  ParsedInstance load() const {
    if (!path.empty()) return {load_instance(path), std::nullopt};
    InstanceOptions opts;
    opts.n = n;
    opts.p = p;
    opts.seed = seed;
    opts.hop_slack = hop_slack;
    opts.commodities = commodities;
    opts.cost_scale = cost_scale;
    int attempts = 0;
    Instance inst = generate_instance(opts, &attempts);
    std::clog << "generated G(" << n << ", " << format_double(p) << ") seed " << seed << ": " << inst.edge_count()
              << " edges after " << attempts << " draw(s), hop bound " << inst.hop_bound() << '\n';
    return {std::move(inst), std::nullopt};
  }
};

struct BudgetArgs {
  EnumerationBudget budget{};

  void attach(CLI::App* app) {
    app->add_option("--budget-edges", budget.max_edges, "Oracle edge cap");
    app->add_option("--budget-trees", budget.max_trees, "Oracle spanning-tree cap");
  }
};

struct SolveArgs {
  InstanceArgs instance;
  BudgetArgs budget;
  double rho = 1.0;
  double tol = 1e-4;
  int max_iters = 500;
  std::string out;
  bool oracle = false;
  bool wall_time = false;
  bool trace_per_agent = false;
  int threads = 1;
};

void attach_solve(CLI::App* app, SolveArgs& a, bool distributed) {
  a.instance.attach(app);
  a.budget.attach(app);
  app->add_option("--rho", a.rho, "Penalty parameter")->check(CLI::PositiveNumber);
  app->add_option("--tol", a.tol, "Stopping tolerance on the residual")->check(CLI::PositiveNumber);
  app->add_option("--max-iters", a.max_iters, "Iteration cap")->check(CLI::NonNegativeNumber);
  app->add_option("--out", a.out, "Output directory for summary, trace and solution");
  app->add_flag("--oracle", a.oracle, "Compute the exact optimum and the gap");
  app->add_flag("--wall-time", a.wall_time, "Record wall time in the summary");
  if (distributed) {
    app->add_flag("--trace-per-agent", a.trace_per_agent, "One trace row per agent and round");
    app->add_option("--threads", a.threads, "Worker threads per phase")->check(CLI::PositiveNumber);
  }
}

std::ofstream open_output(const std::string& path) {
  const fs::path p(path);
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream out(p);
  if (!out) throw std::runtime_error("cannot write " + path);
  return out;
}

std::vector<double> parse_list(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(std::stod(item));
  return out;
}

int run_solve(const SolveArgs& a, SolveMode mode) {
  const auto parsed = a.instance.load();
  const Instance& inst = parsed.instance;
  SolverConfig cfg = make_solver_config(a.rho, a.tol, a.max_iters, a.instance.seed);
  cfg.trace_per_agent = a.trace_per_agent;
  cfg.threads = a.threads;
  std::clog << describe_subproblem(inst, relaxed_constraint_set(inst)) << '\n';
  SolveReport report = mode == SolveMode::Central ? solve_central(inst, cfg) : solve_distributed(inst, cfg);
  if (report.tree_failures > 0)
    std::clog << "warning: " << report.tree_failures << " iterate(s) failed the spanning-tree check\n";
  if (report.degraded_qp_solves > 0)
    std::clog << "note: " << report.degraded_qp_solves << " QP solve(s) accepted at max-iters\n";
  if (!report.feasible) std::clog << "no feasible extraction: final tree violates the hop bound\n";

  SummaryRow row;
  row.n = inst.node_count();
  row.m = inst.edge_count();
  row.seed = a.instance.seed;
  row.rho = a.rho;
  row.mode = to_string(mode);
  row.iters = report.iterations;
  row.objective = report.objective;
  row.feasible = report.feasible;
  row.status = report.status;
  if (a.wall_time) row.wall_ms = report.wall_ms;
  if (a.oracle) {
    try {
      const auto exact = exact_solve(inst, a.budget.budget);
      if (exact.feasible) {
        row.oracle_obj = exact.objective;
        if (report.feasible) row.gap_pct = compute_gap(report.objective, exact.objective);
      } else {
        row.status = "oracle-infeasible";
      }
    } catch (const BudgetExceeded& e) {
      std::clog << "oracle skipped: " << e.what() << '\n';
      row.status = "oracle-skipped";
    }
  }
  if (!a.out.empty()) {
    const fs::path dir(a.out);
    fs::create_directories(dir / "traces");
    const auto name = trace_file_name(row.n, row.seed, row.rho, mode);
    std::ofstream trace(dir / "traces" / name);
    write_trace(trace, report);
    row.trace_path = "traces/" + name;
    std::ofstream summary(dir / "summary.csv");
    write_summary(summary, {row});
    std::ofstream solution(dir / "solution.txt");
    write_instance(solution, inst, &report.tree);
  }
  write_summary(std::cout, {row});
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"ADMM heuristics for hop-constrained spanning tree design"};
  app.require_subcommand(1);

  InstanceArgs gen_args;
  std::string gen_out;
  auto* gen = app.add_subcommand("gen", "Generate a random instance");
  gen_args.attach(gen);
  gen->add_option("--out", gen_out, "Output file (default stdout)");

  SolveArgs central_args;
  auto* central = app.add_subcommand("solve-central", "Run the centralized solver");
  attach_solve(central, central_args, false);

  SolveArgs dist_args;
  auto* dist = app.add_subcommand("solve-dist", "Run the distributed solver");
  attach_solve(dist, dist_args, true);

  InstanceArgs oracle_args;
  BudgetArgs oracle_budget;
  std::string oracle_out;
  auto* oracle = app.add_subcommand("oracle", "Exact optimum by spanning-tree enumeration");
  oracle_args.attach(oracle);
  oracle_budget.attach(oracle);
  oracle->add_option("--out", oracle_out, "Output file for the instance with its optimal tree (default stdout)");

  InstanceArgs project_args;
  BudgetArgs project_budget;
  std::string project_w, project_mu;
  std::uint64_t project_draw = 0;
  bool project_random = false, project_exact = false;
  int project_root = -1;
  auto* project = app.add_subcommand("project", "Project (w, mu) onto spanning trees or arborescences");
  project_args.attach(project);
  project_budget.attach(project);
  project->add_option("--w", project_w, "Comma-separated w (one entry per edge, or per arc with --root)");
  project->add_option("--mu", project_mu, "Comma-separated mu (default zero)");
  project->add_flag("--random", project_random, "Draw w ~ U[0,1] and mu ~ U[-1,1]");
  project->add_option("--draw-seed", project_draw, "Seed for --random");
  project->add_option("--root", project_root, "Project onto arborescences of the bidirected graph rooted here");
  project->add_flag("--exact", project_exact, "Also report the brute-force minimum (undirected only)");

  SweepSpec sweep_spec;
  std::vector<int> sweep_sizes{10};
  int sweep_seed_count = 0;
  std::vector<std::uint64_t> sweep_seed_list;
  std::vector<double> sweep_rhos{0.1, 1.0, 10.0};
  std::string sweep_modes = "central";
  std::string sweep_oracle = "on";
  std::string sweep_out;
  auto* sweep = app.add_subcommand("sweep", "Grid over sizes, seeds, rho and modes");
  sweep->add_option("--n", sweep_sizes, "Node counts")->delimiter(',');
  sweep->add_option("--seeds", sweep_seed_count, "Use seeds 0..S-1");
  sweep->add_option("--seed-list", sweep_seed_list, "Explicit seeds")->delimiter(',');
  sweep->add_option("--rho", sweep_rhos, "Penalty values")->delimiter(',');
  sweep->add_option("--modes", sweep_modes, "central, distributed or both")
      ->check(CLI::IsMember({"central", "distributed", "both"}));
  sweep->add_option("--oracle", sweep_oracle, "on or off")->check(CLI::IsMember({"on", "off"}));
  sweep->add_option("--p", sweep_spec.p, "Edge probability");
  sweep->add_option("--hop-slack", sweep_spec.hop_slack, "Hop bound slack");
  sweep->add_option("--commodities", sweep_spec.commodities, "Commodity count (default floor(n/5))");
  sweep->add_option("--cost-scale", sweep_spec.cost_scale, "Edge costs are drawn from (0, cost-scale]");
  sweep->add_option("--tol", sweep_spec.tol, "Stopping tolerance");
  sweep->add_option("--max-iters", sweep_spec.max_iters, "Iteration cap");
  sweep->add_option("--budget-edges", sweep_spec.budget.max_edges, "Oracle edge cap");
  sweep->add_option("--budget-trees", sweep_spec.budget.max_trees, "Oracle spanning-tree cap");
  sweep->add_option("--jobs", sweep_spec.jobs, "Cells run concurrently")->check(CLI::PositiveNumber);
  sweep->add_flag("--trace-per-agent", sweep_spec.trace_per_agent, "Per-agent rows in distributed traces");
  sweep->add_flag("--wall-time", sweep_spec.wall_time, "Record wall time in the summary");
  sweep->add_option("--out", sweep_out, "Output directory")->required();

  InstanceArgs dump_args;
  double dump_rho = 1.0;
  auto* dump = app.add_subcommand("dump-qp", "Print the first centralized subproblem");
  dump_args.attach(dump);
  dump->add_option("--rho", dump_rho, "Penalty parameter")->check(CLI::PositiveNumber);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*gen) {
      const auto parsed = gen_args.load();
      if (gen_out.empty()) {
        write_instance(std::cout, parsed.instance);
      } else {
        auto out = open_output(gen_out);
        write_instance(out, parsed.instance);
      }
      return 0;
    }
    if (*central) return run_solve(central_args, SolveMode::Central);
    if (*dist) return run_solve(dist_args, SolveMode::Distributed);

    if (*oracle) {
      const auto parsed = oracle_args.load();
      const auto exact = exact_solve(parsed.instance, oracle_budget.budget);
      std::ostringstream text;
      if (exact.feasible) text << "# optimum " << format_double(exact.objective) << '\n';
      else text << "# infeasible\n";
      text << "# trees_examined " << exact.trees_examined << '\n';
      write_instance(text, parsed.instance, exact.feasible ? &exact.tree : nullptr);
      if (oracle_out.empty()) {
        std::cout << text.str();
      } else {
        auto out = open_output(oracle_out);
        out << text.str();
        std::cout << (exact.feasible ? "optimum " + format_double(exact.objective) : std::string("infeasible"))
                  << '\n';
      }
      return exact.feasible ? 0 : 2;
    }

    if (*project) {
      const auto parsed = project_args.load();
      const Instance& inst = parsed.instance;
      const bool rooted = project_root >= 0;
      const auto len = static_cast<std::size_t>(rooted ? inst.arc_count() : inst.edge_count());
      std::vector<double> w, mu;
      if (project_random) {
        Rng rng(project_draw);
        for (std::size_t k = 0; k < len; ++k) w.push_back(rng.uniform());
        for (std::size_t k = 0; k < len; ++k) mu.push_back(rng.uniform(-1.0, 1.0));
      } else {
        w = project_w.empty() ? std::vector<double>(len, 1.0) : parse_list(project_w);
        mu = project_mu.empty() ? std::vector<double>(len, 0.0) : parse_list(project_mu);
      }
      if (w.size() != len || mu.size() != len)
        throw std::invalid_argument("--w and --mu need " + std::to_string(len) + " entries");
      const TreeTopology topo =
          rooted ? TreeTopology(RootedArcs{&inst.arcs(), project_root}) : TreeTopology(&inst.graph());
      const auto z = project_tree(w, mu, topo);
      double d2 = 0.0;
      for (std::size_t k = 0; k < len; ++k) {
        const double r = (z[k] ? 1.0 : 0.0) - w[k] + mu[k];
        d2 += r * r;
      }
      std::cout << 'h';
      for (double v : projection_weights(w, mu)) std::cout << ' ' << format_double(v);
      std::cout << '\n' << (rooted ? "arcs" : "edges");
      for (int e : z.selected()) std::cout << ' ' << e;
      std::cout << "\ndistance_sq " << format_double(d2) << '\n';
      if (project_exact && !rooted) {
        const auto ex = exact_project(w, mu, inst.graph(), project_budget.budget);
        std::cout << "exact_distance_sq " << format_double(ex.distance_sq) << '\n';
      }
      return 0;
    }

    if (*sweep) {
      sweep_spec.sizes = sweep_sizes;
      if (!sweep_seed_list.empty()) {
        sweep_spec.seeds = sweep_seed_list;
      } else {
        sweep_spec.seeds.clear();
        for (int s = 0; s < std::max(1, sweep_seed_count); ++s) sweep_spec.seeds.push_back(static_cast<std::uint64_t>(s));
      }
      sweep_spec.rhos = sweep_rhos;
      sweep_spec.modes.clear();
      if (sweep_modes != "distributed") sweep_spec.modes.push_back(SolveMode::Central);
      if (sweep_modes != "central") sweep_spec.modes.push_back(SolveMode::Distributed);
      sweep_spec.oracle = sweep_oracle == "on";
      sweep_spec.out_dir = sweep_out;
      const auto rows = run_sweep(sweep_spec);
      std::ofstream summary(fs::path(sweep_out) / "summary.csv");
      write_summary(summary, rows);
      write_summary(std::cout, rows);
      const std::size_t expected =
          sweep_spec.sizes.size() * sweep_spec.seeds.size() * sweep_spec.rhos.size() * sweep_spec.modes.size();
      return rows.size() == expected && summary ? 0 : 1;
    }

    if (*dump) {
      const auto parsed = dump_args.load();
      SolverConfig cfg;
      cfg.rho = dump_rho;
      const auto state = init_state(parsed.instance, cfg);
      const auto qp =
          build_centralized_subproblem(parsed.instance, state.z, state.y, state.mu, state.eta, cfg.rho);
      std::cout << "# " << describe_subproblem(parsed.instance, qp) << '\n';
      dump_qp(qp, std::cout);
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
