#include "treeadmm/admm_distributed.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <exception>
#include <string>
#include <thread>

#include "treeadmm/projection.hpp"

namespace treeadmm {

namespace {

// Calls fn(i) for i in [0, count) on up to `threads` workers. Each call must
// only write its own slot. The first failure by index is rethrown.
void for_each_agent(int count, int threads, const std::function<void(int)>& fn) {
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(count));
  auto guarded = [&](int i) {
    try {
      fn(i);
    } catch (...) {
      errors[static_cast<std::size_t>(i)] = std::current_exception();
    }
  };
  const int workers = std::min(threads, count);
  if (workers <= 1) {
    for (int i = 0; i < count; ++i) guarded(i);
  } else {
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(workers));
    for (int t = 0; t < workers; ++t)
      pool.emplace_back([&, t] {
        for (int i = t; i < count; i += workers) guarded(i);
      });
    for (auto& th : pool) th.join();
  }
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);
}

double sq_diff(const std::vector<double>& a, const std::vector<double>& b) {
  const double d = l2_norm_diff(a, b);
  return d * d;
}

double pair_distance(const AgentState& a, const AgentState& b) {
  return l2_norm_diff(a.w, b.w) + l2_norm_diff(a.u, b.u);
}

// z from the projection of w_new against mu_old, y by rounding u_new - eta_old.
void finish_primal(const Instance& inst, const AgentState& own, const QpSolution& sol, AgentState& next) {
  const auto m = static_cast<std::size_t>(inst.edge_count());
  const auto fl = static_cast<std::size_t>(inst.flow_size());
  next.w.assign(sol.x.begin(), sol.x.begin() + static_cast<std::ptrdiff_t>(m));
  next.u.assign(sol.x.begin() + static_cast<std::ptrdiff_t>(m), sol.x.end());
  next.warm = sol.warm_start();
  next.qp_iterations = sol.iterations;
  next.qp_status = sol.status;
  next.z = project_tree(next.w, own.mu, &inst.graph());
  std::vector<double> shifted(fl);
  for (std::size_t k = 0; k < fl; ++k) shifted[k] = next.u[k] - own.eta[k];
  next.y = FlowAssignment(inst.arc_count(), inst.commodity_count());
  next.y.values = project_binary(shifted);
}

void local_dual_update(AgentState& a) {
  for (std::size_t e = 0; e < a.mu.size(); ++e) a.mu[e] += (a.z[e] ? 1.0 : 0.0) - a.w[e];
  for (std::size_t k = 0; k < a.eta.size(); ++k) a.eta[k] += a.y.values[k] - a.u[k];
}

AgentState initial_agent(const Instance& inst, const SolverConfig& cfg, Node id) {
  const CentralState c = init_state(inst, cfg);
  AgentState a;
  a.id = id;
  a.w = c.w;
  a.u = c.u;
  a.z = c.z;
  a.y = c.y;
  a.mu = c.mu;
  a.eta = c.eta;
  a.nu.assign(c.u.size(), 0.0);
  a.xi.assign(c.w.size(), 0.0);
  return a;
}

}  // namespace

World init_world(const Instance& inst, const SolverConfig& cfg) {
  World world;
  world.inst = &inst;
  const AgentState proto = initial_agent(inst, cfg, 0);
  for (Node i = 0; i < inst.node_count(); ++i) {
    world.agents.push_back(proto);
    world.agents.back().id = i;
  }
  return world;
}

std::vector<const AgentState*> neighbor_snapshots(const World& world, Node agent) {
  std::vector<const AgentState*> out;
  for (Node j : world.inst->graph().neighbors(agent)) out.push_back(&world.agents[static_cast<std::size_t>(j)]);
  return out;
}

AgentState agent_primal_update(const Instance& inst, Node agent, const AgentState& own,
                               std::span<const AgentState* const> neighbors, const SolverConfig& cfg) {
  const auto qp = build_agent_subproblem(inst, agent, own, neighbors, cfg.rho, cfg.consensus);
  const QpWarmStart* warm = own.warm.x.empty() ? nullptr : &own.warm;
  const std::string who = "agent " + std::to_string(agent) + " subproblem";
  const auto sol = solve_subproblem(qp, cfg, warm, who.c_str());
  AgentState next;
  next.id = agent;
  next.iteration = own.iteration + 1;
  next.mu = own.mu;
  next.eta = own.eta;
  next.nu = own.nu;
  next.xi = own.xi;
  finish_primal(inst, own, sol, next);
  return next;
}

void agent_dual_update(AgentState& fresh, std::span<const AgentState* const> fresh_neighbors,
                       const SolverConfig& cfg) {
  const double c = consensus_increment_coef(cfg.consensus);
  for (const AgentState* nb : fresh_neighbors) {
    for (std::size_t k = 0; k < fresh.nu.size(); ++k) fresh.nu[k] += c * (fresh.u[k] - nb->u[k]);
    for (std::size_t e = 0; e < fresh.xi.size(); ++e) fresh.xi[e] += c * (fresh.w[e] - nb->w[e]);
  }
  local_dual_update(fresh);
}

World sync_round(const World& world, const SolverConfig& cfg) {
  const Instance& inst = *world.inst;
  const int n = inst.node_count();
  World next;
  next.inst = world.inst;
  next.round = world.round + 1;
  next.agents.resize(static_cast<std::size_t>(n));

  for_each_agent(n, cfg.threads, [&](int i) {
    const auto nbs = neighbor_snapshots(world, i);
    next.agents[static_cast<std::size_t>(i)] =
        agent_primal_update(inst, i, world.agents[static_cast<std::size_t>(i)], nbs, cfg);
  });

  // Dual updates read the fresh primals of neighbours, which phase 2 never writes.
  std::vector<AgentState> duals = next.agents;
  for_each_agent(n, cfg.threads, [&](int i) {
    const auto nbs = neighbor_snapshots(next, i);
    agent_dual_update(duals[static_cast<std::size_t>(i)], nbs, cfg);
  });
  next.agents = std::move(duals);
  return next;
}

double residual_contribution(const AgentState& prev, const AgentState& curr, int agent_count) {
  const double dual = std::sqrt(sq_diff(curr.mu, prev.mu) + sq_diff(curr.nu, prev.nu) +
                                sq_diff(curr.xi, prev.xi) + sq_diff(curr.eta, prev.eta));
  const double primal = std::hypot(l2_norm_diff(curr.u, prev.u), l2_norm_diff(curr.w, prev.w));
  return (dual + primal) / agent_count;
}

double residual_distributed(const World& prev, const World& curr) {
  const int n = static_cast<int>(curr.agents.size());
  double total = 0.0;
  for (int i = 0; i < n; ++i)
    total += residual_contribution(prev.agents[static_cast<std::size_t>(i)], curr.agents[static_cast<std::size_t>(i)], n);
  return total;
}

double consensus_gap_of(const World& world, Node agent) {
  double worst = 0.0;
  const auto& a = world.agents[static_cast<std::size_t>(agent)];
  for (const auto& b : world.agents) worst = std::max(worst, pair_distance(a, b));
  return worst;
}

double consensus_gap(const World& world) {
  double worst = 0.0;
  for (std::size_t i = 0; i < world.agents.size(); ++i)
    for (std::size_t j = i + 1; j < world.agents.size(); ++j)
      worst = std::max(worst, pair_distance(world.agents[i], world.agents[j]));
  return worst;
}

SolveReport solve_distributed(const Instance& inst, const SolverConfig& cfg, const DistributedObserver& observer) {
  cfg.validate();
  const auto start = std::chrono::steady_clock::now();
  SolveReport report;
  report.mode = SolveMode::Distributed;
  report.status = cfg.max_iters == 0 ? "not-run" : "max-iters";
  World world = init_world(inst, cfg);
  const int n = inst.node_count();
  double residual = 0.0;

  for (int it = 1; it <= cfg.max_iters; ++it) {
    World next = sync_round(world, cfg);
    residual = residual_distributed(world, next);
    if (observer) observer(world, next);

    for (const auto& a : next.agents) {
      ++report.tree_checks;
      if (!is_spanning_tree(inst.graph(), a.z)) ++report.tree_failures;
      if (a.qp_status != QpStatus::Solved) ++report.degraded_qp_solves;
    }
    if (cfg.trace_per_agent) {
      for (Node i = 0; i < n; ++i) {
        const auto& prev = world.agents[static_cast<std::size_t>(i)];
        const auto& cur = next.agents[static_cast<std::size_t>(i)];
        report.distributed_trace.push_back({next.round, i, objective(inst, cur.w), residual_contribution(prev, cur, n),
                                            consensus_gap_of(next, i), cur.qp_iterations});
      }
    } else {
      double obj = 0.0;
      int qp_iters = 0;
      for (const auto& a : next.agents) {
        obj += objective(inst, a.w);
        qp_iters += a.qp_iterations;
      }
      report.distributed_trace.push_back({next.round, -1, obj / n, residual, consensus_gap(next), qp_iters});
    }
    world = std::move(next);
    if (residual < cfg.tol) {
      report.status = "converged";
      break;
    }
  }

  const AgentState& lead = world.agents.front();
  const auto ex = extract_solution(inst, lead.z, lead.y);
  report.tree = lead.z;
  report.flows = ex.flows;
  report.feasible = ex.feasible;
  report.repaired = ex.repaired;
  report.objective = objective(inst, lead.z);
  report.iterations = world.round;
  report.final_residual = residual;
  report.final_consensus_gap = consensus_gap(world);
  report.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
  return report;
}

FullDualWorld init_full_dual_world(const Instance& inst, const SolverConfig& cfg) {
  FullDualWorld world;
  world.inst = &inst;
  const AgentState proto = initial_agent(inst, cfg, 0);
  for (Node i = 0; i < inst.node_count(); ++i) {
    world.agents.push_back(proto);
    world.agents.back().id = i;
  }
  const auto arcs = static_cast<std::size_t>(inst.arc_count());
  world.t.assign(arcs, proto.u);
  world.s.assign(arcs, proto.w);
  world.alpha.assign(arcs, std::vector<double>(proto.u.size(), 0.0));
  world.beta = world.alpha;
  world.gamma.assign(arcs, std::vector<double>(proto.w.size(), 0.0));
  world.delta = world.gamma;
  return world;
}

QuadraticProgram build_full_dual_subproblem(const FullDualWorld& world, Node agent, double rho) {
  const Instance& inst = *world.inst;
  const auto& own = world.agents[static_cast<std::size_t>(agent)];
  const VariableLayout L(inst);
  QuadraticProgram qp = relaxed_constraint_set(inst);
  add_linear_w(qp, L, agent_edge_costs(inst, agent), 1.0);
  std::vector<double> target_w(own.w.size()), target_u(own.u.size());
  for (std::size_t e = 0; e < target_w.size(); ++e) target_w[e] = (own.z[e] ? 1.0 : 0.0) + own.mu[e];
  for (std::size_t k = 0; k < target_u.size(); ++k) target_u[k] = own.y.values[k] + own.eta[k];
  add_proximal_w(qp, L, target_w, rho);
  add_proximal_u(qp, L, target_u, rho);
  const auto& arcs = inst.arcs();
  for (int a : arcs.out_arcs(agent)) {
    const auto ai = static_cast<std::size_t>(a);
    add_linear_u(qp, L, world.alpha[ai], 1.0);
    add_proximal_u(qp, L, world.t[ai], rho);
    add_linear_w(qp, L, world.gamma[ai], 1.0);
    add_proximal_w(qp, L, world.s[ai], rho);
  }
  for (int a : arcs.in_arcs(agent)) {
    const auto ai = static_cast<std::size_t>(a);
    add_linear_u(qp, L, world.beta[ai], 1.0);
    add_proximal_u(qp, L, world.t[ai], rho);
    add_linear_w(qp, L, world.delta[ai], 1.0);
    add_proximal_w(qp, L, world.s[ai], rho);
  }
  return qp;
}

FullDualWorld full_dual_round(const FullDualWorld& world, const SolverConfig& cfg) {
  const Instance& inst = *world.inst;
  const int n = inst.node_count();
  FullDualWorld next = world;
  next.round = world.round + 1;

  for_each_agent(n, cfg.threads, [&](int i) {
    const auto& own = world.agents[static_cast<std::size_t>(i)];
    const auto qp = build_full_dual_subproblem(world, i, cfg.rho);
    const QpWarmStart* warm = own.warm.x.empty() ? nullptr : &own.warm;
    const std::string who = "agent " + std::to_string(i) + " subproblem";
    const auto sol = solve_subproblem(qp, cfg, warm, who.c_str());
    AgentState fresh;
    fresh.id = i;
    fresh.iteration = own.iteration + 1;
    fresh.mu = own.mu;
    fresh.eta = own.eta;
    fresh.nu = own.nu;
    fresh.xi = own.xi;
    finish_primal(inst, own, sol, fresh);
    next.agents[static_cast<std::size_t>(i)] = std::move(fresh);
  });

  const double h = 0.5 * cfg.rho;
  const double two_rho = 2.0 * cfg.rho;
  for (int a = 0; a < inst.arc_count(); ++a) {
    const auto ai = static_cast<std::size_t>(a);
    const auto& xi = next.agents[static_cast<std::size_t>(inst.arcs().arc(a).tail)];
    const auto& xj = next.agents[static_cast<std::size_t>(inst.arcs().arc(a).head)];
    auto& t = next.t[ai];
    auto& s = next.s[ai];
    auto& al = next.alpha[ai];
    auto& be = next.beta[ai];
    auto& ga = next.gamma[ai];
    auto& de = next.delta[ai];
    for (std::size_t k = 0; k < t.size(); ++k) {
      t[k] = (al[k] + be[k]) / two_rho + 0.5 * (xi.u[k] + xj.u[k]);
      al[k] += h * (xi.u[k] - xj.u[k]);
      be[k] += h * (xj.u[k] - xi.u[k]);
    }
    for (std::size_t e = 0; e < s.size(); ++e) {
      s[e] = (ga[e] + de[e]) / two_rho + 0.5 * (xi.w[e] + xj.w[e]);
      ga[e] += h * (xi.w[e] - xj.w[e]);
      de[e] += h * (xj.w[e] - xi.w[e]);
    }
  }
  for (auto& a : next.agents) local_dual_update(a);
  return next;
}

std::vector<double> full_dual_nu(const FullDualWorld& world, Node agent, double rho) {
  std::vector<double> acc(world.agents.front().u.size(), 0.0);
  for (int a : world.inst->arcs().out_arcs(agent))
    for (std::size_t k = 0; k < acc.size(); ++k) acc[k] += world.alpha[static_cast<std::size_t>(a)][k];
  for (int a : world.inst->arcs().in_arcs(agent))
    for (std::size_t k = 0; k < acc.size(); ++k) acc[k] += world.beta[static_cast<std::size_t>(a)][k];
  for (auto& v : acc) v /= rho;
  return acc;
}

std::vector<double> full_dual_xi(const FullDualWorld& world, Node agent, double rho) {
  std::vector<double> acc(world.agents.front().w.size(), 0.0);
  for (int a : world.inst->arcs().out_arcs(agent))
    for (std::size_t e = 0; e < acc.size(); ++e) acc[e] += world.gamma[static_cast<std::size_t>(a)][e];
  for (int a : world.inst->arcs().in_arcs(agent))
    for (std::size_t e = 0; e < acc.size(); ++e) acc[e] += world.delta[static_cast<std::size_t>(a)][e];
  for (auto& v : acc) v /= rho;
  return acc;
}

}  // namespace treeadmm
