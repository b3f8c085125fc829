#pragma once

#include <functional>
#include <span>
#include <vector>

#include "treeadmm/admm_central.hpp"
#include "treeadmm/model_mcf.hpp"
#include "treeadmm/report.hpp"

namespace treeadmm {

/// Simulated network: one agent per node, communicating over the instance graph.
struct World {
  const Instance* inst = nullptr;
  std::vector<AgentState> agents;
  int round = 0;
};

/// Every agent starts from the same point as the centralized solver; nu = xi = 0.
World init_world(const Instance& inst, const SolverConfig& cfg);

/// Round-k snapshots of agent i's neighbours, in graph().neighbors(i) order.
std::vector<const AgentState*> neighbor_snapshots(const World& world, Node agent);

/// First half of a round: (u, w) from the agent subproblem, then z by tree
/// projection of w - mu and y by rounding u - eta. Duals are copied unchanged.
AgentState agent_primal_update(const Instance& inst, Node agent, const AgentState& own,
                               std::span<const AgentState* const> neighbors, const SolverConfig& cfg);

/// Second half: nu += c * sum_j (u_i - u_j), xi likewise on w, using the
/// neighbours' fresh primals; then mu += z - w and eta += y - u.
void agent_dual_update(AgentState& fresh, std::span<const AgentState* const> fresh_neighbors,
                       const SolverConfig& cfg);

/// One synchronous round: all primal updates against round-k snapshots, a
/// barrier, then all dual updates. Bit-identical for any thread count.
World sync_round(const World& world, const SolverConfig& cfg);

/// (1/n) sum_i ||(mu, nu, xi, eta)^i diff|| + (1/n) sum_i ||(u, w)^i diff||.
double residual_distributed(const World& prev, const World& curr);
/// Agent i's share of residual_distributed.
double residual_contribution(const AgentState& prev, const AgentState& curr, int agent_count);

/// max over agent pairs of ||w_i - w_j|| + ||u_i - u_j||.
double consensus_gap(const World& world);
/// max over j of ||w_i - w_j|| + ||u_i - u_j||.
double consensus_gap_of(const World& world, Node agent);

using DistributedObserver = std::function<void(const World& prev, const World& curr)>;

/// Runs rounds until the residual drops below cfg.tol or cfg.max_iters is hit.
/// The answer is read from agent 0.
SolveReport solve_distributed(const Instance& inst, const SolverConfig& cfg,
                              const DistributedObserver& observer = {});

/// Reference implementation that keeps, for every arc (i, j) of the
/// bidirected graph, the averages t (u copies) and s (w copies) and the
/// multipliers alpha, beta (u) and gamma, delta (w) explicitly.
struct FullDualWorld {
  const Instance* inst = nullptr;
  std::vector<AgentState> agents;  // nu and xi stay zero
  std::vector<std::vector<double>> t, s;
  std::vector<std::vector<double>> alpha, beta, gamma, delta;
  int round = 0;
};

FullDualWorld init_full_dual_world(const Instance& inst, const SolverConfig& cfg);

/// Agent subproblem with the per-arc terms written out:
/// out-arcs (i,j): alpha'u + rho/2 ||u - t||^2 + gamma'w + rho/2 ||w - s||^2,
/// in-arcs (j,i): the same with beta and delta.
QuadraticProgram build_full_dual_subproblem(const FullDualWorld& world, Node agent, double rho);

FullDualWorld full_dual_round(const FullDualWorld& world, const SolverConfig& cfg);

/// (sum_out alpha + sum_in beta) / rho, the condensed nu of agent i; and the
/// same with gamma and delta for xi.
std::vector<double> full_dual_nu(const FullDualWorld& world, Node agent, double rho);
std::vector<double> full_dual_xi(const FullDualWorld& world, Node agent, double rho);

}  // namespace treeadmm
