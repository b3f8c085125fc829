#include "treeadmm/admm_central.hpp"

#include <chrono>
#include <cmath>
#include <string>

#include "treeadmm/projection.hpp"
#include "treeadmm/rng.hpp"

namespace treeadmm {

void SolverConfig::validate() const {
  if (!(rho > 0.0)) throw std::invalid_argument("rho must be positive");
  if (!(tol > 0.0)) throw std::invalid_argument("tol must be positive");
  if (max_iters < 0) throw std::invalid_argument("max_iters must be nonnegative");
  if (!(qp.tol > 0.0) || qp.max_iters <= 0) throw std::invalid_argument("QP settings must be positive");
  if (threads < 1) throw std::invalid_argument("threads must be at least 1");
}

double l2_norm_diff(const std::vector<double>& a, const std::vector<double>& b) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    acc += d * d;
  }
  return std::sqrt(acc);
}

std::vector<double> initial_relaxation(const Instance& inst, const SolverConfig& cfg) {
  const auto m = static_cast<std::size_t>(inst.edge_count());
  switch (cfg.init) {
    case InitPolicy::Ones:
      return std::vector<double>(m, 1.0);
    case InitPolicy::Custom:
      if (cfg.custom_w0.size() != m) throw std::invalid_argument("custom w0 must have one entry per edge");
      return cfg.custom_w0;
    case InitPolicy::HullSample: {
      // Convex combination of a few minimum spanning trees under random weights.
      Rng rng(cfg.seed ^ 0xA5A5A5A5DEADBEEFULL);
      constexpr int kTrees = 4;
      std::vector<double> w(m, 0.0), weights(m);
      double total = 0.0;
      for (int t = 0; t < kTrees; ++t) {
        for (auto& x : weights) x = rng.uniform();
        const auto tree = mst_kruskal(inst.graph(), weights);
        const double lambda = rng.uniform(0.1, 1.0);
        total += lambda;
        for (std::size_t e = 0; e < m; ++e) w[e] += lambda * (tree[e] ? 1.0 : 0.0);
      }
      for (auto& x : w) x /= total;
      return w;
    }
  }
  return std::vector<double>(m, 1.0);
}

CentralState init_state(const Instance& inst, const SolverConfig& cfg) {
  CentralState s;
  const auto m = static_cast<std::size_t>(inst.edge_count());
  const auto fl = static_cast<std::size_t>(inst.flow_size());
  s.w = initial_relaxation(inst, cfg);
  s.u.assign(fl, 0.0);
  s.mu.assign(m, 0.0);
  s.eta.assign(fl, 0.0);
  s.y = FlowAssignment(inst.arc_count(), inst.commodity_count());
  s.z = project_tree(s.w, s.mu, &inst.graph());
  return s;
}

QpSolution solve_subproblem(const QuadraticProgram& qp, const SolverConfig& cfg, const QpWarmStart* warm,
                            const char* who) {
  QpSolution sol = solve_qp(qp, cfg.qp, warm);
  if (sol.status == QpStatus::InfeasibleDetected)
    throw SolverError(std::string(who) + ": relaxed constraint set is empty (QP infeasible)");
  if (sol.status == QpStatus::MaxIters && sol.max_residual() > cfg.qp_accept_tol)
    throw SolverError(std::string(who) + ": QP stopped at max-iters with residual " +
                      std::to_string(sol.max_residual()));
  return sol;
}

CentralState step(const CentralState& state, const Instance& inst, const SolverConfig& cfg) {
  const auto m = static_cast<std::size_t>(inst.edge_count());
  const auto fl = static_cast<std::size_t>(inst.flow_size());
  const auto qp = build_centralized_subproblem(inst, state.z, state.y, state.mu, state.eta, cfg.rho);
  const QpWarmStart* warm = state.warm.x.empty() ? nullptr : &state.warm;
  const auto sol = solve_subproblem(qp, cfg, warm, "centralized subproblem");

  CentralState next;
  next.k = state.k + 1;
  next.warm = sol.warm_start();
  next.qp_iterations = sol.iterations;
  next.qp_status = sol.status;
  next.qp_degraded = sol.status != QpStatus::Solved;
  next.w.assign(sol.x.begin(), sol.x.begin() + static_cast<std::ptrdiff_t>(m));
  next.u.assign(sol.x.begin() + static_cast<std::ptrdiff_t>(m), sol.x.end());

  next.z = project_tree(next.w, state.mu, &inst.graph());

  std::vector<double> shifted(fl);
  for (std::size_t k = 0; k < fl; ++k) shifted[k] = next.u[k] - state.eta[k];
  next.y = FlowAssignment(inst.arc_count(), inst.commodity_count());
  next.y.values = project_binary(shifted);

  next.mu = state.mu;
  for (std::size_t e = 0; e < m; ++e) next.mu[e] += (next.z[e] ? 1.0 : 0.0) - next.w[e];
  next.eta = state.eta;
  for (std::size_t k = 0; k < fl; ++k) next.eta[k] += next.y.values[k] - next.u[k];
  return next;
}

double residual_central(const CentralState& prev, const CentralState& curr) {
  const double dual = std::hypot(l2_norm_diff(curr.mu, prev.mu), l2_norm_diff(curr.eta, prev.eta));
  const double primal = std::hypot(l2_norm_diff(curr.u, prev.u), l2_norm_diff(curr.w, prev.w));
  return dual + primal;
}

SolveReport solve_central(const Instance& inst, const SolverConfig& cfg, const CentralObserver& observer) {
  cfg.validate();
  const auto start = std::chrono::steady_clock::now();
  SolveReport report;
  report.mode = SolveMode::Central;
  CentralState state = init_state(inst, cfg);
  report.status = cfg.max_iters == 0 ? "not-run" : "max-iters";

  for (int it = 1; it <= cfg.max_iters; ++it) {
    CentralState next = step(state, inst, cfg);
    next.last_residual = residual_central(state, next);
    if (observer) observer(state, next);

    ++report.tree_checks;
    if (!is_spanning_tree(inst.graph(), next.z)) ++report.tree_failures;
    if (next.qp_degraded) ++report.degraded_qp_solves;
    const auto now = extract_solution(inst, next.z, next.y);
    report.central_trace.push_back({next.k, objective(inst, next.w), objective(inst, next.z), next.last_residual,
                                    next.qp_iterations, to_string(next.qp_status), now.feasible});
    state = std::move(next);
    if (state.last_residual < cfg.tol) {
      report.status = "converged";
      break;
    }
  }

  const auto ex = extract_solution(inst, state.z, state.y);
  report.tree = state.z;
  report.flows = ex.flows;
  report.feasible = ex.feasible;
  report.repaired = ex.repaired;
  report.objective = objective(inst, state.z);
  report.iterations = state.k;
  report.final_residual = state.last_residual;
  report.wall_ms =
      std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
  return report;
}

}  // namespace treeadmm
