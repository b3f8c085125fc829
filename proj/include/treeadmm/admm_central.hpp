#pragma once

#include <cstdint>
#include <functional>
#include <stdexcept>
#include <vector>

#include "treeadmm/consensus.hpp"
#include "treeadmm/model_mcf.hpp"
#include "treeadmm/qp.hpp"
#include "treeadmm/report.hpp"

namespace treeadmm {

class SolverError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Starting relaxation w_0.
enum class InitPolicy {
  Ones,        // w_0 = 1
  Custom,      // SolverConfig::custom_w0
  HullSample,  // random convex combination of spanning-tree indicators (seeded)
};

struct SolverConfig {
  double rho = 1.0;
  double tol = 1e-4;
  int max_iters = 500;
  QpSettings qp{};
  /// QP solves ending at max-iters are still used when their residual is within this bound.
  double qp_accept_tol = 1e-4;
  std::uint64_t seed = 0;
  InitPolicy init = InitPolicy::Ones;
  std::vector<double> custom_w0;
  /// Worker threads for the distributed phases; results do not depend on it.
  int threads = 1;
  ConsensusForm consensus = ConsensusForm::Undirected;
  /// Distributed traces: one row per agent instead of one aggregated row per round.
  bool trace_per_agent = false;

  void validate() const;
};

/// One centralized trajectory point: relaxed (u, w), binary (z, y), scaled duals (mu, eta).
struct CentralState {
  std::vector<double> w;
  std::vector<double> u;
  TreeIndicator z;
  FlowAssignment y;
  std::vector<double> mu;
  std::vector<double> eta;
  int k = 0;
  double last_residual = 0.0;
  QpWarmStart warm;
  int qp_iterations = 0;
  QpStatus qp_status = QpStatus::Solved;
  bool qp_degraded = false;
};

/// Initial relaxation per cfg.init; it must have length m.
std::vector<double> initial_relaxation(const Instance& inst, const SolverConfig& cfg);

/// w_0 from the init policy, u_0 = y_0 = mu_0 = eta_0 = 0, z_0 = nearest tree to w_0.
CentralState init_state(const Instance& inst, const SolverConfig& cfg);

/// Solves the QP subproblem and checks its status; throws SolverError when it
/// is infeasible or too inaccurate to use.
QpSolution solve_subproblem(const QuadraticProgram& qp, const SolverConfig& cfg, const QpWarmStart* warm,
                            const char* who);

/// One iteration: (u, w) from the subproblem, z by tree projection of
/// w - mu, y by rounding u - eta, then mu += z - w and eta += y - u.
CentralState step(const CentralState& state, const Instance& inst, const SolverConfig& cfg);

/// ||(mu, eta)_k - (mu, eta)_{k-1}|| + ||(u, w)_k - (u, w)_{k-1}||.
double residual_central(const CentralState& prev, const CentralState& curr);

using CentralObserver = std::function<void(const CentralState& prev, const CentralState& curr)>;

/// Iterates until the residual drops below cfg.tol or cfg.max_iters is hit.
SolveReport solve_central(const Instance& inst, const SolverConfig& cfg, const CentralObserver& observer = {});

double l2_norm_diff(const std::vector<double>& a, const std::vector<double>& b);

}  // namespace treeadmm
