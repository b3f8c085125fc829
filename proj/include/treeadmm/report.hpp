#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "treeadmm/graph.hpp"
#include "treeadmm/model_mcf.hpp"

namespace treeadmm {

struct CentralTraceRow {
  int k = 0;
  double objective_w = 0.0;
  double objective_z = 0.0;
  double residual = 0.0;
  int qp_iters = 0;
  std::string qp_status;
  bool feasible_now = false;
};

/// One distributed trace row; agent < 0 marks a row aggregated over all agents.
struct DistributedTraceRow {
  int k = 0;
  int agent = -1;
  double objective_w = 0.0;
  double residual_contrib = 0.0;
  double consensus_gap = 0.0;
  int qp_iters = 0;
};

enum class SolveMode { Central, Distributed };

std::string to_string(SolveMode m);

struct SolveReport {
  SolveMode mode = SolveMode::Central;
  /// converged | max-iters | not-run
  std::string status;
  TreeIndicator tree;
  FlowAssignment flows;
  double objective = 0.0;
  bool feasible = false;
  /// True when flows were re-derived from the tree instead of taken from the iterate.
  bool repaired = false;
  int iterations = 0;
  double final_residual = 0.0;
  double wall_ms = 0.0;
  std::optional<double> gap_pct;
  std::optional<double> oracle_objective;
  std::vector<CentralTraceRow> central_trace;
  std::vector<DistributedTraceRow> distributed_trace;
  double final_consensus_gap = 0.0;
  /// Tree checks performed on z_k (every agent for distributed runs) and failures among them.
  long tree_checks = 0;
  long tree_failures = 0;
  /// QP solves accepted with max-iters status but residual within the outer acceptance tolerance.
  int degraded_qp_solves = 0;
};

/// (heuristic / exact - 1) * 100. Throws std::invalid_argument if exact <= 0.
double compute_gap(double heuristic_obj, double exact_obj);

struct Extraction {
  bool feasible = false;
  bool repaired = false;
  FlowAssignment flows;
};

/// Final answer from a tree iterate: keep (z, y) when it passes the model's
/// feasibility check, otherwise route every commodity along the tree.
Extraction extract_solution(const Instance& inst, const TreeIndicator& z, const FlowAssignment& y);

void write_central_trace(std::ostream& out, const std::vector<CentralTraceRow>& rows);
void write_distributed_trace(std::ostream& out, const std::vector<DistributedTraceRow>& rows);

std::vector<CentralTraceRow> read_central_trace(std::istream& in);
std::vector<DistributedTraceRow> read_distributed_trace(std::istream& in);

}  // namespace treeadmm
