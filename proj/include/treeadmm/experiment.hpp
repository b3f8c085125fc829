#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "treeadmm/admm_central.hpp"
#include "treeadmm/model_mcf.hpp"
#include "treeadmm/oracle.hpp"
#include "treeadmm/report.hpp"

namespace treeadmm {

/// One line of the summary CSV.
struct SummaryRow {
  int n = 0;
  int m = 0;
  std::uint64_t seed = 0;
  double rho = 0.0;
  std::string mode;
  int iters = 0;
  std::optional<double> objective;
  bool feasible = false;
  std::optional<double> gap_pct;
  std::optional<double> oracle_obj;
  std::string status;
  std::optional<double> wall_ms;
  std::string trace_path;
};

void write_summary(std::ostream& out, const std::vector<SummaryRow>& rows);
std::vector<SummaryRow> read_summary(std::istream& in);

/// Orders rows by (n, seed, rho, mode).
void sort_summary(std::vector<SummaryRow>& rows);

struct SweepSpec {
  std::vector<int> sizes{10};
  std::vector<std::uint64_t> seeds{0};
  std::vector<double> rhos{0.1, 1.0, 10.0};
  std::vector<SolveMode> modes{SolveMode::Central};
  double p = 0.5;
  int commodities = 0;
  int hop_slack = 2;
  double cost_scale = 10.0;
  double tol = 1e-4;
  int max_iters = 500;
  bool oracle = true;
  EnumerationBudget budget{};
  bool trace_per_agent = false;
  /// Cells evaluated concurrently; output does not depend on it.
  int jobs = 1;
  /// Record wall_ms; left empty otherwise so repeated sweeps are byte-identical.
  bool wall_time = false;
  /// Traces go to out_dir/traces; nothing is written when empty.
  std::filesystem::path out_dir;
};

/// Runs every (n, seed, rho, mode) cell. Failures land in the status column
/// and the sweep carries on. Rows come back sorted.
std::vector<SummaryRow> run_sweep(const SweepSpec& spec);

/// Relative trace file name of one cell.
std::string trace_file_name(int n, std::uint64_t seed, double rho, SolveMode mode);

/// Solver configuration shared by the CLI and sweeps.
SolverConfig make_solver_config(double rho, double tol, int max_iters, std::uint64_t seed);

/// Writes the trace CSV matching report.mode.
void write_trace(std::ostream& out, const SolveReport& report);

}  // namespace treeadmm
