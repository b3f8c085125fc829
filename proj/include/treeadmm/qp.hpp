#pragma once

#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

namespace treeadmm {

/// Row-major sparse matrix stored as per-row (column, coefficient) lists.
struct SparseRows {
  int cols = 0;
  std::vector<std::vector<std::pair<int, double>>> rows;

  int row_count() const { return static_cast<int>(rows.size()); }
  void add_row(std::vector<std::pair<int, double>> entries) { rows.push_back(std::move(entries)); }
  double row_dot(int r, const std::vector<double>& v) const;
};

/// minimize  1/2 v'Dv + q'v   s.t.  A_eq v = b_eq,  A_in v <= b_in,  lo <= v <= hi
/// with D diagonal and nonnegative.
struct QuadraticProgram {
  std::vector<double> diag;
  std::vector<double> linear;
  SparseRows eq;
  std::vector<double> eq_rhs;
  SparseRows ineq;
  std::vector<double> ineq_rhs;
  std::vector<double> lower;
  std::vector<double> upper;

  int dim() const { return static_cast<int>(diag.size()); }
  /// Throws std::invalid_argument when sizes or bounds are inconsistent.
  void validate() const;
  double objective(const std::vector<double>& v) const;
};

enum class QpStatus { Solved, MaxIters, InfeasibleDetected };

std::string to_string(QpStatus s);

struct QpSettings {
  double tol = 1e-6;
  int max_iters = 20000;
  /// Residuals are evaluated every check_every iterations.
  int check_every = 10;
  bool polish = true;
  bool adaptive_step = true;
};

/// Primal point with constraint multipliers from a previous solve.
struct QpWarmStart {
  std::vector<double> x;
  std::vector<double> eq_dual;
  std::vector<double> ineq_dual;
  std::vector<double> box_dual;
};

struct QpSolution {
  std::vector<double> x;
  /// Multipliers for the equality, inequality and box rows (box: signed, negative at the lower bound).
  std::vector<double> eq_dual;
  std::vector<double> ineq_dual;
  std::vector<double> box_dual;
  double eq_residual = 0.0;        // ||A_eq x - b_eq||_inf
  double ineq_violation = 0.0;     // ||max(A_in x - b_in, 0)||_inf, box violations included
  double stationarity = 0.0;       // ||Dx + q + A'y||_inf
  double complementarity = 0.0;    // max |y_i| * slack_i over inequality and box rows
  int iterations = 0;
  bool polished = false;
  QpStatus status = QpStatus::MaxIters;

  QpWarmStart warm_start() const { return {x, eq_dual, ineq_dual, box_dual}; }
  double max_residual() const;
};

/// Operator-splitting QP solver.
///
/// Rows are scaled to unit infinity norm. Each iteration solves one linear
/// system with the cached sparse factorization of D + sigma I + A' R A and projects
/// the constraint images onto their bounds; the step parameter is rebalanced
/// from the primal/dual residual ratio. After the splitting phase an
/// active-set polish solves the KKT system of the guessed active rows and is
/// kept when it is primal feasible, dual feasible and more accurate.
QpSolution solve_qp(const QuadraticProgram& p, const QpSettings& settings = {},
                    const QpWarmStart* warm = nullptr);

/// Residuals of x and the given multipliers against p, recomputed from scratch.
void evaluate_residuals(const QuadraticProgram& p, QpSolution& s);

/// Plain-text listing of a QP (dimensions, D, q, rows, bounds).
void dump_qp(const QuadraticProgram& p, std::ostream& out);

}  // namespace treeadmm
