#include "treeadmm/qp.hpp"

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>
#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <stdexcept>

namespace treeadmm {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kSigma = 1e-6;
constexpr double kRelaxation = 1.6;
constexpr double kEqualityStepScale = 1e3;
constexpr double kMinStep = 1e-6;
constexpr double kMaxStep = 1e6;
constexpr double kInfeasTol = 1e-5;
constexpr int kAdaptEvery = 25;
constexpr double kPolishRegularization = 1e-9;
constexpr int kRefineSteps = 8;
constexpr int kPolishEvery = 25;
constexpr int kMaxPolishAttempts = 2;
constexpr int kPolishRounds = 6;

using Eigen::MatrixXd;
using Eigen::VectorXd;
using SparseMat = Eigen::SparseMatrix<double>;

double inf_norm(const VectorXd& v) { return v.size() == 0 ? 0.0 : v.lpNorm<Eigen::Infinity>(); }

// Stacked constraint system [A_eq; A_in; I] with rows scaled to unit infinity norm.
struct Stacked {
  SparseMat a;
  VectorXd lower;
  VectorXd upper;
  VectorXd row_norm;  // scale divided out of each row
  int n_eq = 0;
  int n_in = 0;
  int n_box = 0;
};

Stacked stack_constraints(const QuadraticProgram& p) {
  Stacked s;
  const int n = p.dim();
  s.n_eq = p.eq.row_count();
  s.n_in = p.ineq.row_count();
  s.n_box = n;
  const int rows = s.n_eq + s.n_in + s.n_box;
  s.lower.resize(rows);
  s.upper.resize(rows);
  s.row_norm = VectorXd::Ones(rows);
  std::vector<Eigen::Triplet<double>> trips;
  std::vector<double> dense_row(static_cast<std::size_t>(n), 0.0);
  auto put = [&](int r, const std::vector<std::pair<int, double>>& entries, double lo, double hi) {
    // Duplicate column entries are summed before scaling.
    for (const auto& [c, v] : entries) dense_row[static_cast<std::size_t>(c)] += v;
    double scale = 0.0;
    for (const auto& [c, v] : entries) scale = std::max(scale, std::abs(dense_row[static_cast<std::size_t>(c)]));
    if (scale == 0.0) scale = 1.0;
    for (const auto& [c, v] : entries) {
      double& val = dense_row[static_cast<std::size_t>(c)];
      if (val != 0.0) trips.emplace_back(r, c, val / scale);
      val = 0.0;
    }
    s.row_norm(r) = scale;
    s.lower(r) = lo / scale;
    s.upper(r) = hi / scale;
  };
  for (int r = 0; r < s.n_eq; ++r)
    put(r, p.eq.rows[static_cast<std::size_t>(r)], p.eq_rhs[static_cast<std::size_t>(r)],
        p.eq_rhs[static_cast<std::size_t>(r)]);
  for (int r = 0; r < s.n_in; ++r)
    put(s.n_eq + r, p.ineq.rows[static_cast<std::size_t>(r)], -kInf, p.ineq_rhs[static_cast<std::size_t>(r)]);
  for (int i = 0; i < n; ++i) {
    const int r = s.n_eq + s.n_in + i;
    trips.emplace_back(r, i, 1.0);
    s.lower(r) = p.lower[static_cast<std::size_t>(i)];
    s.upper(r) = p.upper[static_cast<std::size_t>(i)];
  }
  s.a.resize(rows, n);
  s.a.setFromTriplets(trips.begin(), trips.end());
  s.a.makeCompressed();
  return s;
}

VectorXd to_eigen(const std::vector<double>& v) {
  return Eigen::Map<const VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

std::vector<double> to_std(const VectorXd& v) { return {v.data(), v.data() + v.size()}; }

// Splits a stacked (unscaled) multiplier vector into the solution's blocks.
void scatter_duals(const Stacked& s, const VectorXd& y_unscaled, QpSolution& out) {
  out.eq_dual = to_std(y_unscaled.segment(0, s.n_eq));
  out.ineq_dual = to_std(y_unscaled.segment(s.n_eq, s.n_in));
  out.box_dual = to_std(y_unscaled.segment(s.n_eq + s.n_in, s.n_box));
}

QpSolution make_candidate(const QuadraticProgram& p, const Stacked& s, const VectorXd& x,
                          const VectorXd& y_scaled) {
  QpSolution out;
  VectorXd xc = x;
  for (int i = 0; i < xc.size(); ++i)
    xc(i) = std::clamp(xc(i), p.lower[static_cast<std::size_t>(i)], p.upper[static_cast<std::size_t>(i)]);
  out.x = to_std(xc);
  scatter_duals(s, y_scaled.cwiseQuotient(s.row_norm), out);
  evaluate_residuals(p, out);
  return out;
}

// Solves the equality-constrained KKT system for a given active set. Box-active
// variables are fixed at their bound. Returns the point and unscaled multipliers
// for every stacked row (zero on inactive rows).
bool solve_active_set(const QuadraticProgram& p, const Stacked& s, const MatrixXd& dense_a,
                      std::vector<int>& side, VectorXd& x, VectorXd& y_full) {
  const int n = p.dim();
  const int rows = static_cast<int>(s.a.rows());
  const int box0 = s.n_eq + s.n_in;
  x = VectorXd::Zero(n);
  std::vector<int> free_vars;
  for (int i = 0; i < n; ++i) {
    const int sd = side[static_cast<std::size_t>(box0 + i)];
    if (sd < 0) x(i) = p.lower[static_cast<std::size_t>(i)];
    else if (sd > 0) x(i) = p.upper[static_cast<std::size_t>(i)];
    else free_vars.push_back(i);
  }
  // Rows touching only fixed variables would make the reduced system singular;
  // they get a zero multiplier.
  std::vector<int> act_rows;
  for (int r = 0; r < box0; ++r) {
    if (side[static_cast<std::size_t>(r)] == 0) continue;
    bool touches_free = false;
    for (int i : free_vars) touches_free = touches_free || dense_a(r, i) != 0.0;
    if (touches_free) act_rows.push_back(r);
    else if (r >= s.n_eq) side[static_cast<std::size_t>(r)] = 0;
  }

  const int nf = static_cast<int>(free_vars.size());
  const int na = static_cast<int>(act_rows.size());
  MatrixXd a_act(na, nf);
  VectorXd b_act(na);
  for (int k = 0; k < na; ++k) {
    const int r = act_rows[static_cast<std::size_t>(k)];
    const double scale = s.row_norm(r);
    const double bound = side[static_cast<std::size_t>(r)] < 0 ? s.lower(r) : s.upper(r);
    double fixed_part = 0.0;
    for (int i = 0; i < n; ++i)
      if (side[static_cast<std::size_t>(box0 + i)] != 0) fixed_part += dense_a(r, i) * scale * x(i);
    for (int j = 0; j < nf; ++j) a_act(k, j) = dense_a(r, free_vars[static_cast<std::size_t>(j)]) * scale;
    b_act(k) = bound * scale - fixed_part;
  }
  VectorXd d_free(nf), q_free(nf);
  for (int j = 0; j < nf; ++j) {
    const int i = free_vars[static_cast<std::size_t>(j)];
    d_free(j) = p.diag[static_cast<std::size_t>(i)];
    q_free(j) = p.linear[static_cast<std::size_t>(i)];
  }
  // [D  A'; A  0][x; y] = [-q; b] through the regularized matrix plus iterative refinement.
  const int kdim = nf + na;
  MatrixXd kkt = MatrixXd::Zero(kdim, kdim);
  kkt.topLeftCorner(nf, nf) = d_free.asDiagonal();
  kkt.topRightCorner(nf, na) = a_act.transpose();
  kkt.bottomLeftCorner(na, nf) = a_act;
  MatrixXd reg = kkt;
  reg.topLeftCorner(nf, nf).diagonal().array() += kPolishRegularization;
  reg.bottomRightCorner(na, na).diagonal().array() -= kPolishRegularization;
  VectorXd rhs(kdim);
  rhs << -q_free, b_act;
  Eigen::PartialPivLU<MatrixXd> lu(reg);
  VectorXd sol = lu.solve(rhs);
  for (int it = 0; it < kRefineSteps; ++it) sol += lu.solve(rhs - kkt * sol);
  if (!sol.allFinite()) return false;

  for (int j = 0; j < nf; ++j) x(free_vars[static_cast<std::size_t>(j)]) = sol(j);
  y_full = VectorXd::Zero(rows);
  for (int k = 0; k < na; ++k) y_full(act_rows[static_cast<std::size_t>(k)]) = sol(nf + k);
  VectorXd grad = to_eigen(p.diag).cwiseProduct(x) + to_eigen(p.linear);
  for (int r = 0; r < box0; ++r)
    if (y_full(r) != 0.0) grad += (dense_a.row(r).transpose() * s.row_norm(r)) * y_full(r);
  for (int i = 0; i < n; ++i)
    if (side[static_cast<std::size_t>(box0 + i)] != 0) y_full(box0 + i) = -grad(i);
  return true;
}

// Active-set polish seeded by the splitting iterate. Rows with wrong-sign
// multipliers are released and violated rows are added for a few rounds.
bool polish(const QuadraticProgram& p, const Stacked& s, const VectorXd& z, const VectorXd& y,
            double tol, QpSolution& out) {
  const int rows = static_cast<int>(s.a.rows());
  const int box0 = s.n_eq + s.n_in;
  const MatrixXd dense_a = MatrixXd(s.a.topRows(box0));
  // -1 lower active, +1 upper active, 0 inactive; equality rows are always active.
  std::vector<int> side(static_cast<std::size_t>(rows), 0);
  for (int r = 0; r < rows; ++r) {
    if (r < s.n_eq) side[static_cast<std::size_t>(r)] = 1;
    else if (z(r) - s.lower(r) < -y(r)) side[static_cast<std::size_t>(r)] = -1;
    else if (s.upper(r) - z(r) < y(r)) side[static_cast<std::size_t>(r)] = 1;
  }

  VectorXd x, y_full;
  for (int round = 0; round < kPolishRounds; ++round) {
    if (!solve_active_set(p, s, dense_a, side, x, y_full)) return false;
    bool changed = false;
    for (int r = s.n_eq; r < rows; ++r) {
      int& sd = side[static_cast<std::size_t>(r)];
      if ((sd < 0 && y_full(r) > tol) || (sd > 0 && y_full(r) < -tol)) {
        sd = 0;
        changed = true;
      }
    }
    if (changed) continue;
    // Unscaled row activity, compared with unscaled bounds.
    for (int r = s.n_eq; r < rows; ++r) {
      int& sd = side[static_cast<std::size_t>(r)];
      if (sd != 0) continue;
      const double scale = s.row_norm(r);
      const double act = r < box0 ? dense_a.row(r).dot(x) * scale : x(r - box0);
      if (act > s.upper(r) * scale + tol) sd = 1, changed = true;
      else if (act < s.lower(r) * scale - tol) sd = -1, changed = true;
    }
    if (changed) continue;
    QpSolution cand;
    cand.x = to_std(x);
    scatter_duals(s, y_full, cand);
    evaluate_residuals(p, cand);
    cand.polished = true;
    out = std::move(cand);
    return true;
  }
  return false;
}

}  // namespace

double SparseRows::row_dot(int r, const std::vector<double>& v) const {
  double acc = 0.0;
  for (const auto& [c, coef] : rows[static_cast<std::size_t>(r)]) acc += coef * v[static_cast<std::size_t>(c)];
  return acc;
}

void QuadraticProgram::validate() const {
  const auto n = diag.size();
  if (linear.size() != n || lower.size() != n || upper.size() != n)
    throw std::invalid_argument("QP vector sizes are inconsistent");
  if (eq.rows.size() != eq_rhs.size() || ineq.rows.size() != ineq_rhs.size())
    throw std::invalid_argument("QP constraint right-hand sides do not match row counts");
  for (std::size_t i = 0; i < n; ++i) {
    if (!std::isfinite(diag[i]) || diag[i] < 0.0) throw std::invalid_argument("QP diagonal must be finite and >= 0");
    if (!std::isfinite(linear[i])) throw std::invalid_argument("QP linear cost must be finite");
    if (!(lower[i] <= upper[i])) throw std::invalid_argument("QP box has lower > upper");
  }
  for (const auto* m : {&eq, &ineq})
    for (const auto& row : m->rows)
      for (const auto& [c, v] : row)
        if (c < 0 || static_cast<std::size_t>(c) >= n || !std::isfinite(v))
          throw std::invalid_argument("QP constraint entry out of range");
}

double QuadraticProgram::objective(const std::vector<double>& v) const {
  double acc = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) acc += 0.5 * diag[i] * v[i] * v[i] + linear[i] * v[i];
  return acc;
}

std::string to_string(QpStatus s) {
  switch (s) {
    case QpStatus::Solved: return "solved";
    case QpStatus::MaxIters: return "max-iters";
    case QpStatus::InfeasibleDetected: return "infeasible-detected";
  }
  return "unknown";
}

double QpSolution::max_residual() const { return std::max({eq_residual, ineq_violation, stationarity}); }

void evaluate_residuals(const QuadraticProgram& p, QpSolution& s) {
  const auto& x = s.x;
  const std::size_t n = x.size();
  std::vector<double> grad(n);
  for (std::size_t i = 0; i < n; ++i) grad[i] = p.diag[i] * x[i] + p.linear[i];
  s.eq_residual = 0.0;
  s.ineq_violation = 0.0;
  s.complementarity = 0.0;
  for (int r = 0; r < p.eq.row_count(); ++r) {
    s.eq_residual = std::max(s.eq_residual, std::abs(p.eq.row_dot(r, x) - p.eq_rhs[static_cast<std::size_t>(r)]));
    const double y = s.eq_dual.empty() ? 0.0 : s.eq_dual[static_cast<std::size_t>(r)];
    for (const auto& [c, v] : p.eq.rows[static_cast<std::size_t>(r)]) grad[static_cast<std::size_t>(c)] += v * y;
  }
  for (int r = 0; r < p.ineq.row_count(); ++r) {
    const double slack = p.ineq_rhs[static_cast<std::size_t>(r)] - p.ineq.row_dot(r, x);
    s.ineq_violation = std::max(s.ineq_violation, -slack);
    const double y = s.ineq_dual.empty() ? 0.0 : s.ineq_dual[static_cast<std::size_t>(r)];
    s.complementarity = std::max(s.complementarity, std::abs(y * slack));
    for (const auto& [c, v] : p.ineq.rows[static_cast<std::size_t>(r)]) grad[static_cast<std::size_t>(c)] += v * y;
  }
  for (std::size_t i = 0; i < n; ++i) {
    s.ineq_violation = std::max({s.ineq_violation, p.lower[i] - x[i], x[i] - p.upper[i]});
    const double y = s.box_dual.empty() ? 0.0 : s.box_dual[i];
    grad[i] += y;
    const double slack = y < 0 ? x[i] - p.lower[i] : p.upper[i] - x[i];
    if (y != 0.0) s.complementarity = std::max(s.complementarity, std::abs(y * slack));
  }
  s.ineq_violation = std::max(s.ineq_violation, 0.0);
  s.stationarity = 0.0;
  for (double g : grad) s.stationarity = std::max(s.stationarity, std::abs(g));
}

QpSolution solve_qp(const QuadraticProgram& p, const QpSettings& settings, const QpWarmStart* warm) {
  p.validate();
  const int n = p.dim();
  const Stacked s = stack_constraints(p);
  const int rows = static_cast<int>(s.a.rows());
  const VectorXd d = to_eigen(p.diag);
  const VectorXd q = to_eigen(p.linear);

  VectorXd x = VectorXd::Zero(n);
  VectorXd y = VectorXd::Zero(rows);
  if (warm && static_cast<int>(warm->x.size()) == n) {
    x = to_eigen(warm->x);
    auto load = [&](const std::vector<double>& src, int offset, int count) {
      if (static_cast<int>(src.size()) != count) return;
      for (int r = 0; r < count; ++r) y(offset + r) = src[static_cast<std::size_t>(r)] * s.row_norm(offset + r);
    };
    load(warm->eq_dual, 0, s.n_eq);
    load(warm->ineq_dual, s.n_eq, s.n_in);
    load(warm->box_dual, s.n_eq + s.n_in, s.n_box);
  } else {
    for (int i = 0; i < n; ++i) x(i) = std::clamp(0.0, p.lower[static_cast<std::size_t>(i)], p.upper[static_cast<std::size_t>(i)]);
  }
  VectorXd z = (s.a * x).cwiseMax(s.lower).cwiseMin(s.upper);

  double base_step = 0.1;
  VectorXd step(rows);
  auto set_steps = [&] {
    for (int r = 0; r < rows; ++r) step(r) = r < s.n_eq ? kEqualityStepScale * base_step : base_step;
  };
  set_steps();
  Eigen::SimplicialLDLT<SparseMat> factor;
  const SparseMat at = s.a.transpose();
  SparseMat diag_part(n, n);
  {
    std::vector<Eigen::Triplet<double>> trips;
    for (int i = 0; i < n; ++i) trips.emplace_back(i, i, d(i) + kSigma);
    diag_part.setFromTriplets(trips.begin(), trips.end());
  }
  bool analyzed = false;
  auto refactor = [&] {
    const SparseMat k = SparseMat(at * step.asDiagonal() * s.a) + diag_part;
    if (!analyzed) {
      factor.analyzePattern(k);
      analyzed = true;
    }
    factor.factorize(k);
    if (factor.info() != Eigen::Success) throw std::runtime_error("QP linear system factorization failed");
  };
  refactor();

  QpSolution best = make_candidate(p, s, x, y);
  best.iterations = 0;
  const double polish_trigger = std::max(1e-3, 100.0 * settings.tol);
  int last_polish = -kPolishEvery;
  int polish_attempts = 0;

  for (int it = 1; it <= settings.max_iters; ++it) {
    const VectorXd rhs = kSigma * x - q + at * (step.cwiseProduct(z) - y);
    const VectorXd x_tilde = factor.solve(rhs);
    const VectorXd z_tilde = s.a * x_tilde;
    const VectorXd z_hat = kRelaxation * z_tilde + (1.0 - kRelaxation) * z;
    x = kRelaxation * x_tilde + (1.0 - kRelaxation) * x;
    const VectorXd z_new = (z_hat + y.cwiseQuotient(step)).cwiseMax(s.lower).cwiseMin(s.upper);
    const VectorXd y_new = y + step.cwiseProduct(z_hat - z_new);
    const VectorXd dy = y_new - y;
    y = y_new;
    z = z_new;

    if (it % settings.check_every != 0 && it != settings.max_iters) continue;

    // Primal infeasibility certificate on the multiplier increment.
    const double dy_norm = inf_norm(dy);
    if (dy_norm > 1e-12) {
      const double at_dy = inf_norm(at * dy);
      double support = 0.0;
      bool bounded = true;
      for (int r = 0; r < rows && bounded; ++r) {
        if (dy(r) > 0) {
          if (std::isinf(s.upper(r))) bounded = dy(r) <= kInfeasTol * dy_norm;
          else support += s.upper(r) * dy(r);
        } else if (dy(r) < 0) {
          if (std::isinf(s.lower(r))) bounded = -dy(r) <= kInfeasTol * dy_norm;
          else support += s.lower(r) * dy(r);
        }
      }
      if (bounded && at_dy <= kInfeasTol * dy_norm && support < -kInfeasTol * dy_norm) {
        best = make_candidate(p, s, x, y);
        best.iterations = it;
        best.status = QpStatus::InfeasibleDetected;
        return best;
      }
    }

    QpSolution cand = make_candidate(p, s, x, y);
    cand.iterations = it;
    if (cand.max_residual() <= settings.tol) {
      cand.status = QpStatus::Solved;
      return cand;
    }
    if (settings.polish && polish_attempts < kMaxPolishAttempts && cand.max_residual() <= polish_trigger &&
        it - last_polish >= kPolishEvery) {
      ++polish_attempts;
      last_polish = it;
      QpSolution polished;
      if (polish(p, s, z, y, settings.tol, polished) && polished.max_residual() <= settings.tol) {
        polished.iterations = it;
        polished.status = QpStatus::Solved;
        return polished;
      }
    }
    if (cand.max_residual() < best.max_residual() || best.iterations == 0) best = cand;

    if (settings.adaptive_step && it % kAdaptEvery == 0) {
      const VectorXd ax = s.a * x;
      const double prim = inf_norm(ax - z);
      const VectorXd aty = at * y;
      const double dual = inf_norm(d.cwiseProduct(x) + q + aty);
      const double prim_scale = std::max({inf_norm(ax), inf_norm(z), 1e-12});
      const double dual_scale = std::max({inf_norm(d.cwiseProduct(x)), inf_norm(aty), inf_norm(q), 1e-12});
      if (prim > 0 && dual > 0) {
        const double proposed =
            std::clamp(base_step * std::sqrt((prim / prim_scale) / (dual / dual_scale)), kMinStep, kMaxStep);
        if (proposed > 5.0 * base_step || proposed < 0.2 * base_step) {
          base_step = proposed;
          set_steps();
          refactor();
        }
      }
    }
  }

  if (settings.polish) {
    QpSolution polished;
    if (polish(p, s, z, y, settings.tol, polished) && polished.max_residual() < best.max_residual()) {
      polished.iterations = settings.max_iters;
      best = std::move(polished);
    }
  }
  best.iterations = settings.max_iters;
  best.status = best.max_residual() <= settings.tol ? QpStatus::Solved : QpStatus::MaxIters;
  return best;
}

void dump_qp(const QuadraticProgram& p, std::ostream& out) {
  out << "dim " << p.dim() << " eq_rows " << p.eq.row_count() << " ineq_rows " << p.ineq.row_count() << '\n';
  for (int i = 0; i < p.dim(); ++i)
    out << "var " << i << " d " << p.diag[static_cast<std::size_t>(i)] << " q " << p.linear[static_cast<std::size_t>(i)]
        << " lo " << p.lower[static_cast<std::size_t>(i)] << " hi " << p.upper[static_cast<std::size_t>(i)] << '\n';
  auto rows = [&](const char* tag, const SparseRows& m, const std::vector<double>& rhs, const char* rel) {
    for (int r = 0; r < m.row_count(); ++r) {
      out << tag << ' ' << r << ':';
      for (const auto& [c, v] : m.rows[static_cast<std::size_t>(r)]) out << ' ' << v << "*v" << c;
      out << ' ' << rel << ' ' << rhs[static_cast<std::size_t>(r)] << '\n';
    }
  };
  rows("eq", p.eq, p.eq_rhs, "=");
  rows("ineq", p.ineq, p.ineq_rhs, "<=");
}

}  // namespace treeadmm
