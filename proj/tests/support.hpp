#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "treeadmm/graph.hpp"
#include "treeadmm/model_mcf.hpp"
#include "treeadmm/qp.hpp"
#include "treeadmm/rng.hpp"

namespace testing {

using namespace treeadmm;

// e0=(0,1), e1=(1,2), e2=(0,2)
inline UndirectedGraph k3() { return UndirectedGraph(3, {{0, 1}, {1, 2}, {0, 2}}); }

inline Instance k3_instance(std::vector<double> costs, Commodity c, int hop_bound) {
  return Instance(k3(), std::move(costs), {c}, hop_bound);
}

inline Instance single_edge_instance() { return Instance(UndirectedGraph(2, {{0, 1}}), {1.0}, {{0, 1}}, 1); }

inline TreeIndicator indicator(std::initializer_list<int> bits) {
  TreeIndicator z(bits.size());
  std::size_t i = 0;
  for (int b : bits) z.bits[i++] = static_cast<std::uint8_t>(b);
  return z;
}

inline double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

inline double dist_sq(const TreeIndicator& z, const std::vector<double>& w, const std::vector<double>& mu) {
  double s = 0.0;
  for (std::size_t e = 0; e < w.size(); ++e) {
    const double r = (z[e] ? 1.0 : 0.0) - w[e] + mu[e];
    s += r * r;
  }
  return s;
}

// popcount = n-1 and a plain union-find leaves one component.
inline bool dsu_tree_check(const UndirectedGraph& g, const TreeIndicator& z) {
  const int n = g.node_count();
  if (z.popcount() != n - 1) return false;
  std::vector<int> parent(static_cast<std::size_t>(n));
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](int x) {
    while (parent[static_cast<std::size_t>(x)] != x) x = parent[static_cast<std::size_t>(x)];
    return x;
  };
  int components = n;
  for (int e = 0; e < g.edge_count(); ++e) {
    if (!z[static_cast<std::size_t>(e)]) continue;
    const int a = find(g.edge(e).u), b = find(g.edge(e).v);
    if (a != b) {
      parent[static_cast<std::size_t>(a)] = b;
      --components;
    }
  }
  return components == 1;
}

// G(n, p) draw that may be disconnected; callers filter.
inline UndirectedGraph random_graph(int n, double p, Rng& rng) {
  std::vector<Edge> edges;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      if (rng.bernoulli(p)) edges.push_back({i, j});
  return UndirectedGraph(n, std::move(edges));
}

// Strictly convex diagonal QP with a known feasible point strictly inside the box.
inline QuadraticProgram random_qp(Rng& rng, int dim) {
  QuadraticProgram p;
  p.diag.resize(static_cast<std::size_t>(dim));
  p.linear.resize(static_cast<std::size_t>(dim));
  p.lower.assign(static_cast<std::size_t>(dim), 0.0);
  p.upper.assign(static_cast<std::size_t>(dim), 1.0);
  std::vector<double> x0(static_cast<std::size_t>(dim));
  for (int i = 0; i < dim; ++i) {
    p.diag[static_cast<std::size_t>(i)] = rng.uniform(0.2, 2.0);
    p.linear[static_cast<std::size_t>(i)] = rng.uniform(-2.0, 2.0);
    x0[static_cast<std::size_t>(i)] = rng.uniform(0.1, 0.9);
    if (rng.bernoulli(0.2)) {
      p.lower[static_cast<std::size_t>(i)] = -1.0;
      p.upper[static_cast<std::size_t>(i)] = 2.0;
    }
  }
  p.eq.cols = p.ineq.cols = dim;
  auto random_row = [&] {
    std::vector<std::pair<int, double>> row;
    for (int i = 0; i < dim; ++i)
      if (rng.bernoulli(std::min(1.0, 4.0 / dim))) row.emplace_back(i, rng.uniform(-1.0, 1.0));
    if (row.empty()) row.emplace_back(static_cast<int>(rng.uniform_int(0, dim - 1)), 1.0);
    return row;
  };
  auto dot = [&](const std::vector<std::pair<int, double>>& row) {
    double s = 0.0;
    for (auto [c, a] : row) s += a * x0[static_cast<std::size_t>(c)];
    return s;
  };
  const int eq_rows = static_cast<int>(rng.uniform_int(0, dim / 4));
  const int in_rows = static_cast<int>(rng.uniform_int(0, dim / 2));
  for (int r = 0; r < eq_rows; ++r) {
    auto row = random_row();
    p.eq_rhs.push_back(dot(row));
    p.eq.add_row(std::move(row));
  }
  for (int r = 0; r < in_rows; ++r) {
    auto row = random_row();
    // Half the rows pass through x0 so some are likely active.
    p.ineq_rhs.push_back(dot(row) + (rng.bernoulli(0.5) ? 0.0 : rng.uniform(0.0, 0.5)));
    p.ineq.add_row(std::move(row));
  }
  return p;
}

// Accelerated projected gradient ascent on the dual of a strictly convex
// diagonal QP. x(y) = clip((-q - A'y) / d, lo, hi) is the primal minimizer
// for fixed multipliers; inequality multipliers are projected onto y >= 0.
inline std::vector<double> dual_gradient_oracle(const QuadraticProgram& p, int max_steps = 1'000'000) {
  const auto n = static_cast<std::size_t>(p.dim());
  const auto me = static_cast<std::size_t>(p.eq.row_count());
  const auto mi = static_cast<std::size_t>(p.ineq.row_count());
  auto primal = [&](const std::vector<double>& y) {
    std::vector<double> g(p.linear);
    for (std::size_t r = 0; r < me; ++r)
      for (auto [c, a] : p.eq.rows[r]) g[static_cast<std::size_t>(c)] += a * y[r];
    for (std::size_t r = 0; r < mi; ++r)
      for (auto [c, a] : p.ineq.rows[r]) g[static_cast<std::size_t>(c)] += a * y[me + r];
    std::vector<double> x(n);
    for (std::size_t i = 0; i < n; ++i) x[i] = std::clamp(-g[i] / p.diag[i], p.lower[i], p.upper[i]);
    return x;
  };
  double frob = 0.0;
  for (const auto& row : p.eq.rows)
    for (auto [c, a] : row) frob += a * a;
  for (const auto& row : p.ineq.rows)
    for (auto [c, a] : row) frob += a * a;
  const double dmin = *std::min_element(p.diag.begin(), p.diag.end());
  const double step = dmin / std::max(frob, 1e-12);

  std::vector<double> y(me + mi, 0.0), v(y);
  std::vector<double> x = primal(y);
  double t = 1.0;
  for (int k = 0; k < max_steps && me + mi > 0; ++k) {
    x = primal(v);
    std::vector<double> next(v);
    for (std::size_t r = 0; r < me; ++r) next[r] += step * (p.eq.row_dot(static_cast<int>(r), x) - p.eq_rhs[r]);
    for (std::size_t r = 0; r < mi; ++r)
      next[me + r] = std::max(0.0, next[me + r] + step * (p.ineq.row_dot(static_cast<int>(r), x) - p.ineq_rhs[r]));
    const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
    double change = 0.0;
    for (std::size_t r = 0; r < y.size(); ++r) {
      change = std::max(change, std::abs(next[r] - y[r]));
      v[r] = next[r] + ((t - 1.0) / t_next) * (next[r] - y[r]);
    }
    y = next;
    t = t_next;
    if (change < 1e-13 && k > 100) break;
  }
  return primal(y);
}

}  // namespace testing
