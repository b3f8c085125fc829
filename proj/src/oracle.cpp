#include "treeadmm/oracle.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <deque>
#include <string>

namespace treeadmm {

namespace {

// Union-find without path compression so unions can be undone in LIFO order.
class RollbackSets {
public:
  explicit RollbackSets(int n) : parent_(static_cast<std::size_t>(n)), size_(static_cast<std::size_t>(n), 1) {
    for (int i = 0; i < n; ++i) parent_[static_cast<std::size_t>(i)] = i;
  }
  int find(int x) const {
    while (parent_[static_cast<std::size_t>(x)] != x) x = parent_[static_cast<std::size_t>(x)];
    return x;
  }
  bool unite(int a, int b) {
    a = find(a);
    b = find(b);
    if (a == b) return false;
    if (size_[static_cast<std::size_t>(a)] < size_[static_cast<std::size_t>(b)]) std::swap(a, b);
    parent_[static_cast<std::size_t>(b)] = a;
    size_[static_cast<std::size_t>(a)] += size_[static_cast<std::size_t>(b)];
    history_.push_back(b);
    return true;
  }
  void undo() {
    const int b = history_.back();
    history_.pop_back();
    const int a = parent_[static_cast<std::size_t>(b)];
    size_[static_cast<std::size_t>(a)] -= size_[static_cast<std::size_t>(b)];
    parent_[static_cast<std::size_t>(b)] = b;
  }

private:
  std::vector<int> parent_;
  std::vector<int> size_;
  std::vector<int> history_;
};

class TreeEnumerator {
public:
  TreeEnumerator(const UndirectedGraph& g, const EnumerationBudget& budget,
                 const std::function<void(const TreeIndicator&)>& visit)
      : g_(g), budget_(budget), visit_(visit), sets_(g.node_count()),
        current_(static_cast<std::size_t>(g.edge_count())), excluded_(static_cast<std::size_t>(g.edge_count()), 0) {}

  std::int64_t run() {
    recurse(0, 0);
    return count_;
  }

private:
  // Connected using chosen edges plus every undecided or chosen edge (not excluded).
  bool still_connectable() const {
    DisjointSets dsu(g_.node_count());
    for (int e = 0; e < g_.edge_count(); ++e)
      if (!excluded_[static_cast<std::size_t>(e)]) dsu.unite(g_.edge(e).u, g_.edge(e).v);
    return dsu.components() == 1;
  }

  void recurse(int e, int chosen) {
    const int need = g_.node_count() - 1;
    if (chosen == need) {
      if (++count_ > budget_.max_trees)
        throw BudgetExceeded("spanning tree count exceeds budget of " + std::to_string(budget_.max_trees));
      visit_(current_);
      return;
    }
    if (need - chosen > g_.edge_count() - e) return;
    const auto& ed = g_.edge(e);
    if (sets_.unite(ed.u, ed.v)) {
      current_.bits[static_cast<std::size_t>(e)] = 1;
      recurse(e + 1, chosen + 1);
      current_.bits[static_cast<std::size_t>(e)] = 0;
      sets_.undo();
    }
    excluded_[static_cast<std::size_t>(e)] = 1;
    if (still_connectable()) recurse(e + 1, chosen);
    excluded_[static_cast<std::size_t>(e)] = 0;
  }

  const UndirectedGraph& g_;
  const EnumerationBudget& budget_;
  const std::function<void(const TreeIndicator&)>& visit_;
  RollbackSets sets_;
  TreeIndicator current_;
  std::vector<std::uint8_t> excluded_;
  std::int64_t count_ = 0;
};

void check_edge_budget(int m, const EnumerationBudget& budget) {
  if (m > budget.max_edges)
    throw BudgetExceeded("edge count " + std::to_string(m) + " exceeds enumeration budget of " +
                         std::to_string(budget.max_edges));
}

}  // namespace

std::int64_t for_each_spanning_tree(const UndirectedGraph& g, const EnumerationBudget& budget,
                                    const std::function<void(const TreeIndicator&)>& visit) {
  check_edge_budget(g.edge_count(), budget);
  if (!g.is_connected()) return 0;
  std::function<void(const TreeIndicator&)> marked = [&](const TreeIndicator& z) {
    TreeIndicator copy = z;
    copy.valid = true;
    visit(copy);
  };
  TreeEnumerator en(g, budget, marked);
  return en.run();
}

std::vector<TreeIndicator> enumerate_spanning_trees(const UndirectedGraph& g, const EnumerationBudget& budget) {
  std::vector<TreeIndicator> out;
  for_each_spanning_tree(g, budget, [&](const TreeIndicator& z) { out.push_back(z); });
  return out;
}

double kirchhoff_tree_count(const UndirectedGraph& g) {
  const int n = g.node_count();
  Eigen::MatrixXd lap = Eigen::MatrixXd::Zero(n, n);
  for (const auto& e : g.edges()) {
    lap(e.u, e.u) += 1;
    lap(e.v, e.v) += 1;
    lap(e.u, e.v) -= 1;
    lap(e.v, e.u) -= 1;
  }
  const Eigen::MatrixXd minor = lap.bottomRightCorner(n - 1, n - 1);
  return std::round(minor.fullPivLu().determinant());
}

std::vector<TreeIndicator> enumerate_arborescences(const DirectedArcSet& arcs, Node root,
                                                   const EnumerationBudget& budget) {
  check_edge_budget(arcs.arc_count() / 2, budget);
  const int n = arcs.node_count();
  std::vector<Node> others;
  double candidates = 1.0;
  for (Node v = 0; v < n; ++v) {
    if (v == root) continue;
    others.push_back(v);
    candidates *= static_cast<double>(arcs.in_arcs(v).size());
  }
  if (candidates > static_cast<double>(budget.max_trees))
    throw BudgetExceeded("arborescence candidate count exceeds budget");
  std::vector<TreeIndicator> out;
  if (candidates == 0.0) return out;
  std::vector<std::size_t> pick(others.size(), 0);
  while (true) {
    TreeIndicator z(static_cast<std::size_t>(arcs.arc_count()));
    bool self_ok = true;
    for (std::size_t k = 0; k < others.size(); ++k) {
      const int a = arcs.in_arcs(others[k])[pick[k]];
      z.bits[static_cast<std::size_t>(a)] = 1;
      if (arcs.arc(a).tail == others[k]) self_ok = false;
    }
    if (self_ok && is_arborescence(arcs, root, z)) {
      z.valid = true;
      out.push_back(std::move(z));
    }
    std::size_t k = 0;
    for (; k < others.size(); ++k) {
      if (++pick[k] < arcs.in_arcs(others[k]).size()) break;
      pick[k] = 0;
    }
    if (k == others.size()) break;
  }
  return out;
}

int max_tree_path_hops(const Instance& inst, const TreeIndicator& z) {
  const auto& g = inst.graph();
  const int n = g.node_count();
  int worst = 0;
  std::vector<int> depth(static_cast<std::size_t>(n));
  for (const auto& com : inst.commodities()) {
    std::fill(depth.begin(), depth.end(), -1);
    depth[static_cast<std::size_t>(com.origin)] = 0;
    std::deque<Node> queue{com.origin};
    while (!queue.empty() && depth[static_cast<std::size_t>(com.destination)] < 0) {
      const Node x = queue.front();
      queue.pop_front();
      for (int e : g.incident(x)) {
        if (!z[static_cast<std::size_t>(e)]) continue;
        const Node y = g.edge(e).u == x ? g.edge(e).v : g.edge(e).u;
        if (depth[static_cast<std::size_t>(y)] < 0) {
          depth[static_cast<std::size_t>(y)] = depth[static_cast<std::size_t>(x)] + 1;
          queue.push_back(y);
        }
      }
    }
    const int d = depth[static_cast<std::size_t>(com.destination)];
    worst = std::max(worst, d < 0 ? n : d);
  }
  return worst;
}

ExactSolution exact_solve(const Instance& inst, const EnumerationBudget& budget) {
  ExactSolution best;
  best.trees_examined = for_each_spanning_tree(inst.graph(), budget, [&](const TreeIndicator& z) {
    const double cost = objective(inst, z);
    if (best.feasible && cost >= best.objective) return;
    if (max_tree_path_hops(inst, z) > inst.hop_bound()) return;
    best.feasible = true;
    best.objective = cost;
    best.tree = z;
  });
  return best;
}

ExactProjection exact_project(std::span<const double> w, std::span<const double> mu, const UndirectedGraph& g,
                              const EnumerationBudget& budget) {
  if (w.size() != mu.size() || w.size() != static_cast<std::size_t>(g.edge_count()))
    throw std::invalid_argument("exact_project: vector lengths must equal the edge count");
  ExactProjection best;
  bool have = false;
  for_each_spanning_tree(g, budget, [&](const TreeIndicator& z) {
    double d2 = 0.0;
    for (std::size_t e = 0; e < w.size(); ++e) {
      const double r = (z[e] ? 1.0 : 0.0) - w[e] + mu[e];
      d2 += r * r;
    }
    if (!have || d2 < best.distance_sq) {
      have = true;
      best.distance_sq = d2;
      best.tree = z;
    }
  });
  return best;
}

}  // namespace treeadmm
