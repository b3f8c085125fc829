#include "treeadmm/projection.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <unordered_map>

namespace treeadmm {

namespace {

void require_finite(std::span<const double> w) {
  for (double x : w)
    if (!std::isfinite(x)) throw ProjectionError("non-finite weight");
}

struct WorkArc {
  int tail;
  int head;
  double weight;
  int id;  // index into the caller's arc list
};

// Returns the ids of the chosen arcs. Nodes are 0..node_count-1 at this level.
std::vector<int> edmonds_level(int node_count, int root, const std::vector<WorkArc>& arcs) {
  constexpr int kNone = -1;
  // Cheapest in-arc per node; strict < keeps the first (lowest id) among ties
  // because arcs are kept in ascending id order at every level.
  std::vector<int> best(static_cast<std::size_t>(node_count), kNone);
  for (std::size_t a = 0; a < arcs.size(); ++a) {
    const auto& arc = arcs[a];
    if (arc.head == root || arc.tail == arc.head) continue;
    int& b = best[static_cast<std::size_t>(arc.head)];
    if (b == kNone || arc.weight < arcs[static_cast<std::size_t>(b)].weight) b = static_cast<int>(a);
  }
  for (int v = 0; v < node_count; ++v)
    if (v != root && best[static_cast<std::size_t>(v)] == kNone)
      throw ProjectionError("no arborescence exists: node unreachable from root");

  // Cycle detection on the functional graph v -> tail(best[v]).
  std::vector<int> cycle_of(static_cast<std::size_t>(node_count), kNone);
  std::vector<int> mark(static_cast<std::size_t>(node_count), kNone);
  int cycles = 0;
  for (int start = 0; start < node_count; ++start) {
    int v = start;
    while (v != root && mark[static_cast<std::size_t>(v)] == kNone &&
           cycle_of[static_cast<std::size_t>(v)] == kNone) {
      mark[static_cast<std::size_t>(v)] = start;
      v = arcs[static_cast<std::size_t>(best[static_cast<std::size_t>(v)])].tail;
    }
    if (v != root && mark[static_cast<std::size_t>(v)] == start &&
        cycle_of[static_cast<std::size_t>(v)] == kNone) {
      for (int x = v;;) {
        cycle_of[static_cast<std::size_t>(x)] = cycles;
        x = arcs[static_cast<std::size_t>(best[static_cast<std::size_t>(x)])].tail;
        if (x == v) break;
      }
      ++cycles;
    }
  }

  if (cycles == 0) {
    std::vector<int> chosen;
    for (int v = 0; v < node_count; ++v)
      if (v != root) chosen.push_back(arcs[static_cast<std::size_t>(best[static_cast<std::size_t>(v)])].id);
    return chosen;
  }

  // Contract: cycle c becomes node c, remaining nodes follow.
  std::vector<int> label(static_cast<std::size_t>(node_count));
  int next = cycles;
  for (int v = 0; v < node_count; ++v)
    label[static_cast<std::size_t>(v)] = cycle_of[static_cast<std::size_t>(v)] != kNone
                                             ? cycle_of[static_cast<std::size_t>(v)]
                                             : next++;
  std::vector<WorkArc> reduced;
  std::vector<int> origin;  // reduced arc -> arc position at this level
  for (std::size_t a = 0; a < arcs.size(); ++a) {
    const auto& arc = arcs[a];
    const int lt = label[static_cast<std::size_t>(arc.tail)];
    const int lh = label[static_cast<std::size_t>(arc.head)];
    if (lt == lh) continue;
    double w = arc.weight;
    if (cycle_of[static_cast<std::size_t>(arc.head)] != kNone)
      w -= arcs[static_cast<std::size_t>(best[static_cast<std::size_t>(arc.head)])].weight;
    reduced.push_back({lt, lh, w, static_cast<int>(reduced.size())});
    origin.push_back(static_cast<int>(a));
  }
  const auto inner = edmonds_level(next, label[static_cast<std::size_t>(root)], reduced);

  std::vector<int> chosen;
  std::vector<int> entered_at(static_cast<std::size_t>(cycles), kNone);
  std::vector<bool> taken(static_cast<std::size_t>(node_count), false);
  for (int r : inner) {
    const auto& arc = arcs[static_cast<std::size_t>(origin[static_cast<std::size_t>(r)])];
    chosen.push_back(arc.id);
    const int c = cycle_of[static_cast<std::size_t>(arc.head)];
    if (c != kNone) entered_at[static_cast<std::size_t>(c)] = arc.head;
  }
  for (int v = 0; v < node_count; ++v) {
    const int c = cycle_of[static_cast<std::size_t>(v)];
    if (c == kNone || entered_at[static_cast<std::size_t>(c)] == v) continue;
    chosen.push_back(arcs[static_cast<std::size_t>(best[static_cast<std::size_t>(v)])].id);
  }
  return chosen;
}

}  // namespace

TreeIndicator mst_kruskal(const UndirectedGraph& g, std::span<const double> weights) {
  const int m = g.edge_count();
  if (weights.size() != static_cast<std::size_t>(m))
    throw ProjectionError("weight vector length " + std::to_string(weights.size()) +
                          " does not match edge count " + std::to_string(m));
  require_finite(weights);
  std::vector<int> order(static_cast<std::size_t>(m));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    return weights[static_cast<std::size_t>(a)] < weights[static_cast<std::size_t>(b)];
  });
  DisjointSets dsu(g.node_count());
  TreeIndicator z(static_cast<std::size_t>(m));
  for (int e : order) {
    if (dsu.unite(g.edge(e).u, g.edge(e).v)) z.bits[static_cast<std::size_t>(e)] = 1;
    if (dsu.components() == 1) break;
  }
  if (dsu.components() != 1) throw ProjectionError("no spanning tree exists: graph is disconnected");
  z.valid = true;
  return z;
}

TreeIndicator mwra_edmonds(const DirectedArcSet& arcs, Node root, std::span<const double> weights) {
  const int count = arcs.arc_count();
  if (weights.size() != static_cast<std::size_t>(count))
    throw ProjectionError("weight vector length does not match arc count");
  if (root < 0 || root >= arcs.node_count()) throw ProjectionError("root out of range");
  require_finite(weights);
  std::vector<WorkArc> work;
  work.reserve(static_cast<std::size_t>(count));
  for (int a = 0; a < count; ++a)
    work.push_back({arcs.arc(a).tail, arcs.arc(a).head, weights[static_cast<std::size_t>(a)], a});
  const auto chosen = edmonds_level(arcs.node_count(), root, work);
  auto z = TreeIndicator::from_indices(static_cast<std::size_t>(count), chosen);
  z.valid = true;
  return z;
}

std::vector<double> projection_weights(std::span<const double> w_next, std::span<const double> mu) {
  if (w_next.size() != mu.size()) throw ProjectionError("w and mu lengths differ");
  std::vector<double> h(w_next.size());
  for (std::size_t i = 0; i < h.size(); ++i) h[i] = mu[i] - w_next[i];
  return h;
}

TreeIndicator project_tree(std::span<const double> w_next, std::span<const double> mu,
                           const TreeTopology& topology) {
  const auto h = projection_weights(w_next, mu);
  if (const auto* g = std::get_if<const UndirectedGraph*>(&topology)) return mst_kruskal(**g, h);
  const auto& rooted = std::get<RootedArcs>(topology);
  return mwra_edmonds(*rooted.arcs, rooted.root, h);
}

std::vector<double> project_binary(std::span<const double> v) {
  std::vector<double> y(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) y[i] = v[i] >= 0.5 ? 1.0 : 0.0;
  return y;
}

double selected_weight(const TreeIndicator& z, std::span<const double> weights) {
  double total = 0.0;
  for (std::size_t i = 0; i < z.size(); ++i)
    if (z[i]) total += weights[i];
  return total;
}

}  // namespace treeadmm
