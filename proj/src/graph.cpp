#include "treeadmm/graph.hpp"

#include <algorithm>
#include <deque>
#include <numeric>
#include <string>

#include "treeadmm/rng.hpp"

namespace treeadmm {

UndirectedGraph::UndirectedGraph(int node_count, std::vector<Edge> edges)
    : n_(node_count), edges_(std::move(edges)), incident_(static_cast<std::size_t>(std::max(node_count, 0))) {
  if (n_ < 2) throw GraphError("graph needs at least 2 nodes");
  std::vector<std::pair<Node, Node>> seen;
  seen.reserve(edges_.size());
  for (std::size_t e = 0; e < edges_.size(); ++e) {
    const auto [u, v] = edges_[e];
    if (u < 0 || v < 0 || u >= n_ || v >= n_)
      throw GraphError("edge " + std::to_string(e) + " has an endpoint out of range");
    if (u == v) throw GraphError("self-loop at node " + std::to_string(u));
    seen.emplace_back(std::min(u, v), std::max(u, v));
    incident_[static_cast<std::size_t>(u)].push_back(static_cast<int>(e));
    incident_[static_cast<std::size_t>(v)].push_back(static_cast<int>(e));
  }
  std::sort(seen.begin(), seen.end());
  if (std::adjacent_find(seen.begin(), seen.end()) != seen.end())
    throw GraphError("duplicate edge");
}

std::vector<Node> UndirectedGraph::neighbors(Node i) const {
  std::vector<Node> out;
  for (int e : incident(i)) {
    const auto& ed = edge(e);
    out.push_back(ed.u == i ? ed.v : ed.u);
  }
  return out;
}

std::optional<int> UndirectedGraph::find_edge(Node a, Node b) const {
  for (int e : incident(a)) {
    const auto& ed = edge(e);
    if ((ed.u == a && ed.v == b) || (ed.u == b && ed.v == a)) return e;
  }
  return std::nullopt;
}

std::vector<int> UndirectedGraph::hop_distances(Node source) const {
  std::vector<int> dist(static_cast<std::size_t>(n_), -1);
  std::deque<Node> queue{source};
  dist[static_cast<std::size_t>(source)] = 0;
  while (!queue.empty()) {
    const Node x = queue.front();
    queue.pop_front();
    for (int e : incident(x)) {
      const auto& ed = edge(e);
      const Node y = ed.u == x ? ed.v : ed.u;
      if (dist[static_cast<std::size_t>(y)] < 0) {
        dist[static_cast<std::size_t>(y)] = dist[static_cast<std::size_t>(x)] + 1;
        queue.push_back(y);
      }
    }
  }
  return dist;
}

bool UndirectedGraph::is_connected() const {
  const auto d = hop_distances(0);
  return std::none_of(d.begin(), d.end(), [](int x) { return x < 0; });
}

DirectedArcSet::DirectedArcSet(int node_count, std::vector<Arc> arcs, std::vector<int> parent_edge)
    : n_(node_count),
      arcs_(std::move(arcs)),
      parent_(std::move(parent_edge)),
      in_(static_cast<std::size_t>(std::max(node_count, 0))),
      out_(static_cast<std::size_t>(std::max(node_count, 0))) {
  if (n_ < 1) throw GraphError("arc set needs at least 1 node");
  if (!parent_.empty() && parent_.size() != arcs_.size())
    throw GraphError("parent edge map length mismatch");
  for (std::size_t a = 0; a < arcs_.size(); ++a) {
    const auto [t, h] = arcs_[a];
    if (t < 0 || h < 0 || t >= n_ || h >= n_)
      throw GraphError("arc " + std::to_string(a) + " has an endpoint out of range");
    if (t == h) throw GraphError("self-loop arc at node " + std::to_string(t));
    out_[static_cast<std::size_t>(t)].push_back(static_cast<int>(a));
    in_[static_cast<std::size_t>(h)].push_back(static_cast<int>(a));
  }
}

std::vector<bool> DirectedArcSet::reachable_from(Node root) const {
  std::vector<bool> seen(static_cast<std::size_t>(n_), false);
  std::vector<Node> stack{root};
  seen[static_cast<std::size_t>(root)] = true;
  while (!stack.empty()) {
    const Node x = stack.back();
    stack.pop_back();
    for (int a : out_arcs(x)) {
      const Node y = arc(a).head;
      if (!seen[static_cast<std::size_t>(y)]) {
        seen[static_cast<std::size_t>(y)] = true;
        stack.push_back(y);
      }
    }
  }
  return seen;
}

DirectedArcSet bidirect(const UndirectedGraph& g) {
  const int m = g.edge_count();
  std::vector<Arc> arcs(static_cast<std::size_t>(2 * m));
  std::vector<int> parent(static_cast<std::size_t>(2 * m));
  for (int e = 0; e < m; ++e) {
    const auto& ed = g.edge(e);
    arcs[static_cast<std::size_t>(e)] = {ed.u, ed.v};
    arcs[static_cast<std::size_t>(m + e)] = {ed.v, ed.u};
    parent[static_cast<std::size_t>(e)] = e;
    parent[static_cast<std::size_t>(m + e)] = e;
  }
  return DirectedArcSet(g.node_count(), std::move(arcs), std::move(parent));
}

TreeIndicator TreeIndicator::from_indices(std::size_t size, std::span<const int> selected) {
  TreeIndicator z(size);
  for (int i : selected) z.bits.at(static_cast<std::size_t>(i)) = 1;
  return z;
}

int TreeIndicator::popcount() const {
  return static_cast<int>(std::count(bits.begin(), bits.end(), std::uint8_t{1}));
}

std::vector<int> TreeIndicator::selected() const {
  std::vector<int> out;
  for (std::size_t i = 0; i < bits.size(); ++i)
    if (bits[i]) out.push_back(static_cast<int>(i));
  return out;
}

std::vector<double> TreeIndicator::as_real() const { return {bits.begin(), bits.end()}; }

UndirectedGraph generate_erdos_renyi(int n, double p, std::uint64_t seed, int max_attempts,
                                     int* attempts_out) {
  if (n < 2) throw GraphError("graph needs at least 2 nodes");
  if (!(p > 0.0 && p <= 1.0)) throw GraphError("edge probability must lie in (0, 1]");
  Rng rng(seed);
  for (int attempt = 1; attempt <= max_attempts; ++attempt) {
    std::vector<Edge> edges;
    for (Node u = 0; u < n; ++u)
      for (Node v = u + 1; v < n; ++v)
        if (p >= 1.0 || rng.bernoulli(p)) edges.push_back({u, v});
    UndirectedGraph g(n, std::move(edges));
    if (g.is_connected()) {
      if (attempts_out) *attempts_out = attempt;
      return g;
    }
  }
  throw GraphError("could not generate connected graph after " + std::to_string(max_attempts) +
                   " attempts");
}

DisjointSets::DisjointSets(int n)
    : parent_(static_cast<std::size_t>(n)), size_(static_cast<std::size_t>(n), 1), components_(n) {
  std::iota(parent_.begin(), parent_.end(), 0);
}

int DisjointSets::find(int x) {
  while (parent_[static_cast<std::size_t>(x)] != x) {
    auto& px = parent_[static_cast<std::size_t>(x)];
    px = parent_[static_cast<std::size_t>(px)];
    x = px;
  }
  return x;
}

bool DisjointSets::unite(int a, int b) {
  a = find(a);
  b = find(b);
  if (a == b) return false;
  if (size_[static_cast<std::size_t>(a)] < size_[static_cast<std::size_t>(b)]) std::swap(a, b);
  parent_[static_cast<std::size_t>(b)] = a;
  size_[static_cast<std::size_t>(a)] += size_[static_cast<std::size_t>(b)];
  --components_;
  return true;
}

namespace {

void require_length(std::size_t got, int expected) {
  if (got != static_cast<std::size_t>(expected))
    throw GraphError("indicator length " + std::to_string(got) + " does not match " +
                     std::to_string(expected));
}

}  // namespace

bool is_spanning_tree(const UndirectedGraph& g, const TreeIndicator& z) {
  require_length(z.size(), g.edge_count());
  const int n = g.node_count();
  if (z.popcount() != n - 1) return false;
  // n-1 edges without a cycle connect all n nodes.
  DisjointSets dsu(n);
  for (int e = 0; e < g.edge_count(); ++e) {
    if (!z[static_cast<std::size_t>(e)]) continue;
    if (!dsu.unite(g.edge(e).u, g.edge(e).v)) return false;
  }
  return dsu.components() == 1;
}

void validate_spanning_tree(const UndirectedGraph& g, TreeIndicator& z) {
  if (!is_spanning_tree(g, z)) throw GraphError("indicator is not a spanning tree");
  z.valid = true;
}

bool is_arborescence(const DirectedArcSet& arcs, Node root, const TreeIndicator& z) {
  require_length(z.size(), arcs.arc_count());
  const int n = arcs.node_count();
  if (z.popcount() != n - 1) return false;
  std::vector<int> indeg(static_cast<std::size_t>(n), 0);
  std::vector<std::vector<Node>> children(static_cast<std::size_t>(n));
  for (int a : z.selected()) {
    const auto& arc = arcs.arc(a);
    ++indeg[static_cast<std::size_t>(arc.head)];
    children[static_cast<std::size_t>(arc.tail)].push_back(arc.head);
  }
  for (Node i = 0; i < n; ++i)
    if (indeg[static_cast<std::size_t>(i)] != (i == root ? 0 : 1)) return false;
  std::vector<bool> seen(static_cast<std::size_t>(n), false);
  std::vector<Node> stack{root};
  seen[static_cast<std::size_t>(root)] = true;
  int visited = 1;
  while (!stack.empty()) {
    const Node x = stack.back();
    stack.pop_back();
    for (Node y : children[static_cast<std::size_t>(x)]) {
      if (seen[static_cast<std::size_t>(y)]) return false;
      seen[static_cast<std::size_t>(y)] = true;
      ++visited;
      stack.push_back(y);
    }
  }
  return visited == n;
}

std::vector<Arc> tree_path(const UndirectedGraph& g, const TreeIndicator& z, Node s, Node t) {
  if (!is_spanning_tree(g, z)) throw GraphError("tree_path requires a valid spanning tree");
  const int n = g.node_count();
  if (s < 0 || t < 0 || s >= n || t >= n) throw GraphError("path endpoint out of range");
  if (s == t) return {};
  // BFS over tree edges from s, then walk parents back from t.
  std::vector<Node> parent(static_cast<std::size_t>(n), -1);
  parent[static_cast<std::size_t>(s)] = s;
  std::deque<Node> queue{s};
  while (!queue.empty()) {
    const Node x = queue.front();
    queue.pop_front();
    if (x == t) break;
    for (int e : g.incident(x)) {
      if (!z[static_cast<std::size_t>(e)]) continue;
      const auto& ed = g.edge(e);
      const Node y = ed.u == x ? ed.v : ed.u;
      if (parent[static_cast<std::size_t>(y)] < 0) {
        parent[static_cast<std::size_t>(y)] = x;
        queue.push_back(y);
      }
    }
  }
  std::vector<Arc> path;
  for (Node x = t; x != s; x = parent[static_cast<std::size_t>(x)])
    path.push_back({parent[static_cast<std::size_t>(x)], x});
  std::reverse(path.begin(), path.end());
  return path;
}

}  // namespace treeadmm
