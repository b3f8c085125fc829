#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

namespace treeadmm {

using Node = int;

struct Edge {
  Node u;
  Node v;
  bool operator==(const Edge&) const = default;
};

struct Arc {
  Node tail;
  Node head;
  bool operator==(const Arc&) const = default;
};

class GraphError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Simple undirected graph with dense, stable edge indices.
///
/// Edge indices follow the order given to the constructor; endpoints are kept
/// as written. Self-loops and parallel edges are rejected.
class UndirectedGraph {
public:
  UndirectedGraph(int node_count, std::vector<Edge> edges);

  int node_count() const { return n_; }
  int edge_count() const { return static_cast<int>(edges_.size()); }
  const std::vector<Edge>& edges() const { return edges_; }
  const Edge& edge(int e) const { return edges_[static_cast<std::size_t>(e)]; }

  /// Incident edge indices of node i, ascending.
  std::span<const int> incident(Node i) const { return incident_[static_cast<std::size_t>(i)]; }
  /// Neighbour nodes of i, in the same order as incident(i).
  std::vector<Node> neighbors(Node i) const;
  /// Edge index joining a and b, if any.
  std::optional<int> find_edge(Node a, Node b) const;

  bool is_connected() const;
  /// BFS hop distances from source (-1 when unreachable).
  std::vector<int> hop_distances(Node source) const;

private:
  int n_;
  std::vector<Edge> edges_;
  std::vector<std::vector<int>> incident_;
};

/// Arc set with in/out adjacency; arcs are indexed densely and stably.
class DirectedArcSet {
public:
  DirectedArcSet(int node_count, std::vector<Arc> arcs, std::vector<int> parent_edge = {});

  int node_count() const { return n_; }
  int arc_count() const { return static_cast<int>(arcs_.size()); }
  const std::vector<Arc>& arcs() const { return arcs_; }
  const Arc& arc(int a) const { return arcs_[static_cast<std::size_t>(a)]; }

  std::span<const int> in_arcs(Node i) const { return in_[static_cast<std::size_t>(i)]; }
  std::span<const int> out_arcs(Node i) const { return out_[static_cast<std::size_t>(i)]; }
  /// Undirected edge an arc was derived from, or -1.
  int parent_edge(int a) const {
    return parent_.empty() ? -1 : parent_[static_cast<std::size_t>(a)];
  }

  /// Nodes reachable from root along arcs.
  std::vector<bool> reachable_from(Node root) const;

private:
  int n_;
  std::vector<Arc> arcs_;
  std::vector<int> parent_;
  std::vector<std::vector<int>> in_;
  std::vector<std::vector<int>> out_;
};

/// Both orientations of every edge: arc e is (u,v) of edge e, arc m+e is (v,u).
DirectedArcSet bidirect(const UndirectedGraph& g);

/// Binary selection over edge or arc indices.
struct TreeIndicator {
  std::vector<std::uint8_t> bits;
  /// Set only by a successful spanning-tree or arborescence check.
  bool valid = false;

  TreeIndicator() = default;
  explicit TreeIndicator(std::size_t size) : bits(size, 0) {}
  static TreeIndicator from_indices(std::size_t size, std::span<const int> selected);

  std::size_t size() const { return bits.size(); }
  bool operator[](std::size_t i) const { return bits[i] != 0; }
  int popcount() const;
  std::vector<int> selected() const;
  std::vector<double> as_real() const;
};

/// Erdos-Renyi G(n,p), resampled until connected.
///
/// Throws GraphError once max_attempts draws have all been disconnected.
/// attempts_out, when given, receives the number of draws used.
UndirectedGraph generate_erdos_renyi(int n, double p, std::uint64_t seed, int max_attempts = 1000,
                                     int* attempts_out = nullptr);

bool is_spanning_tree(const UndirectedGraph& g, const TreeIndicator& z);

/// Marks z valid after checking it; throws GraphError otherwise.
void validate_spanning_tree(const UndirectedGraph& g, TreeIndicator& z);

/// Rooted spanning arborescence check: n-1 arcs, in-degree 1 off the root, all reachable.
bool is_arborescence(const DirectedArcSet& arcs, Node root, const TreeIndicator& z);

/// Unique s->t path along tree edges as directed arcs.
std::vector<Arc> tree_path(const UndirectedGraph& g, const TreeIndicator& z, Node s, Node t);

/// Disjoint-set forest with union by size and path halving.
class DisjointSets {
public:
  explicit DisjointSets(int n);
  int find(int x);
  bool unite(int a, int b);
  int components() const { return components_; }

private:
  std::vector<int> parent_;
  std::vector<int> size_;
  int components_;
};

}  // namespace treeadmm
