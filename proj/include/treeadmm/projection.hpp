#pragma once

#include <span>
#include <stdexcept>
#include <variant>
#include <vector>

#include "treeadmm/graph.hpp"

namespace treeadmm {

class ProjectionError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Minimum-weight spanning tree by Kruskal; equal weights resolve to the lower edge index.
/// Weights may be negative. Throws ProjectionError if g is disconnected.
TreeIndicator mst_kruskal(const UndirectedGraph& g, std::span<const double> weights);

/// Minimum-weight spanning arborescence rooted at `root` (Chu-Liu/Edmonds).
///
/// Cycles of the cheapest-in-arc selection are contracted, the reduced
/// problem is solved recursively, and the result is expanded back by
/// dropping the one cycle arc displaced by the entering arc. When several
/// in-arcs of a node share the minimum weight the lowest arc index wins.
/// Throws ProjectionError if some node is unreachable from the root.
TreeIndicator mwra_edmonds(const DirectedArcSet& arcs, Node root, std::span<const double> weights);

struct RootedArcs {
  const DirectedArcSet* arcs;
  Node root;
};

using TreeTopology = std::variant<const UndirectedGraph*, RootedArcs>;

/// Nearest tree indicator to (w_next - mu) in Euclidean norm.
///
/// Every tree has the same number of edges, so the squared distance reduces
/// to a linear objective with weights mu - w_next; the minimizer is then a
/// minimum spanning tree (or arborescence) under those weights.
TreeIndicator project_tree(std::span<const double> w_next, std::span<const double> mu,
                           const TreeTopology& topology);

/// Weights mu - w_next used by project_tree.
std::vector<double> projection_weights(std::span<const double> w_next, std::span<const double> mu);

/// Componentwise nearest point of {0,1}; exactly 0.5 rounds up.
std::vector<double> project_binary(std::span<const double> v);

/// Sum of weights over the selected indices.
double selected_weight(const TreeIndicator& z, std::span<const double> weights);

}  // namespace treeadmm
