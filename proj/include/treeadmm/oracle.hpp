#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <stdexcept>
#include <vector>

#include "treeadmm/graph.hpp"
#include "treeadmm/model_mcf.hpp"

namespace treeadmm {

class BudgetExceeded : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Limits checked before and during exhaustive enumeration. Exceeding one
/// throws BudgetExceeded; results are never truncated.
struct EnumerationBudget {
  int max_edges = 24;
  std::int64_t max_trees = 10'000'000;
};

/// Calls visit for every spanning tree of g exactly once and returns the count.
///
/// Edges are decided in index order with a rollback union-find; a branch is
/// cut as soon as it would close a cycle or leave the remaining edges unable
/// to connect the graph.
std::int64_t for_each_spanning_tree(const UndirectedGraph& g, const EnumerationBudget& budget,
                                    const std::function<void(const TreeIndicator&)>& visit);

std::vector<TreeIndicator> enumerate_spanning_trees(const UndirectedGraph& g, const EnumerationBudget& budget = {});

/// Number of spanning trees from the matrix-tree theorem (any cofactor of the Laplacian).
double kirchhoff_tree_count(const UndirectedGraph& g);

/// Every spanning arborescence rooted at root. Each non-root node picks one
/// in-arc; the candidate count (product of in-degrees) must fit max_trees.
std::vector<TreeIndicator> enumerate_arborescences(const DirectedArcSet& arcs, Node root,
                                                   const EnumerationBudget& budget = {});

struct ExactSolution {
  bool feasible = false;
  TreeIndicator tree;
  double objective = 0.0;
  std::int64_t trees_examined = 0;
};

/// Optimal hop-feasible spanning tree by enumeration. On a fixed tree every
/// commodity's route is forced, so checking tree-path hop counts is exact.
ExactSolution exact_solve(const Instance& inst, const EnumerationBudget& budget = {});

struct ExactProjection {
  TreeIndicator tree;
  double distance_sq = 0.0;
};

/// Brute-force minimizer of ||z - w + mu||^2 over all spanning trees.
ExactProjection exact_project(std::span<const double> w, std::span<const double> mu, const UndirectedGraph& g,
                              const EnumerationBudget& budget = {});

/// Largest hop count over the commodities' tree paths (no validity check on z).
int max_tree_path_hops(const Instance& inst, const TreeIndicator& z);

}  // namespace treeadmm
