#pragma once

#include <iosfwd>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "treeadmm/consensus.hpp"
#include "treeadmm/graph.hpp"
#include "treeadmm/qp.hpp"

namespace treeadmm {

class InstanceError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

struct Commodity {
  Node origin;
  Node destination;
  bool operator==(const Commodity&) const = default;
};

/// Hop-constrained tree design instance: pick a spanning tree of minimum
/// edge cost on which every commodity's path has at most hop_bound arcs.
class Instance {
public:
  Instance(UndirectedGraph graph, std::vector<double> costs, std::vector<Commodity> commodities, int hop_bound);

  const UndirectedGraph& graph() const { return graph_; }
  const DirectedArcSet& arcs() const { return arcs_; }
  const std::vector<double>& costs() const { return costs_; }
  const std::vector<Commodity>& commodities() const { return commodities_; }
  int hop_bound() const { return hop_bound_; }

  int node_count() const { return graph_.node_count(); }
  int edge_count() const { return graph_.edge_count(); }
  int arc_count() const { return arcs_.arc_count(); }
  int commodity_count() const { return static_cast<int>(commodities_.size()); }
  /// Length of the stacked flow vector, 2m|F|.
  int flow_size() const { return arc_count() * commodity_count(); }

private:
  UndirectedGraph graph_;
  DirectedArcSet arcs_;
  std::vector<double> costs_;
  std::vector<Commodity> commodities_;
  int hop_bound_;
};

/// Stacked per-commodity arc values, commodity-major.
struct FlowAssignment {
  int arc_count = 0;
  int commodity_count = 0;
  std::vector<double> values;

  FlowAssignment() = default;
  FlowAssignment(int arcs, int commodities)
      : arc_count(arcs), commodity_count(commodities), values(static_cast<std::size_t>(arcs * commodities), 0.0) {}

  std::size_t index(int commodity, int arc) const {
    return static_cast<std::size_t>(commodity) * static_cast<std::size_t>(arc_count) + static_cast<std::size_t>(arc);
  }
  /// Inverse of index(): (commodity, arc).
  std::pair<int, int> locate(std::size_t flat) const {
    return {static_cast<int>(flat / static_cast<std::size_t>(arc_count)),
            static_cast<int>(flat % static_cast<std::size_t>(arc_count))};
  }
  double& at(int commodity, int arc) { return values[index(commodity, arc)]; }
  double at(int commodity, int arc) const { return values[index(commodity, arc)]; }
};

/// One agent's local copies and multipliers in the distributed scheme.
///
/// nu and xi are the scaled neighbour-consensus multipliers for the u and w
/// copies; they start at zero.
struct AgentState {
  Node id = 0;
  std::vector<double> w;
  std::vector<double> u;
  TreeIndicator z;
  FlowAssignment y;
  std::vector<double> mu;
  std::vector<double> eta;
  std::vector<double> nu;
  std::vector<double> xi;
  int iteration = 0;
  QpWarmStart warm;
  int qp_iterations = 0;
  QpStatus qp_status = QpStatus::Solved;
};

/// Column layout of the (w, u) subproblems: w block, then u commodity-major.
struct VariableLayout {
  int edges;
  int arcs;
  int commodities;

  explicit VariableLayout(const Instance& inst)
      : edges(inst.edge_count()), arcs(inst.arc_count()), commodities(inst.commodity_count()) {}
  int w(int e) const { return e; }
  int u(int f, int a) const { return edges + f * arcs + a; }
  int size() const { return edges + arcs * commodities; }
};

/// Relaxed constraint set: flow conservation per node and commodity,
/// coupling u_ij + u_ji <= w_ij, hop rows, and the [0,1] box. The
/// spanning-tree counting constraints are deliberately left out; the tree
/// projection enforces them.
QuadraticProgram relaxed_constraint_set(const Instance& inst);

/// (u, w) subproblem of one centralized iteration:
///   c'w + rho/2 ||z - w + mu||^2 + rho/2 ||y - u + eta||^2  over the relaxed set.
QuadraticProgram build_centralized_subproblem(const Instance& inst, const TreeIndicator& z, const FlowAssignment& y,
                                              std::span<const double> mu, std::span<const double> eta, double rho);

/// Adds rho/2 ||target - v||^2 on the w block (target = z + mu) or the u block.
void add_proximal_w(QuadraticProgram& qp, const VariableLayout& layout, std::span<const double> target, double coef);
void add_proximal_u(QuadraticProgram& qp, const VariableLayout& layout, std::span<const double> target, double coef);
/// Adds coef * g'v on the given block.
void add_linear_w(QuadraticProgram& qp, const VariableLayout& layout, std::span<const double> g, double coef);
void add_linear_u(QuadraticProgram& qp, const VariableLayout& layout, std::span<const double> g, double coef);

/// Agent i's (u, w) subproblem: local cost f^i, the two penalty blocks,
/// rho * (nu'u + xi'w), and consensus quadratics toward the midpoints with
/// each neighbour's round-k copies. neighbors must hold the round-k states of
/// graph().neighbors(agent), in that order; a missing entry throws
/// InstanceError.
QuadraticProgram build_agent_subproblem(const Instance& inst, Node agent, const AgentState& local,
                                        std::span<const AgentState* const> neighbors, double rho,
                                        ConsensusForm form = ConsensusForm::Undirected);

/// Local cost of agent i: half the cost of every incident edge.
std::vector<double> agent_edge_costs(const Instance& inst, Node agent);

/// Counts used for the per-build log line.
std::string describe_subproblem(const Instance& inst, const QuadraticProgram& qp);

struct FeasibilityVerdict {
  bool feasible = true;
  std::vector<std::string> violations;
};

FeasibilityVerdict check_feasible(const Instance& inst, const TreeIndicator& z, const FlowAssignment& y);

/// Total edge cost c'v; v may be binary or fractional.
double objective(const Instance& inst, std::span<const double> v);
double objective(const Instance& inst, const TreeIndicator& z);

struct Routing {
  FlowAssignment flows;
  /// Commodities whose tree path exceeds the hop bound.
  std::vector<int> over_hop_bound;
  bool feasible() const { return over_hop_bound.empty(); }
};

/// Routes every commodity along its unique tree path. Throws GraphError if z is not a spanning tree.
Routing route_on_tree(const Instance& inst, const TreeIndicator& z);

struct InstanceOptions {
  int n = 10;
  double p = 0.5;
  std::uint64_t seed = 0;
  /// Number of commodities; <= 0 selects floor(n/5), at least 1.
  int commodities = 0;
  /// Hop bound starts at the largest commodity hop distance plus this slack.
  int hop_slack = 2;
  int max_graph_attempts = 1000;
  /// Edge costs are drawn from {k * cost_scale / 1000 : k = 1..1000}.
  double cost_scale = 10.0;
};

/// Random instance: connected G(n,p) graph, costs uniform on (0, cost_scale] in
/// steps of cost_scale / 1000, commodity endpoints drawn uniformly (distinct per pair).
/// graph_attempts, when given, receives the number of graph draws used.
Instance generate_instance(const InstanceOptions& opts, int* graph_attempts = nullptr);

void write_instance(std::ostream& out, const Instance& inst, const TreeIndicator* tree = nullptr);

struct ParsedInstance {
  Instance instance;
  std::optional<TreeIndicator> tree;
};

ParsedInstance read_instance(std::istream& in);
Instance load_instance(const std::string& path);

}  // namespace treeadmm
