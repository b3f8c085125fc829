#include "treeadmm/model_mcf.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "treeadmm/format.hpp"
#include "treeadmm/rng.hpp"

namespace treeadmm {

namespace {

constexpr double kFeasTol = 1e-9;

void require_size(std::size_t got, std::size_t want, const char* what) {
  if (got != want)
    throw InstanceError(std::string(what) + " has length " + std::to_string(got) + ", expected " +
                        std::to_string(want));
}

int arc_between(const Instance& inst, Node a, Node b) {
  const auto e = inst.graph().find_edge(a, b);
  if (!e) throw InstanceError("no edge between " + std::to_string(a) + " and " + std::to_string(b));
  return inst.graph().edge(*e).u == a ? *e : inst.edge_count() + *e;
}

}  // namespace

Instance::Instance(UndirectedGraph graph, std::vector<double> costs, std::vector<Commodity> commodities,
                   int hop_bound)
    : graph_(std::move(graph)),
      arcs_(bidirect(graph_)),
      costs_(std::move(costs)),
      commodities_(std::move(commodities)),
      hop_bound_(hop_bound) {
  require_size(costs_.size(), static_cast<std::size_t>(graph_.edge_count()), "cost vector");
  for (double c : costs_)
    if (!std::isfinite(c) || c < 0.0) throw InstanceError("edge costs must be finite and nonnegative");
  const int n = graph_.node_count();
  for (const auto& [o, d] : commodities_) {
    if (o < 0 || d < 0 || o >= n || d >= n) throw InstanceError("commodity endpoint out of range");
    if (o == d) throw InstanceError("commodity origin equals destination");
  }
  if (hop_bound_ < 1) throw InstanceError("hop bound must be at least 1");
  if (!graph_.is_connected()) throw InstanceError("instance graph is disconnected");
}

QuadraticProgram relaxed_constraint_set(const Instance& inst) {
  const VariableLayout L(inst);
  const int m = inst.edge_count();
  const int n = inst.node_count();
  const auto& arcs = inst.arcs();
  QuadraticProgram qp;
  const auto dim = static_cast<std::size_t>(L.size());
  qp.diag.assign(dim, 0.0);
  qp.linear.assign(dim, 0.0);
  qp.lower.assign(dim, 0.0);
  qp.upper.assign(dim, 1.0);
  qp.eq.cols = qp.ineq.cols = L.size();

  for (int f = 0; f < inst.commodity_count(); ++f) {
    const auto& com = inst.commodities()[static_cast<std::size_t>(f)];
    // out - in = +1 at the origin, -1 at the destination.
    for (Node i = 0; i < n; ++i) {
      std::vector<std::pair<int, double>> row;
      for (int a : arcs.out_arcs(i)) row.emplace_back(L.u(f, a), 1.0);
      for (int a : arcs.in_arcs(i)) row.emplace_back(L.u(f, a), -1.0);
      std::sort(row.begin(), row.end());
      qp.eq.add_row(std::move(row));
      qp.eq_rhs.push_back(i == com.origin ? 1.0 : i == com.destination ? -1.0 : 0.0);
    }
  }
  for (int f = 0; f < inst.commodity_count(); ++f) {
    for (int e = 0; e < m; ++e) {
      qp.ineq.add_row({{L.w(e), -1.0}, {L.u(f, e), 1.0}, {L.u(f, m + e), 1.0}});
      qp.ineq_rhs.push_back(0.0);
    }
  }
  for (int f = 0; f < inst.commodity_count(); ++f) {
    std::vector<std::pair<int, double>> row;
    for (int a = 0; a < inst.arc_count(); ++a) row.emplace_back(L.u(f, a), 1.0);
    qp.ineq.add_row(std::move(row));
    qp.ineq_rhs.push_back(static_cast<double>(inst.hop_bound()));
  }
  return qp;
}

void add_proximal_w(QuadraticProgram& qp, const VariableLayout& L, std::span<const double> target, double coef) {
  require_size(target.size(), static_cast<std::size_t>(L.edges), "w target");
  for (int e = 0; e < L.edges; ++e) {
    const auto c = static_cast<std::size_t>(L.w(e));
    qp.diag[c] += coef;
    qp.linear[c] -= coef * target[static_cast<std::size_t>(e)];
  }
}

void add_proximal_u(QuadraticProgram& qp, const VariableLayout& L, std::span<const double> target, double coef) {
  require_size(target.size(), static_cast<std::size_t>(L.arcs * L.commodities), "u target");
  for (std::size_t k = 0; k < target.size(); ++k) {
    const auto c = static_cast<std::size_t>(L.edges) + k;
    qp.diag[c] += coef;
    qp.linear[c] -= coef * target[k];
  }
}

void add_linear_w(QuadraticProgram& qp, const VariableLayout& L, std::span<const double> g, double coef) {
  require_size(g.size(), static_cast<std::size_t>(L.edges), "w linear term");
  for (int e = 0; e < L.edges; ++e) qp.linear[static_cast<std::size_t>(L.w(e))] += coef * g[static_cast<std::size_t>(e)];
}

void add_linear_u(QuadraticProgram& qp, const VariableLayout& L, std::span<const double> g, double coef) {
  require_size(g.size(), static_cast<std::size_t>(L.arcs * L.commodities), "u linear term");
  for (std::size_t k = 0; k < g.size(); ++k) qp.linear[static_cast<std::size_t>(L.edges) + k] += coef * g[k];
}

QuadraticProgram build_centralized_subproblem(const Instance& inst, const TreeIndicator& z, const FlowAssignment& y,
                                              std::span<const double> mu, std::span<const double> eta, double rho) {
  if (!(rho > 0.0)) throw InstanceError("rho must be positive");
  const auto m = static_cast<std::size_t>(inst.edge_count());
  const auto fl = static_cast<std::size_t>(inst.flow_size());
  require_size(z.size(), m, "tree indicator");
  require_size(mu.size(), m, "mu");
  require_size(y.values.size(), fl, "flow assignment");
  require_size(eta.size(), fl, "eta");
  const VariableLayout L(inst);
  QuadraticProgram qp = relaxed_constraint_set(inst);
  add_linear_w(qp, L, inst.costs(), 1.0);
  std::vector<double> target_w(m), target_u(fl);
  for (std::size_t e = 0; e < m; ++e) target_w[e] = (z[e] ? 1.0 : 0.0) + mu[e];
  for (std::size_t k = 0; k < fl; ++k) target_u[k] = y.values[k] + eta[k];
  add_proximal_w(qp, L, target_w, rho);
  add_proximal_u(qp, L, target_u, rho);
  return qp;
}

std::vector<double> agent_edge_costs(const Instance& inst, Node agent) {
  std::vector<double> c(static_cast<std::size_t>(inst.edge_count()), 0.0);
  for (int e : inst.graph().incident(agent)) c[static_cast<std::size_t>(e)] = 0.5 * inst.costs()[static_cast<std::size_t>(e)];
  return c;
}

QuadraticProgram build_agent_subproblem(const Instance& inst, Node agent, const AgentState& local,
                                        std::span<const AgentState* const> neighbors, double rho, ConsensusForm form) {
  if (!(rho > 0.0)) throw InstanceError("rho must be positive");
  const auto expected = inst.graph().neighbors(agent);
  if (neighbors.size() != expected.size())
    throw InstanceError("agent " + std::to_string(agent) + " expects " + std::to_string(expected.size()) +
                        " neighbor snapshots, got " + std::to_string(neighbors.size()));
  for (std::size_t k = 0; k < neighbors.size(); ++k)
    if (neighbors[k] == nullptr || neighbors[k]->id != expected[k])
      throw InstanceError("missing neighbor snapshot for node " + std::to_string(expected[k]) + " of agent " +
                          std::to_string(agent));
  const auto m = static_cast<std::size_t>(inst.edge_count());
  const auto fl = static_cast<std::size_t>(inst.flow_size());
  const VariableLayout L(inst);
  QuadraticProgram qp = relaxed_constraint_set(inst);
  add_linear_w(qp, L, agent_edge_costs(inst, agent), 1.0);
  std::vector<double> target_w(m), target_u(fl);
  for (std::size_t e = 0; e < m; ++e) target_w[e] = (local.z[e] ? 1.0 : 0.0) + local.mu[e];
  for (std::size_t k = 0; k < fl; ++k) target_u[k] = local.y.values[k] + local.eta[k];
  add_proximal_w(qp, L, target_w, rho);
  add_proximal_u(qp, L, target_u, rho);
  add_linear_u(qp, L, local.nu, rho);
  add_linear_w(qp, L, local.xi, rho);
  // kappa ||v - mid||^2 is a proximal term with coefficient 2 kappa.
  const double prox = 2.0 * consensus_quadratic_coef(form, rho);
  for (const AgentState* nb : neighbors) {
    for (std::size_t e = 0; e < m; ++e) target_w[e] = 0.5 * (local.w[e] + nb->w[e]);
    for (std::size_t k = 0; k < fl; ++k) target_u[k] = 0.5 * (local.u[k] + nb->u[k]);
    add_proximal_w(qp, L, target_w, prox);
    add_proximal_u(qp, L, target_u, prox);
  }
  return qp;
}

std::string describe_subproblem(const Instance& inst, const QuadraticProgram& qp) {
  const int coupling = inst.edge_count() * inst.commodity_count();
  std::ostringstream os;
  os << "subproblem vars=" << qp.dim() << " (w=" << inst.edge_count() << " u=" << inst.flow_size() << ")"
     << " conservation=" << qp.eq.row_count() << " coupling=" << coupling
     << " hop=" << qp.ineq.row_count() - coupling;
  return os.str();
}

FeasibilityVerdict check_feasible(const Instance& inst, const TreeIndicator& z, const FlowAssignment& y) {
  FeasibilityVerdict v;
  auto fail = [&](std::string msg) {
    v.feasible = false;
    v.violations.push_back(std::move(msg));
  };
  const int m = inst.edge_count();
  if (z.size() != static_cast<std::size_t>(m)) {
    fail("tree indicator has wrong length");
    return v;
  }
  if (y.values.size() != static_cast<std::size_t>(inst.flow_size())) {
    fail("flow assignment has wrong length");
    return v;
  }
  if (!is_spanning_tree(inst.graph(), z))
    fail("tree: selected edges (" + std::to_string(z.popcount()) + ") do not form a spanning tree");
  for (std::size_t k = 0; k < y.values.size(); ++k) {
    const double val = y.values[k];
    if (val != 0.0 && val != 1.0) {
      const auto [f, a] = y.locate(k);
      fail("binary: y[" + std::to_string(f) + "][" + std::to_string(a) + "] = " + format_double(val));
    }
  }
  const auto& arcs = inst.arcs();
  for (int f = 0; f < inst.commodity_count(); ++f) {
    const auto& com = inst.commodities()[static_cast<std::size_t>(f)];
    for (Node i = 0; i < inst.node_count(); ++i) {
      double net = 0.0;
      for (int a : arcs.out_arcs(i)) net += y.at(f, a);
      for (int a : arcs.in_arcs(i)) net -= y.at(f, a);
      const double want = i == com.origin ? 1.0 : i == com.destination ? -1.0 : 0.0;
      if (std::abs(net - want) > kFeasTol)
        fail("conservation: commodity " + std::to_string(f) + " node " + std::to_string(i) + " net " +
             format_double(net) + " != " + format_double(want));
    }
    for (int e = 0; e < m; ++e) {
      const double use = y.at(f, e) + y.at(f, m + e);
      if (use > (z[static_cast<std::size_t>(e)] ? 1.0 : 0.0) + kFeasTol)
        fail("coupling: commodity " + std::to_string(f) + " edge " + std::to_string(e));
    }
    double hops = 0.0;
    for (int a = 0; a < inst.arc_count(); ++a) hops += y.at(f, a);
    if (hops > inst.hop_bound() + kFeasTol)
      fail("hop: commodity " + std::to_string(f) + " uses " + format_double(hops) + " arcs > " +
           std::to_string(inst.hop_bound()));
  }
  return v;
}

double objective(const Instance& inst, std::span<const double> v) {
  require_size(v.size(), static_cast<std::size_t>(inst.edge_count()), "objective argument");
  double total = 0.0;
  for (std::size_t e = 0; e < v.size(); ++e) total += inst.costs()[e] * v[e];
  return total;
}

double objective(const Instance& inst, const TreeIndicator& z) { return objective(inst, z.as_real()); }

Routing route_on_tree(const Instance& inst, const TreeIndicator& z) {
  Routing r{FlowAssignment(inst.arc_count(), inst.commodity_count()), {}};
  for (int f = 0; f < inst.commodity_count(); ++f) {
    const auto& com = inst.commodities()[static_cast<std::size_t>(f)];
    const auto path = tree_path(inst.graph(), z, com.origin, com.destination);
    for (const auto& arc : path) r.flows.at(f, arc_between(inst, arc.tail, arc.head)) = 1.0;
    if (static_cast<int>(path.size()) > inst.hop_bound()) r.over_hop_bound.push_back(f);
  }
  return r;
}

Instance generate_instance(const InstanceOptions& opts, int* graph_attempts) {
  UndirectedGraph g = generate_erdos_renyi(opts.n, opts.p, opts.seed, opts.max_graph_attempts, graph_attempts);
  Rng rng(opts.seed * 6364136223846793005ULL + 1442695040888963407ULL);
  std::vector<double> costs(static_cast<std::size_t>(g.edge_count()));
  for (auto& c : costs) c = static_cast<double>(rng.uniform_int(1, 1000)) * opts.cost_scale / 1000.0;

  const int count = opts.commodities > 0 ? opts.commodities : std::max(1, opts.n / 5);
  std::vector<Commodity> commodities;
  int hops = 1;
  for (int f = 0; f < count; ++f) {
    const auto o = static_cast<Node>(rng.uniform_int(0, opts.n - 1));
    auto d = static_cast<Node>(rng.uniform_int(0, opts.n - 2));
    if (d >= o) ++d;
    commodities.push_back({o, d});
    hops = std::max(hops, g.hop_distances(o)[static_cast<std::size_t>(d)]);
  }
  int bound = std::max(1, std::min(opts.n - 1, hops + opts.hop_slack));
  for (;; ++bound) {
    Instance inst(g, costs, commodities, bound);
    QuadraticProgram probe = relaxed_constraint_set(inst);
    std::fill(probe.diag.begin(), probe.diag.end(), 1.0);
    const auto sol = solve_qp(probe);
    if (sol.status != QpStatus::InfeasibleDetected) return inst;
    if (bound >= opts.n - 1) throw InstanceError("relaxed constraint set is empty for every hop bound");
  }
}

void write_instance(std::ostream& out, const Instance& inst, const TreeIndicator* tree) {
  out << "nodes " << inst.node_count() << '\n';
  for (int e = 0; e < inst.edge_count(); ++e) {
    const auto& ed = inst.graph().edge(e);
    out << "edge " << ed.u << ' ' << ed.v << ' ' << format_double(inst.costs()[static_cast<std::size_t>(e)]) << '\n';
  }
  for (const auto& c : inst.commodities()) out << "commodity " << c.origin << ' ' << c.destination << '\n';
  out << "hopbound " << inst.hop_bound() << '\n';
  if (tree)
    for (int e : tree->selected()) out << "tree " << inst.graph().edge(e).u << ' ' << inst.graph().edge(e).v << '\n';
}

ParsedInstance read_instance(std::istream& in) {
  int n = -1;
  int hop = -1;
  std::vector<Edge> edges;
  std::vector<double> costs;
  std::vector<Commodity> commodities;
  std::vector<Edge> tree_edges;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::istringstream ls(line);
    std::string key;
    if (!(ls >> key) || key[0] == '#') continue;
    auto bad = [&] { return InstanceError("instance line " + std::to_string(lineno) + ": malformed '" + key + "'"); };
    if (key == "nodes") {
      if (!(ls >> n)) throw bad();
    } else if (key == "edge") {
      Edge e{};
      double c = 0;
      if (!(ls >> e.u >> e.v >> c)) throw bad();
      edges.push_back(e);
      costs.push_back(c);
    } else if (key == "commodity") {
      Commodity c{};
      if (!(ls >> c.origin >> c.destination)) throw bad();
      commodities.push_back(c);
    } else if (key == "hopbound") {
      if (!(ls >> hop)) throw bad();
    } else if (key == "tree") {
      Edge e{};
      if (!(ls >> e.u >> e.v)) throw bad();
      tree_edges.push_back(e);
    } else {
      throw InstanceError("instance line " + std::to_string(lineno) + ": unknown record '" + key + "'");
    }
  }
  if (n < 0) throw InstanceError("instance is missing the 'nodes' header");
  if (hop < 0) throw InstanceError("instance is missing 'hopbound'");
  ParsedInstance parsed{Instance(UndirectedGraph(n, std::move(edges)), std::move(costs), std::move(commodities), hop),
                        std::nullopt};
  if (!tree_edges.empty()) {
    const auto& g = parsed.instance.graph();
    TreeIndicator z(static_cast<std::size_t>(g.edge_count()));
    for (const auto& e : tree_edges) {
      const auto idx = g.find_edge(e.u, e.v);
      if (!idx) throw InstanceError("tree edge is not an instance edge");
      z.bits[static_cast<std::size_t>(*idx)] = 1;
    }
    z.valid = is_spanning_tree(g, z);
    parsed.tree = std::move(z);
  }
  return parsed;
}

Instance load_instance(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InstanceError("cannot open instance file " + path);
  return read_instance(in).instance;
}

}  // namespace treeadmm
