#include <doctest.h>

#include <limits>
#include <sstream>

#include "support.hpp"
#include "treeadmm/admm_distributed.hpp"

using namespace treeadmm;
using namespace testing;

namespace {

bool same_agent(const AgentState& a, const AgentState& b) {
  return a.w == b.w && a.u == b.u && a.z.bits == b.z.bits && a.y.values == b.y.values && a.mu == b.mu &&
         a.eta == b.eta && a.nu == b.nu && a.xi == b.xi;
}

SolverConfig tight_config(double rho) {
  SolverConfig cfg;
  cfg.rho = rho;
  cfg.qp.tol = 1e-10;
  cfg.qp_accept_tol = 1e-8;
  return cfg;
}

// Path 0-1-2 with one commodity; agent 0 has the single neighbour 1.
Instance path3() { return Instance(UndirectedGraph(3, {{0, 1}, {1, 2}}), {1, 1}, {{0, 2}}, 2); }

}  // namespace

TEST_CASE("init_world starts every agent at the centralized point") {
  const auto inst = generate_instance({.n = 5, .seed = 3});
  const SolverConfig cfg;
  const auto world = init_world(inst, cfg);
  const auto central = init_state(inst, cfg);
  REQUIRE(world.agents.size() == 5);
  for (const auto& a : world.agents) {
    CHECK(a.w == central.w);
    CHECK(a.z.bits == central.z.bits);
    CHECK(a.nu == std::vector<double>(static_cast<std::size_t>(inst.flow_size()), 0.0));
    CHECK(a.xi == std::vector<double>(static_cast<std::size_t>(inst.edge_count()), 0.0));
  }
  CHECK(consensus_gap(world) == 0.0);
}

TEST_CASE("neighbour dual increments") {
  const auto inst = path3();
  const auto world = init_world(inst, SolverConfig{});
  auto own = world.agents[0];
  auto nb = world.agents[1];
  own.w = {1, 0};
  nb.w = {0, 0};
  own.u = nb.u;
  own.z = nb.z = indicator({1, 1});
  const std::vector<const AgentState*> fresh{&nb};
  agent_dual_update(own, fresh, SolverConfig{});
  CHECK(own.xi == std::vector<double>{1, 0});
  CHECK(own.nu == std::vector<double>(4, 0.0));

  // Identical neighbours leave nu and xi untouched.
  auto same = world.agents[1];
  auto twin = same;
  twin.id = 0;
  const std::vector<const AgentState*> twins{&same};
  agent_dual_update(twin, twins, SolverConfig{});
  CHECK(twin.nu == world.agents[1].nu);
  CHECK(twin.xi == world.agents[1].xi);

  SolverConfig directed;
  directed.consensus = ConsensusForm::Directed;
  auto half = world.agents[0];
  half.w = {1, 0};
  half.u = nb.u;
  agent_dual_update(half, fresh, directed);
  CHECK(half.xi == std::vector<double>{0.5, 0});
}

TEST_CASE("two symmetric agents stay identical") {
  const auto inst = single_edge_instance();
  const SolverConfig cfg;
  auto world = init_world(inst, cfg);
  for (int r = 0; r < 5; ++r) {
    world = sync_round(world, cfg);
    CHECK(same_agent(world.agents[0], world.agents[1]));
  }
}

TEST_CASE("rounds do not depend on thread count") {
  const auto inst = generate_instance({.n = 6, .seed = 2});
  SolverConfig one;
  one.rho = 0.1;
  auto threaded = one;
  threaded.threads = 3;
  auto a = init_world(inst, one);
  auto b = init_world(inst, threaded);
  for (int r = 0; r < 6; ++r) {
    a = sync_round(a, one);
    b = sync_round(b, threaded);
    for (std::size_t i = 0; i < a.agents.size(); ++i) CHECK(same_agent(a.agents[i], b.agents[i]));
  }
}

TEST_CASE("agents processed in a permuted order give the same world") {
  const auto inst = generate_instance({.n = 6, .seed = 5});
  SolverConfig cfg;
  cfg.rho = 0.1;
  const std::vector<Node> order{3, 0, 5, 1, 4, 2};
  auto ref = init_world(inst, cfg);
  auto manual = ref;
  for (int r = 0; r < 4; ++r) {
    ref = sync_round(ref, cfg);
    World next = manual;
    for (Node i : order) {
      const auto nbs = neighbor_snapshots(manual, i);
      next.agents[static_cast<std::size_t>(i)] =
          agent_primal_update(inst, i, manual.agents[static_cast<std::size_t>(i)], nbs, cfg);
    }
    World fresh = next;
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
      const auto nbs = neighbor_snapshots(fresh, *it);
      agent_dual_update(next.agents[static_cast<std::size_t>(*it)], nbs, cfg);
    }
    next.round = manual.round + 1;
    manual = next;
    for (std::size_t i = 0; i < ref.agents.size(); ++i) CHECK(same_agent(ref.agents[i], manual.agents[i]));
  }
}

TEST_CASE("residual_distributed") {
  const auto inst = generate_instance({.n = 4, .seed = 1});
  const auto world = init_world(inst, SolverConfig{});
  CHECK(residual_distributed(world, world) == 0.0);

  auto one = world;
  one.agents[2].mu[0] += 0.3;
  one.agents[2].mu[1] -= 0.4;
  CHECK(residual_distributed(world, one) == doctest::Approx(0.5 / 4));

  auto all = world;
  for (auto& a : all.agents) {
    a.w[0] += 0.6;
    a.w[1] += 0.8;
  }
  CHECK(residual_distributed(world, all) == doctest::Approx(1.0));
}

TEST_CASE("consensus_gap") {
  const auto inst = generate_instance({.n = 4, .seed = 1});
  auto world = init_world(inst, SolverConfig{});
  CHECK(consensus_gap(world) == 0.0);
  world.agents[1].w[0] += 0.3;
  world.agents[1].w[1] += 0.4;
  CHECK(consensus_gap(world) == doctest::Approx(0.5));
  world.agents[3].u[0] += 2.0;
  const double full = consensus_gap(world);
  CHECK(full >= 0.5);
  World subset = world;
  subset.agents.erase(subset.agents.begin() + 3);
  CHECK(consensus_gap(subset) <= full);
  for (Node i = 0; i < 4; ++i) CHECK(consensus_gap_of(world, i) <= full);
}

TEST_CASE("tol = inf runs one round with valid trees everywhere") {
  const auto inst = generate_instance({.n = 6, .seed = 1});
  SolverConfig cfg;
  cfg.tol = std::numeric_limits<double>::infinity();
  int rounds = 0;
  const auto r = solve_distributed(inst, cfg, [&](const World&, const World& curr) {
    ++rounds;
    for (const auto& a : curr.agents) CHECK(is_spanning_tree(inst.graph(), a.z));
  });
  CHECK(rounds == 1);
  CHECK(r.iterations == 1);
  CHECK(r.tree_checks == 6);
  CHECK(r.tree_failures == 0);
}

TEST_CASE("max_iters = 0 reports the initial state") {
  const auto inst = generate_instance({.n = 5, .seed = 1});
  SolverConfig cfg;
  cfg.max_iters = 0;
  const auto r = solve_distributed(inst, cfg);
  CHECK(r.status == "not-run");
  CHECK(r.distributed_trace.empty());
}

TEST_CASE("agents keep valid trees and exact local duals") {
  const auto inst = generate_instance({.n = 6, .seed = 4});
  SolverConfig cfg;
  cfg.rho = 0.1;
  cfg.max_iters = 25;
  const auto r = solve_distributed(inst, cfg, [&](const World& prev, const World& curr) {
    for (std::size_t i = 0; i < curr.agents.size(); ++i) {
      const auto& p = prev.agents[i];
      const auto& c = curr.agents[i];
      CHECK(is_spanning_tree(inst.graph(), c.z));
      for (std::size_t e = 0; e < c.mu.size(); ++e) CHECK(c.mu[e] == p.mu[e] + ((c.z[e] ? 1.0 : 0.0) - c.w[e]));
      for (double v : c.y.values) CHECK((v == 0.0 || v == 1.0));
    }
  });
  CHECK(r.tree_failures == 0);
  CHECK(r.tree_checks == static_cast<long>(r.iterations) * inst.node_count());
}

TEST_CASE("distributed run tracks the centralized objective on a small instance") {
  const auto inst = generate_instance({.n = 6, .seed = 1});
  SolverConfig cfg;
  cfg.rho = 0.1;
  const auto c = solve_central(inst, cfg);
  const auto d = solve_distributed(inst, cfg);
  REQUIRE(c.feasible);
  REQUIRE(d.feasible);
  CHECK(std::abs(d.objective / c.objective - 1.0) <= 0.05);
  CHECK(d.tree_failures == 0);
}

TEST_CASE("trace rows per agent or aggregated") {
  const auto inst = generate_instance({.n = 5, .seed = 0});
  SolverConfig cfg;
  cfg.max_iters = 4;
  const auto agg = solve_distributed(inst, cfg);
  REQUIRE(agg.distributed_trace.size() == static_cast<std::size_t>(agg.iterations));
  for (const auto& row : agg.distributed_trace) CHECK(row.agent == -1);
  cfg.trace_per_agent = true;
  const auto per = solve_distributed(inst, cfg);
  CHECK(per.distributed_trace.size() == static_cast<std::size_t>(per.iterations) * 5);
  // Contributions add up to the aggregated residual.
  double sum = 0.0;
  for (int i = 0; i < 5; ++i) sum += per.distributed_trace[static_cast<std::size_t>(i)].residual_contrib;
  CHECK(sum == doctest::Approx(agg.distributed_trace[0].residual_contrib));

  std::ostringstream out;
  write_distributed_trace(out, per.distributed_trace);
  CHECK(out.str().rfind("k,agent,objective_w,residual_contrib,consensus_gap,qp_iters\n", 0) == 0);
}

TEST_CASE("full-dual reference: closed-form averages and exact cancellation") {
  const auto inst = generate_instance({.n = 4, .p = 0.6, .seed = 0});
  const auto cfg = tight_config(1.0);
  auto f = init_full_dual_world(inst, cfg);
  f = full_dual_round(f, cfg);
  for (int a = 0; a < inst.arc_count(); ++a) {
    const auto& xi = f.agents[static_cast<std::size_t>(inst.arcs().arc(a).tail)];
    const auto& xj = f.agents[static_cast<std::size_t>(inst.arcs().arc(a).head)];
    for (std::size_t k = 0; k < xi.u.size(); ++k)
      CHECK(f.t[static_cast<std::size_t>(a)][k] == 0.5 * (xi.u[k] + xj.u[k]));
    for (std::size_t e = 0; e < xi.w.size(); ++e)
      CHECK(f.s[static_cast<std::size_t>(a)][e] == 0.5 * (xi.w[e] + xj.w[e]));
  }
  for (int r = 0; r < 5; ++r) f = full_dual_round(f, cfg);
  for (std::size_t a = 0; a < f.alpha.size(); ++a) {
    for (std::size_t k = 0; k < f.alpha[a].size(); ++k) CHECK(f.alpha[a][k] + f.beta[a][k] == 0.0);
    for (std::size_t e = 0; e < f.gamma[a].size(); ++e) CHECK(f.gamma[a][e] + f.delta[a][e] == 0.0);
  }
}

TEST_CASE("condensed updates match the full-dual reference over 20 rounds") {
  const auto inst = generate_instance({.n = 4, .p = 0.6, .seed = 0});
  const auto cfg = tight_config(1.0);
  auto w = init_world(inst, cfg);
  auto f = init_full_dual_world(inst, cfg);
  double worst = 0.0;
  for (int r = 0; r < 20; ++r) {
    w = sync_round(w, cfg);
    f = full_dual_round(f, cfg);
    for (Node i = 0; i < inst.node_count(); ++i) {
      const auto& a = w.agents[static_cast<std::size_t>(i)];
      const auto& b = f.agents[static_cast<std::size_t>(i)];
      worst = std::max({worst, max_abs_diff(a.w, b.w), max_abs_diff(a.u, b.u), max_abs_diff(a.mu, b.mu),
                        max_abs_diff(a.eta, b.eta), max_abs_diff(a.y.values, b.y.values),
                        max_abs_diff(a.nu, full_dual_nu(f, i, cfg.rho)), max_abs_diff(a.xi, full_dual_xi(f, i, cfg.rho))});
      CHECK(a.z.bits == b.z.bits);
    }
  }
  CHECK(worst <= 1e-8);
}
