#include <doctest.h>

#include <cmath>
#include <set>

#include "support.hpp"
#include "treeadmm/oracle.hpp"
#include "treeadmm/projection.hpp"

using namespace treeadmm;
using namespace testing;

TEST_CASE("spanning tree counts of small graphs") {
  CHECK(enumerate_spanning_trees(k3()).size() == 3);
  CHECK(enumerate_spanning_trees(generate_erdos_renyi(4, 1.0, 0)).size() == 16);
  CHECK(enumerate_spanning_trees(UndirectedGraph(4, {{0, 1}, {1, 2}, {2, 3}})).size() == 1);
}

TEST_CASE("enumeration yields distinct valid trees matching the matrix-tree count") {
  Rng rng(10);
  for (int trial = 0; trial < 20; ++trial) {
    const int n = static_cast<int>(rng.uniform_int(2, 8));
    const auto g = generate_erdos_renyi(n, 0.5, rng.next());
    const auto trees = enumerate_spanning_trees(g);
    std::set<std::vector<std::uint8_t>> seen;
    for (const auto& t : trees) {
      CHECK(is_spanning_tree(g, t));
      seen.insert(t.bits);
    }
    CHECK(seen.size() == trees.size());
    CHECK(static_cast<double>(trees.size()) == doctest::Approx(kirchhoff_tree_count(g)));
  }
}

TEST_CASE("enumeration budget errors are loud") {
  const auto k6 = generate_erdos_renyi(6, 1.0, 0);
  CHECK_THROWS_AS(enumerate_spanning_trees(k6, EnumerationBudget{10, 1'000'000}), BudgetExceeded);
  CHECK_THROWS_AS(enumerate_spanning_trees(k6, EnumerationBudget{24, 100}), BudgetExceeded);
  CHECK(enumerate_spanning_trees(k6, EnumerationBudget{24, 1296}).size() == 1296);
}

TEST_CASE("arborescence enumeration") {
  CHECK(enumerate_arborescences(DirectedArcSet(2, {{0, 1}, {1, 0}}), 0).size() == 1);
  CHECK(enumerate_arborescences(DirectedArcSet(3, {{0, 1}, {0, 2}, {2, 1}, {1, 2}}), 0).size() == 3);
  CHECK(enumerate_arborescences(DirectedArcSet(3, {{0, 1}, {1, 0}}), 0).empty());
}

TEST_CASE("exact_solve on K3") {
  {
    const auto inst = k3_instance({1, 2, 3}, {0, 2}, 1);
    const auto sol = exact_solve(inst);
    REQUIRE(sol.feasible);
    CHECK(sol.tree.bits == indicator({1, 0, 1}).bits);
    CHECK(sol.objective == 4.0);
    CHECK(sol.trees_examined == 3);
  }
  {
    const auto inst = k3_instance({1, 2, 3}, {0, 2}, 2);
    const auto sol = exact_solve(inst);
    REQUIRE(sol.feasible);
    CHECK(sol.tree.bits == indicator({1, 1, 0}).bits);
    CHECK(sol.objective == 3.0);
  }
  CHECK_THROWS_AS(k3_instance({1, 2, 3}, {0, 2}, 0), InstanceError);
}

TEST_CASE("exact_solve reports infeasibility") {
  // Path graph: the only tree has a 3-hop path between the endpoints.
  const Instance inst(UndirectedGraph(4, {{0, 1}, {1, 2}, {2, 3}}), {1, 1, 1}, {{0, 3}}, 2);
  CHECK_FALSE(exact_solve(inst).feasible);
}

TEST_CASE("exact_project on K3") {
  const auto g = k3();
  {
    const std::vector<double> w{1, 0, 1}, mu(3, 0.0);
    const auto ex = exact_project(w, mu, g);
    CHECK(ex.distance_sq == 0.0);
    CHECK(ex.tree.bits == indicator({1, 0, 1}).bits);
  }
  {
    const std::vector<double> w{0.9, 0.5, 0.1}, mu{0.2, -0.1, 0.0};
    const auto ex = exact_project(w, mu, g);
    CHECK(ex.distance_sq == doctest::Approx(dist_sq(project_tree(w, mu, &g), w, mu)));
    CHECK(ex.tree.bits == indicator({1, 1, 0}).bits);
  }
  {
    const std::vector<double> w{0.9, 0.5, 0.1}, mu{0.2, -0.1, 0.0};
    std::vector<double> w2(w), mu2(mu);
    for (std::size_t e = 0; e < 3; ++e) {
      w2[e] += 0.37 * static_cast<double>(e + 1);
      mu2[e] += 0.37 * static_cast<double>(e + 1);
    }
    CHECK(exact_project(w2, mu2, g).tree.bits == exact_project(w, mu, g).tree.bits);
  }
}

TEST_CASE("exact_project minimum matches the expanded linear form") {
  Rng rng(21);
  for (int trial = 0; trial < 50; ++trial) {
    const int n = static_cast<int>(rng.uniform_int(3, 7));
    const auto g = generate_erdos_renyi(n, 0.5, rng.next());
    const auto m = static_cast<std::size_t>(g.edge_count());
    std::vector<double> w(m), mu(m), h(m);
    double base = n - 1;
    for (std::size_t e = 0; e < m; ++e) {
      w[e] = rng.uniform();
      mu[e] = rng.uniform(-1.0, 1.0);
      h[e] = mu[e] - w[e];
      base += h[e] * h[e];
    }
    double min_lin = std::numeric_limits<double>::infinity();
    for (const auto& t : enumerate_spanning_trees(g)) min_lin = std::min(min_lin, selected_weight(t, h));
    CHECK(std::abs(exact_project(w, mu, g).distance_sq - (base + 2.0 * min_lin)) <= 1e-12);
  }
}
