#include <doctest.h>

#include <sstream>

#include "support.hpp"
#include "treeadmm/qp.hpp"

using namespace treeadmm;
using namespace testing;

namespace {

QuadraticProgram box_qp(std::vector<double> d, std::vector<double> q) {
  QuadraticProgram p;
  const auto n = d.size();
  p.diag = std::move(d);
  p.linear = std::move(q);
  p.lower.assign(n, 0.0);
  p.upper.assign(n, 1.0);
  p.eq.cols = p.ineq.cols = static_cast<int>(n);
  return p;
}

}  // namespace

TEST_CASE("box-only quadratics") {
  // 1/2 (v - 0.3)^2 = 1/2 v^2 - 0.3 v + const
  const auto interior = solve_qp(box_qp({1.0}, {-0.3}));
  CHECK(interior.status == QpStatus::Solved);
  CHECK(interior.x[0] == doctest::Approx(0.3).epsilon(1e-6));

  const auto clamped = solve_qp(box_qp({1.0}, {-1.5}));
  CHECK(clamped.status == QpStatus::Solved);
  CHECK(clamped.x[0] == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("equality-constrained symmetric quadratic") {
  auto p = box_qp({2.0, 2.0}, {0.0, 0.0});
  p.eq.add_row({{0, 1.0}, {1, 1.0}});
  p.eq_rhs.push_back(1.0);
  const auto s = solve_qp(p);
  CHECK(s.status == QpStatus::Solved);
  CHECK(s.x[0] == doctest::Approx(0.5).epsilon(1e-6));
  CHECK(s.x[1] == doctest::Approx(0.5).epsilon(1e-6));
  CHECK(s.eq_residual <= 1e-6);
}

TEST_CASE("validate rejects inconsistent programs") {
  auto p = box_qp({1.0, 1.0}, {0.0});
  CHECK_THROWS_AS(p.validate(), std::invalid_argument);
  p = box_qp({-1.0}, {0.0});
  CHECK_THROWS_AS(p.validate(), std::invalid_argument);
  p = box_qp({1.0}, {0.0});
  p.lower[0] = 2.0;
  CHECK_THROWS_AS(p.validate(), std::invalid_argument);
}

TEST_CASE("infeasible constraints are detected") {
  auto p = box_qp({1.0, 1.0}, {0.0, 0.0});
  p.eq.add_row({{0, 1.0}, {1, 1.0}});
  p.eq_rhs.push_back(3.0);
  const auto s = solve_qp(p);
  CHECK(s.status == QpStatus::InfeasibleDetected);
}

TEST_CASE("random QPs match the dual gradient oracle") {
  Rng rng(404);
  for (int trial = 0; trial < 15; ++trial) {
    const auto p = random_qp(rng, static_cast<int>(rng.uniform_int(2, 25)));
    const auto s = solve_qp(p);
    REQUIRE(s.status == QpStatus::Solved);
    CHECK(s.max_residual() <= 1e-6);
    CHECK(max_abs_diff(s.x, dual_gradient_oracle(p)) <= 1e-4);
  }
}

TEST_CASE("no feasible perturbation improves the returned point") {
  Rng rng(405);
  for (int trial = 0; trial < 10; ++trial) {
    const auto p = random_qp(rng, static_cast<int>(rng.uniform_int(2, 15)));
    const auto s = solve_qp(p);
    REQUIRE(s.status == QpStatus::Solved);
    const double f0 = p.objective(s.x);
    // Directions along single coordinates not touching any row stay feasible if the box allows it.
    for (int i = 0; i < p.dim(); ++i) {
      bool free_col = true;
      for (const auto* rows : {&p.eq.rows, &p.ineq.rows})
        for (const auto& row : *rows)
          for (auto [c, a] : row)
            if (c == i) free_col = false;
      if (!free_col) continue;
      for (double step : {-1e-3, 1e-3}) {
        auto x = s.x;
        x[static_cast<std::size_t>(i)] += step;
        if (x[static_cast<std::size_t>(i)] < p.lower[static_cast<std::size_t>(i)] ||
            x[static_cast<std::size_t>(i)] > p.upper[static_cast<std::size_t>(i)])
          continue;
        CHECK(p.objective(x) >= f0 - 1e-6);
      }
    }
  }
}

TEST_CASE("scaling the objective keeps the argmin") {
  Rng rng(406);
  for (int trial = 0; trial < 10; ++trial) {
    const auto p = random_qp(rng, static_cast<int>(rng.uniform_int(2, 20)));
    auto scaled = p;
    for (auto& d : scaled.diag) d *= 7.5;
    for (auto& q : scaled.linear) q *= 7.5;
    CHECK(max_abs_diff(solve_qp(p).x, solve_qp(scaled).x) <= 1e-5);
  }
}

TEST_CASE("solves are deterministic and warm starts agree") {
  Rng rng(407);
  const auto p = random_qp(rng, 30);
  const auto a = solve_qp(p);
  const auto b = solve_qp(p);
  CHECK(a.x == b.x);
  CHECK(a.iterations == b.iterations);
  const auto warm = a.warm_start();
  const auto c = solve_qp(p, {}, &warm);
  CHECK(c.status == QpStatus::Solved);
  CHECK(max_abs_diff(a.x, c.x) <= 1e-5);
  CHECK(c.iterations <= a.iterations);
}

TEST_CASE("dump_qp lists every row") {
  auto p = box_qp({1.0, 0.0}, {0.5, -0.5});
  p.eq.add_row({{0, 1.0}, {1, -1.0}});
  p.eq_rhs.push_back(0.0);
  p.ineq.add_row({{1, 2.0}});
  p.ineq_rhs.push_back(1.0);
  std::ostringstream out;
  dump_qp(p, out);
  const auto text = out.str();
  CHECK(text.find("dim 2 eq_rows 1 ineq_rows 1") != std::string::npos);
  CHECK(text.find("var 1 d 0 q -0.5 lo 0 hi 1") != std::string::npos);
}
