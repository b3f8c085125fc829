#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "support.hpp"
#include "treeadmm/admm_distributed.hpp"
#include "treeadmm/experiment.hpp"

using namespace treeadmm;
using namespace testing;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

fs::path scratch_dir(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("treeadmm_test_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

}  // namespace

TEST_CASE("compute_gap") {
  CHECK(compute_gap(103, 100) == doctest::Approx(3.0));
  CHECK(compute_gap(100, 100) == 0.0);
  CHECK(compute_gap(1.0132 * 50, 50) == doctest::Approx(1.32));
  CHECK_THROWS_AS(compute_gap(1, 0), std::invalid_argument);
  CHECK_THROWS_AS(compute_gap(1, -2), std::invalid_argument);
}

TEST_CASE("extract_solution repairs flows from the tree") {
  const auto inst = k3_instance({1, 2, 3}, {0, 2}, 1);
  FlowAssignment wrong(inst.arc_count(), 1);
  wrong.at(0, 0) = 1.0;
  const auto ex = extract_solution(inst, indicator({1, 0, 1}), wrong);
  CHECK(ex.feasible);
  CHECK(ex.repaired);
  const auto bad = extract_solution(inst, indicator({1, 1, 0}), wrong);
  CHECK_FALSE(bad.feasible);
}

TEST_CASE("trace CSVs round-trip byte for byte") {
  const auto inst = generate_instance({.n = 6, .seed = 0});
  SolverConfig cfg;
  cfg.max_iters = 8;
  {
    const auto r = solve_central(inst, cfg);
    std::ostringstream a;
    write_central_trace(a, r.central_trace);
    std::istringstream in(a.str());
    std::ostringstream b;
    write_central_trace(b, read_central_trace(in));
    CHECK(a.str() == b.str());
  }
  {
    cfg.trace_per_agent = true;
    const auto r = solve_distributed(inst, cfg);
    std::ostringstream a;
    write_distributed_trace(a, r.distributed_trace);
    std::istringstream in(a.str());
    std::ostringstream b;
    write_distributed_trace(b, read_distributed_trace(in));
    CHECK(a.str() == b.str());
  }
}

TEST_CASE("summary CSV round-trips and sorts") {
  std::vector<SummaryRow> rows(3);
  rows[0] = {8, 14, 2, 1.0, "distributed", 40, 12.5, true, 0.0, 12.5, "converged", std::nullopt, "traces/a.csv"};
  rows[1] = {8, 14, 2, 0.1, "central", 500, 13.25, false, std::nullopt, 12.5, "max-iters", 41.5, ""};
  rows[2] = {6, 9, 7, 10.0, "central", 3, std::nullopt, false, std::nullopt, std::nullopt, "error: boom", std::nullopt, ""};
  std::ostringstream a;
  write_summary(a, rows);
  std::istringstream in(a.str());
  auto parsed = read_summary(in);
  std::ostringstream b;
  write_summary(b, parsed);
  CHECK(a.str() == b.str());

  sort_summary(parsed);
  CHECK(parsed[0].n == 6);
  CHECK(parsed[1].rho == 0.1);
  CHECK(parsed[2].mode == "distributed");

  std::istringstream bad("n,m\n");
  CHECK_THROWS(read_summary(bad));
}

TEST_CASE("sweep over n=6, three seeds, two rho values and both modes") {
  const auto dir = scratch_dir("sweep12");
  SweepSpec spec;
  spec.sizes = {6};
  spec.seeds = {0, 1, 2};
  spec.rhos = {0.1, 1.0};
  spec.modes = {SolveMode::Central, SolveMode::Distributed};
  spec.max_iters = 60;
  spec.out_dir = dir;
  const auto rows = run_sweep(spec);
  REQUIRE(rows.size() == 12);
  for (std::size_t k = 1; k < rows.size(); ++k) {
    const auto& p = rows[k - 1];
    const auto& q = rows[k];
    CHECK(std::tie(p.n, p.seed, p.rho, p.mode) < std::tie(q.n, q.seed, q.rho, q.mode));
  }
  for (const auto& r : rows) {
    CHECK(r.status.rfind("error", 0) != 0);
    CHECK(r.oracle_obj.has_value());
    CHECK(r.gap_pct.has_value() == r.feasible);
    if (r.feasible) CHECK(*r.gap_pct >= -1e-9);
    CHECK_FALSE(r.wall_ms.has_value());
    CHECK(fs::exists(dir / r.trace_path));
  }
}

TEST_CASE("oracle over budget leaves the gap empty") {
  SweepSpec spec;
  spec.sizes = {7};
  spec.seeds = {0};
  spec.rhos = {1.0};
  spec.max_iters = 20;
  spec.budget = {5, 1000};
  const auto rows = run_sweep(spec);
  REQUIRE(rows.size() == 1);
  CHECK(rows[0].status == "oracle-skipped");
  CHECK_FALSE(rows[0].gap_pct.has_value());
  CHECK_FALSE(rows[0].oracle_obj.has_value());
  CHECK(rows[0].objective.has_value());
}

TEST_CASE("failing cells keep the sweep going") {
  SweepSpec spec;
  spec.sizes = {1, 5};
  spec.seeds = {0};
  spec.rhos = {1.0};
  spec.max_iters = 10;
  spec.oracle = false;
  const auto rows = run_sweep(spec);
  REQUIRE(rows.size() == 2);
  CHECK(rows[0].status.rfind("error: ", 0) == 0);
  CHECK(rows[0].status.find(',') == std::string::npos);
  CHECK(rows[1].status.rfind("error", 0) != 0);
}

TEST_CASE("repeated sweeps are byte-identical") {
  auto run = [](const std::string& name, int jobs) {
    const auto dir = scratch_dir(name);
    SweepSpec spec;
    spec.sizes = {5};
    spec.seeds = {0, 1};
    spec.rhos = {0.1, 1.0};
    spec.modes = {SolveMode::Central, SolveMode::Distributed};
    spec.max_iters = 30;
    spec.trace_per_agent = true;
    spec.jobs = jobs;
    spec.out_dir = dir;
    std::ofstream(dir / "summary.csv") << [&] {
      std::ostringstream s;
      write_summary(s, run_sweep(spec));
      return s.str();
    }();
    return dir;
  };
  const auto a = run("det_a", 1);
  const auto b = run("det_b", 3);
  CHECK(slurp(a / "summary.csv") == slurp(b / "summary.csv"));
  int traces = 0;
  for (const auto& entry : fs::directory_iterator(a / "traces")) {
    ++traces;
    CHECK(slurp(entry.path()) == slurp(b / "traces" / entry.path().filename()));
  }
  CHECK(traces == 8);
}
