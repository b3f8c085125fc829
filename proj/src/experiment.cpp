#include "treeadmm/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <fstream>
#include <functional>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <thread>
#include <tuple>

#include "treeadmm/admm_distributed.hpp"
#include "treeadmm/format.hpp"

namespace treeadmm {

namespace {

constexpr const char* kSummaryHeader =
    "n,m,seed,rho,mode,iters,objective,feasible,gap_pct,oracle_obj,status,wall_ms,trace_path";

std::string opt_field(const std::optional<double>& v) { return v ? format_double(*v) : std::string(); }

std::optional<double> parse_opt(const std::string& s) {
  if (s.empty()) return std::nullopt;
  return std::stod(s);
}

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream ls(line);
  while (std::getline(ls, field, ',')) out.push_back(field);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

// Status text must stay inside one CSV field.
std::string sanitize(std::string s) {
  std::replace(s.begin(), s.end(), ',', ';');
  std::replace(s.begin(), s.end(), '\n', ' ');
  return s;
}

struct PreparedInstance {
  std::optional<Instance> instance;
  std::string error;
  bool oracle_ran = false;
  bool oracle_skipped = false;
  ExactSolution exact;
};

void run_parallel(std::size_t count, int jobs, const std::function<void(std::size_t)>& fn) {
  const auto workers = static_cast<std::size_t>(std::max(1, jobs));
  if (workers == 1 || count <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  for (std::size_t t = 0; t < std::min(workers, count); ++t)
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < count; i = next++) fn(i);
    });
  for (auto& th : pool) th.join();
}

}  // namespace

void write_summary(std::ostream& out, const std::vector<SummaryRow>& rows) {
  out << kSummaryHeader << '\n';
  for (const auto& r : rows)
    out << r.n << ',' << r.m << ',' << r.seed << ',' << format_double(r.rho) << ',' << r.mode << ',' << r.iters << ','
        << opt_field(r.objective) << ',' << (r.feasible ? 1 : 0) << ',' << opt_field(r.gap_pct) << ','
        << opt_field(r.oracle_obj) << ',' << r.status << ',' << opt_field(r.wall_ms) << ',' << r.trace_path << '\n';
}

std::vector<SummaryRow> read_summary(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != kSummaryHeader) throw std::runtime_error("summary CSV header mismatch");
  std::vector<SummaryRow> rows;
  while (std::getline(in, line)) {
    const auto f = split_fields(line);
    if (f.size() != 13) throw std::runtime_error("summary row has " + std::to_string(f.size()) + " fields");
    SummaryRow r;
    r.n = std::stoi(f[0]);
    r.m = std::stoi(f[1]);
    r.seed = std::stoull(f[2]);
    r.rho = std::stod(f[3]);
    r.mode = f[4];
    r.iters = std::stoi(f[5]);
    r.objective = parse_opt(f[6]);
    r.feasible = f[7] == "1";
    r.gap_pct = parse_opt(f[8]);
    r.oracle_obj = parse_opt(f[9]);
    r.status = f[10];
    r.wall_ms = parse_opt(f[11]);
    r.trace_path = f[12];
    rows.push_back(std::move(r));
  }
  return rows;
}

void sort_summary(std::vector<SummaryRow>& rows) {
  std::stable_sort(rows.begin(), rows.end(), [](const SummaryRow& a, const SummaryRow& b) {
    return std::tie(a.n, a.seed, a.rho, a.mode) < std::tie(b.n, b.seed, b.rho, b.mode);
  });
}

std::string trace_file_name(int n, std::uint64_t seed, double rho, SolveMode mode) {
  return "n" + std::to_string(n) + "_seed" + std::to_string(seed) + "_rho" + format_double(rho) + "_" +
         to_string(mode) + ".csv";
}

SolverConfig make_solver_config(double rho, double tol, int max_iters, std::uint64_t seed) {
  SolverConfig cfg;
  cfg.rho = rho;
  cfg.tol = tol;
  cfg.max_iters = max_iters;
  cfg.seed = seed;
  return cfg;
}

void write_trace(std::ostream& out, const SolveReport& report) {
  if (report.mode == SolveMode::Central) write_central_trace(out, report.central_trace);
  else write_distributed_trace(out, report.distributed_trace);
}

std::vector<SummaryRow> run_sweep(const SweepSpec& spec) {
  struct InstanceKey {
    int n;
    std::uint64_t seed;
  };
  std::vector<InstanceKey> keys;
  for (int n : spec.sizes)
    for (auto seed : spec.seeds) keys.push_back({n, seed});

  std::vector<PreparedInstance> prepared(keys.size());
  run_parallel(keys.size(), spec.jobs, [&](std::size_t k) {
    auto& prep = prepared[k];
    try {
      InstanceOptions opts;
      opts.n = keys[k].n;
      opts.p = spec.p;
      opts.seed = keys[k].seed;
      opts.commodities = spec.commodities;
      opts.hop_slack = spec.hop_slack;
      opts.cost_scale = spec.cost_scale;
      prep.instance.emplace(generate_instance(opts));
    } catch (const std::exception& e) {
      prep.error = e.what();
      return;
    }
    if (!spec.oracle) return;
    try {
      prep.exact = exact_solve(*prep.instance, spec.budget);
      prep.oracle_ran = true;
    } catch (const BudgetExceeded&) {
      prep.oracle_skipped = true;
    }
  });

  struct Cell {
    std::size_t instance;
    double rho;
    SolveMode mode;
  };
  std::vector<Cell> cells;
  for (std::size_t k = 0; k < keys.size(); ++k)
    for (double rho : spec.rhos)
      for (SolveMode mode : spec.modes) cells.push_back({k, rho, mode});

  const auto trace_dir = spec.out_dir.empty() ? std::filesystem::path() : spec.out_dir / "traces";
  if (!trace_dir.empty()) std::filesystem::create_directories(trace_dir);

  std::vector<SummaryRow> rows(cells.size());
  run_parallel(cells.size(), spec.jobs, [&](std::size_t c) {
    const Cell& cell = cells[c];
    const auto& key = keys[cell.instance];
    const auto& prep = prepared[cell.instance];
    SummaryRow& row = rows[c];
    row.n = key.n;
    row.seed = key.seed;
    row.rho = cell.rho;
    row.mode = to_string(cell.mode);
    if (!prep.instance) {
      row.status = "error: " + sanitize(prep.error);
      return;
    }
    const Instance& inst = *prep.instance;
    row.m = inst.edge_count();
    try {
      SolverConfig cfg = make_solver_config(cell.rho, spec.tol, spec.max_iters, key.seed);
      cfg.trace_per_agent = spec.trace_per_agent;
      SolveReport report = cell.mode == SolveMode::Central ? solve_central(inst, cfg) : solve_distributed(inst, cfg);
      row.iters = report.iterations;
      row.objective = report.objective;
      row.feasible = report.feasible;
      row.status = report.status;
      if (spec.wall_time) row.wall_ms = report.wall_ms;
      if (prep.oracle_ran) {
        if (prep.exact.feasible) {
          row.oracle_obj = prep.exact.objective;
          if (report.feasible) row.gap_pct = compute_gap(report.objective, prep.exact.objective);
        } else {
          row.status = "oracle-infeasible";
        }
      } else if (prep.oracle_skipped) {
        row.status = "oracle-skipped";
      }
      if (!trace_dir.empty()) {
        const auto name = trace_file_name(key.n, key.seed, cell.rho, cell.mode);
        std::ofstream out(trace_dir / name);
        if (!out) throw std::runtime_error("cannot write trace " + (trace_dir / name).string());
        write_trace(out, report);
        row.trace_path = "traces/" + name;
      }
    } catch (const std::exception& e) {
      row.status = "error: " + sanitize(e.what());
    }
  });
  sort_summary(rows);
  return rows;
}

}  // namespace treeadmm
