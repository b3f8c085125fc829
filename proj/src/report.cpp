#include "treeadmm/report.hpp"

#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "treeadmm/format.hpp"

namespace treeadmm {

namespace {

constexpr const char* kCentralHeader = "k,objective_w,objective_z,residual,qp_iters,qp_status,feasible_now";
constexpr const char* kDistributedHeader = "k,agent,objective_w,residual_contrib,consensus_gap,qp_iters";

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream ls(line);
  while (std::getline(ls, field, ',')) out.push_back(field);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

void expect_header(std::istream& in, const char* header) {
  std::string line;
  if (!std::getline(in, line) || line != header) throw std::runtime_error("trace CSV header mismatch");
}

}  // namespace

std::string to_string(SolveMode m) { return m == SolveMode::Central ? "central" : "distributed"; }

double compute_gap(double heuristic_obj, double exact_obj) {
  if (!(exact_obj > 0.0)) throw std::invalid_argument("gap requires a positive exact objective");
  return (heuristic_obj / exact_obj - 1.0) * 100.0;
}

Extraction extract_solution(const Instance& inst, const TreeIndicator& z, const FlowAssignment& y) {
  Extraction ex;
  if (check_feasible(inst, z, y).feasible) {
    ex.feasible = true;
    ex.flows = y;
    return ex;
  }
  ex.repaired = true;
  if (!is_spanning_tree(inst.graph(), z)) {
    ex.flows = y;
    return ex;
  }
  auto routing = route_on_tree(inst, z);
  ex.feasible = routing.feasible();
  ex.flows = std::move(routing.flows);
  return ex;
}

void write_central_trace(std::ostream& out, const std::vector<CentralTraceRow>& rows) {
  out << kCentralHeader << '\n';
  for (const auto& r : rows)
    out << r.k << ',' << format_double(r.objective_w) << ',' << format_double(r.objective_z) << ','
        << format_double(r.residual) << ',' << r.qp_iters << ',' << r.qp_status << ',' << (r.feasible_now ? 1 : 0)
        << '\n';
}

void write_distributed_trace(std::ostream& out, const std::vector<DistributedTraceRow>& rows) {
  out << kDistributedHeader << '\n';
  for (const auto& r : rows) {
    out << r.k << ',';
    if (r.agent < 0) out << "all";
    else out << r.agent;
    out << ',' << format_double(r.objective_w) << ',' << format_double(r.residual_contrib) << ','
        << format_double(r.consensus_gap) << ',' << r.qp_iters << '\n';
  }
}

std::vector<CentralTraceRow> read_central_trace(std::istream& in) {
  expect_header(in, kCentralHeader);
  std::vector<CentralTraceRow> rows;
  std::string line;
  while (std::getline(in, line)) {
    const auto f = split_csv(line);
    if (f.size() != 7) throw std::runtime_error("central trace row has " + std::to_string(f.size()) + " fields");
    rows.push_back({std::stoi(f[0]), std::stod(f[1]), std::stod(f[2]), std::stod(f[3]), std::stoi(f[4]), f[5],
                    f[6] == "1"});
  }
  return rows;
}

std::vector<DistributedTraceRow> read_distributed_trace(std::istream& in) {
  expect_header(in, kDistributedHeader);
  std::vector<DistributedTraceRow> rows;
  std::string line;
  while (std::getline(in, line)) {
    const auto f = split_csv(line);
    if (f.size() != 6) throw std::runtime_error("distributed trace row has " + std::to_string(f.size()) + " fields");
    rows.push_back({std::stoi(f[0]), f[1] == "all" ? -1 : std::stoi(f[1]), std::stod(f[2]), std::stod(f[3]),
                    std::stod(f[4]), std::stoi(f[5])});
  }
  return rows;
}

}  // namespace treeadmm
