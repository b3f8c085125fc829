#pragma once

namespace treeadmm {

/// How neighbour consensus enters an agent's subproblem.
///
/// Undirected: rho * sum_j ||v - (v_i + v_j)/2||^2 and dual increments sum_j (v_i - v_j).
/// Directed:   rho/2 on the quadratic and 1/2 on the increments, summed over in- and out-neighbours.
enum class ConsensusForm { Undirected, Directed };

inline double consensus_quadratic_coef(ConsensusForm form, double rho) {
  return form == ConsensusForm::Undirected ? rho : 0.5 * rho;
}
inline double consensus_increment_coef(ConsensusForm form) {
  return form == ConsensusForm::Undirected ? 1.0 : 0.5;
}

}  // namespace treeadmm
