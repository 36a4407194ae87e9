#pragma once

#include <Eigen/Core>
#include <utility>
#include <vector>

#include "manac/rng.hpp"

namespace manac {

// Undirected communication graph over agents 0..n-1. No self loops.
struct Graph {
  int n = 0;
  std::vector<std::pair<int, int>> edges;  // stored with first < second

  std::vector<int> degrees() const;
};

// Each unordered pair becomes an edge independently with the given probability.
Graph random_graph(int n, double connectivity_ratio, Rng& rng);

// Row-stochastic mixing weights plus the smallest positive entry (the gamma
// bound every positive weight must respect).
struct ConsensusMatrix {
  Eigen::MatrixXd weights;
  double gamma_floor = 0.0;
};

// Degree-based weights: c(i,j) = 1/(1+max(d_i,d_j)) on edges, diagonal takes
// the slack. Symmetric, hence doubly stochastic; isolated vertices get c(i,i)=1.
ConsensusMatrix metropolis_weights(const Graph& graph);

ConsensusMatrix complete_graph_weights(int n);

// output_i = sum_j c(i,j) * locals_j. All vectors must share one dimension.
std::vector<Eigen::VectorXd> mix(const ConsensusMatrix& matrix,
                                 const std::vector<Eigen::VectorXd>& locals);

// In-place variant on row-per-agent storage: rows <- weights * rows.
void mix_rows(const ConsensusMatrix& matrix, Eigen::MatrixXd& agent_rows);

// Euclidean norm of the stacked deviations from the across-agent mean.
double disagreement(const std::vector<Eigen::VectorXd>& locals);
double disagreement_rows(const Eigen::MatrixXd& agent_rows);

// Sampling estimate of the spectral norm of E[C^T (I - 11^T/n) C] for
// Metropolis matrices on random graphs; a diagnostic, not a gate.
double consensus_contraction_estimate(int n, double connectivity_ratio, int samples, Rng& rng);

}  // namespace manac
