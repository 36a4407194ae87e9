#include "manac/consensus.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <limits>
#include <stdexcept>

namespace manac {

std::vector<int> Graph::degrees() const {
  std::vector<int> d(n, 0);
  for (const auto& [i, j] : edges) {
    ++d[i];
    ++d[j];
  }
  return d;
}

Graph random_graph(int n, double connectivity_ratio, Rng& rng) {
  if (n < 2) throw std::invalid_argument("random_graph: need n >= 2");
  if (!(connectivity_ratio > 0.0) || connectivity_ratio > 1.0)
    throw std::invalid_argument("random_graph: connectivity_ratio must be in (0,1]");
  Graph g;
  g.n = n;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      if (rng.uniform() < connectivity_ratio) g.edges.emplace_back(i, j);
  return g;
}

ConsensusMatrix metropolis_weights(const Graph& graph) {
  if (graph.n < 1) throw std::invalid_argument("metropolis_weights: empty graph");
  const int n = graph.n;
  const std::vector<int> deg = graph.degrees();
  Eigen::MatrixXd w = Eigen::MatrixXd::Zero(n, n);
  for (const auto& [i, j] : graph.edges) {
    if (i == j || i < 0 || j >= n) throw std::invalid_argument("metropolis_weights: bad edge");
    const double c = 1.0 / (1.0 + std::max(deg[i], deg[j]));
    w(i, j) = c;
    w(j, i) = c;
  }
  for (int i = 0; i < n; ++i) w(i, i) = 1.0 - w.row(i).sum();

  double floor = std::numeric_limits<double>::infinity();
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      if (w(i, j) > 0.0) floor = std::min(floor, w(i, j));
  return ConsensusMatrix{std::move(w), std::isfinite(floor) ? floor : 0.0};
}

ConsensusMatrix complete_graph_weights(int n) {
  if (n < 1) throw std::invalid_argument("complete_graph_weights: n must be positive");
  return ConsensusMatrix{Eigen::MatrixXd::Constant(n, n, 1.0 / n), 1.0 / n};
}

std::vector<Eigen::VectorXd> mix(const ConsensusMatrix& matrix,
                                 const std::vector<Eigen::VectorXd>& locals) {
  const int n = static_cast<int>(locals.size());
  if (matrix.weights.rows() != n)
    throw std::invalid_argument("mix: agent count does not match matrix");
  const Eigen::Index dim = n > 0 ? locals[0].size() : 0;
  for (const auto& v : locals)
    if (v.size() != dim) throw std::invalid_argument("mix: dimension mismatch across agents");

  std::vector<Eigen::VectorXd> out(n, Eigen::VectorXd::Zero(dim));
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      if (matrix.weights(i, j) != 0.0) out[i] += matrix.weights(i, j) * locals[j];
  return out;
}

void mix_rows(const ConsensusMatrix& matrix, Eigen::MatrixXd& agent_rows) {
  if (matrix.weights.rows() != agent_rows.rows())
    throw std::invalid_argument("mix_rows: agent count does not match matrix");
  agent_rows = matrix.weights * agent_rows;
}

double disagreement(const std::vector<Eigen::VectorXd>& locals) {
  if (locals.empty()) throw std::invalid_argument("disagreement: empty input");
  const Eigen::Index dim = locals[0].size();
  Eigen::VectorXd mean = Eigen::VectorXd::Zero(dim);
  for (const auto& v : locals) {
    if (v.size() != dim) throw std::invalid_argument("disagreement: dimension mismatch");
    mean += v;
  }
  mean /= static_cast<double>(locals.size());
  double sq = 0.0;
  for (const auto& v : locals) sq += (v - mean).squaredNorm();
  return std::sqrt(sq);
}

double disagreement_rows(const Eigen::MatrixXd& agent_rows) {
  if (agent_rows.rows() == 0) throw std::invalid_argument("disagreement_rows: empty input");
  const Eigen::RowVectorXd mean = agent_rows.colwise().mean();
  return (agent_rows.rowwise() - mean).norm();
}

double consensus_contraction_estimate(int n, double connectivity_ratio, int samples, Rng& rng) {
  if (samples < 1) throw std::invalid_argument("consensus_contraction_estimate: samples >= 1");
  const Eigen::MatrixXd center =
      Eigen::MatrixXd::Identity(n, n) - Eigen::MatrixXd::Constant(n, n, 1.0 / n);
  Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(n, n);
  for (int s = 0; s < samples; ++s) {
    const Graph g = random_graph(n, connectivity_ratio, rng);
    const Eigen::MatrixXd& c = metropolis_weights(g).weights;
    acc += c.transpose() * center * c;
  }
  acc /= static_cast<double>(samples);
  // acc is symmetric PSD; spectral norm is the largest eigenvalue.
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(acc);
  return es.eigenvalues().maxCoeff();
}

}  // namespace manac
