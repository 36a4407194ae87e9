#pragma once

#include <Eigen/Core>
#include <vector>

#include "manac/rng.hpp"

namespace manac {

// Boltzmann (softmax-in-features) policy over one agent's actions. Action
// features arrive as columns of an m x A matrix: column a holds q_{s,a}.
// Probabilities are strictly positive by construction.
Eigen::VectorXd action_probabilities(const Eigen::VectorXd& theta,
                                     const Eigen::MatrixXd& action_features);

// Inverse-CDF draw from a probability vector (must sum to 1 within 1e-9).
int sample_action(const Eigen::VectorXd& probs, Rng& rng);

// Score function psi(s,a) = q_{s,a} - sum_b pi(b) q_{s,b}; it doubles as the
// compatible feature for the linear advantage approximation.
Eigen::VectorXd compatible_features(const Eigen::VectorXd& theta,
                                    const Eigen::MatrixXd& action_features, int action);
Eigen::VectorXd compatible_features_from_probs(const Eigen::VectorXd& probs,
                                               const Eigen::MatrixXd& action_features, int action);

// Running Fisher estimate and its inverse. g may be left 0x0 when a caller
// only tracks the inverse (the training loops never need g itself).
struct FisherState {
  Eigen::MatrixXd g;
  Eigen::MatrixXd g_inv;
};

// g <- (1-beta) g + beta psi psi^T. Requires 0 < beta <= 1.
void fisher_update(FisherState& fs, const Eigen::VectorXd& psi, double beta_v);

// Rank-one inverse recursion paired with fisher_update; symmetrized after the
// update. Requires 0 < beta < 1. Returns false when the rank-one term was
// skipped because its denominator fell below 1e-12.
bool sherman_morrison_inverse_update(FisherState& fs, const Eigen::VectorXd& psi, double beta_v);

// Exact G = sum_s d(s) sum_a pi(s,a) psi psi^T over an enumerated state set.
// state_action_features[s] is the m x A_s feature matrix for state s.
// Refuses above the state cap (dense oracle, small instances only).
Eigen::MatrixXd exact_fisher(const Eigen::VectorXd& theta,
                             const std::vector<Eigen::MatrixXd>& state_action_features,
                             const Eigen::VectorXd& state_weights, int max_states = 4096);

}  // namespace manac
