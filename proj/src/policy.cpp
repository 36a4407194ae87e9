#include "manac/policy.hpp"

#include <cmath>
#include <stdexcept>

namespace manac {

Eigen::VectorXd action_probabilities(const Eigen::VectorXd& theta,
                                     const Eigen::MatrixXd& action_features) {
  if (!theta.allFinite()) throw std::invalid_argument("action_probabilities: non-finite theta");
  if (action_features.rows() != theta.size())
    throw std::invalid_argument("action_probabilities: feature dimension mismatch");
  const Eigen::Index num_actions = action_features.cols();
  if (num_actions < 1) throw std::invalid_argument("action_probabilities: no actions");

  Eigen::VectorXd logits = action_features.transpose() * theta;
  const double max_logit = logits.maxCoeff();  // overflow guard
  Eigen::VectorXd p = (logits.array() - max_logit).exp();
  p /= p.sum();
  return p;
}

int sample_action(const Eigen::VectorXd& probs, Rng& rng) {
  const Eigen::Index n = probs.size();
  if (n < 1) throw std::invalid_argument("sample_action: empty probability vector");
  double sum = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (!(probs[i] >= 0.0)) throw std::invalid_argument("sample_action: negative probability");
    sum += probs[i];
  }
  if (std::abs(sum - 1.0) > 1e-9) throw std::invalid_argument("sample_action: probabilities must sum to 1");

  const double u = rng.uniform();
  double cdf = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    cdf += probs[i];
    if (u < cdf) return static_cast<int>(i);
  }
  return static_cast<int>(n - 1);
}

Eigen::VectorXd compatible_features_from_probs(const Eigen::VectorXd& probs,
                                               const Eigen::MatrixXd& action_features, int action) {
  if (action < 0 || action >= action_features.cols())
    throw std::invalid_argument("compatible_features: action index out of range");
  return action_features.col(action) - action_features * probs;
}

Eigen::VectorXd compatible_features(const Eigen::VectorXd& theta,
                                    const Eigen::MatrixXd& action_features, int action) {
  return compatible_features_from_probs(action_probabilities(theta, action_features),
                                        action_features, action);
}

void fisher_update(FisherState& fs, const Eigen::VectorXd& psi, double beta_v) {
  if (!(beta_v > 0.0) || beta_v > 1.0) throw std::invalid_argument("fisher_update: need 0 < beta <= 1");
  if (fs.g.rows() != psi.size() || fs.g.cols() != psi.size())
    throw std::invalid_argument("fisher_update: dimension mismatch");
  fs.g = (1.0 - beta_v) * fs.g + beta_v * (psi * psi.transpose());
}

bool sherman_morrison_inverse_update(FisherState& fs, const Eigen::VectorXd& psi, double beta_v) {
  if (!(beta_v > 0.0) || beta_v >= 1.0)
    throw std::invalid_argument("sherman_morrison_inverse_update: need 0 < beta < 1");
  if (fs.g_inv.rows() != psi.size() || fs.g_inv.cols() != psi.size())
    throw std::invalid_argument("sherman_morrison_inverse_update: dimension mismatch");
  if (!fs.g_inv.allFinite())
    throw std::invalid_argument("sherman_morrison_inverse_update: non-finite state");

  const double scale = 1.0 / (1.0 - beta_v);
  const Eigen::VectorXd u = fs.g_inv * psi;
  const double denom = 1.0 - beta_v + beta_v * psi.dot(u);
  bool applied = true;
  if (std::abs(denom) < 1e-12) {
    // Singular update: keep the scaling, drop the rank-one term for this step.
    fs.g_inv *= scale;
    applied = false;
  } else {
    fs.g_inv = scale * (fs.g_inv - (beta_v / denom) * (u * u.transpose()));
  }
  fs.g_inv = 0.5 * (fs.g_inv + fs.g_inv.transpose()).eval();
  return applied;
}

Eigen::MatrixXd exact_fisher(const Eigen::VectorXd& theta,
                             const std::vector<Eigen::MatrixXd>& state_action_features,
                             const Eigen::VectorXd& state_weights, int max_states) {
  const int num_states = static_cast<int>(state_action_features.size());
  if (num_states == 0) throw std::invalid_argument("exact_fisher: no states");
  if (num_states > max_states) throw std::invalid_argument("exact_fisher: instance above oracle cap");
  if (state_weights.size() != num_states)
    throw std::invalid_argument("exact_fisher: weight/state mismatch");

  const Eigen::Index m = theta.size();
  Eigen::MatrixXd g = Eigen::MatrixXd::Zero(m, m);
  for (int s = 0; s < num_states; ++s) {
    const Eigen::MatrixXd& feats = state_action_features[s];
    const Eigen::VectorXd probs = action_probabilities(theta, feats);
    for (Eigen::Index a = 0; a < feats.cols(); ++a) {
      const Eigen::VectorXd psi = compatible_features_from_probs(probs, feats, static_cast<int>(a));
      g += state_weights[s] * probs[a] * (psi * psi.transpose());
    }
  }
  return g;
}

}  // namespace manac
