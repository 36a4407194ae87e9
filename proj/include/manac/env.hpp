#pragma once

#include <Eigen/Core>
#include <vector>

#include "manac/rng.hpp"

namespace manac {

// Common surface the training loop drives. An environment owns the current
// state; feature accessors refer to that state. step() advances it.
class Environment {
 public:
  virtual ~Environment() = default;

  virtual int num_agents() const = 0;
  virtual int num_actions(int agent) const = 0;
  virtual int state_feature_dim() const = 0;        // L
  virtual int reward_feature_dim() const = 0;       // M
  virtual int policy_feature_dim(int agent) const = 0;  // m_i

  virtual void reset(Rng& rng) = 0;

  virtual Eigen::VectorXd state_features() const = 0;                 // phi(s), dim L
  virtual Eigen::MatrixXd policy_features(int agent) const = 0;       // m_i x A_i, columns q_{s,a}
  virtual Eigen::VectorXd reward_features(const std::vector<int>& joint_action) const = 0;

  // Advances the state, returns per-agent rewards r^i_{t+1}.
  virtual Eigen::VectorXd step(const std::vector<int>& joint_action, Rng& rng) = 0;

  // Headline per-epoch scalar derived from the reward vector: total congestion
  // for the traffic network, globally averaged reward for the abstract model.
  virtual double network_metric(const Eigen::VectorXd& rewards) const = 0;
};

}  // namespace manac
