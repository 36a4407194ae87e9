#pragma once

#include <Eigen/Core>
#include <iosfwd>
#include <string>
#include <vector>

#include "manac/env.hpp"

namespace manac {

struct AbstractMdpConfig {
  int num_agents = 15;
  int num_states = 15;
  int actions_per_agent = 2;
  int policy_feature_dim = 5;  // m_i
  int value_feature_dim = 5;   // L
  int reward_feature_dim = 10; // M
};

// Randomly generated finite multi-agent MDP: uniform transition entries with a
// 1e-5 ergodicity floor then row-normalized, mean rewards uniform on [0,4],
// all feature tables uniform on [0,1]. Instantaneous rewards are sampled
// uniformly within +-0.5 of the mean reward.
class AbstractMdp final : public Environment {
 public:
  AbstractMdp() = default;

  static AbstractMdp generate(const AbstractMdpConfig& cfg, Rng& rng);

  // Environment surface.
  int num_agents() const override { return cfg_.num_agents; }
  int num_actions(int) const override { return cfg_.actions_per_agent; }
  int state_feature_dim() const override { return cfg_.value_feature_dim; }
  int reward_feature_dim() const override { return cfg_.reward_feature_dim; }
  int policy_feature_dim(int) const override { return cfg_.policy_feature_dim; }
  void reset(Rng& rng) override;
  Eigen::VectorXd state_features() const override;
  Eigen::MatrixXd policy_features(int agent) const override;
  Eigen::VectorXd reward_features(const std::vector<int>& joint_action) const override;
  Eigen::VectorXd step(const std::vector<int>& joint_action, Rng& rng) override;
  double network_metric(const Eigen::VectorXd& rewards) const override {
    return rewards.mean();
  }

  // Table access (oracles, tests).
  const AbstractMdpConfig& config() const { return cfg_; }
  long num_joint_actions() const { return num_joint_actions_; }
  long joint_index(const std::vector<int>& joint_action) const;
  std::vector<int> decode_joint(long index) const;
  double transition(int s, long a, int s_next) const {
    return p_[(static_cast<long>(s) * num_joint_actions_ + a) * cfg_.num_states + s_next];
  }
  double mean_reward(int agent, int s, long a) const {
    return r_[(static_cast<long>(agent) * cfg_.num_states + s) * num_joint_actions_ + a];
  }
  double mean_reward_avg(int s, long a) const;
  Eigen::VectorXd phi(int s) const;
  Eigen::VectorXd f(int s, long joint_index) const;
  Eigen::MatrixXd q(int agent, int s) const;  // m_i x A_i
  int current_state() const { return state_; }
  void set_state(int s) { state_ = s; }

  // Mutators used by tests and the deterministic-compare harness.
  void set_transition_row(int s, long a, const Eigen::VectorXd& row);
  void set_mean_reward(int agent, int s, long a, double value);
  void set_q(int agent, int s, const Eigen::MatrixXd& features);
  void scale_q(double factor);

  // Self-describing text serialization (versioned header, dims, row-major
  // tables); round-trips doubles exactly.
  void save(std::ostream& os) const;
  static AbstractMdp load(std::istream& is);
  void save_file(const std::string& path) const;
  static AbstractMdp load_file(const std::string& path);

 private:
  AbstractMdpConfig cfg_;
  long num_joint_actions_ = 0;
  std::vector<double> p_;    // [S][A][S]
  std::vector<double> r_;    // [n][S][A]
  std::vector<double> phi_;  // [S][L]
  std::vector<double> f_;    // [S][A][M]
  std::vector<double> q_;    // [n][S][A_i][m_i]
  int state_ = 0;
};

// --- Exact analysis (dense solves; refuses above the |S|*|A| cap) ---

// pi^i(s, .) for every agent/state given actor parameters.
std::vector<Eigen::MatrixXd> policy_tables(const AbstractMdp& mdp,
                                           const std::vector<Eigen::VectorXd>& thetas);

Eigen::VectorXd stationary_distribution(const AbstractMdp& mdp,
                                        const std::vector<Eigen::VectorXd>& thetas);

double exact_objective(const AbstractMdp& mdp, const std::vector<Eigen::VectorXd>& thetas);

Eigen::VectorXd exact_gradient(const AbstractMdp& mdp, const std::vector<Eigen::VectorXd>& thetas,
                               int agent);

struct OracleReport {
  Eigen::VectorXd d;                    // stationary distribution
  double j = 0.0;                       // long-run average reward
  Eigen::VectorXd v;                    // relative state values, d-weighted mean zero
  Eigen::MatrixXd q;                    // S x A state-action values
  std::vector<Eigen::VectorXd> grad;    // per-agent gradients of J
  std::vector<Eigen::MatrixXd> fisher;  // per-agent G(theta^i)
  double poisson_residual = 0.0;
};

OracleReport oracle_report(const AbstractMdp& mdp, const std::vector<Eigen::VectorXd>& thetas);

// V(s; v_i) = v_i . phi(s) for every state.
Eigen::VectorXd relative_value(const Eigen::VectorXd& v_i, const AbstractMdp& mdp);

inline constexpr long kOracleJointCap = 4096;

}  // namespace manac
