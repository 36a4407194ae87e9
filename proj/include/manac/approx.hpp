#pragma once

#include <Eigen/Core>

#include "manac/policy.hpp"

namespace manac {

// Per-agent critic-side parameters. mu tracks the long-run objective, v the
// state value weights, lambda the global-reward weights, w the advantage
// weights; trace_v is the accumulating eligibility trace for the v update.
struct CriticState {
  double mu = 0.0;
  Eigen::VectorXd v;
  Eigen::VectorXd lambda;
  Eigen::VectorXd w;
  Eigen::VectorXd trace_v;
  FisherState fisher;

  static CriticState zeros(int value_dim, int reward_dim, int policy_dim);
  bool all_finite() const;
};

// One observed transition shared by all agents.
struct TransitionSample {
  Eigen::VectorXd rewards;     // r^i_{t+1} per agent
  Eigen::VectorXd phi_s;       // phi(s_t)
  Eigen::VectorXd phi_s_next;  // phi(s_{t+1})
  Eigen::VectorXd f_sa;        // f(s_t, a_t)
};

double value(const Eigen::VectorXd& v, const Eigen::VectorXd& phi);
double reward_estimate(const Eigen::VectorXd& lambda, const Eigen::VectorXd& f);

// delta = r - mu + v.phi(s') - v.phi(s)
double td_error(const TransitionSample& sample, const CriticState& cs, int agent);

// Same with r replaced by the parameterized reward lambda.f(s,a).
double td_error_param(const TransitionSample& sample, const CriticState& cs, int agent);

// Local (pre-consensus) critic update:
//   mu <- (1-beta) mu + beta r
//   trace_v <- trace_lambda * trace_v + phi(s);  v <- v + beta * delta * trace_v
//   lambda <- lambda + beta (r - lambda.f) f
void critic_local_update(CriticState& cs, const TransitionSample& sample, int agent,
                         double beta_v, double trace_lambda);

}  // namespace manac
