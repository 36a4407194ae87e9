#include "manac/approx.hpp"

#include <stdexcept>

namespace manac {

CriticState CriticState::zeros(int value_dim, int reward_dim, int policy_dim) {
  CriticState cs;
  cs.v = Eigen::VectorXd::Zero(value_dim);
  cs.lambda = Eigen::VectorXd::Zero(reward_dim);
  cs.w = Eigen::VectorXd::Zero(policy_dim);
  cs.trace_v = Eigen::VectorXd::Zero(value_dim);
  return cs;
}

bool CriticState::all_finite() const {
  return std::isfinite(mu) && v.allFinite() && lambda.allFinite() && w.allFinite() &&
         trace_v.allFinite();
}

double value(const Eigen::VectorXd& v, const Eigen::VectorXd& phi) {
  if (v.size() != phi.size()) throw std::invalid_argument("value: dimension mismatch");
  return v.dot(phi);
}

double reward_estimate(const Eigen::VectorXd& lambda, const Eigen::VectorXd& f) {
  if (lambda.size() != f.size()) throw std::invalid_argument("reward_estimate: dimension mismatch");
  return lambda.dot(f);
}

double td_error(const TransitionSample& sample, const CriticState& cs, int agent) {
  return sample.rewards[agent] - cs.mu + value(cs.v, sample.phi_s_next) - value(cs.v, sample.phi_s);
}

double td_error_param(const TransitionSample& sample, const CriticState& cs, int agent) {
  (void)agent;
  return reward_estimate(cs.lambda, sample.f_sa) - cs.mu + value(cs.v, sample.phi_s_next) -
         value(cs.v, sample.phi_s);
}

void critic_local_update(CriticState& cs, const TransitionSample& sample, int agent,
                         double beta_v, double trace_lambda) {
  if (!(beta_v > 0.0) || beta_v > 1.0)
    throw std::invalid_argument("critic_local_update: need 0 < beta_v <= 1");
  if (!(trace_lambda >= 0.0) || trace_lambda >= 1.0)
    throw std::invalid_argument("critic_local_update: need trace_lambda in [0,1)");

  const double r = sample.rewards[agent];
  const double delta = td_error(sample, cs, agent);

  cs.mu = (1.0 - beta_v) * cs.mu + beta_v * r;
  cs.trace_v = trace_lambda * cs.trace_v + sample.phi_s;
  cs.v += beta_v * delta * cs.trace_v;
  cs.lambda += beta_v * (r - reward_estimate(cs.lambda, sample.f_sa)) * sample.f_sa;
}

}  // namespace manac
