#include "manac/algorithms.hpp"

#include <cmath>
#include <stdexcept>

#include "manac/policy.hpp"

namespace manac {

const char* algorithm_name(AlgorithmKind kind) {
  switch (kind) {
    case AlgorithmKind::kMaac: return "MAAC";
    case AlgorithmKind::kFiMan: return "FI-MAN";
    case AlgorithmKind::kApMan: return "AP-MAN";
    case AlgorithmKind::kFiapMan: return "FIAP-MAN";
  }
  return "?";
}

std::optional<AlgorithmKind> algorithm_from_name(const std::string& name) {
  std::string key;
  for (char c : name) {
    if (c == '-' || c == '_') continue;
    key += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  }
  if (key == "maac") return AlgorithmKind::kMaac;
  if (key == "fiman") return AlgorithmKind::kFiMan;
  if (key == "apman") return AlgorithmKind::kApMan;
  if (key == "fiapman") return AlgorithmKind::kFiapMan;
  return std::nullopt;
}

const std::vector<AlgorithmKind>& all_algorithms() {
  static const std::vector<AlgorithmKind> kinds = {
      AlgorithmKind::kMaac, AlgorithmKind::kFiMan, AlgorithmKind::kApMan,
      AlgorithmKind::kFiapMan};
  return kinds;
}

StepSizes step_sizes(long t, const StepSchedule& sched) {
  if (t < 0) throw std::invalid_argument("step_sizes: t must be nonnegative");
  const double base = static_cast<double>(t + 1);
  return {sched.beta_v_scale / std::pow(base, sched.exponent_v),
          sched.beta_theta_scale / std::pow(base, sched.exponent_theta)};
}

Eigen::VectorXd maac_actor_step(const Eigen::VectorXd& theta, double delta_tilde,
                                const Eigen::VectorXd& psi, double beta_theta) {
  return theta + (beta_theta * delta_tilde) * psi;
}

Eigen::VectorXd fi_man_actor_step(const Eigen::VectorXd& theta, const Eigen::MatrixXd& g_inv,
                                  double delta_tilde, const Eigen::VectorXd& psi,
                                  double beta_theta) {
  return theta + (beta_theta * delta_tilde) * (g_inv * psi);
}

Eigen::VectorXd ap_man_advantage_update(const Eigen::VectorXd& w, const Eigen::VectorXd& psi,
                                        double delta_tilde, double beta_v) {
  return w - (beta_v * psi.dot(w)) * psi + (beta_v * delta_tilde) * psi;
}

Eigen::VectorXd fiap_man_advantage_update(const Eigen::VectorXd& w, const Eigen::MatrixXd& g_inv,
                                          const Eigen::VectorXd& psi, double delta_tilde,
                                          double beta_v) {
  return (1.0 - beta_v) * w + (beta_v * delta_tilde) * (g_inv * psi);
}

Eigen::VectorXd natural_actor_step(const Eigen::VectorXd& theta, const Eigen::VectorXd& w_next,
                                   double beta_theta) {
  return theta + beta_theta * w_next;
}

namespace {
bool uses_fisher(AlgorithmKind kind) {
  return kind == AlgorithmKind::kFiMan || kind == AlgorithmKind::kFiapMan;
}
}  // namespace

Trainer::Trainer(Environment& env, AlgorithmKind kind, const TrainOptions& opts,
                 std::uint64_t seed)
    : env_(env),
      kind_(kind),
      opts_(opts),
      n_(env.num_agents()),
      action_rng_(Rng(seed).derive("actions")),
      env_rng_(Rng(seed).derive("env-step")),
      consensus_rng_(Rng(seed).derive("consensus")) {
  if (opts.epochs < 1) throw std::invalid_argument("Trainer: epochs >= 1 required");
  if (!(opts.schedule.exponent_theta > opts.schedule.exponent_v))
    throw std::invalid_argument("Trainer: exponent_theta must exceed exponent_v");

  thetas_.reserve(n_);
  critics_.reserve(n_);
  for (int i = 0; i < n_; ++i) {
    const int m = env.policy_feature_dim(i);
    thetas_.push_back(Eigen::VectorXd::Zero(m));
    CriticState cs = CriticState::zeros(env.state_feature_dim(), env.reward_feature_dim(), m);
    if (uses_fisher(kind_))
      cs.fisher.g_inv = opts_.pin_g_inv_identity
                            ? Eigen::MatrixXd::Identity(m, m)
                            : (opts_.g_inv_init_scale * Eigen::MatrixXd::Identity(m, m)).eval();
    critics_.push_back(std::move(cs));
  }
  last_delta_tilde_.assign(n_, 0.0);
  last_psi_.assign(n_, Eigen::VectorXd());
  last_rewards_ = Eigen::VectorXd::Zero(n_);

  Rng reset_rng = Rng(seed).derive("env-reset");
  env_.reset(reset_rng);
  phi_s_ = env_.state_features();
  actions_.resize(n_);
  for (int i = 0; i < n_; ++i)
    actions_[i] = sample_action(action_probabilities(thetas_[i], env_.policy_features(i)),
                                action_rng_);
}

ConsensusMatrix Trainer::consensus_matrix() {
  switch (opts_.consensus.mode) {
    case ConsensusConfig::Mode::kComplete:
      return complete_graph_weights(n_);
    case ConsensusConfig::Mode::kRandomTimeVarying:
      return metropolis_weights(random_graph(n_, opts_.consensus.connectivity_ratio, consensus_rng_));
    case ConsensusConfig::Mode::kFixedGraph:
      return metropolis_weights(opts_.consensus.fixed_graph);
  }
  throw std::logic_error("consensus_matrix: unknown mode");
}

bool Trainer::step() {
  const StepSizes beta = step_sizes(t_, opts_.schedule);

  // Features of (s_t, a_t) before the environment advances.
  TransitionSample sample;
  sample.phi_s = phi_s_;
  sample.f_sa = env_.reward_features(actions_);
  std::vector<Eigen::MatrixXd> q_feats(n_);
  for (int i = 0; i < n_; ++i) q_feats[i] = env_.policy_features(i);

  sample.rewards = env_.step(actions_, env_rng_);
  sample.phi_s_next = env_.state_features();
  last_rewards_ = sample.rewards;

  for (int i = 0; i < n_; ++i) {
    last_psi_[i] = compatible_features(thetas_[i], q_feats[i], actions_[i]);
    max_psi_norm_ = std::max(max_psi_norm_, last_psi_[i].norm());
    last_delta_tilde_[i] = td_error_param(sample, critics_[i], i);
  }

  // Local critic updates produce the pre-consensus (tilde) values in place.
  for (int i = 0; i < n_; ++i)
    if (beta.beta_v > 0.0)
      critic_local_update(critics_[i], sample, i, beta.beta_v, opts_.trace_lambda);

  // Advantage and actor steps; G^{-1} here is the value from before this
  // step's Fisher update.
  for (int i = 0; i < n_; ++i) {
    const double dt = last_delta_tilde_[i];
    const Eigen::VectorXd& psi = last_psi_[i];
    CriticState& cs = critics_[i];
    // natural direction with the amplification guard applied
    auto natural_direction = [&]() {
      Eigen::VectorXd dir = cs.fisher.g_inv * psi;
      const double limit = opts_.natural_amplification_cap * psi.norm();
      const double norm = dir.norm();
      if (norm > limit && norm > 0.0) dir *= limit / norm;
      return dir;
    };
    switch (kind_) {
      case AlgorithmKind::kMaac:
        thetas_[i] = maac_actor_step(thetas_[i], dt, psi, beta.beta_theta);
        break;
      case AlgorithmKind::kFiMan:
        thetas_[i] = maac_actor_step(thetas_[i], dt, natural_direction(), beta.beta_theta);
        break;
      case AlgorithmKind::kApMan:
        cs.w = opts_.zero_psi_outer_in_ap
                   ? (cs.w + (beta.beta_v * dt) * psi).eval()
                   : ap_man_advantage_update(cs.w, psi, dt, beta.beta_v);
        thetas_[i] = natural_actor_step(thetas_[i], cs.w, beta.beta_theta);
        break;
      case AlgorithmKind::kFiapMan:
        cs.w = (1.0 - beta.beta_v) * cs.w + (beta.beta_v * dt) * natural_direction();
        thetas_[i] = natural_actor_step(thetas_[i], cs.w, beta.beta_theta);
        break;
    }
    if (!thetas_[i].allFinite() || thetas_[i].norm() > opts_.theta_norm_guard) {
      abort_reason_ = "actor parameters diverged for agent " + std::to_string(i);
      return false;
    }
    if (!cs.all_finite()) {
      abort_reason_ = "critic state non-finite for agent " + std::to_string(i);
      return false;
    }
  }

  // Consensus mixing of (mu, lambda, v); theta and w stay private.
  {
    const ConsensusMatrix c = consensus_matrix();
    Eigen::MatrixXd mu_rows(n_, 1), v_rows(n_, critics_[0].v.size()),
        lambda_rows(n_, critics_[0].lambda.size());
    for (int i = 0; i < n_; ++i) {
      mu_rows(i, 0) = critics_[i].mu;
      v_rows.row(i) = critics_[i].v.transpose();
      lambda_rows.row(i) = critics_[i].lambda.transpose();
    }
    mix_rows(c, mu_rows);
    mix_rows(c, v_rows);
    mix_rows(c, lambda_rows);
    for (int i = 0; i < n_; ++i) {
      critics_[i].mu = mu_rows(i, 0);
      critics_[i].v = v_rows.row(i).transpose();
      critics_[i].lambda = lambda_rows.row(i).transpose();
    }
    Eigen::MatrixXd stacked(n_, 1 + v_rows.cols() + lambda_rows.cols());
    stacked << mu_rows, v_rows, lambda_rows;
    last_disagreement_ = disagreement_rows(stacked);
  }

  // Fisher-inverse update happens after the actor step (pseudo-code order).
  if (uses_fisher(kind_) && !opts_.pin_g_inv_identity) {
    const double beta_g = std::min(beta.beta_v, opts_.fisher_beta_cap);
    if (beta_g > 0.0)
      for (int i = 0; i < n_; ++i)
        sherman_morrison_inverse_update(critics_[i].fisher, last_psi_[i], beta_g);
  }

  ++t_;
  phi_s_ = sample.phi_s_next;
  for (int i = 0; i < n_; ++i)
    actions_[i] = sample_action(action_probabilities(thetas_[i], env_.policy_features(i)),
                                action_rng_);
  return true;
}

EpochRow Trainer::last_row() const {
  EpochRow row;
  row.epoch = t_;
  row.rewards = last_rewards_;
  row.network_total = env_.network_metric(last_rewards_);
  row.disagreement = last_disagreement_;
  row.theta_dist = Eigen::VectorXd::Zero(n_);
  return row;
}

TrainResult train(Environment& env, AlgorithmKind kind, const TrainOptions& opts,
                  std::uint64_t seed) {
  Trainer trainer(env, kind, opts, seed);
  TrainResult result;
  result.rows.reserve(opts.epochs);
  if (opts.record_theta_trace) result.theta_trace.reserve(opts.epochs);

  const int n = env.num_agents();
  for (long e = 0; e < opts.epochs; ++e) {
    if (!trainer.step()) {
      result.aborted = true;
      result.abort_step = trainer.t();
      result.abort_reason = trainer.abort_reason();
      break;
    }
    EpochRow row = trainer.last_row();
    if (opts.baseline_theta != nullptr) {
      const auto& base = *opts.baseline_theta;
      if (e < static_cast<long>(base.size()))
        for (int i = 0; i < n; ++i) row.theta_dist[i] = (trainer.theta(i) - base[e][i]).norm();
    }
    result.rows.push_back(std::move(row));
    if (opts.record_theta_trace) {
      std::vector<Eigen::VectorXd> snap;
      snap.reserve(n);
      for (int i = 0; i < n; ++i) snap.push_back(trainer.theta(i));
      result.theta_trace.push_back(std::move(snap));
    }
  }

  result.final_theta.reserve(n);
  result.final_critics.reserve(n);
  for (int i = 0; i < n; ++i) {
    result.final_theta.push_back(trainer.theta(i));
    result.final_critics.push_back(trainer.critic(i));
  }
  result.max_psi_norm = trainer.max_psi_norm();
  return result;
}

}  // namespace manac
