#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "manac/approx.hpp"
#include "manac/consensus.hpp"
#include "manac/env.hpp"

namespace manac {

enum class AlgorithmKind { kMaac, kFiMan, kApMan, kFiapMan };

const char* algorithm_name(AlgorithmKind kind);
std::optional<AlgorithmKind> algorithm_from_name(const std::string& name);
const std::vector<AlgorithmKind>& all_algorithms();

// Two-timescale step sizes beta_v = 1/(t+1)^ev, beta_theta = 1/(t+1)^et with
// et > ev so the critic runs on the faster scale. The scale fields exist for
// tests that freeze one of the recursions.
struct StepSchedule {
  double exponent_v = 0.65;
  double exponent_theta = 0.85;
  double beta_v_scale = 1.0;
  double beta_theta_scale = 1.0;
};

struct StepSizes {
  double beta_v;
  double beta_theta;
};

StepSizes step_sizes(long t, const StepSchedule& sched);

// Actor / advantage update primitives (per agent).
Eigen::VectorXd maac_actor_step(const Eigen::VectorXd& theta, double delta_tilde,
                                const Eigen::VectorXd& psi, double beta_theta);
Eigen::VectorXd fi_man_actor_step(const Eigen::VectorXd& theta, const Eigen::MatrixXd& g_inv,
                                  double delta_tilde, const Eigen::VectorXd& psi,
                                  double beta_theta);
Eigen::VectorXd ap_man_advantage_update(const Eigen::VectorXd& w, const Eigen::VectorXd& psi,
                                        double delta_tilde, double beta_v);
Eigen::VectorXd fiap_man_advantage_update(const Eigen::VectorXd& w, const Eigen::MatrixXd& g_inv,
                                          const Eigen::VectorXd& psi, double delta_tilde,
                                          double beta_v);
Eigen::VectorXd natural_actor_step(const Eigen::VectorXd& theta, const Eigen::VectorXd& w_next,
                                   double beta_theta);

// Consensus topology used by the trainer at every step.
struct ConsensusConfig {
  enum class Mode { kComplete, kRandomTimeVarying, kFixedGraph };
  Mode mode = Mode::kComplete;
  double connectivity_ratio = 0.0;  // random mode
  Graph fixed_graph;                // fixed mode
};

struct TrainOptions {
  long epochs = 1;
  StepSchedule schedule;
  ConsensusConfig consensus;
  double trace_lambda = 0.0;
  double g_inv_init_scale = 1.0;
  double theta_norm_guard = 1e6;
  // Eq.(14) is undefined at beta = 1; the in-loop Fisher step is capped so the
  // first iterations stay well defined (see module notes).
  double fisher_beta_cap = 0.5;
  // Boundedness guard standing in for the bounded-inverse assumption: once a
  // policy saturates, rarely excited directions of the inverse-Fisher estimate
  // inflate by 1/(1-beta) each step, and a later stray score can produce an
  // arbitrarily large actor kick. The natural direction G^{-1} psi is rescaled
  // whenever its norm exceeds this multiple of ||psi||.
  double natural_amplification_cap = 1e4;
  bool record_theta_trace = false;
  // theta snapshots of a paired baseline run (same seed), per epoch per agent;
  // enables the theta-distance metric column.
  const std::vector<std::vector<Eigen::VectorXd>>* baseline_theta = nullptr;

  // Test instrumentation.
  bool pin_g_inv_identity = false;   // forces G^{-1} = I throughout
  bool zero_psi_outer_in_ap = false; // drops the psi psi^T term in the AP update
};

struct EpochRow {
  long epoch = 0;  // 1-based
  Eigen::VectorXd rewards;
  double network_total = 0.0;
  double disagreement = 0.0;
  Eigen::VectorXd theta_dist;  // vs baseline, zeros when unpaired
};

struct TrainResult {
  std::vector<EpochRow> rows;
  std::vector<Eigen::VectorXd> final_theta;
  std::vector<CriticState> final_critics;
  std::vector<std::vector<Eigen::VectorXd>> theta_trace;  // when recorded
  bool aborted = false;
  long abort_step = -1;
  std::string abort_reason;
  double max_psi_norm = 0.0;  // runtime diagnostic (feature-boundedness check)
};

// One decision step of any of the four engines; exposed so tests can inspect
// intermediate quantities and the exact operation order.
class Trainer {
 public:
  Trainer(Environment& env, AlgorithmKind kind, const TrainOptions& opts, std::uint64_t seed);

  // Executes one iteration: observe transition, local critic updates, advantage
  // and actor steps, consensus mixing, then the Fisher-inverse update.
  // Returns false when the divergence guard tripped.
  bool step();

  EpochRow last_row() const;
  long t() const { return t_; }
  const Eigen::VectorXd& theta(int agent) const { return thetas_[agent]; }
  const CriticState& critic(int agent) const { return critics_[agent]; }
  const Eigen::MatrixXd& g_inv(int agent) const { return critics_[agent].fisher.g_inv; }
  double last_delta_tilde(int agent) const { return last_delta_tilde_[agent]; }
  const Eigen::VectorXd& last_psi(int agent) const { return last_psi_[agent]; }
  double max_psi_norm() const { return max_psi_norm_; }
  const std::string& abort_reason() const { return abort_reason_; }

 private:
  ConsensusMatrix consensus_matrix();

  Environment& env_;
  AlgorithmKind kind_;
  TrainOptions opts_;
  int n_;
  Rng action_rng_, env_rng_, consensus_rng_;
  std::vector<Eigen::VectorXd> thetas_;
  std::vector<CriticState> critics_;
  std::vector<int> actions_;
  Eigen::VectorXd phi_s_;
  long t_ = 0;
  std::vector<double> last_delta_tilde_;
  std::vector<Eigen::VectorXd> last_psi_;
  Eigen::VectorXd last_rewards_;
  double last_disagreement_ = 0.0;
  double max_psi_norm_ = 0.0;
  std::string abort_reason_;
};

// Full run; deterministic given (env contents, kind, opts, seed).
TrainResult train(Environment& env, AlgorithmKind kind, const TrainOptions& opts,
                  std::uint64_t seed);

}  // namespace manac
