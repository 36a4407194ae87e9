#pragma once

#include <Eigen/Core>
#include <functional>
#include <vector>

#include "manac/env_abstract.hpp"
#include "manac/rng.hpp"

namespace manac {

// Enumerated single-policy Boltzmann instance: per-state action-feature
// matrices (m x A_s columns q_{s,a}) plus a state weighting that sums to 1.
struct BoltzmannInstance {
  std::vector<Eigen::MatrixXd> features;
  Eigen::VectorXd weights;
};

// Closed-form KL(pi_theta || pi_{theta+dtheta}) under the instance weighting:
// E[ log sum_b pi_theta(s,b) exp((q_b - q_a)^T dtheta) ].
double kl_boltzmann(const BoltzmannInstance& inst, const Eigen::VectorXd& theta,
                    const Eigen::VectorXd& delta_theta);

// Definitional sum pi log(pi/pi') oracle (tests compare against kl_boltzmann).
double kl_definitional(const BoltzmannInstance& inst, const Eigen::VectorXd& theta,
                       const Eigen::VectorXd& delta_theta);

// Monte-Carlo estimate of grad_{dtheta} KL: average of -psi_{theta+dtheta}(s,a)
// with s ~ weights and a ~ pi_theta(s, .).
Eigen::VectorXd kl_gradient_estimate(const BoltzmannInstance& inst, const Eigen::VectorXd& theta,
                                     const Eigen::VectorXd& delta_theta, long samples, Rng& rng);

// Exact expectation form of the same gradient (enumeration, no sampling).
Eigen::VectorXd kl_gradient_exact(const BoltzmannInstance& inst, const Eigen::VectorXd& theta,
                                  const Eigen::VectorXd& delta_theta);

// Quadratic model 0.5 * dtheta^T G dtheta.
double kl_quadratic(const Eigen::VectorXd& delta_theta, const Eigen::MatrixXd& fisher);

struct SigmaMinResult {
  double sigma_min = 0.0;
  bool bound_holds = false;  // sigma_min <= 1/m + 1e-9
};
// Smallest singular value through a symmetric eigensolve. Callers attest the
// Fisher matrix came from features with ||psi|| <= 1.
SigmaMinResult sigma_min_check(const Eigen::MatrixXd& fisher, int m);

// Central differences, component-wise.
Eigen::VectorXd finite_difference_gradient(const std::function<double(const Eigen::VectorXd&)>& f,
                                           const Eigen::VectorXd& theta, double h);
Eigen::MatrixXd finite_difference_hessian(const std::function<double(const Eigen::VectorXd&)>& f,
                                          const Eigen::VectorXd& theta, double h);

// Deterministic gradient-ascent comparison: standard gradient against the
// natural-gradient recursion, both driven by the exact oracle on a small MDP.
struct DeterministicStep {
  double j_grad = 0.0;        // J at the standard-gradient iterate
  double j_natural = 0.0;     // J at the natural-gradient iterate
  double grad_norm_grad = 0.0;
  double grad_norm_natural = 0.0;
  bool value_ordered = false;     // (i)  J_grad <= J_natural
  bool grad_ordered = false;      // (ii) ||grad J_grad|| <= ||grad J_natural||
  bool step_condition = false;    // (iii) beta*m*H/2 + 1 - m^2 <= 0
};

struct DeterministicTrace {
  std::vector<DeterministicStep> steps;
  double hessian_bound = 0.0;  // max |entry| of FD Hessians over visited iterates
  int stacked_dim = 0;         // m used in the step condition
  int t0 = -1;                 // earliest index with (i) there and (ii)+(iii) onward
  bool fisher_regularized = false;
};

// beta_t supplied as a callable of the step index.
DeterministicTrace deterministic_compare(const AbstractMdp& mdp,
                                         const std::vector<Eigen::VectorXd>& theta0, int steps,
                                         const std::function<double(int)>& beta_of_t);

// Bundled KL validation on one instance, as emitted by the CLI.
struct KlReport {
  double exact_kl = 0.0;
  double definitional_kl = 0.0;
  double quadratic_approx = 0.0;
  Eigen::VectorXd mc_gradient;
  Eigen::VectorXd fd_gradient;
  double fitted_rho = 0.0;        // from grad KL ~ -(1/rho) grad J
  double lemma1_residual = 0.0;   // relative residual of the proportionality fit
  double eq_gradlog_residual = 0.0;  // E[grad log pi'] vs (1/rho) grad J
};

// Builds the weighting from the MDP's stationary distribution at theta and the
// natural-gradient displacement of norm delta_scale, then runs all KL checks.
KlReport analyze_kl(const AbstractMdp& single_agent_mdp, const Eigen::VectorXd& theta,
                    double delta_scale, long mc_samples, Rng& rng);

}  // namespace manac
