#include "manac/analysis.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <stdexcept>

#include "manac/policy.hpp"

namespace manac {

namespace {
void check_instance(const BoltzmannInstance& inst) {
  if (inst.features.empty()) throw std::invalid_argument("analysis: empty instance");
  if (inst.weights.size() != static_cast<Eigen::Index>(inst.features.size()))
    throw std::invalid_argument("analysis: weight/state count mismatch");
  if (std::abs(inst.weights.sum() - 1.0) > 1e-9)
    throw std::invalid_argument("analysis: state weights must sum to 1");
}

double log_sum_exp(const Eigen::VectorXd& x) {
  const double m = x.maxCoeff();
  return m + std::log((x.array() - m).exp().sum());
}
}  // namespace

double kl_boltzmann(const BoltzmannInstance& inst, const Eigen::VectorXd& theta,
                    const Eigen::VectorXd& delta_theta) {
  check_instance(inst);
  double kl = 0.0;
  for (Eigen::Index s = 0; s < inst.weights.size(); ++s) {
    const Eigen::MatrixXd& feats = inst.features[s];
    const Eigen::VectorXd probs = action_probabilities(theta, feats);
    const Eigen::VectorXd shift = feats.transpose() * delta_theta;  // q_b . dtheta
    // log sum_b pi_b exp(shift_b - shift_a) = LSE_b(log pi_b + shift_b) - shift_a
    const Eigen::VectorXd terms = probs.array().log() + shift.array();
    const double lse = log_sum_exp(terms);
    for (Eigen::Index a = 0; a < feats.cols(); ++a) kl += inst.weights[s] * probs[a] * (lse - shift[a]);
  }
  return kl;
}

double kl_definitional(const BoltzmannInstance& inst, const Eigen::VectorXd& theta,
                       const Eigen::VectorXd& delta_theta) {
  check_instance(inst);
  double kl = 0.0;
  for (Eigen::Index s = 0; s < inst.weights.size(); ++s) {
    const Eigen::MatrixXd& feats = inst.features[s];
    // log pi(a) = logits_a - LSE(logits); difference of the two log-policies
    const Eigen::VectorXd logits0 = feats.transpose() * theta;
    const Eigen::VectorXd logits1 = feats.transpose() * (theta + delta_theta);
    const double lse0 = log_sum_exp(logits0);
    const double lse1 = log_sum_exp(logits1);
    const Eigen::VectorXd probs = action_probabilities(theta, feats);
    for (Eigen::Index a = 0; a < feats.cols(); ++a)
      kl += inst.weights[s] * probs[a] * ((logits0[a] - lse0) - (logits1[a] - lse1));
  }
  return kl;
}

Eigen::VectorXd kl_gradient_exact(const BoltzmannInstance& inst, const Eigen::VectorXd& theta,
                                  const Eigen::VectorXd& delta_theta) {
  check_instance(inst);
  Eigen::VectorXd grad = Eigen::VectorXd::Zero(theta.size());
  const Eigen::VectorXd shifted = theta + delta_theta;
  for (Eigen::Index s = 0; s < inst.weights.size(); ++s) {
    const Eigen::MatrixXd& feats = inst.features[s];
    const Eigen::VectorXd probs = action_probabilities(theta, feats);
    const Eigen::VectorXd probs_shifted = action_probabilities(shifted, feats);
    for (Eigen::Index a = 0; a < feats.cols(); ++a) {
      const Eigen::VectorXd psi =
          compatible_features_from_probs(probs_shifted, feats, static_cast<int>(a));
      grad -= inst.weights[s] * probs[a] * psi;
    }
  }
  return grad;
}

Eigen::VectorXd kl_gradient_estimate(const BoltzmannInstance& inst, const Eigen::VectorXd& theta,
                                     const Eigen::VectorXd& delta_theta, long samples, Rng& rng) {
  check_instance(inst);
  if (samples < 1) throw std::invalid_argument("kl_gradient_estimate: samples >= 1");
  const int num_states = static_cast<int>(inst.features.size());
  const Eigen::VectorXd shifted = theta + delta_theta;

  // Per-state tables once; sampling then only draws indices.
  std::vector<Eigen::VectorXd> probs(num_states);
  std::vector<Eigen::MatrixXd> psi_shifted(num_states);
  for (int s = 0; s < num_states; ++s) {
    const Eigen::MatrixXd& feats = inst.features[s];
    probs[s] = action_probabilities(theta, feats);
    const Eigen::VectorXd p1 = action_probabilities(shifted, feats);
    psi_shifted[s].resize(theta.size(), feats.cols());
    for (Eigen::Index a = 0; a < feats.cols(); ++a)
      psi_shifted[s].col(a) = compatible_features_from_probs(p1, feats, static_cast<int>(a));
  }

  Eigen::VectorXd acc = Eigen::VectorXd::Zero(theta.size());
  for (long k = 0; k < samples; ++k) {
    const int s = rng.categorical(inst.weights.data(), num_states);
    const int a = sample_action(probs[s], rng);
    acc -= psi_shifted[s].col(a);
  }
  return acc / static_cast<double>(samples);
}

double kl_quadratic(const Eigen::VectorXd& delta_theta, const Eigen::MatrixXd& fisher) {
  if (fisher.rows() != delta_theta.size() || fisher.cols() != delta_theta.size())
    throw std::invalid_argument("kl_quadratic: dimension mismatch");
  return 0.5 * delta_theta.dot(fisher * delta_theta);
}

SigmaMinResult sigma_min_check(const Eigen::MatrixXd& fisher, int m) {
  if (fisher.rows() != m || fisher.cols() != m)
    throw std::invalid_argument("sigma_min_check: matrix is not m x m");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (fisher + fisher.transpose()));
  const Eigen::VectorXd ev = es.eigenvalues();
  const double sigma_min = ev.array().abs().minCoeff();
  return {sigma_min, sigma_min <= 1.0 / m + 1e-9};
}

Eigen::VectorXd finite_difference_gradient(const std::function<double(const Eigen::VectorXd&)>& f,
                                           const Eigen::VectorXd& theta, double h) {
  if (!(h > 0.0)) throw std::invalid_argument("finite_difference_gradient: h > 0 required");
  Eigen::VectorXd grad(theta.size());
  Eigen::VectorXd x = theta;
  for (Eigen::Index k = 0; k < theta.size(); ++k) {
    const double orig = x[k];
    x[k] = orig + h;
    const double fp = f(x);
    x[k] = orig - h;
    const double fm = f(x);
    x[k] = orig;
    grad[k] = (fp - fm) / (2.0 * h);
  }
  return grad;
}

Eigen::MatrixXd finite_difference_hessian(const std::function<double(const Eigen::VectorXd&)>& f,
                                          const Eigen::VectorXd& theta, double h) {
  const Eigen::Index m = theta.size();
  Eigen::MatrixXd hess(m, m);
  Eigen::VectorXd x = theta;
  const double f0 = f(theta);
  for (Eigen::Index i = 0; i < m; ++i) {
    for (Eigen::Index j = i; j < m; ++j) {
      double v;
      if (i == j) {
        x = theta;
        x[i] += h;
        const double fp = f(x);
        x[i] = theta[i] - h;
        const double fm = f(x);
        v = (fp - 2.0 * f0 + fm) / (h * h);
      } else {
        x = theta;
        x[i] += h; x[j] += h;
        const double fpp = f(x);
        x[j] = theta[j] - h;
        const double fpm = f(x);
        x[i] = theta[i] - h; x[j] = theta[j] + h;
        const double fmp = f(x);
        x[j] = theta[j] - h;
        const double fmm = f(x);
        v = (fpp - fpm - fmp + fmm) / (4.0 * h * h);
      }
      hess(i, j) = v;
      hess(j, i) = v;
    }
  }
  return hess;
}

DeterministicTrace deterministic_compare(const AbstractMdp& mdp,
                                         const std::vector<Eigen::VectorXd>& theta0, int steps,
                                         const std::function<double(int)>& beta_of_t) {
  const int n = mdp.config().num_agents;
  if (static_cast<int>(theta0.size()) != n)
    throw std::invalid_argument("deterministic_compare: theta0 count mismatch");
  const int m_i = mdp.config().policy_feature_dim;
  const int m_total = n * m_i;

  auto unstack = [&](const Eigen::VectorXd& stacked) {
    std::vector<Eigen::VectorXd> out(n);
    for (int i = 0; i < n; ++i) out[i] = stacked.segment(static_cast<long>(i) * m_i, m_i);
    return out;
  };
  auto stack = [&](const std::vector<Eigen::VectorXd>& parts) {
    Eigen::VectorXd out(m_total);
    for (int i = 0; i < n; ++i) out.segment(static_cast<long>(i) * m_i, m_i) = parts[i];
    return out;
  };
  auto objective = [&](const Eigen::VectorXd& stacked) {
    return exact_objective(mdp, unstack(stacked));
  };

  DeterministicTrace trace;
  trace.stacked_dim = m_total;

  Eigen::VectorXd th_grad = stack(theta0);
  Eigen::VectorXd th_nat = th_grad;
  const double fd_h = 1e-4;

  std::vector<double> betas(steps);
  for (int t = 0; t < steps; ++t) {
    const double beta = beta_of_t(t);
    betas[t] = beta;

    const OracleReport rep_grad = oracle_report(mdp, unstack(th_grad));
    const OracleReport rep_nat = oracle_report(mdp, unstack(th_nat));
    const Eigen::VectorXd g_grad = stack(rep_grad.grad);
    const Eigen::VectorXd g_nat = stack(rep_nat.grad);

    DeterministicStep step;
    step.j_grad = rep_grad.j;
    step.j_natural = rep_nat.j;
    step.grad_norm_grad = g_grad.norm();
    step.grad_norm_natural = g_nat.norm();
    step.value_ordered = step.j_grad <= step.j_natural + 1e-14;
    step.grad_ordered = step.grad_norm_grad <= step.grad_norm_natural + 1e-14;
    trace.steps.push_back(step);

    // H over the visited region: FD Hessian entries at the standard-gradient iterate.
    const Eigen::MatrixXd hess = finite_difference_hessian(objective, th_grad, fd_h);
    trace.hessian_bound = std::max(trace.hessian_bound, hess.array().abs().maxCoeff());

    // advance both recursions
    th_grad += beta * g_grad;
    Eigen::VectorXd natural_dir(m_total);
    for (int i = 0; i < n; ++i) {
      Eigen::MatrixXd g = rep_nat.fisher[i];
      Eigen::LDLT<Eigen::MatrixXd> ldlt(g);
      Eigen::VectorXd x;
      if (ldlt.info() == Eigen::Success) x = ldlt.solve(rep_nat.grad[i]);
      if (ldlt.info() != Eigen::Success || !x.allFinite() ||
          (g * x - rep_nat.grad[i]).norm() > 1e-8 * (1.0 + rep_nat.grad[i].norm())) {
        g += 1e-8 * Eigen::MatrixXd::Identity(m_i, m_i);
        x = g.ldlt().solve(rep_nat.grad[i]);
        trace.fisher_regularized = true;
      }
      natural_dir.segment(static_cast<long>(i) * m_i, m_i) = x;
    }
    th_nat += beta * natural_dir;
  }

  // Step condition uses the final H bound; t0 is the earliest index where (i)
  // holds there and (ii)+(iii) hold from there on.
  for (int t = 0; t < steps; ++t)
    trace.steps[t].step_condition =
        betas[t] * trace.stacked_dim * trace.hessian_bound / 2.0 + 1.0 -
            static_cast<double>(trace.stacked_dim) * trace.stacked_dim <=
        0.0;
  for (int t0 = 0; t0 < steps; ++t0) {
    if (!trace.steps[t0].value_ordered) continue;
    bool ok = true;
    for (int t = t0; t < steps; ++t)
      if (!trace.steps[t].grad_ordered || !trace.steps[t].step_condition) {
        ok = false;
        break;
      }
    if (ok) {
      trace.t0 = t0;
      break;
    }
  }
  return trace;
}

KlReport analyze_kl(const AbstractMdp& mdp, const Eigen::VectorXd& theta, double delta_scale,
                    long mc_samples, Rng& rng) {
  if (mdp.config().num_agents != 1)
    throw std::invalid_argument("analyze_kl: expects a single-agent instance");

  const std::vector<Eigen::VectorXd> thetas{theta};
  const OracleReport rep = oracle_report(mdp, thetas);

  BoltzmannInstance inst;
  inst.weights = rep.d;
  inst.features.reserve(mdp.config().num_states);
  for (int s = 0; s < mdp.config().num_states; ++s) inst.features.push_back(mdp.q(0, s));

  // Natural-gradient displacement scaled to the requested norm.
  Eigen::MatrixXd g = rep.fisher[0] + 1e-10 * Eigen::MatrixXd::Identity(theta.size(), theta.size());
  Eigen::VectorXd delta = -g.ldlt().solve(rep.grad[0]);
  if (delta.norm() > 0) delta *= delta_scale / delta.norm();

  KlReport report;
  report.exact_kl = kl_boltzmann(inst, theta, delta);
  report.definitional_kl = kl_definitional(inst, theta, delta);
  report.quadratic_approx = kl_quadratic(delta, rep.fisher[0]);
  report.fd_gradient = finite_difference_gradient(
      [&](const Eigen::VectorXd& d) { return kl_boltzmann(inst, theta, d); }, delta, 1e-6);
  report.mc_gradient = kl_gradient_estimate(inst, theta, delta, mc_samples, rng);

  // Fit grad KL = -(1/rho) grad J; alpha = argmin ||gradKL - alpha gradJ||.
  const Eigen::VectorXd& gj = rep.grad[0];
  const double alpha = report.fd_gradient.dot(gj) / gj.squaredNorm();
  report.fitted_rho = -1.0 / alpha;
  report.lemma1_residual =
      (report.fd_gradient - alpha * gj).norm() / std::max(report.fd_gradient.norm(), 1e-300);
  const Eigen::VectorXd grad_log = -kl_gradient_exact(inst, theta, delta);  // E[grad log pi']
  report.eq_gradlog_residual =
      (grad_log - (-alpha) * gj).norm() / std::max(grad_log.norm(), 1e-300);
  return report;
}

}  // namespace manac
