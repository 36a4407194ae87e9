#include <CLI11.hpp>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "manac/analysis.hpp"
#include "manac/config.hpp"
#include "manac/metrics.hpp"
#include "manac/policy.hpp"
#include "manac/runner.hpp"

namespace fs = std::filesystem;
using namespace manac;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfigError = 1;
constexpr int kExitRunAbort = 2;

struct GlobalArgs {
  std::string config_path;
  std::string out_dir;
  std::uint64_t seed = 0;
  bool seed_set = false;
  bool fast = false;
};

RunConfig resolve_config(const GlobalArgs& args) {
  RunConfig cfg = args.config_path.empty() ? default_config() : load_config(args.config_path);
  if (args.seed_set) cfg.seeds = {args.seed};
  if (!args.out_dir.empty()) cfg.out_dir = args.out_dir;
  if (args.fast) apply_fast_profile(cfg);
  return cfg;
}

std::vector<std::vector<MetricsRow>> load_metric_runs(const std::string& dir) {
  std::vector<std::string> files;
  for (const auto& entry : fs::directory_iterator(dir))
    if (entry.path().extension() == ".csv") files.push_back(entry.path().string());
  std::sort(files.begin(), files.end());
  std::vector<std::vector<MetricsRow>> runs;
  for (const std::string& f : files) runs.push_back(read_metrics_csv(f));
  if (runs.empty()) throw std::runtime_error("no metrics CSV files under " + dir);
  return runs;
}

int cmd_gen_env(const GlobalArgs& args) {
  RunConfig cfg = resolve_config(args);
  if (cfg.env_kind != RunConfig::EnvKind::kAbstract) {
    std::cerr << "gen-env: only abstract environments are serialized; the traffic network is "
                 "reconstructed from its configuration\n";
    return kExitConfigError;
  }
  fs::create_directories(cfg.out_dir);
  for (std::uint64_t seed : cfg.seeds) {
    Rng rng = Rng(seed).derive("env-gen");
    const AbstractMdp mdp = AbstractMdp::generate(cfg.abstract, rng);
    const std::string path =
        (fs::path(cfg.out_dir) / ("abstract_mdp_s" + std::to_string(seed) + ".txt")).string();
    mdp.save_file(path);
    std::cout << "wrote " << path << '\n';
  }
  return kExitOk;
}

int cmd_train(const GlobalArgs& args) {
  RunConfig cfg = resolve_config(args);
  std::cout << "training: " << config_summary(cfg) << '\n';
  const ExperimentResult result = run_experiment(cfg);
  for (const RunOutcome& oc : result.runs) {
    std::cout << oc.run_id << ": " << (oc.aborted ? "ABORTED at step " + std::to_string(oc.abort_step)
                                                  : "ok")
              << '\n';
  }
  std::cout << "manifest: " << result.manifest_path << '\n';
  return result.any_aborted ? kExitRunAbort : kExitOk;
}

int cmd_summarize(const GlobalArgs& args, long window) {
  RunConfig cfg = resolve_config(args);
  const auto runs = load_metric_runs(cfg.out_dir);
  const auto table = summarize(runs, window);
  std::printf("%-10s %5s %14s %14s %14s\n", "algo", "runs", "mean", "sd", "CF(95%)");
  for (const SummaryRow& row : table)
    std::printf("%-10s %5d %14.5f %14.5f %14.5f   [%.5f, %.5f]\n", row.algo.c_str(), row.runs,
                row.mean, row.sd, row.cf, row.ci_lo, row.ci_hi);
  return kExitOk;
}

int cmd_plot_data(const GlobalArgs& args, const std::string& kind_name) {
  RunConfig cfg = resolve_config(args);
  const PlotKind kind = plot_kind_from_name(kind_name);
  const auto runs = load_metric_runs(cfg.out_dir);
  const std::string path = (fs::path(cfg.out_dir) / (kind_name + ".tsv")).string();
  std::ofstream os(path);
  emit_plot_data(kind, runs, os);
  std::cout << "wrote " << path << '\n';
  return kExitOk;
}

int cmd_analyze_kl(const GlobalArgs& args, long samples, double delta_scale) {
  RunConfig cfg = resolve_config(args);
  const std::uint64_t seed = cfg.seeds.empty() ? 1 : cfg.seeds.front();

  AbstractMdpConfig mc;
  mc.num_agents = 1;
  mc.num_states = 4;
  mc.actions_per_agent = 3;
  mc.policy_feature_dim = 4;
  Rng gen = Rng(seed).derive("kl-instance");
  AbstractMdp mdp = AbstractMdp::generate(mc, gen);

  Eigen::VectorXd theta(mc.policy_feature_dim);
  for (int k = 0; k < theta.size(); ++k) theta[k] = gen.uniform(-0.5, 0.5);

  Rng mc_rng = Rng(seed).derive("kl-mc");
  const KlReport rep = analyze_kl(mdp, theta, delta_scale, samples, mc_rng);

  std::printf("exact KL            %.12g\n", rep.exact_kl);
  std::printf("definitional KL     %.12g\n", rep.definitional_kl);
  std::printf("quadratic approx    %.12g\n", rep.quadratic_approx);
  std::printf("fitted rho          %.6g\n", rep.fitted_rho);
  std::printf("proportionality res %.4g\n", rep.lemma1_residual);
  std::printf("grad-log residual   %.4g\n", rep.eq_gradlog_residual);
  std::printf("|mc - fd| gradient  %.4g (mc over %ld samples)\n",
              (rep.mc_gradient - rep.fd_gradient).norm(), samples);
  return kExitOk;
}

int cmd_compare_deterministic(const GlobalArgs& args, int steps) {
  RunConfig cfg = resolve_config(args);
  const std::uint64_t seed = cfg.seeds.empty() ? 1 : cfg.seeds.front();

  AbstractMdpConfig mc;
  mc.num_agents = 2;
  mc.num_states = 3;
  mc.actions_per_agent = 2;
  mc.policy_feature_dim = 2;
  Rng gen = Rng(seed).derive("det-instance");
  AbstractMdp mdp = AbstractMdp::generate(mc, gen);
  mdp.scale_q(0.5);  // keeps ||psi|| <= 1 so the singular-value bound applies

  std::vector<Eigen::VectorXd> theta0(mc.num_agents,
                                      Eigen::VectorXd::Zero(mc.policy_feature_dim));
  const auto trace = deterministic_compare(
      mdp, theta0, steps, [](int t) { return 0.2 / std::pow(t + 1.0, 0.85); });

  std::printf("stacked dim m=%d, H estimate %.4g, t0=%d%s\n", trace.stacked_dim,
              trace.hessian_bound, trace.t0, trace.fisher_regularized ? " (ridge used)" : "");
  std::printf("%4s %14s %14s %6s %6s %6s\n", "t", "J(grad)", "J(natural)", "(i)", "(ii)", "(iii)");
  for (std::size_t t = 0; t < trace.steps.size(); ++t) {
    const DeterministicStep& s = trace.steps[t];
    std::printf("%4zu %14.8f %14.8f %6s %6s %6s\n", t, s.j_grad, s.j_natural,
                s.value_ordered ? "yes" : "no", s.grad_ordered ? "yes" : "no",
                s.step_condition ? "yes" : "no");
  }
  return kExitOk;
}

int cmd_check_fisher(const GlobalArgs& args, int instances) {
  RunConfig cfg = resolve_config(args);
  const std::uint64_t seed = cfg.seeds.empty() ? 1 : cfg.seeds.front();
  Rng rng = Rng(seed).derive("fisher-sweep");

  int holds = 0;
  double worst_margin = 1e300;
  for (int k = 0; k < instances; ++k) {
    const int m = 2 + rng.uniform_int(5);
    const int states = 1 + rng.uniform_int(4);
    const int actions = 2 + rng.uniform_int(3);
    std::vector<Eigen::MatrixXd> feats(states);
    Eigen::VectorXd weights(states);
    for (int s = 0; s < states; ++s) {
      feats[s].resize(m, actions);
      for (int a = 0; a < actions; ++a)
        for (int i = 0; i < m; ++i) feats[s](i, a) = rng.uniform();
      weights[s] = rng.uniform() + 1e-3;
    }
    weights /= weights.sum();
    Eigen::VectorXd theta(m);
    for (int i = 0; i < m; ++i) theta[i] = rng.uniform(-1.0, 1.0);

    // rescale so max ||psi|| = 1 (psi is linear in the features)
    double max_psi = 0.0;
    for (int s = 0; s < states; ++s) {
      const Eigen::VectorXd probs = action_probabilities(theta, feats[s]);
      for (int a = 0; a < actions; ++a)
        max_psi = std::max(max_psi, compatible_features_from_probs(probs, feats[s], a).norm());
    }
    if (max_psi > 0)
      for (auto& f : feats) f /= max_psi;

    const Eigen::MatrixXd g = exact_fisher(theta, feats, weights);
    const SigmaMinResult res = sigma_min_check(g, m);
    if (res.bound_holds) ++holds;
    worst_margin = std::min(worst_margin, 1.0 / m - res.sigma_min);
  }
  std::printf("sigma_min(G) <= 1/m held in %d/%d instances (smallest slack %.4g)\n", holds,
              instances, worst_margin);

  // paired recursion consistency: G and its rank-one inverse stay inverses
  FisherState fs;
  fs.g = Eigen::MatrixXd::Identity(4, 4);
  fs.g_inv = Eigen::MatrixXd::Identity(4, 4);
  double worst = 0.0;
  for (int t = 0; t < 2000; ++t) {
    Eigen::VectorXd psi(4);
    for (int i = 0; i < 4; ++i) psi[i] = rng.uniform(-1.0, 1.0);
    psi /= std::max(psi.norm(), 1e-12);
    const double beta = 1.0 / std::pow(t + 2.0, 0.65);
    fisher_update(fs, psi, beta);
    sherman_morrison_inverse_update(fs, psi, beta);
    worst = std::max(worst,
                     (fs.g * fs.g_inv - Eigen::MatrixXd::Identity(4, 4)).norm());
  }
  std::printf("max ||G G^-1 - I||_F over 2000 paired updates: %.4g\n", worst);
  return (holds == instances && worst < 0.1) ? kExitOk : kExitRunAbort;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Decentralized multi-agent actor-critic training harness"};
  app.require_subcommand(1);

  GlobalArgs args;
  app.add_option("--config", args.config_path, "Run configuration file");
  app.add_option("--out", args.out_dir, "Output directory override");
  auto* seed_opt = app.add_option("--seed", args.seed, "Use a single seed");
  app.add_flag("--fast", args.fast, "CI profile: 300 epochs, 3 seeds");

  auto* gen_env = app.add_subcommand("gen-env", "Generate and serialize environment instances");
  auto* train_cmd = app.add_subcommand("train", "Run the configured experiment fan-out");
  auto* summarize_cmd = app.add_subcommand("summarize", "Summary statistics over metrics files");
  long window = 200;
  summarize_cmd->add_option("--window", window, "Final-window length in epochs");
  auto* plot_cmd = app.add_subcommand("plot-data", "Emit columnar plot series");
  std::string plot_kind = "congestion_curve";
  plot_cmd->add_option("--kind", plot_kind,
                       "congestion_curve | param_distance | log_param_distance");
  auto* kl_cmd = app.add_subcommand("analyze-kl", "KL-divergence validation report");
  long kl_samples = 1000000;
  double kl_delta = 1e-2;
  kl_cmd->add_option("--samples", kl_samples, "Monte-Carlo sample count");
  kl_cmd->add_option("--delta-scale", kl_delta, "Norm of the policy displacement");
  auto* det_cmd = app.add_subcommand("compare-deterministic",
                                     "Exact-gradient comparison of the two deterministic recursions");
  int det_steps = 40;
  det_cmd->add_option("--steps", det_steps, "Iterations to trace");
  auto* fisher_cmd = app.add_subcommand("check-fisher", "Singular-value bound sweep");
  int fisher_instances = 1000;
  fisher_cmd->add_option("--instances", fisher_instances, "Randomized instances");

  CLI11_PARSE(app, argc, argv);
  args.seed_set = seed_opt->count() > 0;

  try {
    if (gen_env->parsed()) return cmd_gen_env(args);
    if (train_cmd->parsed()) return cmd_train(args);
    if (summarize_cmd->parsed()) return cmd_summarize(args, window);
    if (plot_cmd->parsed()) return cmd_plot_data(args, plot_kind);
    if (kl_cmd->parsed()) return cmd_analyze_kl(args, kl_samples, kl_delta);
    if (det_cmd->parsed()) return cmd_compare_deterministic(args, det_steps);
    if (fisher_cmd->parsed()) return cmd_check_fisher(args, fisher_instances);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfigError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitRunAbort;
  }
  return kExitOk;
}
