#include "manac/runner.hpp"

#include <algorithm>
#include <atomic>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <thread>

#include <json.hpp>

#include "manac/algorithms.hpp"

namespace manac {

namespace fs = std::filesystem;

std::unique_ptr<Environment> build_environment(const RunConfig& cfg, std::uint64_t seed) {
  if (cfg.env_kind == RunConfig::EnvKind::kTraffic)
    return std::make_unique<TrafficNet>(cfg.traffic);
  if (!cfg.env_file.empty())
    return std::make_unique<AbstractMdp>(AbstractMdp::load_file(cfg.env_file));
  Rng gen_rng = Rng(seed).derive("env-gen");
  return std::make_unique<AbstractMdp>(AbstractMdp::generate(cfg.abstract, gen_rng));
}

std::vector<MetricsRow> rows_for_run(const std::string& run_id, std::uint64_t seed,
                                     const std::string& algo,
                                     const std::vector<EpochRow>& epoch_rows) {
  std::vector<MetricsRow> rows;
  rows.reserve(epoch_rows.size() * (epoch_rows.empty() ? 0 : epoch_rows.front().rewards.size()));
  for (const EpochRow& e : epoch_rows) {
    for (int agent = 0; agent < e.rewards.size(); ++agent) {
      MetricsRow r;
      r.run_id = run_id;
      r.seed = seed;
      r.algo = algo;
      r.epoch = e.epoch;
      r.agent = agent;
      r.reward = e.rewards[agent];
      r.network_total = e.network_total;
      r.disagreement = e.disagreement;
      r.theta_dist = e.theta_dist.size() > agent ? e.theta_dist[agent] : 0.0;
      rows.push_back(std::move(r));
    }
  }
  return rows;
}

namespace {
std::string run_file_id(AlgorithmKind kind, std::uint64_t seed) {
  std::string algo = algorithm_name(kind);
  std::transform(algo.begin(), algo.end(), algo.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return algo + "_s" + std::to_string(seed);
}

TrainOptions options_for(const RunConfig& cfg, int n) {
  TrainOptions opts;
  opts.epochs = cfg.epochs;
  opts.schedule = cfg.schedule;
  opts.consensus = cfg.consensus_config(n);
  opts.trace_lambda = cfg.trace_lambda;
  opts.g_inv_init_scale = cfg.env_kind == RunConfig::EnvKind::kAbstract ? 1.5 : 1.0;
  return opts;
}
}  // namespace

ExperimentResult run_experiment(const RunConfig& cfg) {
  fs::create_directories(cfg.out_dir);

  // MAAC is the pairing baseline and runs first within each seed.
  std::vector<AlgorithmKind> order = cfg.algorithms;
  std::stable_sort(order.begin(), order.end(), [](AlgorithmKind a, AlgorithmKind b) {
    return (a == AlgorithmKind::kMaac) > (b == AlgorithmKind::kMaac);
  });
  const bool paired = order.size() > 1 && order.front() == AlgorithmKind::kMaac;

  std::vector<RunOutcome> outcomes;
  std::mutex outcomes_mutex;

  std::atomic<std::size_t> next_seed{0};
  const int hw = static_cast<int>(std::thread::hardware_concurrency());
  const int workers = std::max(
      1, std::min(cfg.workers > 0 ? cfg.workers : std::max(hw, 1),
                  static_cast<int>(cfg.seeds.size())));

  auto seed_job = [&](std::uint64_t seed) {
    auto env = build_environment(cfg, seed);
    TrainOptions opts = options_for(cfg, env->num_agents());

    std::vector<std::vector<Eigen::VectorXd>> baseline;
    for (AlgorithmKind kind : order) {
      opts.record_theta_trace = paired && kind == AlgorithmKind::kMaac;
      opts.baseline_theta =
          (paired && kind != AlgorithmKind::kMaac && !baseline.empty()) ? &baseline : nullptr;

      TrainResult result;
      try {
        result = train(*env, kind, opts, seed);
      } catch (const std::exception& e) {
        result.aborted = true;
        result.abort_step = -1;
        result.abort_reason = e.what();
      }

      const std::string run_id = run_file_id(kind, seed);
      const std::string file = (fs::path(cfg.out_dir) / (run_id + ".csv")).string();
      write_metrics_csv(file, rows_for_run(run_id, seed, algorithm_name(kind), result.rows));

      if (opts.record_theta_trace) baseline = std::move(result.theta_trace);

      RunOutcome oc;
      oc.run_id = run_id;
      oc.seed = seed;
      oc.algo = algorithm_name(kind);
      oc.file = file;
      oc.aborted = result.aborted;
      oc.abort_step = result.abort_step;
      oc.abort_reason = result.abort_reason;
      oc.max_psi_norm = result.max_psi_norm;
      std::lock_guard<std::mutex> lock(outcomes_mutex);
      outcomes.push_back(std::move(oc));
    }
  };

  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (int w = 0; w < workers; ++w)
    pool.emplace_back([&] {
      for (;;) {
        const std::size_t k = next_seed.fetch_add(1);
        if (k >= cfg.seeds.size()) return;
        seed_job(cfg.seeds[k]);
      }
    });
  for (auto& t : pool) t.join();

  std::sort(outcomes.begin(), outcomes.end(),
            [](const RunOutcome& a, const RunOutcome& b) { return a.run_id < b.run_id; });

  nlohmann::ordered_json manifest;
  manifest["config"] = config_summary(cfg);
  manifest["runs"] = nlohmann::ordered_json::array();
  bool any_aborted = false;
  for (const RunOutcome& oc : outcomes) {
    nlohmann::ordered_json entry;
    entry["run_id"] = oc.run_id;
    entry["seed"] = oc.seed;
    entry["algo"] = oc.algo;
    entry["file"] = fs::path(oc.file).filename().string();
    entry["status"] = oc.aborted ? "aborted" : "ok";
    if (oc.aborted) {
      entry["abort_step"] = oc.abort_step;
      entry["abort_reason"] = oc.abort_reason;
    }
    entry["max_psi_norm"] = oc.max_psi_norm;
    manifest["runs"].push_back(entry);
    any_aborted = any_aborted || oc.aborted;
  }

  const std::string manifest_path = (fs::path(cfg.out_dir) / "manifest.json").string();
  std::ofstream os(manifest_path);
  os << manifest.dump(2) << '\n';

  return ExperimentResult{std::move(outcomes), manifest_path, any_aborted};
}

}  // namespace manac
