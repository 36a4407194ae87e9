#pragma once

#include <memory>
#include <string>
#include <vector>

#include "manac/config.hpp"
#include "manac/metrics.hpp"

namespace manac {

struct RunOutcome {
  std::string run_id;
  std::uint64_t seed = 0;
  std::string algo;
  std::string file;
  bool aborted = false;
  long abort_step = -1;
  std::string abort_reason;
  double max_psi_norm = 0.0;
};

struct ExperimentResult {
  std::vector<RunOutcome> runs;
  std::string manifest_path;
  bool any_aborted = false;
};

// Builds the configured environment for one seed. Environment draws derive
// from the seed alone, never from the algorithm, so paired runs share them.
std::unique_ptr<Environment> build_environment(const RunConfig& cfg, std::uint64_t seed);

// Fans out (algorithm x seed) runs, one metrics CSV per run plus a manifest.
// Within a seed the baseline MAAC run executes first so the other runs can
// record actor-parameter distances against it.
ExperimentResult run_experiment(const RunConfig& cfg);

std::vector<MetricsRow> rows_for_run(const std::string& run_id, std::uint64_t seed,
                                     const std::string& algo,
                                     const std::vector<EpochRow>& epoch_rows);

}  // namespace manac
