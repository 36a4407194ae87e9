#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "manac/algorithms.hpp"
#include "manac/env_abstract.hpp"
#include "manac/env_traffic.hpp"

namespace manac {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Full experiment description, loadable from a sectioned key-value text file.
// Unset keys fall back to environment-appropriate defaults.
struct RunConfig {
  enum class EnvKind { kAbstract, kTraffic };
  EnvKind env_kind = EnvKind::kAbstract;

  AbstractMdpConfig abstract;
  std::string env_file;  // optional: load a serialized abstract instance
  TrafficConfig traffic;

  std::vector<AlgorithmKind> algorithms = all_algorithms();
  long epochs = 12000;
  std::vector<std::uint64_t> seeds;  // default 1..10
  StepSchedule schedule;
  ConsensusConfig::Mode consensus_mode = ConsensusConfig::Mode::kRandomTimeVarying;
  double connectivity_ratio = 0.0;  // 0 means 4/n default
  double trace_lambda = 0.0;
  bool trace_lambda_set = false;
  int workers = 0;  // 0 means hardware concurrency
  std::string out_dir = "out";

  ConsensusConfig consensus_config(int n) const;
  double effective_connectivity_ratio(int n) const;
};

RunConfig default_config();

// Parses the flat sectioned key=value format; rejects unknown keys and
// reports constraint violations with line numbers.
RunConfig load_config(const std::string& path);
RunConfig parse_config(const std::string& text);

// CI-sized profile: 300 epochs, 3 seeds, proportionally fewer vehicles.
void apply_fast_profile(RunConfig& cfg);

std::string config_summary(const RunConfig& cfg);

}  // namespace manac
