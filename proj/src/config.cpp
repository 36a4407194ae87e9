#include "manac/config.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <map>
#include <sstream>

namespace manac {

namespace {
std::string trim(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t\r");
  std::size_t e = s.find_last_not_of(" \t\r");
  return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
}

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

struct Entry {
  std::string value;
  int line = 0;
};

long parse_long(const std::string& v, const std::string& key, int line) {
  try {
    std::size_t pos = 0;
    const long out = std::stol(v, &pos);
    if (pos != v.size()) throw std::invalid_argument("trailing");
    return out;
  } catch (...) {
    throw ConfigError("line " + std::to_string(line) + ": key '" + key + "' expects an integer, got '" + v + "'");
  }
}

double parse_double(const std::string& v, const std::string& key, int line) {
  try {
    std::size_t pos = 0;
    const double out = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument("trailing");
    return out;
  } catch (...) {
    throw ConfigError("line " + std::to_string(line) + ": key '" + key + "' expects a number, got '" + v + "'");
  }
}

std::vector<std::string> split_list(const std::string& v) {
  std::vector<std::string> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}
}  // namespace

ConsensusConfig RunConfig::consensus_config(int n) const {
  ConsensusConfig cc;
  cc.mode = consensus_mode;
  cc.connectivity_ratio = effective_connectivity_ratio(n);
  return cc;
}

double RunConfig::effective_connectivity_ratio(int n) const {
  if (connectivity_ratio > 0.0) return std::min(connectivity_ratio, 1.0);
  return std::min(4.0 / std::max(n, 1), 1.0);
}

RunConfig default_config() {
  RunConfig cfg;
  cfg.seeds.resize(10);
  for (int i = 0; i < 10; ++i) cfg.seeds[i] = static_cast<std::uint64_t>(i + 1);
  return cfg;
}

RunConfig parse_config(const std::string& text) {
  std::map<std::string, Entry> entries;
  std::istringstream is(text);
  std::string raw;
  std::string section;
  int line_no = 0;
  while (std::getline(is, raw)) {
    ++line_no;
    std::string line = trim(raw);
    const std::size_t hash = line.find('#');
    if (hash != std::string::npos) line = trim(line.substr(0, hash));
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']')
        throw ConfigError("line " + std::to_string(line_no) + ": malformed section header");
      section = lower(trim(line.substr(1, line.size() - 2)));
      continue;
    }
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("line " + std::to_string(line_no) + ": expected 'key = value'");
    std::string key = lower(trim(line.substr(0, eq)));
    if (!section.empty()) key = section + "." + key;
    entries[key] = Entry{trim(line.substr(eq + 1)), line_no};
  }

  RunConfig cfg = default_config();
  bool epochs_set = false, consensus_set = false, seeds_set = false;

  auto take = [&entries](const std::string& key) -> Entry* {
    auto it = entries.find(key);
    return it == entries.end() ? nullptr : &it->second;
  };

  if (Entry* e = take("env.kind")) {
    const std::string v = lower(e->value);
    if (v == "abstract")
      cfg.env_kind = RunConfig::EnvKind::kAbstract;
    else if (v == "traffic")
      cfg.env_kind = RunConfig::EnvKind::kTraffic;
    else
      throw ConfigError("line " + std::to_string(e->line) + ": env.kind must be abstract or traffic");
    entries.erase("env.kind");
  }
  if (Entry* e = take("env.agents")) {
    cfg.abstract.num_agents = static_cast<int>(parse_long(e->value, "env.agents", e->line));
    entries.erase("env.agents");
  }
  if (Entry* e = take("env.states")) {
    cfg.abstract.num_states = static_cast<int>(parse_long(e->value, "env.states", e->line));
    entries.erase("env.states");
  }
  if (Entry* e = take("env.actions_per_agent")) {
    cfg.abstract.actions_per_agent =
        static_cast<int>(parse_long(e->value, "env.actions_per_agent", e->line));
    entries.erase("env.actions_per_agent");
  }
  if (Entry* e = take("env.policy_dim")) {
    cfg.abstract.policy_feature_dim = static_cast<int>(parse_long(e->value, "env.policy_dim", e->line));
    entries.erase("env.policy_dim");
  }
  if (Entry* e = take("env.value_dim")) {
    cfg.abstract.value_feature_dim = static_cast<int>(parse_long(e->value, "env.value_dim", e->line));
    entries.erase("env.value_dim");
  }
  if (Entry* e = take("env.reward_dim")) {
    cfg.abstract.reward_feature_dim = static_cast<int>(parse_long(e->value, "env.reward_dim", e->line));
    entries.erase("env.reward_dim");
  }
  if (Entry* e = take("env.file")) {
    cfg.env_file = e->value;
    entries.erase("env.file");
  }
  if (Entry* e = take("env.arrival_pattern")) {
    cfg.traffic.arrival_pattern = static_cast<int>(parse_long(e->value, "env.arrival_pattern", e->line));
    entries.erase("env.arrival_pattern");
  }
  if (Entry* e = take("env.n_vehicles")) {
    cfg.traffic.n_vehicles = parse_long(e->value, "env.n_vehicles", e->line);
    entries.erase("env.n_vehicles");
  }
  if (Entry* e = take("env.service_rate")) {
    cfg.traffic.service_rate = parse_double(e->value, "env.service_rate", e->line);
    entries.erase("env.service_rate");
  }
  if (Entry* e = take("env.lane_capacity")) {
    cfg.traffic.lane_capacity = static_cast<int>(parse_long(e->value, "env.lane_capacity", e->line));
    entries.erase("env.lane_capacity");
  }

  if (Entry* e = take("run.algorithms")) {
    cfg.algorithms.clear();
    for (const std::string& name : split_list(e->value)) {
      const auto kind = algorithm_from_name(name);
      if (!kind)
        throw ConfigError("line " + std::to_string(e->line) + ": unknown algorithm '" + name + "'");
      cfg.algorithms.push_back(*kind);
    }
    entries.erase("run.algorithms");
  }
  if (Entry* e = take("run.epochs")) {
    cfg.epochs = parse_long(e->value, "run.epochs", e->line);
    epochs_set = true;
    entries.erase("run.epochs");
  }
  if (Entry* e = take("run.seeds")) {
    cfg.seeds.clear();
    for (const std::string& s : split_list(e->value))
      cfg.seeds.push_back(static_cast<std::uint64_t>(parse_long(s, "run.seeds", e->line)));
    seeds_set = true;
    entries.erase("run.seeds");
  }
  if (Entry* e = take("run.seed_count")) {
    const long count = parse_long(e->value, "run.seed_count", e->line);
    if (seeds_set) throw ConfigError("line " + std::to_string(e->line) + ": run.seeds and run.seed_count are exclusive");
    cfg.seeds.clear();
    for (long i = 1; i <= count; ++i) cfg.seeds.push_back(static_cast<std::uint64_t>(i));
    entries.erase("run.seed_count");
  }
  if (Entry* e = take("run.trace_lambda")) {
    cfg.trace_lambda = parse_double(e->value, "run.trace_lambda", e->line);
    cfg.trace_lambda_set = true;
    entries.erase("run.trace_lambda");
  }
  if (Entry* e = take("run.workers")) {
    cfg.workers = static_cast<int>(parse_long(e->value, "run.workers", e->line));
    entries.erase("run.workers");
  }

  if (Entry* e = take("schedule.exponent_v")) {
    cfg.schedule.exponent_v = parse_double(e->value, "schedule.exponent_v", e->line);
    entries.erase("schedule.exponent_v");
  }
  if (Entry* e = take("schedule.exponent_theta")) {
    cfg.schedule.exponent_theta = parse_double(e->value, "schedule.exponent_theta", e->line);
    entries.erase("schedule.exponent_theta");
  }

  if (Entry* e = take("consensus.mode")) {
    const std::string v = lower(e->value);
    if (v == "complete")
      cfg.consensus_mode = ConsensusConfig::Mode::kComplete;
    else if (v == "random")
      cfg.consensus_mode = ConsensusConfig::Mode::kRandomTimeVarying;
    else
      throw ConfigError("line " + std::to_string(e->line) + ": consensus.mode must be complete or random");
    consensus_set = true;
    entries.erase("consensus.mode");
  }
  if (Entry* e = take("consensus.connectivity_ratio")) {
    cfg.connectivity_ratio = parse_double(e->value, "consensus.connectivity_ratio", e->line);
    entries.erase("consensus.connectivity_ratio");
  }

  if (Entry* e = take("output.dir")) {
    cfg.out_dir = e->value;
    entries.erase("output.dir");
  }

  if (!entries.empty()) {
    std::string msg = "unknown configuration keys:";
    for (const auto& [key, entry] : entries)
      msg += "\n  line " + std::to_string(entry.line) + ": " + key;
    throw ConfigError(msg);
  }

  // Environment-dependent defaults for keys left unset.
  if (cfg.env_kind == RunConfig::EnvKind::kTraffic) {
    if (!epochs_set) cfg.epochs = 1500;
    if (!consensus_set) cfg.consensus_mode = ConsensusConfig::Mode::kComplete;
    if (!cfg.trace_lambda_set) cfg.trace_lambda = 0.25;
  } else {
    if (!cfg.trace_lambda_set) cfg.trace_lambda = 0.0;
  }

  // Constraint validation, all violations listed together.
  std::vector<std::string> violations;
  if (cfg.algorithms.empty()) violations.push_back("at least one algorithm required");
  if (cfg.seeds.empty()) violations.push_back("at least one seed required");
  if (cfg.epochs < 1) violations.push_back("epochs must be >= 1");
  if (!(cfg.schedule.exponent_v > 0.5) || cfg.schedule.exponent_v > 1.0)
    violations.push_back("exponent_v must lie in (0.5, 1]");
  if (!(cfg.schedule.exponent_theta > 0.5) || cfg.schedule.exponent_theta > 1.0)
    violations.push_back("exponent_theta must lie in (0.5, 1]");
  if (!(cfg.schedule.exponent_theta > cfg.schedule.exponent_v))
    violations.push_back("exponent_theta must exceed exponent_v (two-timescale ordering)");
  if (cfg.connectivity_ratio < 0.0 || cfg.connectivity_ratio > 1.0)
    violations.push_back("connectivity_ratio must lie in (0,1]");
  if (cfg.traffic.arrival_pattern != 1 && cfg.traffic.arrival_pattern != 2)
    violations.push_back("arrival_pattern must be 1 or 2");
  if (!(cfg.trace_lambda >= 0.0) || cfg.trace_lambda >= 1.0)
    violations.push_back("trace_lambda must lie in [0,1)");
  if (cfg.abstract.num_agents < 1 || cfg.abstract.num_states < 1)
    violations.push_back("abstract environment needs agents >= 1 and states >= 1");
  if (!violations.empty()) {
    std::string msg = "configuration constraint violations:";
    for (const std::string& v : violations) msg += "\n  " + v;
    throw ConfigError(msg);
  }
  return cfg;
}

RunConfig load_config(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot open config file: " + path);
  std::stringstream ss;
  ss << is.rdbuf();
  return parse_config(ss.str());
}

void apply_fast_profile(RunConfig& cfg) {
  const long full_epochs = cfg.epochs;
  cfg.epochs = std::min<long>(cfg.epochs, 300);
  cfg.seeds.resize(std::min<std::size_t>(cfg.seeds.size(), 3));
  if (cfg.env_kind == RunConfig::EnvKind::kTraffic && full_epochs > 0) {
    // keep the arrival rate: vehicles scale with the simulated horizon
    cfg.traffic.n_vehicles =
        std::max<long>(1, cfg.traffic.n_vehicles * cfg.epochs / full_epochs);
    cfg.traffic.horizon_seconds = cfg.epochs * cfg.traffic.epoch_seconds;
  }
}

std::string config_summary(const RunConfig& cfg) {
  std::ostringstream os;
  os << "env=" << (cfg.env_kind == RunConfig::EnvKind::kAbstract ? "abstract" : "traffic");
  os << " epochs=" << cfg.epochs << " seeds=" << cfg.seeds.size() << " algorithms=";
  for (std::size_t i = 0; i < cfg.algorithms.size(); ++i)
    os << (i ? "," : "") << algorithm_name(cfg.algorithms[i]);
  return os.str();
}

}  // namespace manac
