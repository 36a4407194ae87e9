#include "manac/env_traffic.hpp"

#include <algorithm>
#include <stdexcept>

namespace manac {

namespace {
// Node ids: 0..7 sources (Source enum), 8..11 lights T1..T4.
constexpr int kNodeT1 = 8, kNodeT2 = 9, kNodeT3 = 10, kNodeT4 = 11;
constexpr int kNumNodes = 12;

struct NodeEdge {
  int a, b;
  // direction of arrival at b when traversing a->b, and at a for b->a
  Direction into_b;
  Direction into_a;
};

// Boundary attachments plus the four internal links.
constexpr NodeEdge kEdges[] = {
    {kN1, kNodeT1, kNorth, kNorth}, {kW1, kNodeT1, kWest, kWest},
    {kN2, kNodeT2, kNorth, kNorth}, {kE1, kNodeT2, kEast, kEast},
    {kS1, kNodeT3, kSouth, kSouth}, {kW2, kNodeT3, kWest, kWest},
    {kS2, kNodeT4, kSouth, kSouth}, {kE2, kNodeT4, kEast, kEast},
    // T1-T2 horizontal: entering T2 from the west, entering T1 from the east
    {kNodeT1, kNodeT2, kWest, kEast},
    // T3-T4 horizontal
    {kNodeT3, kNodeT4, kWest, kEast},
    // T1-T3 vertical: entering T3 from the north, entering T1 from the south
    {kNodeT1, kNodeT3, kNorth, kSouth},
    // T2-T4 vertical
    {kNodeT2, kNodeT4, kNorth, kSouth},
};

bool is_light(int node) { return node >= kNodeT1; }

int lane_of(int light_node, Direction dir) { return (light_node - kNodeT1) * 4 + dir; }

// direction of arrival at `to` for the directed hop from -> to; -1 if no edge
int arrival_lane(int from, int to) {
  for (const NodeEdge& e : kEdges) {
    if (e.a == from && e.b == to && is_light(to)) return lane_of(to, e.into_b);
    if (e.b == from && e.a == to && is_light(to)) return lane_of(to, e.into_a);
  }
  return -1;
}

std::vector<std::vector<int>> adjacency() {
  std::vector<std::vector<int>> adj(kNumNodes);
  for (const NodeEdge& e : kEdges) {
    adj[e.a].push_back(e.b);
    adj[e.b].push_back(e.a);
  }
  return adj;
}

// All minimal-hop paths from src to dst, as node sequences.
std::vector<std::vector<int>> all_shortest_paths(int src, int dst,
                                                 const std::vector<std::vector<int>>& adj) {
  std::vector<int> dist(kNumNodes, -1);
  dist[src] = 0;
  std::vector<int> frontier{src};
  while (!frontier.empty() && dist[dst] < 0) {
    std::vector<int> next;
    for (int u : frontier)
      for (int v : adj[u])
        if (dist[v] < 0) {
          dist[v] = dist[u] + 1;
          next.push_back(v);
        }
    frontier = std::move(next);
  }
  std::vector<std::vector<int>> paths;
  std::vector<int> stack{dst};
  // walk backwards along strictly decreasing BFS levels
  auto recurse = [&](auto&& self, int node) -> void {
    if (node == src) {
      std::vector<int> path(stack.rbegin(), stack.rend());
      paths.push_back(std::move(path));
      return;
    }
    for (int prev : adj[node])
      if (dist[prev] == dist[node] - 1) {
        stack.push_back(prev);
        self(self, prev);
        stack.pop_back();
      }
  };
  recurse(recurse, dst);
  std::sort(paths.begin(), paths.end());
  return paths;
}
}  // namespace

const std::array<SignalPlan, 3>& signal_plans() {
  static const std::array<SignalPlan, 3> plans = {{
      {1, 0.5, 0.5},
      {2, 0.75, 0.25},
      {3, 0.25, 0.75},
  }};
  return plans;
}

std::array<double, kNumSources> arrival_probabilities(int pattern) {
  // indexed by Source: W1, W2, N1, N2, E1, E2, S1, S2
  if (pattern == 1)
    return {3.0 / 16, 1.0 / 16, 1.0 / 16, 3.0 / 16, 3.0 / 16, 1.0 / 16, 1.0 / 16, 3.0 / 16};
  if (pattern == 2)
    return {1.0 / 28, 1.0 / 28, 3.0 / 14, 3.0 / 14, 1.0 / 28, 1.0 / 28, 3.0 / 14, 3.0 / 14};
  throw std::invalid_argument("arrival_probabilities: pattern must be 1 or 2");
}

std::array<long, kNumSources> sample_arrivals(int pattern, long n_vehicles, long horizon, long t,
                                              Rng& rng) {
  if (t < 0 || t >= horizon) throw std::invalid_argument("sample_arrivals: need 0 <= t < horizon");
  const auto probs = arrival_probabilities(pattern);
  std::array<long, kNumSources> counts{};
  for (int s = 0; s < kNumSources; ++s)
    counts[s] = rng.binomial(n_vehicles, probs[s] / static_cast<double>(horizon));
  return counts;
}

TrafficNet::TrafficNet(const TrafficConfig& cfg) : cfg_(cfg) {
  if (cfg.epoch_seconds < 1 || cfg.lane_capacity < 1 || cfg.horizon_seconds < 1)
    throw std::invalid_argument("TrafficNet: bad configuration");
  source_probs_ = arrival_probabilities(cfg.arrival_pattern);

  const auto adj = adjacency();
  paths_.assign(kNumSources, std::vector<std::vector<std::vector<int>>>(kNumSources));
  for (int s = 0; s < kNumSources; ++s)
    for (int d = 0; d < kNumSources; ++d)
      if (s != d) paths_[s][d] = all_shortest_paths(s, d, adj);
}

void TrafficNet::reset(Rng& rng) {
  for (auto& q : queues_) q.clear();
  for (auto& p : incoming_) p.clear();
  credit_.fill(0.0);
  epoch_queue_accum_.fill(0.0);
  seconds_elapsed_ = 0;
  last_stats_ = EpochStats{};
  // one warm-up epoch under the balanced plan so the first decision sees a
  // populated network
  run_epoch({0, 0, 0, 0}, rng);
  last_stats_ = EpochStats{};
}

const std::vector<std::vector<int>>& TrafficNet::shortest_paths(int source, int dest) const {
  if (source < 0 || source >= kNumSources || dest < 0 || dest >= kNumSources || source == dest)
    throw std::invalid_argument("shortest_paths: unknown or equal nodes");
  return paths_[source][dest];
}

std::vector<int> TrafficNet::route(int source, int dest, Rng& rng) const {
  const auto& candidates = shortest_paths(source, dest);
  const auto& nodes = candidates[candidates.size() == 1 ? 0 : rng.uniform_int(static_cast<int>(candidates.size()))];
  std::vector<int> lanes;
  for (std::size_t k = 0; k + 1 < nodes.size(); ++k) {
    if (!is_light(nodes[k + 1])) continue;  // final hop into the destination node
    const int lane = arrival_lane(nodes[k], nodes[k + 1]);
    if (lane < 0) throw std::logic_error("route: missing lane for hop");
    lanes.push_back(lane);
  }
  return lanes;
}

void TrafficNet::seed_queue(int lane, int count) {
  for (int k = 0; k < count; ++k) {
    Vehicle v{};
    v.lanes[0] = static_cast<std::int8_t>(lane);
    v.hops = 1;
    v.pos = 0;
    queues_[lane].push_back(v);
  }
}

long TrafficNet::vehicles_in_network() const {
  long total = 0;
  for (const auto& q : queues_) total += static_cast<long>(q.size());
  for (const auto& p : incoming_) total += static_cast<long>(p.size());
  return total;
}

void TrafficNet::land_transits() {
  for (int lane = 0; lane < kNumLanes; ++lane) {
    auto& pending = incoming_[lane];
    while (!pending.empty() && pending.front().ready_at <= seconds_elapsed_) {
      queues_[lane].push_back(pending.front().vehicle);  // space was reserved on departure
      pending.pop_front();
    }
  }
}

void TrafficNet::enqueue_arrivals(Rng& rng) {
  for (int s = 0; s < kNumSources; ++s) {
    const long count =
        rng.binomial(cfg_.n_vehicles, source_probs_[s] / static_cast<double>(cfg_.horizon_seconds));
    for (long k = 0; k < count; ++k) {
      int dest = rng.uniform_int(kNumSources - 1);
      if (dest >= s) ++dest;  // uniform over the seven non-source nodes
      const std::vector<int> lanes = route(s, dest, rng);
      Vehicle v{};
      v.hops = static_cast<std::int8_t>(lanes.size());
      v.pos = 0;
      for (std::size_t h = 0; h < lanes.size(); ++h) v.lanes[h] = static_cast<std::int8_t>(lanes[h]);
      const int entry = lanes[0];
      if (static_cast<int>(queues_[entry].size()) < cfg_.lane_capacity) {
        queues_[entry].push_back(v);
        ++last_stats_.entered;
      } else {
        ++last_stats_.dropped;
      }
    }
  }
}

void TrafficNet::serve_lanes(const std::vector<int>& joint_action, int second_in_epoch) {
  for (int light = 0; light < kNumLights; ++light) {
    const SignalPlan& plan = signal_plans()[joint_action[light]];
    const int ns_green = static_cast<int>(plan.ns_fraction * cfg_.epoch_seconds + 0.5);
    const bool ns_phase = second_in_epoch < ns_green;
    for (int dir = 0; dir < 4; ++dir) {
      const bool is_ns = (dir == kNorth || dir == kSouth);
      if (is_ns != ns_phase) continue;
      const int lane = light * 4 + dir;
      credit_[lane] += cfg_.service_rate;
      while (credit_[lane] >= 1.0 && !queues_[lane].empty()) {
        Vehicle v = queues_[lane].front();
        if (v.pos + 1 >= v.hops) {
          queues_[lane].pop_front();
          ++last_stats_.exited;
          credit_[lane] -= 1.0;
          continue;
        }
        const int next_lane = v.lanes[v.pos + 1];
        // the downstream slot is reserved while the vehicle is in transit
        if (static_cast<int>(queues_[next_lane].size() + incoming_[next_lane].size()) >=
            cfg_.lane_capacity)
          break;  // downstream full: head of line waits
        queues_[lane].pop_front();
        v.pos += 1;
        incoming_[next_lane].push_back({v, seconds_elapsed_ + cfg_.link_travel_seconds});
        credit_[lane] -= 1.0;
      }
    }
  }
}

void TrafficNet::run_epoch(const std::vector<int>& joint_action, Rng& rng) {
  credit_.fill(0.0);
  epoch_queue_accum_.fill(0.0);
  for (int sec = 0; sec < cfg_.epoch_seconds; ++sec) {
    land_transits();
    enqueue_arrivals(rng);
    serve_lanes(joint_action, sec);
    ++seconds_elapsed_;
    for (int light = 0; light < kNumLights; ++light) {
      double total = 0.0;
      for (int dir = 0; dir < 4; ++dir) total += static_cast<double>(queues_[light * 4 + dir].size());
      epoch_queue_accum_[light] += total;
    }
  }
}

Eigen::VectorXd TrafficNet::step(const std::vector<int>& joint_action, Rng& rng) {
  if (static_cast<int>(joint_action.size()) != kNumLights)
    throw std::invalid_argument("TrafficNet::step: need one plan per light");
  for (int a : joint_action)
    if (a < 0 || a > 2) throw std::invalid_argument("TrafficNet::step: plan index out of range");

  last_stats_ = EpochStats{};
  run_epoch(joint_action, rng);

  Eigen::VectorXd rewards(kNumLights);
  for (int light = 0; light < kNumLights; ++light)
    rewards[light] = -epoch_queue_accum_[light] / cfg_.epoch_seconds;
  return rewards;
}

std::array<int, kNumLanes> TrafficNet::queue_snapshot() const {
  std::array<int, kNumLanes> q{};
  for (int l = 0; l < kNumLanes; ++l) q[l] = static_cast<int>(queues_[l].size());
  return q;
}

Eigen::VectorXd TrafficNet::xi_features(const std::array<int, kNumLanes>& queues, int capacity) {
  std::array<double, kNumLanes> z;
  for (int l = 0; l < kNumLanes; ++l) {
    if (queues[l] < 0 || queues[l] > capacity)
      throw std::invalid_argument("xi_features: queue out of range");
    z[l] = static_cast<double>(queues[l]) / capacity;
  }
  Eigen::VectorXd xi(kXiDim);
  int k = 0;
  for (int l = 0; l < kNumLanes; ++l) xi[k++] = z[l];
  for (int light = 0; light < kNumLights; ++light)
    for (int d1 = 0; d1 < 4; ++d1)
      for (int d2 = 0; d2 < 4; ++d2) xi[k++] = z[light * 4 + d1] * z[light * 4 + d2];
  for (int light = 0; light < kNumLights; ++light)
    for (int d1 = 0; d1 < 4; ++d1)
      for (int d2 = 0; d2 < 4; ++d2)
        for (int d3 = 0; d3 < 4; ++d3)
          xi[k++] = z[light * 4 + d1] * z[light * 4 + d2] * z[light * 4 + d3];
  return xi;
}

Eigen::VectorXd TrafficNet::phi_features(const std::array<int, kNumLanes>& queues, int capacity) {
  Eigen::VectorXd phi(kPhiDim);
  phi[0] = 1.0;
  phi.tail(kXiDim) = xi_features(queues, capacity);
  return phi;
}

Eigen::VectorXd TrafficNet::state_features() const {
  return phi_features(queue_snapshot(), cfg_.lane_capacity);
}

Eigen::MatrixXd TrafficNet::policy_features(int agent) const {
  if (agent < 0 || agent >= kNumLights) throw std::invalid_argument("policy_features: bad agent");
  const Eigen::VectorXd xi = xi_features(queue_snapshot(), cfg_.lane_capacity);
  Eigen::MatrixXd q = Eigen::MatrixXd::Zero(kPolicyDim, 3);
  for (int plan = 0; plan < 3; ++plan) {
    q(0, plan) = 1.0;
    q.col(plan).segment(1 + plan * kXiDim, kXiDim) = xi;
  }
  return q;
}

Eigen::VectorXd TrafficNet::reward_features(const std::vector<int>& joint_action) const {
  if (static_cast<int>(joint_action.size()) != kNumLights)
    throw std::invalid_argument("reward_features: need one plan per light");
  const Eigen::VectorXd xi = xi_features(queue_snapshot(), cfg_.lane_capacity);
  Eigen::VectorXd f = Eigen::VectorXd::Zero(kRewardDim);
  f[0] = 1.0;
  for (int light = 0; light < kNumLights; ++light) {
    const int plan = joint_action[light];
    if (plan < 0 || plan > 2) throw std::invalid_argument("reward_features: plan index out of range");
    f.segment(1 + (light * 3 + plan) * kXiDim, kXiDim) = xi;
  }
  return f;
}

}  // namespace manac
