#pragma once

#include <array>
#include <cstdint>
#include <deque>
#include <vector>

#include "manac/env.hpp"

namespace manac {

// 2x2 bi-lane signalized grid. Four lights (agents) T1..T4, eight boundary
// nodes acting as sources/destinations, sixteen inbound lanes of capacity 50.
//
// Layout (T1=NW, T2=NE, T3=SW, T4=SE):
//
//      N1      N2
//      |       |
// W1 - T1 ---- T2 - E1
//      |       |
// W2 - T3 ---- T4 - E2
//      |       |
//      S1      S2
//
// Lane order is fixed and documented: light-major (T1..T4), direction order
// N,S,E,W, where the direction names the side the traffic enters from.
// Feature layout follows this order.

inline constexpr int kNumLights = 4;
inline constexpr int kNumSources = 8;
inline constexpr int kNumLanes = 16;
inline constexpr int kXiDim = 336;        // 16 + 4*(16 + 64)
inline constexpr int kPhiDim = 337;       // bias + xi
inline constexpr int kPolicyDim = 1009;   // 1 + 3*336
inline constexpr int kRewardDim = 4033;   // 1 + 4*3*336

// Source node ids (Table order used for arrival probabilities).
enum Source : int { kW1 = 0, kW2, kN1, kN2, kE1, kE2, kS1, kS2 };

enum Direction : int { kNorth = 0, kSouth, kEast, kWest };

// Green-split plans per decision epoch: fraction of the cycle given to the
// north-south pair, remainder to east-west.
struct SignalPlan {
  int id;  // 1..3
  double ns_fraction;
  double ew_fraction;
};
const std::array<SignalPlan, 3>& signal_plans();

// p(source | arrival pattern) from the two studied demand patterns.
std::array<double, kNumSources> arrival_probabilities(int pattern);

// Per-second arrival counts: N^s_t ~ Binomial(n_vehicles, p_s / horizon),
// independent across the eight sources. Requires t < horizon.
std::array<long, kNumSources> sample_arrivals(int pattern, long n_vehicles, long horizon,
                                              long t, Rng& rng);

struct TrafficConfig {
  int arrival_pattern = 1;
  long n_vehicles = 50000;
  long horizon_seconds = 180000;  // T
  int epoch_seconds = 120;        // T_c
  double service_rate = 0.5;      // vehicles per green second per lane
  int lane_capacity = 50;
  // seconds a vehicle spends on the link between two lights (all edges share
  // one length); entry arrivals join their first queue directly
  int link_travel_seconds = 20;
};

struct EpochStats {
  long entered = 0;  // arrivals accepted into an entry lane
  long dropped = 0;  // arrivals lost to a full entry lane
  long exited = 0;   // vehicles that left the network
};

class TrafficNet final : public Environment {
 public:
  explicit TrafficNet(const TrafficConfig& cfg);

  int num_agents() const override { return kNumLights; }
  int num_actions(int) const override { return 3; }
  int state_feature_dim() const override { return kPhiDim; }
  int reward_feature_dim() const override { return kRewardDim; }
  int policy_feature_dim(int) const override { return kPolicyDim; }
  void reset(Rng& rng) override;
  Eigen::VectorXd state_features() const override;
  Eigen::MatrixXd policy_features(int agent) const override;
  Eigen::VectorXd reward_features(const std::vector<int>& joint_action) const override;
  Eigen::VectorXd step(const std::vector<int>& joint_action, Rng& rng) override;
  double network_metric(const Eigen::VectorXd& rewards) const override { return -rewards.sum(); }

  const TrafficConfig& config() const { return cfg_; }

  // Shortest node paths (minimal light count) between two boundary nodes; the
  // route op draws uniformly among them and returns the inbound-lane sequence.
  const std::vector<std::vector<int>>& shortest_paths(int source, int dest) const;
  std::vector<int> route(int source, int dest, Rng& rng) const;

  int queue_length(int lane) const { return static_cast<int>(queues_[lane].size()); }
  long vehicles_in_network() const;  // queued plus in transit
  const EpochStats& last_epoch_stats() const { return last_stats_; }
  long seconds_elapsed() const { return seconds_elapsed_; }

  // Test support: preload vehicles that exit the network after this lane.
  void seed_queue(int lane, int count);

  // Feature builders on an explicit queue snapshot.
  static Eigen::VectorXd xi_features(const std::array<int, kNumLanes>& queues, int capacity);
  static Eigen::VectorXd phi_features(const std::array<int, kNumLanes>& queues, int capacity);

 private:
  struct Vehicle {
    std::array<std::int8_t, 3> lanes;  // inbound lanes along the path
    std::int8_t hops;                  // total lanes in path
    std::int8_t pos;                   // index of current lane
  };
  struct Transit {
    Vehicle vehicle;
    long ready_at;  // global second the vehicle reaches the next stop line
  };

  std::array<int, kNumLanes> queue_snapshot() const;
  void land_transits();
  void enqueue_arrivals(Rng& rng);
  void serve_lanes(const std::vector<int>& joint_action, int second_in_epoch);
  void run_epoch(const std::vector<int>& joint_action, Rng& rng);

  TrafficConfig cfg_;
  std::array<std::deque<Vehicle>, kNumLanes> queues_;
  std::array<std::deque<Transit>, kNumLanes> incoming_;  // FIFO per target lane
  std::array<double, kNumSources> source_probs_;
  // all-shortest-path table, indexed [source][dest], as node sequences
  std::vector<std::vector<std::vector<std::vector<int>>>> paths_;
  long seconds_elapsed_ = 0;
  EpochStats last_stats_;
  std::array<double, kNumLanes> credit_{};
  std::array<double, kNumLights> epoch_queue_accum_{};
};

}  // namespace manac
