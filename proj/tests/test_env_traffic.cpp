#include <doctest.h>

#include <Eigen/Dense>
#include <set>

#include "manac/env_traffic.hpp"

using namespace manac;

namespace {
TrafficConfig quiet_cfg() {
  TrafficConfig cfg;
  cfg.n_vehicles = 0;  // no arrivals unless a test wants them
  return cfg;
}
}  // namespace

TEST_CASE("arrival probabilities match the two demand patterns") {
  const auto p1 = arrival_probabilities(1);
  CHECK(p1[kW1] == doctest::Approx(3.0 / 16));
  CHECK(p1[kW2] == doctest::Approx(1.0 / 16));
  CHECK(p1[kN2] == doctest::Approx(3.0 / 16));
  CHECK(p1[kS1] == doctest::Approx(1.0 / 16));
  const auto p2 = arrival_probabilities(2);
  CHECK(p2[kW1] == doctest::Approx(1.0 / 28));
  CHECK(p2[kN1] == doctest::Approx(3.0 / 14));
  CHECK(p2[kS2] == doctest::Approx(3.0 / 14));
  double s1 = 0, s2 = 0;
  for (int s = 0; s < kNumSources; ++s) {
    s1 += p1[s];
    s2 += p2[s];
  }
  CHECK(s1 == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(s2 == doctest::Approx(1.0).epsilon(1e-12));
  CHECK_THROWS(arrival_probabilities(3));
}

TEST_CASE("sample_arrivals: zero vehicles, binomial mean, precondition") {
  Rng rng(1);
  const auto zeros = sample_arrivals(1, 0, 180000, 5, rng);
  for (long c : zeros) CHECK(c == 0);

  // empirical mean at (N_v=50000, T=180000, s=N2, ap=2): 50000*(3/14)/180000
  const double expect = 50000.0 * (3.0 / 14) / 180000.0;
  double sum = 0.0;
  const int draws = 10000;
  for (int i = 0; i < draws; ++i) sum += static_cast<double>(sample_arrivals(2, 50000, 180000, 0, rng)[kN2]);
  const double sd = std::sqrt(expect * (1 - (3.0 / 14) / 180000.0));
  CHECK(std::abs(sum / draws - expect) < 3 * sd / std::sqrt(static_cast<double>(draws)));

  CHECK_THROWS(sample_arrivals(1, 100, 1000, 1000, rng));
  CHECK_THROWS(sample_arrivals(7, 100, 1000, 0, rng));
}

TEST_CASE("routing: adjacency, diagonal tie-break, edge validity") {
  TrafficNet net(quiet_cfg());
  Rng rng(3);

  // W1 attaches to T1; going to N1 (also on T1) crosses exactly that light
  const std::vector<int> single = net.route(kW1, kN1, rng);
  REQUIRE(single.size() == 1);
  CHECK(single[0] == 0 * 4 + kWest);  // T1, entering from the west

  // diagonal pair N1 (NW corner) -> E2 (SE corner): two minimal paths, one
  // through T2 and one through T3, drawn uniformly
  const auto& candidates = net.shortest_paths(kN1, kE2);
  CHECK(candidates.size() == 2);
  int via_t2 = 0;
  const int draws = 10000;
  for (int i = 0; i < draws; ++i) {
    const auto lanes = net.route(kN1, kE2, rng);
    REQUIRE(lanes.size() == 3);
    CHECK(lanes[0] == 0 * 4 + kNorth);  // always enters T1 from the north
    if (lanes[2] == 3 * 4 + kNorth) {
      ++via_t2;  // T2 route enters T4 from the north
      CHECK(lanes[1] == 1 * 4 + kWest);
    } else {
      CHECK(lanes[1] == 2 * 4 + kNorth);  // T3 route
      CHECK(lanes[2] == 3 * 4 + kWest);
    }
  }
  CHECK(std::abs(via_t2 / static_cast<double>(draws) - 0.5) < 0.02);

  // all hops name lanes that exist
  for (int s = 0; s < kNumSources; ++s)
    for (int d = 0; d < kNumSources; ++d) {
      if (s == d) continue;
      const auto lanes = net.route(s, d, rng);
      CHECK(!lanes.empty());
      for (int lane : lanes) {
        CHECK(lane >= 0);
        CHECK(lane < kNumLanes);
      }
    }
  CHECK_THROWS(net.route(kW1, kW1, rng));
  CHECK_THROWS(net.route(-1, kW1, rng));
}

TEST_CASE("epoch on an empty network yields zero rewards") {
  TrafficNet net(quiet_cfg());
  Rng rng(4);
  net.reset(rng);
  const Eigen::VectorXd r = net.step({0, 0, 0, 0}, rng);
  for (int i = 0; i < kNumLights; ++i) CHECK(r[i] == 0.0);
  CHECK(net.network_metric(r) == 0.0);
}

TEST_CASE("a seeded queue drains within the epoch and leaves a decaying average") {
  TrafficConfig cfg = quiet_cfg();
  cfg.service_rate = 0.5;
  TrafficNet net(cfg);
  Rng rng(5);
  net.reset(rng);
  const int lane = 0 * 4 + kNorth;  // NS lane at T1; plan 2 gives it 90s green
  net.seed_queue(lane, 10);
  CHECK(net.queue_length(lane) == 10);
  const Eigen::VectorXd r = net.step({1, 0, 0, 0}, rng);
  CHECK(net.queue_length(lane) == 0);
  CHECK(r[0] < 0.0);
  CHECK(r[0] > -10.0);
  CHECK(net.last_epoch_stats().exited == 10);
  // drain at 1 vehicle per 2 green seconds; measured after each second the
  // queue sequence is 10, 9,9, 8,8, ..., 1,1, 0,... summing to 100
  CHECK(r[0] == doctest::Approx(-100.0 / 120.0).epsilon(1e-12));
}

TEST_CASE("flow conservation holds every epoch") {
  TrafficConfig cfg;
  cfg.arrival_pattern = 1;
  cfg.n_vehicles = 200000;  // heavy load so queues, drops and exits all occur
  cfg.horizon_seconds = 6000;
  TrafficNet net(cfg);
  Rng rng(6);
  net.reset(rng);
  long prev_total = net.vehicles_in_network();
  for (int epoch = 0; epoch < 10; ++epoch) {
    const std::vector<int> plans{epoch % 3, (epoch + 1) % 3, 0, 2};
    net.step(plans, rng);
    const long total = net.vehicles_in_network();
    const EpochStats& st = net.last_epoch_stats();
    CHECK(st.entered == st.exited + (total - prev_total));
    prev_total = total;
  }
  CHECK(prev_total > 0);
}

TEST_CASE("capacity overflow drops arrivals") {
  TrafficConfig cfg;
  cfg.arrival_pattern = 1;
  cfg.n_vehicles = 1000000;
  cfg.horizon_seconds = 1200;
  cfg.service_rate = 0.0;  // nothing ever leaves
  TrafficNet net(cfg);
  Rng rng(7);
  net.reset(rng);
  net.step({0, 0, 0, 0}, rng);
  const EpochStats& st = net.last_epoch_stats();
  CHECK(st.dropped > 0);
  CHECK(st.exited == 0);
  int full = 0;
  for (int l = 0; l < kNumLanes; ++l) {
    CHECK(net.queue_length(l) <= cfg.lane_capacity);
    if (net.queue_length(l) == cfg.lane_capacity) ++full;
  }
  CHECK(full > 0);
}

TEST_CASE("state features: zeros, saturation and documented dimensions") {
  std::array<int, kNumLanes> empty{};
  const Eigen::VectorXd xi0 = TrafficNet::xi_features(empty, 50);
  CHECK(xi0.size() == kXiDim);
  CHECK(xi0.norm() == 0.0);
  const Eigen::VectorXd phi0 = TrafficNet::phi_features(empty, 50);
  CHECK(phi0.size() == kPhiDim);
  CHECK(phi0[0] == 1.0);
  CHECK(phi0.tail(kXiDim).norm() == 0.0);

  std::array<int, kNumLanes> full;
  full.fill(50);
  const Eigen::VectorXd xi1 = TrafficNet::xi_features(full, 50);
  for (int k = 0; k < kXiDim; ++k) CHECK(xi1[k] == 1.0);

  std::array<int, kNumLanes> bad{};
  bad[3] = 51;
  CHECK_THROWS(TrafficNet::xi_features(bad, 50));

  // spot-check the layout: singles then per-light pair blocks
  std::array<int, kNumLanes> one{};
  one[5] = 25;  // T2 (light 1), direction S, z = 0.5
  const Eigen::VectorXd xi = TrafficNet::xi_features(one, 50);
  CHECK(xi[5] == doctest::Approx(0.5));
  // pair block of light 1 starts at 16 + 16; entry (S,S) sits at offset 1*4+1
  CHECK(xi[16 + 16 + 5] == doctest::Approx(0.25));
  // triple block of light 1 starts at 16+64 + 64; entry (S,S,S) at 1*16+1*4+1
  CHECK(xi[16 + 64 + 64 + 21] == doctest::Approx(0.125));
}

TEST_CASE("policy and reward features: one-hot plan blocks and exact dims") {
  TrafficNet net(quiet_cfg());
  Rng rng(8);
  net.reset(rng);
  net.seed_queue(2, 10);

  const Eigen::MatrixXd q = net.policy_features(0);
  CHECK(q.rows() == kPolicyDim);
  CHECK(q.cols() == 3);
  const Eigen::VectorXd xi = q.col(0).segment(1, kXiDim);
  CHECK(xi.norm() > 0.0);
  for (int plan = 0; plan < 3; ++plan) {
    CHECK(q(0, plan) == 1.0);
    for (int other = 0; other < 3; ++other) {
      const double block_norm = q.col(plan).segment(1 + other * kXiDim, kXiDim).norm();
      if (other == plan)
        CHECK(block_norm == doctest::Approx(xi.norm()));
      else
        CHECK(block_norm == 0.0);
    }
  }

  const Eigen::VectorXd f = net.reward_features({2, 0, 1, 0});
  CHECK(f.size() == kRewardDim);
  CHECK(f[0] == 1.0);
  const int expected_blocks[4] = {2, 0, 1, 0};
  for (int light = 0; light < 4; ++light)
    for (int plan = 0; plan < 3; ++plan) {
      const double norm = f.segment(1 + (light * 3 + plan) * kXiDim, kXiDim).norm();
      if (plan == expected_blocks[light])
        CHECK(norm == doctest::Approx(xi.norm()));
      else
        CHECK(norm == 0.0);
    }

  // empty network: q = (1, 0, ..., 0)
  TrafficNet empty_net(quiet_cfg());
  empty_net.reset(rng);
  const Eigen::MatrixXd q0 = empty_net.policy_features(2);
  CHECK(q0.col(1).tail(kPolicyDim - 1).norm() == 0.0);
  CHECK(q0(0, 1) == 1.0);
}

TEST_CASE("epoch_step is deterministic given the rng state") {
  TrafficConfig cfg;
  cfg.n_vehicles = 60000;
  cfg.horizon_seconds = 6000;
  auto run = [&cfg] {
    TrafficNet net(cfg);
    Rng rng(77);
    net.reset(rng);
    Eigen::VectorXd last;
    for (int e = 0; e < 5; ++e) last = net.step({0, 1, 2, 0}, rng);
    return last;
  };
  const Eigen::VectorXd a = run();
  const Eigen::VectorXd b = run();
  CHECK((a - b).norm() == 0.0);
  CHECK(a.minCoeff() < 0.0);
}
