#include <doctest.h>

#include <Eigen/Dense>

#include "manac/consensus.hpp"

using namespace manac;

namespace {
Eigen::VectorXd scalar(double x) {
  Eigen::VectorXd v(1);
  v[0] = x;
  return v;
}
}  // namespace

TEST_CASE("metropolis weights on the 0-1-2 path graph") {
  Graph g{3, {{0, 1}, {1, 2}}};
  const ConsensusMatrix c = metropolis_weights(g);
  CHECK(c.weights(0, 1) == doctest::Approx(1.0 / 3).epsilon(1e-14));
  CHECK(c.weights(1, 0) == doctest::Approx(1.0 / 3).epsilon(1e-14));
  CHECK(c.weights(1, 2) == doctest::Approx(1.0 / 3).epsilon(1e-14));
  CHECK(c.weights(2, 1) == doctest::Approx(1.0 / 3).epsilon(1e-14));
  CHECK(c.weights(0, 0) == doctest::Approx(2.0 / 3).epsilon(1e-14));
  CHECK(c.weights(2, 2) == doctest::Approx(2.0 / 3).epsilon(1e-14));
  CHECK(c.weights(1, 1) == doctest::Approx(1.0 / 3).epsilon(1e-14));
  CHECK(c.weights(0, 2) == 0.0);
}

TEST_CASE("complete graph on 4 vertices gives constant 1/4") {
  Graph g{4, {{0, 1}, {0, 2}, {0, 3}, {1, 2}, {1, 3}, {2, 3}}};
  const ConsensusMatrix c = metropolis_weights(g);
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) CHECK(c.weights(i, j) == doctest::Approx(0.25).epsilon(1e-14));
  const ConsensusMatrix direct = complete_graph_weights(4);
  CHECK((c.weights - direct.weights).norm() < 1e-14);
}

TEST_CASE("single vertex gives the 1x1 identity") {
  Graph g{1, {}};
  const ConsensusMatrix c = metropolis_weights(g);
  CHECK(c.weights(0, 0) == 1.0);
}

TEST_CASE("metropolis is symmetric doubly stochastic with entries above the floor") {
  Rng rng(123);
  for (int trial = 0; trial < 50; ++trial) {
    const int n = 2 + rng.uniform_int(14);
    const Graph g = random_graph(n, 0.05 + 0.9 * rng.uniform(), rng);
    const ConsensusMatrix c = metropolis_weights(g);
    CHECK((c.weights - c.weights.transpose()).norm() < 1e-12);
    for (int i = 0; i < n; ++i) {
      CHECK(c.weights.row(i).sum() == doctest::Approx(1.0).epsilon(1e-12));
      CHECK(c.weights.col(i).sum() == doctest::Approx(1.0).epsilon(1e-12));
      for (int j = 0; j < n; ++j) {
        CHECK(c.weights(i, j) >= 0.0);
        if (c.weights(i, j) > 0.0) CHECK(c.weights(i, j) >= c.gamma_floor);
      }
    }
    CHECK(c.gamma_floor > 0.0);
  }
}

TEST_CASE("random_graph rejects bad ratios and respects determinism") {
  Rng rng(9);
  CHECK_THROWS(random_graph(2, 0.0, rng));
  CHECK_THROWS(random_graph(2, 1.5, rng));
  CHECK_THROWS(random_graph(1, 0.5, rng));

  const Graph complete = random_graph(4, 1.0, rng);
  CHECK(complete.edges.size() == 6);

  Rng r1(77), r2(77);
  const Graph a = random_graph(15, 4.0 / 15, r1);
  const Graph b = random_graph(15, 4.0 / 15, r2);
  CHECK(a.edges == b.edges);
  CHECK(a.edges.size() <= 105);
}

TEST_CASE("mix: identity, averaging and mean preservation") {
  ConsensusMatrix id{Eigen::MatrixXd::Identity(3, 3), 1.0};
  std::vector<Eigen::VectorXd> locals{scalar(1), scalar(2), scalar(3)};
  const auto out = mix(id, locals);
  for (int i = 0; i < 3; ++i) CHECK(out[i][0] == locals[i][0]);

  const ConsensusMatrix quarter = complete_graph_weights(4);
  std::vector<Eigen::VectorXd> vals{scalar(1), scalar(2), scalar(3), scalar(4)};
  const auto mixed = mix(quarter, vals);
  for (int i = 0; i < 4; ++i) CHECK(mixed[i][0] == doctest::Approx(2.5).epsilon(1e-14));

  // doubly stochastic => the across-agent mean is invariant
  Rng rng(5);
  const Graph g = random_graph(6, 0.5, rng);
  const ConsensusMatrix c = metropolis_weights(g);
  std::vector<Eigen::VectorXd> vs;
  double mean = 0.0;
  for (int i = 0; i < 6; ++i) {
    vs.push_back(scalar(rng.uniform(-5, 5)));
    mean += vs.back()[0];
  }
  const auto after = mix(c, vs);
  double mean_after = 0.0;
  for (const auto& v : after) mean_after += v[0];
  CHECK(mean_after == doctest::Approx(mean).epsilon(1e-12));

  std::vector<Eigen::VectorXd> bad{scalar(1), Eigen::VectorXd::Zero(2), scalar(3)};
  CHECK_THROWS(mix(id, bad));
}

TEST_CASE("disagreement: examples and nonnegativity") {
  std::vector<Eigen::VectorXd> same{scalar(4), scalar(4), scalar(4)};
  CHECK(disagreement(same) == 0.0);

  std::vector<Eigen::VectorXd> two{scalar(0), scalar(2)};
  CHECK(disagreement(two) == doctest::Approx(std::sqrt(2.0)).epsilon(1e-14));

  Rng rng(2);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<Eigen::VectorXd> vs;
    for (int i = 0; i < 4; ++i) {
      Eigen::VectorXd v(3);
      for (int k = 0; k < 3; ++k) v[k] = rng.uniform(-1, 1);
      vs.push_back(v);
    }
    CHECK(disagreement(vs) >= 0.0);
  }
  CHECK_THROWS(disagreement({}));
}

TEST_CASE("repeated metropolis mixing contracts disagreement monotonically") {
  Rng rng(31);
  // connected graph: a ring plus chords
  Graph g{5, {{0, 1}, {1, 2}, {2, 3}, {3, 4}, {4, 0}, {0, 2}}};
  const ConsensusMatrix c = metropolis_weights(g);
  std::vector<Eigen::VectorXd> vs;
  for (int i = 0; i < 5; ++i) {
    Eigen::VectorXd v(2);
    v << rng.uniform(-3, 3), rng.uniform(-3, 3);
    vs.push_back(v);
  }
  double prev = disagreement(vs);
  int iters = 0;
  while (disagreement(vs) > 1e-8) {
    vs = mix(c, vs);
    const double cur = disagreement(vs);
    CHECK(cur <= prev + 1e-12);
    prev = cur;
    REQUIRE(++iters < 500);
  }
  CHECK(iters < 500);
}

TEST_CASE("contraction diagnostic below one for connected-enough random graphs") {
  Rng rng(8);
  const double norm = consensus_contraction_estimate(8, 0.6, 200, rng);
  CHECK(norm < 1.0);
  CHECK(norm > 0.0);
}
