#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>

#include "manac/policy.hpp"

using namespace manac;

TEST_CASE("zero parameter gives the uniform policy") {
  Eigen::MatrixXd feats = Eigen::MatrixXd::Random(4, 3);
  const Eigen::VectorXd p = action_probabilities(Eigen::VectorXd::Zero(4), feats);
  for (int a = 0; a < 3; ++a) CHECK(p[a] == doctest::Approx(1.0 / 3).epsilon(1e-14));
}

TEST_CASE("two-action softmax with unit logit gap") {
  Eigen::MatrixXd feats(1, 2);
  feats << 1.0, 0.0;
  Eigen::VectorXd theta(1);
  theta << 1.0;
  const Eigen::VectorXd p = action_probabilities(theta, feats);
  const double e = std::exp(1.0);
  CHECK(p[0] == doctest::Approx(e / (e + 1)).epsilon(1e-12));
  CHECK(p[1] == doctest::Approx(1 / (e + 1)).epsilon(1e-12));
}

TEST_CASE("softmax is invariant to a common feature shift and survives huge logits") {
  Rng rng(4);
  Eigen::MatrixXd feats(3, 2);
  feats << 0.3, -0.1, 0.7, 0.2, -0.4, 0.9;
  Eigen::VectorXd theta(3);
  theta << 1.0, -2.0, 0.5;
  Eigen::VectorXd shift(3);
  shift << 5.0, -3.0, 2.0;
  Eigen::MatrixXd shifted = feats;
  shifted.colwise() += shift;
  const Eigen::VectorXd p0 = action_probabilities(theta, feats);
  const Eigen::VectorXd p1 = action_probabilities(theta, shifted);
  CHECK((p0 - p1).norm() < 1e-12);

  // max-subtraction keeps extreme logits finite
  const Eigen::VectorXd p2 = action_probabilities(1000 * theta, feats);
  CHECK(p2.allFinite());
  CHECK(p2.sum() == doctest::Approx(1.0));

  Eigen::VectorXd bad = theta;
  bad[0] = std::nan("");
  CHECK_THROWS(action_probabilities(bad, feats));
}

TEST_CASE("sample_action basics") {
  Rng rng(1);
  Eigen::VectorXd sure(2);
  sure << 1.0, 0.0;
  for (int i = 0; i < 10; ++i) CHECK(sample_action(sure, rng) == 0);

  Eigen::VectorXd fair(2);
  fair << 0.5, 0.5;
  long count0 = 0;
  const int draws = 100000;
  for (int i = 0; i < draws; ++i)
    if (sample_action(fair, rng) == 0) ++count0;
  CHECK(std::abs(count0 / static_cast<double>(draws) - 0.5) < 0.01);

  Rng a(5), b(5);
  for (int i = 0; i < 50; ++i) CHECK(sample_action(fair, a) == sample_action(fair, b));

  Eigen::VectorXd degenerate(2);
  degenerate << 0.7, 0.7;
  CHECK_THROWS(sample_action(degenerate, rng));
}

TEST_CASE("compatible features: uniform two-action case and mean-zero identity") {
  Eigen::MatrixXd feats(3, 2);
  feats << 1.0, 0.0, 0.2, 0.6, -1.0, 0.5;
  const Eigen::VectorXd psi0 = compatible_features(Eigen::VectorXd::Zero(3), feats, 0);
  CHECK((psi0 - 0.5 * (feats.col(0) - feats.col(1))).norm() < 1e-14);

  Eigen::VectorXd theta(3);
  theta << 0.4, -1.2, 0.3;
  const Eigen::VectorXd probs = action_probabilities(theta, feats);
  Eigen::VectorXd mean = Eigen::VectorXd::Zero(3);
  for (int a = 0; a < 2; ++a) mean += probs[a] * compatible_features(theta, feats, a);
  CHECK(mean.norm() < 1e-12);

  // single-action agent: degenerate simplex, zero score
  Eigen::MatrixXd solo = feats.col(0);
  CHECK(compatible_features(theta, solo, 0).norm() == 0.0);
}

TEST_CASE("compatible features equal the gradient of log probabilities") {
  Rng rng(10);
  for (int trial = 0; trial < 5; ++trial) {
    const int m = 3, actions = 4;
    Eigen::MatrixXd feats(m, actions);
    for (int a = 0; a < actions; ++a)
      for (int k = 0; k < m; ++k) feats(k, a) = rng.uniform(-1, 1);
    Eigen::VectorXd theta(m);
    for (int k = 0; k < m; ++k) theta[k] = rng.uniform(-1, 1);
    const int action = rng.uniform_int(actions);

    const Eigen::VectorXd psi = compatible_features(theta, feats, action);
    const double h = 1e-6;
    for (int k = 0; k < m; ++k) {
      Eigen::VectorXd tp = theta, tm = theta;
      tp[k] += h;
      tm[k] -= h;
      const double lp = std::log(action_probabilities(tp, feats)[action]);
      const double lm = std::log(action_probabilities(tm, feats)[action]);
      const double fd = (lp - lm) / (2 * h);
      CHECK(std::abs(psi[k] - fd) < 1e-5 * std::max(1.0, std::abs(fd)));
    }
  }
}

TEST_CASE("fisher_update examples") {
  FisherState fs;
  fs.g = Eigen::MatrixXd::Zero(2, 2);
  Eigen::VectorXd e1(2);
  e1 << 1, 0;
  fisher_update(fs, e1, 1.0);
  Eigen::MatrixXd expect(2, 2);
  expect << 1, 0, 0, 0;
  CHECK((fs.g - expect).norm() < 1e-15);

  fs.g = Eigen::MatrixXd::Identity(2, 2);
  fisher_update(fs, e1, 0.5);
  expect << 1.0, 0, 0, 0.5;
  CHECK((fs.g - expect).norm() < 1e-15);

  // trace identity
  Rng rng(3);
  Eigen::MatrixXd g0 = Eigen::MatrixXd::Random(3, 3);
  g0 = (g0 * g0.transpose()).eval();
  fs.g = g0;
  Eigen::VectorXd psi(3);
  for (int k = 0; k < 3; ++k) psi[k] = rng.uniform(-1, 1);
  fisher_update(fs, psi, 0.3);
  CHECK(fs.g.trace() ==
        doctest::Approx(0.7 * g0.trace() + 0.3 * psi.squaredNorm()).epsilon(1e-12));
}

TEST_CASE("sherman-morrison inverse examples") {
  FisherState fs;
  fs.g_inv = Eigen::MatrixXd::Identity(2, 2);
  Eigen::VectorXd e1(2);
  e1 << 1, 0;
  sherman_morrison_inverse_update(fs, e1, 0.5);
  // direct inversion oracle: inv((1-b) I + b e1 e1^T) = diag(1, 2) at b=0.5
  Eigen::MatrixXd expect(2, 2);
  expect << 1.0, 0, 0, 2.0;
  CHECK((fs.g_inv - expect).norm() < 1e-12);

  fs.g_inv = Eigen::MatrixXd::Identity(2, 2) * 3.0;
  sherman_morrison_inverse_update(fs, Eigen::VectorXd::Zero(2), 0.25);
  CHECK((fs.g_inv - Eigen::MatrixXd::Identity(2, 2) * 4.0).norm() < 1e-12);

  CHECK_THROWS(sherman_morrison_inverse_update(fs, e1, 1.0));
  CHECK_THROWS(sherman_morrison_inverse_update(fs, e1, 0.0));
}

TEST_CASE("paired recursions stay mutual inverses over long sequences") {
  Rng rng(17);
  FisherState fs;
  fs.g = Eigen::MatrixXd::Identity(3, 3);
  fs.g_inv = Eigen::MatrixXd::Identity(3, 3);
  double worst = 0.0;
  for (int t = 0; t < 5000; ++t) {
    Eigen::VectorXd psi(3);
    for (int k = 0; k < 3; ++k) psi[k] = rng.uniform(-1, 1);
    const double beta = 1.0 / std::pow(t + 2.0, 0.65);
    fisher_update(fs, psi, beta);
    sherman_morrison_inverse_update(fs, psi, beta);
    worst = std::max(worst, (fs.g * fs.g_inv - Eigen::MatrixXd::Identity(3, 3)).norm());
  }
  CHECK(worst < 1e-6);
  CHECK((fs.g_inv - fs.g_inv.transpose()).norm() < 1e-9);
}

TEST_CASE("exact_fisher: single-state symmetric case and PSD property") {
  // uniform 2-action policy with psi(s,0) = -psi(s,1) = u gives G = u u^T
  Eigen::VectorXd u(3);
  u << 0.2, -0.5, 0.1;
  Eigen::MatrixXd feats(3, 2);
  feats.col(0) = u;
  feats.col(1) = -u;
  std::vector<Eigen::MatrixXd> states{feats};
  Eigen::VectorXd w(1);
  w << 1.0;
  const Eigen::MatrixXd g = exact_fisher(Eigen::VectorXd::Zero(3), states, w);
  CHECK((g - u * u.transpose()).norm() < 1e-14);

  Rng rng(6);
  for (int trial = 0; trial < 10; ++trial) {
    std::vector<Eigen::MatrixXd> fs;
    const int num_states = 1 + rng.uniform_int(3);
    Eigen::VectorXd weights(num_states);
    for (int s = 0; s < num_states; ++s) {
      Eigen::MatrixXd f(2, 3);
      for (int a = 0; a < 3; ++a)
        for (int k = 0; k < 2; ++k) f(k, a) = rng.uniform(-1, 1);
      fs.push_back(f);
      weights[s] = rng.uniform() + 0.01;
    }
    weights /= weights.sum();
    Eigen::VectorXd theta(2);
    theta << rng.uniform(-1, 1), rng.uniform(-1, 1);
    const Eigen::MatrixXd g2 = exact_fisher(theta, fs, weights);
    CHECK((g2 - g2.transpose()).norm() < 1e-12);
    const Eigen::VectorXd ev = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(g2).eigenvalues();
    CHECK(ev.minCoeff() > -1e-9);
  }

  CHECK_THROWS(exact_fisher(Eigen::VectorXd::Zero(3), states, w, /*max_states=*/0));
}

TEST_CASE("scalar fisher bounded by one for unit-bounded features") {
  Rng rng(12);
  for (int trial = 0; trial < 50; ++trial) {
    Eigen::MatrixXd feats(1, 3);
    for (int a = 0; a < 3; ++a) feats(0, a) = rng.uniform(-1, 1);
    Eigen::VectorXd theta(1);
    theta << rng.uniform(-2, 2);
    Eigen::VectorXd w(1);
    w << 1.0;
    const Eigen::MatrixXd g = exact_fisher(theta, {feats}, w);
    CHECK(g(0, 0) <= 1.0 + 1e-12);
  }
}
