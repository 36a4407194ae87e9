#include <doctest.h>

#include "manac/rng.hpp"

using manac::Rng;

TEST_CASE("identical seeds replay identical streams") {
  Rng a(42), b(42);
  for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());
}

TEST_CASE("derived substreams are independent of parent draws") {
  Rng a(7);
  Rng b(7);
  (void)a.next_u64();
  (void)a.next_u64();
  Rng da = a.derive("env-step");
  Rng db = b.derive("env-step");
  for (int i = 0; i < 10; ++i) CHECK(da.next_u64() == db.next_u64());
  CHECK(a.derive("actions").next_u64() != a.derive("env-step").next_u64());
}

TEST_CASE("uniform stays in range and covers it") {
  Rng rng(3);
  double lo = 1.0, hi = 0.0;
  for (int i = 0; i < 10000; ++i) {
    const double u = rng.uniform();
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
    lo = std::min(lo, u);
    hi = std::max(hi, u);
  }
  CHECK(lo < 0.01);
  CHECK(hi > 0.99);
}

TEST_CASE("binomial matches its mean at small p") {
  Rng rng(11);
  const long n = 50000;
  const double p = 0.05952 / 50000 * 1.0;  // tiny np regime
  double sum = 0.0;
  const int draws = 200000;
  for (int i = 0; i < draws; ++i) sum += static_cast<double>(rng.binomial(n, p));
  const double mean = sum / draws;
  const double expect = n * p;
  const double sd = std::sqrt(n * p * (1 - p));
  CHECK(std::abs(mean - expect) < 4 * sd / std::sqrt(static_cast<double>(draws)));
}

TEST_CASE("binomial edge cases") {
  Rng rng(1);
  CHECK(rng.binomial(0, 0.5) == 0);
  CHECK(rng.binomial(10, 0.0) == 0);
  CHECK(rng.binomial(10, 1.0) == 10);
  CHECK_THROWS(rng.binomial(10, 1.5));
}

TEST_CASE("categorical follows weights") {
  Rng rng(5);
  const double w[3] = {0.0, 2.0, 2.0};
  int counts[3] = {0, 0, 0};
  for (int i = 0; i < 20000; ++i) ++counts[rng.categorical(w, 3)];
  CHECK(counts[0] == 0);
  CHECK(std::abs(counts[1] - 10000) < 400);
}
