#include <doctest.h>

#include <cmath>

#include "vguide/rng.hpp"

using namespace vguide;

TEST_SUITE_BEGIN("rng");

TEST_CASE("streams are reproducible and path-sensitive") {
  Rng a(123), b(123), c(124);
  for (int i = 0; i < 100; ++i) {
    CHECK(a.next_u64() == b.next_u64());
  }
  CHECK(a.next_u64() != c.next_u64());

  CHECK(Rng::derive(1, {2, 3}) == Rng::derive(1, {2, 3}));
  CHECK(Rng::derive(1, {2, 3}) != Rng::derive(1, {3, 2}));
  CHECK(Rng::derive(1, {2}) != Rng::derive(2, {2}));
}

TEST_CASE("uniform01 stays in [0, 1) and looks uniform") {
  Rng rng(7);
  double sum = 0.0;
  const int n = 20000;
  for (int i = 0; i < n; ++i) {
    double u = rng.uniform01();
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
    sum += u;
  }
  CHECK(std::abs(sum / n - 0.5) < 0.01);
}

TEST_CASE("normal has roughly standard moments") {
  Rng rng(99);
  double sum = 0.0, sq = 0.0;
  const int n = 20000;
  for (int i = 0; i < n; ++i) {
    double x = rng.normal();
    sum += x;
    sq += x * x;
  }
  double mean = sum / n;
  double var = sq / n - mean * mean;
  CHECK(std::abs(mean) < 0.03);
  CHECK(std::abs(var - 1.0) < 0.05);
}

TEST_SUITE_END();
