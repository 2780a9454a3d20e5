#include "fcnet/rng.hpp"

#include <doctest.h>

#include <cmath>
#include <set>
#include <vector>

using namespace fcnet;

TEST_CASE("counter rng is a pure function of seed, stream and counter") {
  CounterRng a(42, 7);
  CounterRng b(42, 7);
  for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());

  CounterRng c(42, 8);
  CounterRng d(43, 7);
  CHECK(CounterRng(42, 7).next_u64() != c.next_u64());
  CHECK(CounterRng(42, 7).next_u64() != d.next_u64());
}

TEST_CASE("uniform01 stays in range and looks flat") {
  CounterRng rng(5);
  double sum = 0.0;
  const int n = 20000;
  for (int i = 0; i < n; ++i) {
    const double u = rng.uniform01();
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
    sum += u;
  }
  CHECK(std::fabs(sum / n - 0.5) < 0.02);
}

TEST_CASE("normal draws have roughly standard moments") {
  CounterRng rng(11);
  const int n = 20000;
  double sum = 0.0, sq = 0.0;
  for (int i = 0; i < n; ++i) {
    const double z = rng.normal();
    sum += z;
    sq += z * z;
  }
  const double mean = sum / n;
  const double var = sq / n - mean * mean;
  CHECK(std::fabs(mean) < 0.03);
  CHECK(std::fabs(var - 1.0) < 0.05);
}

TEST_CASE("uniform_below is in range and hits every value") {
  CounterRng rng(3);
  std::set<std::uint64_t> seen;
  for (int i = 0; i < 500; ++i) {
    const auto v = rng.uniform_below(7);
    CHECK(v < 7);
    seen.insert(v);
  }
  CHECK(seen.size() == 7);
  CHECK(rng.uniform_below(1) == 0);
  CHECK(rng.uniform_below(0) == 0);
}

TEST_CASE("shuffle permutes deterministically per seed") {
  std::vector<int> base{0, 1, 2, 3, 4, 5, 6, 7, 8, 9};
  auto a = base;
  auto b = base;
  CounterRng ra(9, 1), rb(9, 1);
  shuffle(a, ra);
  shuffle(b, rb);
  CHECK(a == b);
  CHECK(a != base);  // 10! permutations; identity is astronomically unlikely

  auto sorted = a;
  std::sort(sorted.begin(), sorted.end());
  CHECK(sorted == base);
}

TEST_CASE("derive_seed separates sub-streams") {
  std::set<std::uint64_t> seeds;
  for (std::uint64_t rep = 0; rep < 10; ++rep) {
    for (std::uint64_t fold = 0; fold < 10; ++fold) {
      seeds.insert(derive_seed(123, rep, fold));
    }
  }
  CHECK(seeds.size() == 100);
}
