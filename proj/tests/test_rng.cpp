#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <cstdint>
#include <set>
#include <vector>

#include "driftlab/rng.hpp"

using namespace driftlab;

TEST_CASE("identical seeds give identical streams", "[rng]") {
  Rng a(42), b(42);
  for (int i = 0; i < 100; ++i) REQUIRE(a.next_u64() == b.next_u64());
}

TEST_CASE("different seeds give different streams", "[rng]") {
  Rng a(1), b(2);
  int same = 0;
  for (int i = 0; i < 64; ++i) same += a.next_u64() == b.next_u64() ? 1 : 0;
  CHECK(same == 0);
}

TEST_CASE("tagged substreams are independent and deterministic", "[rng]") {
  Rng a = rng_for(7, "boot", 3);
  Rng b = rng_for(7, "boot", 3);
  Rng c = rng_for(7, "boot", 4);
  Rng d = rng_for(7, "fold", 3);
  REQUIRE(a.next_u64() == b.next_u64());
  CHECK(a.next_u64() != c.next_u64());
  CHECK(c.next_u64() != d.next_u64());
}

TEST_CASE("uniform01 stays in [0,1) and covers the range", "[rng]") {
  Rng r(5);
  double lo = 1, hi = 0;
  for (int i = 0; i < 10000; ++i) {
    const double v = r.uniform01();
    REQUIRE(v >= 0.0);
    REQUIRE(v < 1.0);
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  CHECK(lo < 0.01);
  CHECK(hi > 0.99);
}

TEST_CASE("bounded draws cover all residues and respect the bound", "[rng]") {
  Rng r(9);
  std::set<std::uint64_t> seen;
  for (int i = 0; i < 1000; ++i) {
    const std::uint64_t v = r.bounded(7);
    REQUIRE(v < 7u);
    seen.insert(v);
  }
  CHECK(seen.size() == 7u);
}

TEST_CASE("normal deviates have roughly standard moments", "[rng]") {
  Rng r(11);
  const int n = 20000;
  double sum = 0, sumsq = 0;
  for (int i = 0; i < n; ++i) {
    const double v = r.normal();
    sum += v;
    sumsq += v * v;
  }
  const double mean = sum / n;
  const double var = sumsq / n - mean * mean;
  CHECK(std::abs(mean) < 0.05);
  CHECK(std::abs(var - 1.0) < 0.08);
}

TEST_CASE("shuffle produces a permutation, deterministically", "[rng]") {
  std::vector<int> v{1, 2, 3, 4, 5, 6, 7, 8};
  std::vector<int> w = v;
  Rng a(3), b(3);
  a.shuffle(v);
  b.shuffle(w);
  REQUIRE(v == w);
  std::vector<int> sorted = v;
  std::sort(sorted.begin(), sorted.end());
  CHECK(sorted == std::vector<int>{1, 2, 3, 4, 5, 6, 7, 8});
}

TEST_CASE("fnv1a64 distinguishes strings and is stable", "[rng]") {
  CHECK(fnv1a64("abc") == fnv1a64("abc"));
  CHECK(fnv1a64("abc") != fnv1a64("abd"));
  CHECK(fnv1a64("") != fnv1a64("a"));
}

TEST_CASE("seed_tag argument order matters", "[rng]") {
  CHECK(seed_tag(1, "a", 2) != seed_tag(1, 2, "a"));
  CHECK(seed_tag(1, "a") != seed_tag(2, "a"));
}
