#include <algorithm>
#include <cmath>
#include <cstdint>
#include <set>
#include <vector>

#include "doctest.h"
#include "mdiplus/rng.hpp"

using mdiplus::Rng;

TEST_CASE("same seed and stream reproduce the same sequence") {
  Rng a(42, 7);
  Rng b(42, 7);
  for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());
}

TEST_CASE("different streams differ") {
  Rng a(42, 0);
  Rng b(42, 1);
  int equal = 0;
  for (int i = 0; i < 64; ++i) {
    if (a.next_u64() == b.next_u64()) ++equal;
  }
  CHECK(equal == 0);
}

TEST_CASE("uniform01 lies in [0,1) and has roughly uniform mean") {
  Rng rng(1, 0);
  double sum = 0.0;
  const int n = 20000;
  for (int i = 0; i < n; ++i) {
    const double u = rng.uniform01();
    REQUIRE(u >= 0.0);
    REQUIRE(u < 1.0);
    sum += u;
  }
  CHECK(std::abs(sum / n - 0.5) < 0.01);
}

TEST_CASE("uniform_below covers the full range without bias") {
  Rng rng(3, 0);
  std::vector<int> counts(10, 0);
  const int n = 100000;
  for (int i = 0; i < n; ++i) ++counts[rng.uniform_below(10)];
  for (int c : counts) {
    CHECK(c > n / 10 - 600);
    CHECK(c < n / 10 + 600);
  }
}

TEST_CASE("normal deviates have mean 0 and variance 1") {
  Rng rng(5, 0);
  double sum = 0.0, sum2 = 0.0;
  const int n = 50000;
  for (int i = 0; i < n; ++i) {
    const double z = rng.normal();
    sum += z;
    sum2 += z * z;
  }
  const double mean = sum / n;
  const double var = sum2 / n - mean * mean;
  CHECK(std::abs(mean) < 0.02);
  CHECK(std::abs(var - 1.0) < 0.03);
}

TEST_CASE("sample_without_replacement returns k distinct ascending values") {
  Rng rng(9, 0);
  auto s = rng.sample_without_replacement(20, 8);
  REQUIRE(s.size() == 8);
  CHECK(std::is_sorted(s.begin(), s.end()));
  std::set<std::size_t> uniq(s.begin(), s.end());
  CHECK(uniq.size() == 8);
  for (auto v : s) CHECK(v < 20);
}

TEST_CASE("shuffle is a permutation and deterministic per seed") {
  std::vector<int> v{0, 1, 2, 3, 4, 5, 6, 7};
  Rng rng(11, 2);
  rng.shuffle(v);
  std::vector<int> sorted = v;
  std::sort(sorted.begin(), sorted.end());
  CHECK(sorted == std::vector<int>{0, 1, 2, 3, 4, 5, 6, 7});

  std::vector<int> w{0, 1, 2, 3, 4, 5, 6, 7};
  Rng rng2(11, 2);
  rng2.shuffle(w);
  CHECK(v == w);
}

TEST_CASE("derive mixes all arguments") {
  const auto a = Rng::derive(1, 2, 3);
  CHECK(a != Rng::derive(1, 2, 4));
  CHECK(a != Rng::derive(1, 3, 3));
  CHECK(a != Rng::derive(2, 2, 3));
  CHECK(a == Rng::derive(1, 2, 3));
}
