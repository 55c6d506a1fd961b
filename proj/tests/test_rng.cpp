#include "paced/rng.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <cstdint>
#include <map>
#include <set>
#include <utility>
#include <vector>

namespace {

using paced::RngStream;

TEST(Mix64, MatchesReferenceSplitmixOutputs) {
  // splitmix64 with state s emits mix64(s + golden) and advances s by golden;
  // the first three outputs for s = 0 are fixed by the algorithm.
  std::uint64_t s = 0;
  std::vector<std::uint64_t> got;
  for (int i = 0; i < 3; ++i) {
    s += paced::kGolden;
    got.push_back(paced::mix64(s));
  }
  EXPECT_EQ(got[0], 0xe220a8397b1dcdafULL);
  EXPECT_EQ(got[1], 0x6e789e6aa1b965f4ULL);
  EXPECT_EQ(got[2], 0x06c45d188009454fULL);
}

TEST(RngStream, IsPureFunctionOfKeyAndCounter) {
  RngStream a(42), b(42);
  for (int i = 0; i < 100; ++i) EXPECT_EQ(a.next_u64(), b.next_u64());
  RngStream c(43);
  bool any_diff = false;
  RngStream a2(42);
  for (int i = 0; i < 100; ++i) any_diff |= (a2.next_u64() != c.next_u64());
  EXPECT_TRUE(any_diff);
}

TEST(RngStream, MatchesSplitmixSequenceForItsKey) {
  // The stream with key k must emit exactly splitmix64 seeded at k.
  RngStream s(0);
  EXPECT_EQ(s.next_u64(), 0xe220a8397b1dcdafULL);
  EXPECT_EQ(s.next_u64(), 0x6e789e6aa1b965f4ULL);
}

TEST(RngStream, UnitDoublesLieInHalfOpenInterval) {
  RngStream s(7);
  double mn = 1.0, mx = 0.0, sum = 0.0;
  const int n = 100000;
  for (int i = 0; i < n; ++i) {
    double u = s.next_unit();
    ASSERT_GE(u, 0.0);
    ASSERT_LT(u, 1.0);
    mn = std::min(mn, u);
    mx = std::max(mx, u);
    sum += u;
  }
  EXPECT_LT(mn, 0.01);
  EXPECT_GT(mx, 0.99);
  EXPECT_NEAR(sum / n, 0.5, 0.01);
}

TEST(RngStream, OpenUnitNeverReturnsZero) {
  RngStream s(11);
  for (int i = 0; i < 100000; ++i) {
    double u = s.next_unit_open();
    ASSERT_GT(u, 0.0);
    ASSERT_LE(u, 1.0);
  }
}

TEST(RngStream, GaussianMomentsAreSane) {
  RngStream s(3);
  const int n = 200000;
  double sum = 0.0, sq = 0.0;
  for (int i = 0; i < n; ++i) {
    double g = s.next_gaussian();
    sum += g;
    sq += g * g;
  }
  EXPECT_NEAR(sum / n, 0.0, 0.01);
  EXPECT_NEAR(sq / n, 1.0, 0.02);
}

TEST(RngStream, NextBelowStaysInRangeAndCoversIt) {
  RngStream s(5);
  std::set<std::uint64_t> seen;
  for (int i = 0; i < 1000; ++i) {
    std::uint64_t v = s.next_below(7);
    ASSERT_LT(v, 7u);
    seen.insert(v);
  }
  EXPECT_EQ(seen.size(), 7u);
  EXPECT_THROW(s.next_below(0), std::invalid_argument);
}

TEST(DeriveKey, OrderSensitiveAndDeterministic) {
  EXPECT_EQ(paced::derive_key({1, 2, 3}), paced::derive_key({1, 2, 3}));
  EXPECT_NE(paced::derive_key({1, 2, 3}), paced::derive_key({3, 2, 1}));
  EXPECT_NE(paced::derive_key({1}), paced::derive_key({1, 0}));
}

TEST(SampleWithoutReplacement, ReturnsSortedDistinctSubset) {
  RngStream s(9);
  auto out = paced::sample_without_replacement(50, 20, s);
  ASSERT_EQ(out.size(), 20u);
  for (std::size_t i = 1; i < out.size(); ++i) ASSERT_LT(out[i - 1], out[i]);
  for (auto v : out) ASSERT_LT(v, 50u);
}

TEST(SampleWithoutReplacement, HandlesEdgesAndRejectsOverdraw) {
  RngStream s(9);
  EXPECT_TRUE(paced::sample_without_replacement(10, 0, s).empty());
  auto all = paced::sample_without_replacement(10, 10, s);
  ASSERT_EQ(all.size(), 10u);
  for (std::uint64_t i = 0; i < 10; ++i) EXPECT_EQ(all[i], i);
  EXPECT_THROW(paced::sample_without_replacement(3, 4, s), std::invalid_argument);
}

TEST(SampleWithoutReplacement, IsUniformOverPairs) {
  // All C(4,2)=6 pairs from {0,1,2,3} should appear with equal frequency.
  std::map<std::pair<std::uint64_t, std::uint64_t>, int> counts;
  const int trials = 60000;
  for (int i = 0; i < trials; ++i) {
    RngStream s(paced::derive_key({100, static_cast<std::uint64_t>(i)}));
    auto out = paced::sample_without_replacement(4, 2, s);
    counts[{out[0], out[1]}]++;
  }
  ASSERT_EQ(counts.size(), 6u);
  for (const auto& [pair, c] : counts)
    EXPECT_NEAR(static_cast<double>(c) / trials, 1.0 / 6.0, 0.01);
}

}  // namespace
