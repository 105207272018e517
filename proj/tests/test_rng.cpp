#include <gtest/gtest.h>

#include <cmath>
#include <set>

#include "qsf/rng.hpp"

using qsf::RngStream;

TEST(RngStream, SameKeyReproducesSequence) {
  RngStream a(42, 7), b(42, 7);
  for (int i = 0; i < 1000; ++i) ASSERT_EQ(a.next_u64(), b.next_u64());
}

TEST(RngStream, DistinctStreamIdsDiffer) {
  std::set<std::uint64_t> first;
  for (std::uint64_t id = 0; id < 256; ++id) first.insert(RngStream(1, id).next_u64());
  EXPECT_EQ(first.size(), 256u);
}

TEST(RngStream, SplitDoesNotAdvanceParent) {
  RngStream a(3, 4), b(3, 4);
  auto child = a.split(9);
  (void)child.next_u64();
  EXPECT_EQ(a, b);
  EXPECT_EQ(a.split(9).next_u64(), b.split(9).next_u64());
  EXPECT_NE(a.split(9).next_u64(), a.split(10).next_u64());
}

TEST(RngStream, SplitPathIsLengthPrefixed) {
  // (seed, id) split by {0} must not collide with (seed, id, 0) reached another way.
  const RngStream base(5, 0);
  EXPECT_NE(base.split({0, 0}).key(), base.split(0).key());
  EXPECT_EQ(base.split({1, 2}).key(), base.split(1).split(2).key());
  EXPECT_NE(RngStream(5, 1).next_u64(), base.split(1).next_u64());
}

TEST(RngStream, UniformRanges) {
  RngStream r(11, 0);
  double lo = 1.0, hi = 0.0, sum = 0.0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const double u = r.uniform_open();
    ASSERT_GT(u, 0.0);
    ASSERT_LT(u, 1.0);
    lo = std::min(lo, u), hi = std::max(hi, u), sum += u;
  }
  EXPECT_NEAR(sum / n, 0.5, 4.0 * std::sqrt(1.0 / 12.0 / n));
  for (int i = 0; i < 1000; ++i) {
    const double u = r.uniform();
    ASSERT_GE(u, 0.0);
    ASSERT_LT(u, 1.0);
  }
}

TEST(RngStream, ExponentialMean) {
  RngStream r(12, 0);
  const int n = 200000;
  double sum = 0.0;
  for (int i = 0; i < n; ++i) sum += r.exponential(0.2);
  EXPECT_NEAR(sum / n, 5.0, 4.0 * 5.0 / std::sqrt(n));
  EXPECT_THROW(r.exponential(0.0), std::invalid_argument);
}
