#include <cmath>
#include <cstdint>
#include <set>
#include <vector>

#include <gtest/gtest.h>

#include "naps/rng.hpp"

namespace {

using naps::rng::CounterRng;
using naps::rng::derive;
using naps::rng::mix;
using naps::rng::to_unit;

// Frozen vectors, regenerated independently from the splitmix64 definition.
// bits_at(0, i) must equal the published splitmix64 output stream for seed 0.
TEST(Rng, FrozenMixVectors) {
  EXPECT_EQ(mix(0), 0x0ULL);
  EXPECT_EQ(mix(1), 0x5692161d100b05e5ULL);
  EXPECT_EQ(mix(naps::rng::kGolden), 0xe220a8397b1dcdafULL);
  EXPECT_EQ(mix(0xDEADBEEFULL), 0x4e062702ec929eeaULL);
}

TEST(Rng, FrozenCounterStreamSeedZero) {
  const CounterRng r(0);
  EXPECT_EQ(r.bits_at(0), 0xe220a8397b1dcdafULL);
  EXPECT_EQ(r.bits_at(1), 0x6e789e6aa1b965f4ULL);
  EXPECT_EQ(r.bits_at(2), 0x06c45d188009454fULL);
  EXPECT_EQ(r.bits_at(3), 0xf88bb8a8724c81ecULL);
}

TEST(Rng, FrozenCounterStreamArbitraryKey) {
  const CounterRng r(0x123456789ABCDEFULL);
  EXPECT_EQ(r.bits_at(0), 0x157a3807a48faa9dULL);
  EXPECT_EQ(r.bits_at(1), 0xd573529b34a1d093ULL);
  EXPECT_EQ(r.bits_at(2), 0x2f90b72e996dccbeULL);
  EXPECT_EQ(r.bits_at(3), 0xa2d419334c4667ecULL);
}

TEST(Rng, FrozenDerive) {
  EXPECT_EQ(derive(0, 0), 0xa706dd2f4d197e6fULL);
  EXPECT_EQ(derive(0, 1), 0x5e41ab087439611eULL);
  EXPECT_EQ(derive(42, 7), 0x6eab8625df268fbcULL);
}

TEST(Rng, FrozenUnitValues) {
  const CounterRng r(derive(42, 7));
  EXPECT_DOUBLE_EQ(r.unit_at(0), 0.151850560178445);
  EXPECT_DOUBLE_EQ(r.unit_at(1), 0.06354433078866661);
  EXPECT_DOUBLE_EQ(r.unit_at(2), 0.35255183696879333);
}

TEST(Rng, UnitHalfOpenRange) {
  // to_unit keeps 53 bits: always in [0, 1).
  EXPECT_EQ(to_unit(0), 0.0);
  EXPECT_LT(to_unit(~0ULL), 1.0);
  const CounterRng r(0x9E37ULL);
  for (std::uint64_t i = 0; i < 10000; ++i) {
    const double u = r.unit_at(i);
    ASSERT_GE(u, 0.0);
    ASSERT_LT(u, 1.0);
  }
}

TEST(Rng, StatefulWrapperMatchesIndexedAccess) {
  CounterRng a(7);
  const CounterRng b(7);
  for (std::uint64_t i = 0; i < 16; ++i) {
    EXPECT_EQ(a.next_bits(), b.bits_at(i));
  }
  CounterRng c(7);
  for (std::uint64_t i = 0; i < 16; ++i) {
    EXPECT_EQ(c.next_unit(), b.unit_at(i));
  }
}

TEST(Rng, NextBelowBounds) {
  CounterRng r(123);
  std::set<std::uint64_t> seen;
  for (int i = 0; i < 5000; ++i) {
    const auto v = r.next_below(17);
    ASSERT_LT(v, 17u);
    seen.insert(v);
  }
  EXPECT_EQ(seen.size(), 17u);
}

TEST(Rng, DerivedStreamsDoNotCollide) {
  // Practical independence check: distinct stream ids yield distinct keys
  // and the resulting low-index outputs never coincide.
  std::set<std::uint64_t> keys;
  for (std::uint64_t s = 0; s < 64; ++s) {
    keys.insert(derive(0xABCDEF, s));
  }
  EXPECT_EQ(keys.size(), 64u);
  std::set<std::uint64_t> outs;
  for (std::uint64_t s = 0; s < 64; ++s) {
    const CounterRng r(derive(0xABCDEF, s));
    for (std::uint64_t i = 0; i < 8; ++i) outs.insert(r.bits_at(i));
  }
  EXPECT_EQ(outs.size(), 64u * 8u);
}

TEST(Rng, FrozenGaussPair) {
  const CounterRng r(99);
  const auto [g0, g1] = r.gauss_pair_at(0);
  EXPECT_DOUBLE_EQ(g0, 1.6055122603257694);
  EXPECT_DOUBLE_EQ(g1, 0.3236345691042968);
}

TEST(Rng, GaussMomentsCloseToStandardNormal) {
  const CounterRng r(99);
  double s = 0.0, s2 = 0.0;
  const std::uint64_t pairs = 200000;
  for (std::uint64_t i = 0; i < 2 * pairs; i += 2) {
    const auto [a, b] = r.gauss_pair_at(i);
    s += a + b;
    s2 += a * a + b * b;
  }
  const double n = 2.0 * static_cast<double>(pairs);
  const double mean = s / n;
  const double var = s2 / n - mean * mean;
  // Oracle run of the same scheme gives mean 0.00154, var 1.00030.
  EXPECT_NEAR(mean, 0.0, 0.01);
  EXPECT_NEAR(var, 1.0, 0.01);
}

TEST(Rng, GaussPairConsumesTwoIndices) {
  // Pairs drawn at even indices are reproducible and non-overlapping.
  const CounterRng r(5);
  const auto p0 = r.gauss_pair_at(0);
  const auto p2 = r.gauss_pair_at(2);
  EXPECT_EQ(p0, r.gauss_pair_at(0));
  EXPECT_NE(p0, p2);
}

}  // namespace
