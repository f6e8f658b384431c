#include <gtest/gtest.h>

#include <array>
#include <cstdint>
#include <random>
#include <vector>

#include "sketchreg/error.hpp"
#include "sketchreg/hashing.hpp"

namespace sketchreg::hashing {
namespace {

using OracleField = MersenneField<5>;  // p = 31
constexpr std::uint64_t kP = OracleField::kPrime;

TEST(MersenneField, ReductionMatchesModulo) {
  std::mt19937_64 rng(11);
  for (int t = 0; t < 100000; ++t) {
    const std::uint64_t a = rng() % ProductionField::kPrime;
    const std::uint64_t b = rng() % ProductionField::kPrime;
    const uint128 expect = (static_cast<uint128>(a) * b) % ProductionField::kPrime;
    ASSERT_EQ(ProductionField::mul(a, b), static_cast<std::uint64_t>(expect));
  }
  for (std::uint64_t a = 0; a < kP; ++a) {
    for (std::uint64_t b = 0; b < kP; ++b) {
      ASSERT_EQ(OracleField::mul(a, b), (a * b) % kP);
      ASSERT_EQ(OracleField::add(a, b), (a + b) % kP);
    }
  }
}

TEST(Sign4, DeterministicAndInRange) {
  const SketchSeed seed(42);
  for (std::uint64_t i = 0; i < 1000; ++i) {
    const int s = sign4(seed, i);
    EXPECT_TRUE(s == 1 || s == -1);
    EXPECT_EQ(s, sign4(seed, i));
    EXPECT_EQ(s, sign4(SketchSeed(42), i));
  }
}

TEST(Sign4, RejectsIndicesOutsideTheField) {
  const SketchSeed seed(1);
  EXPECT_NO_THROW(sign4(seed, kMaxSignIndex));
  EXPECT_THROW(sign4(seed, kMaxSignIndex + 1), DomainError);
  EXPECT_THROW(sign4(seed, ~std::uint64_t{0}), DomainError);
}

// Over all p^4 coefficient tuples the values of a cubic at four distinct
// points hit every element of Z_p^4 exactly once.
TEST(Sign4Oracle, CubicValuesAtFourPointsAreJointlyUniform) {
  const std::array<std::array<std::uint64_t, 4>, 4> point_sets{{
      {0, 1, 2, 3}, {5, 11, 17, 30}, {29, 3, 14, 8}, {1, 2, 4, 16}}};
  for (const auto& pts : point_sets) {
    std::vector<std::uint32_t> hits(kP * kP * kP * kP, 0);
    std::array<std::uint64_t, 4> c{};
    for (c[0] = 0; c[0] < kP; ++c[0])
      for (c[1] = 0; c[1] < kP; ++c[1])
        for (c[2] = 0; c[2] < kP; ++c[2])
          for (c[3] = 0; c[3] < kP; ++c[3]) {
            std::uint64_t key = 0;
            for (std::uint64_t x : pts) key = key * kP + cubic_hash<OracleField>(c, x);
            ++hits[key];
          }
    for (std::uint32_t h : hits) ASSERT_EQ(h, 1u);
  }
}

// The sign is the low bit of a uniform element of Z_p, so E[s] = 1/p exactly
// rather than 0, and products over r distinct indices have mean p^-r.
TEST(Sign4Oracle, SignMomentsFactorizeWithFieldBias) {
  // Sums over all p^4 tuples are integers: sum = p^(4 - r).
  const std::vector<std::vector<std::uint64_t>> index_sets{
      {0}, {7}, {30}, {0, 1}, {3, 19}, {2, 9, 27}, {0, 1, 2}, {0, 1, 2, 3}, {4, 10, 21, 30}};
  for (const auto& idx : index_sets) {
    std::int64_t sum = 0;
    std::array<std::uint64_t, 4> c{};
    for (c[0] = 0; c[0] < kP; ++c[0])
      for (c[1] = 0; c[1] < kP; ++c[1])
        for (c[2] = 0; c[2] < kP; ++c[2])
          for (c[3] = 0; c[3] < kP; ++c[3]) {
            int prod = 1;
            for (std::uint64_t i : idx) prod *= sign_of(cubic_hash<OracleField>(c, i));
            sum += prod;
          }
    std::int64_t expect = 1;
    for (std::size_t e = 0; e < 4 - idx.size(); ++e) expect *= static_cast<std::int64_t>(kP);
    EXPECT_EQ(sum, expect) << "index set of size " << idx.size();
  }
}

TEST(Sign4, ProductionMarginalIsBalanced) {
  constexpr int kSeeds = 200000;
  for (std::uint64_t i : {0ull, 1ull, 12345ull, 1ull << 40}) {
    long long sum = 0;
    for (int s = 0; s < kSeeds; ++s) sum += sign4(SketchSeed(static_cast<std::uint64_t>(s)), i);
    // 5 standard deviations of a fair +-1 mean.
    EXPECT_LT(std::abs(double(sum) / kSeeds), 5.0 / std::sqrt(double(kSeeds))) << "i = " << i;
  }
}

TEST(Bucket2, SingleBucketAndDeterminism) {
  const SketchSeed seed(9);
  for (std::uint64_t i = 0; i < 1000; ++i) {
    EXPECT_EQ(bucket2(seed, i, 1), 0u);
    const auto b = bucket2(seed, i, 64);
    EXPECT_LT(b, 64u);
    EXPECT_EQ(b, bucket2(seed, i, 64));
  }
}

TEST(Bucket2, RejectsNonPowerOfTwo) {
  const SketchSeed seed(9);
  EXPECT_THROW(bucket2(seed, 0, 0), ContractError);
  EXPECT_THROW(bucket2(seed, 0, 3), ContractError);
  EXPECT_THROW(bucket2(seed, 0, 1000), ContractError);
  EXPECT_NO_THROW(bucket2(seed, 0, 1024));
}

// w = 8: a ranges over the 128 odd bytes and b over all 256, 2^15 seeds.
TEST(Bucket2Oracle, MultiplyShiftCollisionsAtMostTwoOverK) {
  constexpr unsigned kLog2 = 3;
  constexpr double kBound = 2.0 / 8.0;
  double worst = 0.0;
  auto collision_rate = [](std::uint64_t i, std::uint64_t j) {
    int hits = 0;
    for (std::uint64_t a = 1; a < 256; a += 2)
      for (std::uint64_t b = 0; b < 256; ++b)
        hits += multiply_shift<8>(a, b, i, kLog2) == multiply_shift<8>(a, b, j, kLog2);
    return hits / 32768.0;
  };
  for (std::uint64_t i = 0; i < 64; ++i)
    for (std::uint64_t j = i + 1; j < 64; ++j) {
      const double rate = collision_rate(i, j);
      worst = std::max(worst, rate);
      ASSERT_LE(rate, kBound) << "i = " << i << ", j = " << j;
    }
  std::mt19937_64 rng(3);
  for (int t = 0; t < 1000; ++t) {
    const std::uint64_t i = rng() % 256;
    std::uint64_t j = rng() % 256;
    if (j == i) j = (j + 1) % 256;
    const double rate = collision_rate(i, j);
    worst = std::max(worst, rate);
    ASSERT_LE(rate, kBound) << "i = " << i << ", j = " << j;
  }
  RecordProperty("worst_collision_rate", std::to_string(worst));
}

TEST(Bucket2Oracle, MarginalIsExactlyUniform) {
  for (std::uint64_t i : {0ull, 1ull, 77ull, 255ull}) {
    std::array<int, 8> counts{};
    for (std::uint64_t a = 1; a < 256; a += 2)
      for (std::uint64_t b = 0; b < 256; ++b) ++counts[multiply_shift<8>(a, b, i, 3)];
    for (int c : counts) EXPECT_EQ(c, 32768 / 8);
  }
}

TEST(SketchSeed, ExpansionIsDeterministicAndPairwiseAIsOdd) {
  for (std::uint64_t m = 0; m < 1000; ++m) {
    const SketchSeed a(m), b(m);
    EXPECT_EQ(a.four_wise(), b.four_wise());
    EXPECT_EQ(a.pairwise(), b.pairwise());
    EXPECT_EQ(a.pairwise().a & 1u, 1u);
    for (std::uint64_t c : a.four_wise().c) EXPECT_LT(c, ProductionField::kPrime);
  }
  EXPECT_NE(SketchSeed(1).four_wise(), SketchSeed(2).four_wise());
  EXPECT_NE(SketchSeed(1).derive(0).master(), SketchSeed(1).derive(1).master());
}

TEST(SketchSeed, ByteRoundTripPreservesOutputs) {
  const SketchSeed seed(0x0123456789ABCDEFull);
  const auto bytes = seed.to_bytes();
  EXPECT_EQ(std::to_integer<int>(bytes[0]), 0xEF);
  EXPECT_EQ(std::to_integer<int>(bytes[7]), 0x01);
  const SketchSeed back = SketchSeed::from_bytes(bytes);
  EXPECT_EQ(back, seed);
  std::mt19937_64 rng(5);
  for (int t = 0; t < 10000; ++t) {
    const std::uint64_t i = rng() % kMaxSignIndex;
    ASSERT_EQ(sign4(back, i), sign4(seed, i));
    ASSERT_EQ(bucket2(back, i, 1024), bucket2(seed, i, 1024));
  }
}

TEST(PowerOfTwoHelpers, Basics) {
  EXPECT_TRUE(is_power_of_two(1));
  EXPECT_TRUE(is_power_of_two(1ull << 40));
  EXPECT_FALSE(is_power_of_two(0));
  EXPECT_FALSE(is_power_of_two(6));
  EXPECT_EQ(log2_floor(1), 0u);
  EXPECT_EQ(log2_floor(1024), 10u);
  EXPECT_EQ(log2_floor(1025), 10u);
}

}  // namespace
}  // namespace sketchreg::hashing
