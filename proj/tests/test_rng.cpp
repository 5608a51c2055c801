#include <gtest/gtest.h>

#include <cmath>
#include <set>
#include <vector>

#include "sdde/rng.hpp"

using sdde::Philox4x32;
using sdde::RandomStream;

// Known-answer vectors of the Random123 reference implementation.
TEST(Philox, KnownAnswerZero) {
    constexpr auto out = Philox4x32::block({0, 0, 0, 0}, {0, 0});
    EXPECT_EQ(out[0], 0x6627e8d5u);
    EXPECT_EQ(out[1], 0xe169c58du);
    EXPECT_EQ(out[2], 0xbc57ac4cu);
    EXPECT_EQ(out[3], 0x9b00dbd8u);
}

TEST(Philox, KnownAnswerOnes) {
    const auto out = Philox4x32::block({0xffffffffu, 0xffffffffu, 0xffffffffu, 0xffffffffu},
                                       {0xffffffffu, 0xffffffffu});
    EXPECT_EQ(out[0], 0x408f276du);
    EXPECT_EQ(out[1], 0x41c83b0eu);
    EXPECT_EQ(out[2], 0xa20bc7c6u);
    EXPECT_EQ(out[3], 0x6d5451fdu);
}

TEST(Philox, KnownAnswerPi) {
    const auto out =
        Philox4x32::block({0x243f6a88u, 0x85a308d3u, 0x13198a2eu, 0x03707344u}, {0xa4093822u, 0x299f31d0u});
    EXPECT_EQ(out[0], 0xd16cfe09u);
    EXPECT_EQ(out[1], 0x94fdccebu);
    EXPECT_EQ(out[2], 0x5001e420u);
    EXPECT_EQ(out[3], 0x24126ea1u);
}

TEST(RandomStream, ReproducibleAndAddressable) {
    RandomStream a(42, 7);
    RandomStream b(42, 7);
    for (int i = 0; i < 1000; ++i) ASSERT_EQ(a(), b());
    RandomStream c(42, 8);
    RandomStream d(43, 7);
    RandomStream e(42, 7);
    EXPECT_NE(c(), e());
    RandomStream f(42, 7);
    EXPECT_NE(d(), f());
}

TEST(RandomStream, TwoDrawsPerBlock) {
    RandomStream s(1, 2);
    EXPECT_EQ(s.blocks_used(), 0u);
    s();
    EXPECT_EQ(s.blocks_used(), 1u);
    s();
    EXPECT_EQ(s.blocks_used(), 1u);
    s();
    EXPECT_EQ(s.blocks_used(), 2u);
    EXPECT_EQ(s.stream_id(), 2u);
}

TEST(RandomStream, UniformOpenIntervalAndMoments) {
    RandomStream s(123, 0);
    const int n = 200000;
    double sum = 0.0;
    double sum2 = 0.0;
    for (int i = 0; i < n; ++i) {
        const double u = s.uniform();
        ASSERT_GT(u, 0.0);
        ASSERT_LT(u, 1.0);
        sum += u;
        sum2 += u * u;
    }
    const double mean = sum / n;
    // sd of the mean is sqrt(1/12/n) ~ 6.5e-4
    EXPECT_NEAR(mean, 0.5, 4 * std::sqrt(1.0 / 12.0 / n));
    EXPECT_NEAR(sum2 / n - mean * mean, 1.0 / 12.0, 2e-3);
}

TEST(RandomStream, ExponentialAndNormalMoments) {
    RandomStream s(9, 3);
    const int n = 200000;
    double e1 = 0.0;
    double z1 = 0.0;
    double z2 = 0.0;
    for (int i = 0; i < n; ++i) {
        e1 += s.exponential();
        const double z = s.normal();
        z1 += z;
        z2 += z * z;
    }
    EXPECT_NEAR(e1 / n, 1.0, 4.0 / std::sqrt(n));
    EXPECT_NEAR(z1 / n, 0.0, 4.0 / std::sqrt(n));
    EXPECT_NEAR(z2 / n, 1.0, 4.0 * std::sqrt(2.0 / n));
}

TEST(RandomStream, StreamsDoNotCollide) {
    std::set<std::uint64_t> first;
    for (std::uint64_t i = 0; i < 10000; ++i) first.insert(sdde::stream_for(5, i)());
    EXPECT_EQ(first.size(), 10000u);
}
