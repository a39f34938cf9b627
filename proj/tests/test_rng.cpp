/*
   Copyright 2026 The reactfront Authors

   Licensed under the Apache License, Version 2.0 (the "License");
   you may not use this file except in compliance with the License.
   You may obtain a copy of the License at

       http://www.apache.org/licenses/LICENSE-2.0

   Unless required by applicable law or agreed to in writing, software
   distributed under the License is distributed on an "AS IS" BASIS,
   WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
   See the License for the specific language governing permissions and
   limitations under the License.
*/


#include <cmath>
#include <set>
#include <vector>

#include <gtest/gtest.h>

#include "reactfront/rng.hpp"

using namespace reactfront::rng;

// Known-answer vectors from the Random123 distribution.
TEST(Philox, KnownAnswerZero) {
    const Counter out = philox4x32({0, 0, 0, 0}, {0, 0});
    EXPECT_EQ(out, (Counter{0x6627e8d5u, 0xe169c58du, 0xbc57ac4cu, 0x9b00dbd8u}));
}

TEST(Philox, KnownAnswerOnes) {
    const Counter out = philox4x32({0xffffffffu, 0xffffffffu, 0xffffffffu, 0xffffffffu}, {0xffffffffu, 0xffffffffu});
    EXPECT_EQ(out, (Counter{0x408f276du, 0x41c83b0eu, 0xa20bc7c6u, 0x6d5451fdu}));
}

TEST(Philox, KnownAnswerPi) {
    const Counter out = philox4x32({0x243f6a88u, 0x85a308d3u, 0x13198a2eu, 0x03707344u}, {0xa4093822u, 0x299f31d0u});
    EXPECT_EQ(out, (Counter{0xd16cfe09u, 0x94fdccebu, 0x5001e420u, 0x24126ea1u}));
}

TEST(Philox, CompileTime) {
    static_assert(philox4x32({0, 0, 0, 0}, {0, 0})[0] == 0x6627e8d5u);
}

TEST(Uniform, OpenInterval) {
    EXPECT_GT(open_uniform(0, 0), 0.0);
    EXPECT_LT(open_uniform(0xffffffffu, 0xffffffffu), 1.0);
}

TEST(Stream, Deterministic) {
    const Stream a(42), b(42);
    for (std::uint64_t i = 0; i < 100; ++i) {
        const auto x = a.block(i, 7, Purpose::step), y = b.block(i, 7, Purpose::step);
        EXPECT_EQ(x.u0, y.u0);
        EXPECT_EQ(x.u1, y.u1);
    }
    EXPECT_EQ(a.seed(), 42u);
}

TEST(Stream, CellsAreDistinct) {
    const Stream s(1);
    std::set<double> seen;
    for (std::uint64_t i = 0; i < 50; ++i)
        for (std::uint32_t k = 0; k < 20; ++k)
            for (auto p : {Purpose::initial_position, Purpose::clock, Purpose::step}) seen.insert(s.block(i, k, p).u0);
    EXPECT_EQ(seen.size(), 50u * 20u * 3u);
    EXPECT_NE(s.block(1ull << 32, 0, Purpose::step).u0, s.block(0, 0, Purpose::step).u0);
    EXPECT_NE(Stream(2).block(0, 0, Purpose::step).u0, s.block(0, 0, Purpose::step).u0);
}

TEST(Stream, NormalAndExponentialMoments) {
    const Stream s(2024);
    const int n = 200000;
    double m = 0.0, v = 0.0, e = 0.0;
    for (int i = 0; i < n; ++i) {
        const auto b = s.block(static_cast<std::uint64_t>(i), 0, Purpose::test);
        const double z = normal_from(b.u0, b.u1);
        m += z;
        v += z * z;
        e += exponential_from(b.u0);
    }
    m /= n;
    v = v / n - m * m;
    e /= n;
    EXPECT_NEAR(m, 0.0, 5.0 / std::sqrt(n));
    EXPECT_NEAR(v, 1.0, 5.0 * std::sqrt(2.0 / n));
    EXPECT_NEAR(e, 1.0, 5.0 / std::sqrt(n));
}
