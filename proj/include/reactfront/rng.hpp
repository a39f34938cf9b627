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

#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>

namespace reactfront::rng {

// Philox4x32-10 counter-based generator (Salmon et al., SC'11).
// Every draw is a pure function of (key, counter), so the value a particle
// sees at a given step never depends on how work is scheduled.

using Counter = std::array<std::uint32_t, 4>;
using Key = std::array<std::uint32_t, 2>;

namespace detail {

inline constexpr std::uint32_t kMul0 = 0xD2511F53u;
inline constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
inline constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
inline constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;

constexpr void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& hi, std::uint32_t& lo) {
    const std::uint64_t p = static_cast<std::uint64_t>(a) * b;
    hi = static_cast<std::uint32_t>(p >> 32);
    lo = static_cast<std::uint32_t>(p);
}

constexpr Counter round(const Counter& c, const Key& k) {
    std::uint32_t hi0 = 0, lo0 = 0, hi1 = 0, lo1 = 0;
    mulhilo(kMul0, c[0], hi0, lo0);
    mulhilo(kMul1, c[2], hi1, lo1);
    return {hi1 ^ c[1] ^ k[0], lo1, hi0 ^ c[3] ^ k[1], lo0};
}

} // namespace detail

constexpr Counter philox4x32(Counter ctr, Key key) {
    for (int r = 0; r < 10; ++r) {
        ctr = detail::round(ctr, key);
        key[0] += detail::kWeyl0;
        key[1] += detail::kWeyl1;
    }
    return ctr;
}

/// Uniform on the open interval (0, 1) from two 32-bit words (53-bit resolution).
inline double open_uniform(std::uint32_t hi, std::uint32_t lo) {
    const std::uint64_t bits = ((static_cast<std::uint64_t>(hi) << 32) | lo) >> 12;
    return (static_cast<double>(bits) + 0.5) * 0x1.0p-52;
}

/// Purpose tags occupy the third counter word so that the streams used for
/// initial positions, clocks and per-step noise never overlap.
enum class Purpose : std::uint32_t { initial_position = 0, clock = 1, step = 2, test = 3 };

/// Draws for one (particle, step, purpose) cell of the counter space.
struct Block {
    double u0;
    double u1;
};

class Stream {
public:
    explicit Stream(std::uint64_t seed)
        : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)} {}

    Block block(std::uint64_t particle, std::uint32_t step, Purpose purpose,
                std::uint32_t draw = 0) const {
        // The particle index folds its high word into the draw slot; 2^32 draws
        // per cell is far beyond what any sampler here requests.
        const Counter ctr{static_cast<std::uint32_t>(particle), step,
                          static_cast<std::uint32_t>(purpose),
                          draw ^ (static_cast<std::uint32_t>(particle >> 32) << 16)};
        const Counter out = philox4x32(ctr, key_);
        return {open_uniform(out[0], out[1]), open_uniform(out[2], out[3])};
    }

    std::uint64_t seed() const {
        return static_cast<std::uint64_t>(key_[0]) | (static_cast<std::uint64_t>(key_[1]) << 32);
    }

private:
    Key key_;
};

/// Box-Muller: one standard normal from a pair of open uniforms.
inline double normal_from(double u0, double u1) {
    return std::sqrt(-2.0 * std::log(u0)) * std::cos(2.0 * std::numbers::pi * u1);
}

inline double exponential_from(double u) { return -std::log(u); }

} // namespace reactfront::rng
