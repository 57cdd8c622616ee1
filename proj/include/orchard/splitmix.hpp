// Copyright 2026 The Orchard Edge Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>

namespace orchard {

inline constexpr std::uint64_t kFnvOffsetBasis = 0xcbf29ce484222325ULL;
inline constexpr std::uint64_t kFnvPrime = 0x100000001b3ULL;

/// 64-bit FNV-1a. Pass a previous result as `state` to hash a concatenation.
constexpr std::uint64_t fnv1a64(std::span<const std::uint8_t> bytes,
                                std::uint64_t state = kFnvOffsetBasis) noexcept {
    for (std::uint8_t b : bytes) {
        state ^= b;
        state *= kFnvPrime;
    }
    return state;
}

constexpr std::uint64_t fnv1a64(std::string_view text,
                                std::uint64_t state = kFnvOffsetBasis) noexcept {
    for (char c : text) {
        state ^= static_cast<std::uint8_t>(c);
        state *= kFnvPrime;
    }
    return state;
}

/// SplitMix64 generator. Its output sequence is fixed by the algorithm, so
/// every draw helper below is bit-reproducible across platforms (unlike the
/// <random> distributions).
class SplitMix64 {
public:
    explicit constexpr SplitMix64(std::uint64_t seed) noexcept : state_(seed) {}

    constexpr std::uint64_t next() noexcept {
        std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    /// Uniform in [0, 1) with 53 bits of resolution.
    constexpr double next_unit() noexcept {
        return static_cast<double>(next() >> 11) * 0x1.0p-53;
    }

    constexpr double uniform(double lo, double hi) noexcept {
        return lo + (hi - lo) * next_unit();
    }

    /// Uniform integer in [0, bound); rejection sampling, no modulo bias.
    constexpr std::uint64_t below(std::uint64_t bound) noexcept {
        if (bound <= 1) return 0;
        const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % bound);
        std::uint64_t r = next();
        while (r >= limit) r = next();
        return r % bound;
    }

private:
    std::uint64_t state_;
};

}  // namespace orchard
