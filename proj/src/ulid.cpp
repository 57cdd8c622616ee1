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
#include "orchard/ulid.hpp"

#include <random>

#include "orchard/splitmix.hpp"

namespace orchard {

namespace {

constexpr std::string_view kCrockford = "0123456789ABCDEFGHJKMNPQRSTVWXYZ";

int crockford_value(char c) noexcept {
    auto pos = kCrockford.find(c);
    return pos == std::string_view::npos ? -1 : static_cast<int>(pos);
}

}  // namespace

std::string encode_ulid(std::uint64_t ms, const std::array<std::uint8_t, 10>& random) {
    std::string out(26, '0');
    for (int i = 9; i >= 0; --i) {
        out[static_cast<std::size_t>(i)] = kCrockford[ms & 31];
        ms >>= 5;
    }
    // 80 random bits, big-endian, 5 bits per character.
    for (int c = 0; c < 16; ++c) {
        int value = 0;
        for (int b = 0; b < 5; ++b) {
            int bit = c * 5 + b;
            int byte = random[static_cast<std::size_t>(bit / 8)];
            value = (value << 1) | ((byte >> (7 - bit % 8)) & 1);
        }
        out[static_cast<std::size_t>(10 + c)] = kCrockford[static_cast<std::size_t>(value)];
    }
    return out;
}

bool is_valid_ulid(std::string_view id) noexcept {
    if (id.size() != 26 || id[0] > '7') return false;
    for (char c : id) {
        if (crockford_value(c) < 0) return false;
    }
    return true;
}

std::uint64_t ulid_timestamp_ms(std::string_view id) noexcept {
    std::uint64_t ms = 0;
    for (std::size_t i = 0; i < 10 && i < id.size(); ++i) {
        ms = (ms << 5) | static_cast<std::uint64_t>(crockford_value(id[i]));
    }
    return ms;
}

UlidGenerator::UlidGenerator() : UlidGenerator(std::random_device{}()) {}

UlidGenerator::UlidGenerator(std::uint64_t seed) : rng_state_(seed) {}

std::string UlidGenerator::next() {
    return next(std::chrono::time_point_cast<std::chrono::milliseconds>(
        std::chrono::system_clock::now()));
}

std::string UlidGenerator::next(TimestampMs now) {
    std::lock_guard lock(mutex_);
    auto ms = static_cast<std::uint64_t>(now.time_since_epoch().count());
    if (ms > last_ms_) {
        last_ms_ = ms;
        SplitMix64 rng(rng_state_);
        std::uint64_t a = rng.next();
        std::uint64_t b = rng.next();
        rng_state_ = rng.next();
        for (int i = 0; i < 8; ++i) random_[static_cast<std::size_t>(i)] =
            static_cast<std::uint8_t>(a >> (56 - 8 * i));
        random_[8] = static_cast<std::uint8_t>(b >> 56);
        // Leave headroom so in-millisecond increments do not overflow.
        random_[0] &= 0x7f;
        random_[9] = static_cast<std::uint8_t>(b >> 48);
    } else {
        // Same (or earlier, after a clock step) millisecond: increment.
        for (int i = 9; i >= 0; --i) {
            if (++random_[static_cast<std::size_t>(i)] != 0) break;
            if (i == 0) ++last_ms_;
        }
    }
    return encode_ulid(last_ms_, random_);
}

}  // namespace orchard
