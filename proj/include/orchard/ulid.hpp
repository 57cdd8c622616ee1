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

#include <array>
#include <cstdint>
#include <mutex>
#include <string>
#include <string_view>

#include "orchard/types.hpp"

namespace orchard {

/// 128-bit identifiers rendered as 26 Crockford base32 characters: a 48-bit
/// millisecond timestamp followed by 80 random bits. Ids from one generator
/// are strictly increasing, even within a millisecond, so lexicographic order
/// equals issue order.
class UlidGenerator {
public:
    UlidGenerator();
    explicit UlidGenerator(std::uint64_t seed);

    std::string next();
    std::string next(TimestampMs now);

private:
    std::mutex mutex_;
    std::uint64_t last_ms_ = 0;
    std::array<std::uint8_t, 10> random_{};
    std::uint64_t rng_state_;
};

std::string encode_ulid(std::uint64_t ms, const std::array<std::uint8_t, 10>& random);
bool is_valid_ulid(std::string_view id) noexcept;
/// Timestamp component of a valid id.
std::uint64_t ulid_timestamp_ms(std::string_view id) noexcept;

}  // namespace orchard
