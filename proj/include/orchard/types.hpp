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
#include <chrono>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace orchard {

using TimestampMs = std::chrono::sys_time<std::chrono::milliseconds>;

enum class TaskKind { LeafDisease, Freshness, AppleDetection };

inline constexpr std::array<TaskKind, 3> kAllTasks = {
    TaskKind::LeafDisease, TaskKind::Freshness, TaskKind::AppleDetection};

/// Wire names: "leaf_disease", "freshness", "apple_detection".
std::string_view to_string(TaskKind task) noexcept;
std::optional<TaskKind> parse_task(std::string_view name) noexcept;

enum class FrameKind { LeafCloseup, FruitCloseup, CanopyWide, Unknown };

std::string_view to_string(FrameKind kind) noexcept;
std::optional<FrameKind> parse_frame_kind(std::string_view name) noexcept;

enum class ImageStatus { Received, Queued, Processed, Failed };

std::string_view to_string(ImageStatus status) noexcept;
std::optional<ImageStatus> parse_status(std::string_view name) noexcept;

/// Flight context sent by the camera with every frame.
struct CaptureMeta {
    std::string device_id;
    TimestampMs captured_at{};
    double altitude_m = 0.0;
    FrameKind frame_kind = FrameKind::Unknown;
    std::uint32_t sequence_no = 0;

    friend bool operator==(const CaptureMeta&, const CaptureMeta&) = default;
};

inline constexpr double kMaxAltitudeM = 500.0;
inline constexpr int kMinImageSide = 16;
inline constexpr int kMaxImageSide = 8192;

struct ImageRecord {
    std::string image_id;
    CaptureMeta meta;
    int width_px = 0;
    int height_px = 0;
    std::int64_t byte_len = 0;
    ImageStatus status = ImageStatus::Received;
    TaskKind task = TaskKind::AppleDetection;
    std::string stored_path;
    std::string content_type;
    std::string failure_reason;

    friend bool operator==(const ImageRecord&, const ImageRecord&) = default;
};

/// RFC 3339 with mandatory offset; result normalized to UTC, truncated to ms.
std::optional<TimestampMs> parse_rfc3339(std::string_view text) noexcept;
/// Always "YYYY-MM-DDTHH:MM:SS.mmmZ".
std::string format_rfc3339(TimestampMs t);

}  // namespace orchard
