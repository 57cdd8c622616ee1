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
#include "orchard/types.hpp"

#include <charconv>
#include <cstdio>

#include "orchard/error.hpp"

namespace orchard {

std::string_view to_string(ErrorCode code) noexcept {
    switch (code) {
        case ErrorCode::MissingPart: return "MissingPart";
        case ErrorCode::MalformedMeta: return "MalformedMeta";
        case ErrorCode::UnsupportedImageFormat: return "UnsupportedImageFormat";
        case ErrorCode::ImageTooLarge: return "ImageTooLarge";
        case ErrorCode::DimensionOutOfRange: return "DimensionOutOfRange";
        case ErrorCode::QueueFull: return "QueueFull";
        case ErrorCode::StorageFailure: return "StorageFailure";
        case ErrorCode::Corrupt: return "Corrupt";
        case ErrorCode::Locked: return "Locked";
        case ErrorCode::MigrationFailure: return "MigrationFailure";
        case ErrorCode::ForeignKeyViolation: return "ForeignKeyViolation";
        case ErrorCode::DuplicateResult: return "DuplicateResult";
        case ErrorCode::NotFound: return "NotFound";
        case ErrorCode::CorruptImage: return "CorruptImage";
        case ErrorCode::UnsupportedColorModel: return "UnsupportedColorModel";
        case ErrorCode::DegenerateBox: return "DegenerateBox";
        case ErrorCode::BackendUnavailable: return "BackendUnavailable";
        case ErrorCode::ShapeMismatch: return "ShapeMismatch";
        case ErrorCode::LengthMismatch: return "LengthMismatch";
        case ErrorCode::LabelOutOfRange: return "LabelOutOfRange";
        case ErrorCode::EmptyMatrix: return "EmptyMatrix";
        case ErrorCode::NoGroundTruth: return "NoGroundTruth";
        case ErrorCode::ClassTooSmall: return "ClassTooSmall";
        case ErrorCode::ParseError: return "ParseError";
        case ErrorCode::TaskMismatch: return "TaskMismatch";
        case ErrorCode::InvalidConfig: return "InvalidConfig";
        case ErrorCode::InvalidArgument: return "InvalidArgument";
    }
    return "Unknown";
}

std::string_view to_string(TaskKind task) noexcept {
    switch (task) {
        case TaskKind::LeafDisease: return "leaf_disease";
        case TaskKind::Freshness: return "freshness";
        case TaskKind::AppleDetection: return "apple_detection";
    }
    return "apple_detection";
}

std::optional<TaskKind> parse_task(std::string_view name) noexcept {
    for (TaskKind t : kAllTasks) {
        if (to_string(t) == name) return t;
    }
    return std::nullopt;
}

std::string_view to_string(FrameKind kind) noexcept {
    switch (kind) {
        case FrameKind::LeafCloseup: return "leaf_closeup";
        case FrameKind::FruitCloseup: return "fruit_closeup";
        case FrameKind::CanopyWide: return "canopy_wide";
        case FrameKind::Unknown: return "unknown";
    }
    return "unknown";
}

std::optional<FrameKind> parse_frame_kind(std::string_view name) noexcept {
    for (FrameKind k : {FrameKind::LeafCloseup, FrameKind::FruitCloseup,
                        FrameKind::CanopyWide, FrameKind::Unknown}) {
        if (to_string(k) == name) return k;
    }
    return std::nullopt;
}

std::string_view to_string(ImageStatus status) noexcept {
    switch (status) {
        case ImageStatus::Received: return "received";
        case ImageStatus::Queued: return "queued";
        case ImageStatus::Processed: return "processed";
        case ImageStatus::Failed: return "failed";
    }
    return "received";
}

std::optional<ImageStatus> parse_status(std::string_view name) noexcept {
    for (ImageStatus s : {ImageStatus::Received, ImageStatus::Queued,
                          ImageStatus::Processed, ImageStatus::Failed}) {
        if (to_string(s) == name) return s;
    }
    return std::nullopt;
}

namespace {

bool read_digits(std::string_view text, std::size_t& pos, std::size_t n, int& out) {
    if (pos + n > text.size()) return false;
    int value = 0;
    for (std::size_t i = 0; i < n; ++i) {
        char c = text[pos + i];
        if (c < '0' || c > '9') return false;
        value = value * 10 + (c - '0');
    }
    pos += n;
    out = value;
    return true;
}

bool expect(std::string_view text, std::size_t& pos, char c) {
    if (pos >= text.size() || text[pos] != c) return false;
    ++pos;
    return true;
}

}  // namespace

std::optional<TimestampMs> parse_rfc3339(std::string_view text) noexcept {
    using namespace std::chrono;
    std::size_t pos = 0;
    int y, mo, d, h, mi, s;
    if (!read_digits(text, pos, 4, y) || !expect(text, pos, '-') ||
        !read_digits(text, pos, 2, mo) || !expect(text, pos, '-') ||
        !read_digits(text, pos, 2, d)) {
        return std::nullopt;
    }
    if (pos >= text.size() || (text[pos] != 'T' && text[pos] != 't')) return std::nullopt;
    ++pos;
    if (!read_digits(text, pos, 2, h) || !expect(text, pos, ':') ||
        !read_digits(text, pos, 2, mi) || !expect(text, pos, ':') ||
        !read_digits(text, pos, 2, s)) {
        return std::nullopt;
    }
    int millis = 0;
    if (pos < text.size() && text[pos] == '.') {
        ++pos;
        std::size_t digits = 0;
        while (pos < text.size() && text[pos] >= '0' && text[pos] <= '9') {
            if (digits < 3) millis = millis * 10 + (text[pos] - '0');
            ++digits;
            ++pos;
        }
        if (digits == 0) return std::nullopt;
        for (std::size_t i = digits; i < 3; ++i) millis *= 10;
    }
    if (pos >= text.size()) return std::nullopt;
    int offset_min = 0;
    if (text[pos] == 'Z' || text[pos] == 'z') {
        ++pos;
    } else if (text[pos] == '+' || text[pos] == '-') {
        int sign = text[pos] == '-' ? -1 : 1;
        ++pos;
        int oh, om;
        if (!read_digits(text, pos, 2, oh) || !expect(text, pos, ':') ||
            !read_digits(text, pos, 2, om) || oh > 23 || om > 59) {
            return std::nullopt;
        }
        offset_min = sign * (oh * 60 + om);
    } else {
        return std::nullopt;
    }
    if (pos != text.size()) return std::nullopt;

    year_month_day ymd{year{y}, month{static_cast<unsigned>(mo)},
                       day{static_cast<unsigned>(d)}};
    // Leap seconds (":60") are not representable in sys_time.
    if (!ymd.ok() || h > 23 || mi > 59 || s > 59) return std::nullopt;
    auto t = sys_days{ymd} + hours{h} + minutes{mi} + seconds{s} + milliseconds{millis};
    return time_point_cast<milliseconds>(t - minutes{offset_min});
}

std::string format_rfc3339(TimestampMs t) {
    using namespace std::chrono;
    auto day_point = floor<days>(t);
    year_month_day ymd{day_point};
    hh_mm_ss<milliseconds> tod{t - day_point};
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%04d-%02u-%02uT%02d:%02d:%02d.%03dZ",
                  static_cast<int>(ymd.year()), static_cast<unsigned>(ymd.month()),
                  static_cast<unsigned>(ymd.day()), static_cast<int>(tod.hours().count()),
                  static_cast<int>(tod.minutes().count()),
                  static_cast<int>(tod.seconds().count()),
                  static_cast<int>(tod.subseconds().count()));
    return buf;
}

}  // namespace orchard
