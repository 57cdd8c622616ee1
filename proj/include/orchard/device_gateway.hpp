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
#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "orchard/image_codec.hpp"
#include "orchard/job_queue.hpp"
#include "orchard/result_store.hpp"
#include "orchard/task_router.hpp"
#include "orchard/types.hpp"
#include "orchard/ulid.hpp"

namespace orchard {

inline constexpr std::size_t kMaxImageBytes = 10u * 1024u * 1024u;

struct MultipartPart {
    std::string name;
    std::string filename;
    std::string content_type;
    std::string body;
};

/// RFC 7578 multipart/form-data. The boundary comes from `content_type`.
/// Throws MissingPart when the body is not well-formed multipart.
std::vector<MultipartPart> parse_multipart(std::string_view content_type, std::string_view body);
std::string encode_multipart(std::span<const MultipartPart> parts, std::string_view boundary);

struct IngestRequest {
    CaptureMeta meta;
    std::vector<std::uint8_t> image;
    ImageInfo info;
};

/// Validates the two ordered parts "meta" then "image". Throws MissingPart,
/// MalformedMeta, ImageTooLarge, UnsupportedImageFormat, CorruptImage or
/// DimensionOutOfRange.
IngestRequest parse_ingest_parts(std::span<const MultipartPart> parts);
IngestRequest parse_ingest_request(std::string_view content_type, std::string_view body);

/// Persists captures and hands them to the worker.
class Gateway {
public:
    using Clock = std::function<TimestampMs()>;

    Gateway(Store& store, JobQueue& queue, std::filesystem::path data_dir, RoutingConfig routing,
            Clock clock = {});

    /// Routes, writes the bytes beside the database, inserts a queued record
    /// and enqueues it. Throws QueueFull before touching disk when the queue
    /// is at capacity, or StorageFailure.
    ImageRecord ingest(const IngestRequest& req);

    const std::filesystem::path& data_dir() const noexcept { return data_dir_; }
    const RoutingConfig& routing() const noexcept { return routing_; }

private:
    Store& store_;
    JobQueue& queue_;
    std::filesystem::path data_dir_;
    RoutingConfig routing_;
    Clock clock_;
    UlidGenerator ids_;
};

/// Absolute location of a record's bytes.
std::filesystem::path image_file(const std::filesystem::path& data_dir, const ImageRecord& rec);

/// Whole-file read. Throws StorageFailure.
std::vector<std::uint8_t> read_file(const std::filesystem::path& path);

}  // namespace orchard
