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

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "orchard/types.hpp"

struct sqlite3;

namespace orchard {

inline constexpr int kSchemaVersion = 1;

struct ResultRow {
    std::string result_id;
    std::string image_id;
    TaskKind task = TaskKind::AppleDetection;
    /// Canonical JSON (sorted keys); see payload_from_* in worker.hpp.
    std::string payload;
    TimestampMs created_at{};
    std::string model_version;
    double latency_ms = 0.0;
};

nlohmann::json result_to_json(const ResultRow& row);

struct ImageFilter {
    /// Exclusive lower bound on image_id; also the page cursor.
    std::optional<std::string> since;
    std::optional<std::string> device_id;
    std::optional<TaskKind> task;
    std::optional<ImageStatus> status;
    int limit = 50;
};

struct ImagePage {
    std::vector<ImageRecord> items;
    /// Set when more rows follow; pass back as `since`.
    std::optional<std::string> next;
};

struct StoreStats {
    std::map<TaskKind, std::int64_t> results_per_task;
    /// task -> label -> count. Classifier labels count results; the detector
    /// label counts detections.
    std::map<TaskKind, std::map<std::string, std::int64_t>> per_class;
    std::int64_t received = 0;
    std::int64_t queued = 0;
    std::int64_t processed = 0;
    std::int64_t failed = 0;
    std::int64_t results = 0;
    std::int64_t images = 0;

    std::int64_t queue_depth() const noexcept { return queued; }
};

nlohmann::json stats_to_json(const StoreStats& s);

struct StoreOptions {
    /// Called with a boundary name at every point where a write could be cut
    /// short. Test harnesses use it to kill the process mid-write.
    std::function<void(std::string_view)> fault_hook;
    /// Connection busy timeout.
    int busy_timeout_ms = 5000;
};

/// SQLite-backed store. One writer connection and one reader connection,
/// each serialized by its own mutex, so a Store can be shared freely between
/// threads. A second Store on the same path fails with Locked until the
/// first is destroyed.
class Store {
public:
    /// Opens or creates the database and applies pending migrations.
    /// Throws Corrupt, Locked or MigrationFailure.
    static std::unique_ptr<Store> open(const std::filesystem::path& path, StoreOptions options = {});

    ~Store();
    Store(const Store&) = delete;
    Store& operator=(const Store&) = delete;

    int schema_version() const;
    const std::filesystem::path& path() const noexcept { return path_; }

    void put_image(const ImageRecord& rec);
    /// Inserts the result and flips the image to processed in one
    /// transaction. Throws ForeignKeyViolation or DuplicateResult.
    void put_result(const ResultRow& row);
    /// Throws NotFound for an unknown id.
    void set_status(const std::string& image_id, ImageStatus status,
                    const std::string& reason = {});

    std::optional<ImageRecord> get_image(const std::string& image_id) const;
    std::optional<ResultRow> get_result(const std::string& image_id) const;
    /// Ascending image_id order (arrival order).
    ImagePage list_images(const ImageFilter& filter) const;
    /// Queued images oldest first; the worker's durable backlog.
    std::vector<std::string> queued_ids() const;
    /// All counters from a single read transaction.
    StoreStats stats() const;

private:
    Store(std::filesystem::path path, StoreOptions options);
    void migrate();
    void hook(std::string_view point) const;

    std::filesystem::path path_;
    StoreOptions options_;
    int lock_fd_ = -1;
    sqlite3* writer_ = nullptr;
    sqlite3* reader_ = nullptr;
    mutable std::mutex write_mu_;
    mutable std::mutex read_mu_;
};

}  // namespace orchard
