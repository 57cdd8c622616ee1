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

#include <atomic>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "orchard/backend.hpp"
#include "orchard/classification.hpp"
#include "orchard/detection.hpp"
#include "orchard/job_queue.hpp"
#include "orchard/result_store.hpp"
#include "orchard/ulid.hpp"

namespace orchard {

/// Canonical result payloads. Keys are sorted on serialization, so equal
/// results always give identical bytes.
nlohmann::json classification_payload(const ClassificationResult& r, const ModelSlot& slot);
nlohmann::json detection_payload(const std::vector<Detection>& dets, int width_px, int height_px);

struct Inference {
    std::string payload;
    std::string model_version;
    double latency_ms = 0.0;
    /// Classifier label, or empty for detection.
    std::string label;
    std::size_t detections = 0;
};

/// The three configured model slots and their live backends.
class Engine {
public:
    /// Builds every backend up front; throws BackendUnavailable or
    /// InvalidConfig.
    explicit Engine(const std::vector<ModelSlot>& slots);

    bool has_slot(TaskKind task) const { return slots_.count(task) != 0; }
    const ModelSlot& slot(TaskKind task) const;

    /// decode -> prep -> backend -> postprocess for one capture.
    Inference run(TaskKind task, std::span<const std::uint8_t> bytes);

    /// Highest number of concurrent backend invocations ever observed.
    int max_in_flight() const noexcept { return max_in_flight_.load(); }

private:
    struct Loaded {
        ModelSlot slot;
        std::unique_ptr<Backend> backend;
    };
    std::map<TaskKind, Loaded> slots_;
    std::atomic<int> in_flight_{0};
    std::atomic<int> max_in_flight_{0};
};

struct WorkerOptions {
    int storage_attempts = 3;
    std::chrono::milliseconds retry_backoff{20};
};

/// The single inference worker. Jobs run strictly one at a time in queue
/// order; a failing job marks its record failed and the loop moves on.
class Worker {
public:
    /// Receives one JSON record per finished job.
    using EventSink = std::function<void(const nlohmann::json&)>;

    Worker(Store& store, JobQueue& queue, Engine& engine, std::filesystem::path data_dir,
           EventSink sink = {}, WorkerOptions options = {});
    ~Worker();

    /// Re-enqueues every record still queued in the store, then starts the
    /// loop thread.
    void start();
    /// Lets the in-flight job finish, then joins. Queued jobs stay queued.
    void stop();

    /// Processes one job synchronously; returns false if it was skipped
    /// (unknown id or no longer queued).
    bool process(const std::string& image_id);

    std::uint64_t processed() const noexcept { return processed_.load(); }
    std::uint64_t failed() const noexcept { return failed_.load(); }
    /// Order in which jobs were taken up.
    std::vector<std::string> history() const;

private:
    void loop();
    template <typename Fn>
    void with_retries(Fn&& fn);
    void emit(const nlohmann::json& event);

    Store& store_;
    JobQueue& queue_;
    Engine& engine_;
    std::filesystem::path data_dir_;
    EventSink sink_;
    WorkerOptions options_;
    UlidGenerator ids_;
    std::thread thread_;
    std::atomic<std::uint64_t> processed_{0};
    std::atomic<std::uint64_t> failed_{0};
    mutable std::mutex history_mu_;
    std::vector<std::string> history_;
};

}  // namespace orchard
