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

#include <chrono>
#include <condition_variable>
#include <cstddef>
#include <deque>
#include <mutex>
#include <optional>
#include <string>

namespace orchard {

inline constexpr std::size_t kDefaultQueueCapacity = 128;

/// Bounded multi-producer, single-consumer queue of image ids.
///
/// Producers reserve a slot before doing any durable work, so a full queue
/// is reported before anything is written. The store remains the source of
/// truth: ids still queued at shutdown are recovered from it on restart.
class JobQueue {
public:
    class Reservation {
    public:
        Reservation(Reservation&& other) noexcept : q_(other.q_) { other.q_ = nullptr; }
        Reservation& operator=(Reservation&&) = delete;
        ~Reservation();

        /// Turns the reserved slot into a job.
        void commit(std::string image_id);

    private:
        friend class JobQueue;
        explicit Reservation(JobQueue* q) : q_(q) {}
        JobQueue* q_;
    };

    explicit JobQueue(std::size_t capacity = kDefaultQueueCapacity);

    /// Empty when the queue is full or closed.
    std::optional<Reservation> try_reserve();

    /// Appends without a capacity check; used for restart recovery.
    void restore(std::string image_id);

    /// Blocks until a job arrives or the queue is closed.
    std::optional<std::string> pop();
    std::optional<std::string> pop_for(std::chrono::milliseconds timeout);

    /// Wakes the consumer and refuses new reservations. Pending ids are
    /// dropped from memory only; their rows stay queued.
    void close();
    bool closed() const;

    /// Committed jobs plus outstanding reservations.
    std::size_t depth() const;
    std::size_t capacity() const noexcept { return capacity_; }

private:
    void release();
    void push(std::string image_id);

    const std::size_t capacity_;
    mutable std::mutex mu_;
    std::condition_variable cv_;
    std::deque<std::string> jobs_;
    std::size_t reserved_ = 0;
    bool closed_ = false;
};

}  // namespace orchard
