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
#include <cstdint>
#include <deque>
#include <mutex>
#include <string>
#include <vector>

namespace orchard {

/// Fan-out of completed-job records to event-stream subscribers. Each event
/// gets a sequence number; subscribers poll with the last number they saw.
/// Only the most recent `backlog` events are retained.
class EventHub {
public:
    struct Event {
        std::uint64_t seq;
        std::string data;
    };

    explicit EventHub(std::size_t backlog = 1024) : backlog_(backlog) {}

    void publish(std::string data) {
        {
            std::lock_guard lk(mu_);
            events_.push_back({++last_seq_, std::move(data)});
            if (events_.size() > backlog_) events_.pop_front();
        }
        cv_.notify_all();
    }

    /// Events with seq > `after`, waiting up to `timeout` for the first one.
    std::vector<Event> wait(std::uint64_t after, std::chrono::milliseconds timeout) {
        std::unique_lock lk(mu_);
        cv_.wait_for(lk, timeout, [&] { return closed_ || last_seq_ > after; });
        std::vector<Event> out;
        for (const auto& e : events_) {
            if (e.seq > after) out.push_back(e);
        }
        return out;
    }

    std::uint64_t last_seq() const {
        std::lock_guard lk(mu_);
        return last_seq_;
    }

    void close() {
        {
            std::lock_guard lk(mu_);
            closed_ = true;
        }
        cv_.notify_all();
    }

    bool closed() const {
        std::lock_guard lk(mu_);
        return closed_;
    }

private:
    const std::size_t backlog_;
    mutable std::mutex mu_;
    std::condition_variable cv_;
    std::deque<Event> events_;
    std::uint64_t last_seq_ = 0;
    bool closed_ = false;
};

}  // namespace orchard
