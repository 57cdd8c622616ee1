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
#include "orchard/job_queue.hpp"

#include <utility>

namespace orchard {

JobQueue::Reservation::~Reservation() {
    if (q_) q_->release();
}

void JobQueue::Reservation::commit(std::string image_id) {
    if (!q_) return;
    q_->push(std::move(image_id));
    q_ = nullptr;
}

JobQueue::JobQueue(std::size_t capacity) : capacity_(capacity == 0 ? 1 : capacity) {}

std::optional<JobQueue::Reservation> JobQueue::try_reserve() {
    std::lock_guard lk(mu_);
    if (closed_ || jobs_.size() + reserved_ >= capacity_) return std::nullopt;
    ++reserved_;
    return Reservation(this);
}

void JobQueue::release() {
    std::lock_guard lk(mu_);
    --reserved_;
}

void JobQueue::push(std::string image_id) {
    {
        std::lock_guard lk(mu_);
        --reserved_;
        jobs_.push_back(std::move(image_id));
    }
    cv_.notify_one();
}

void JobQueue::restore(std::string image_id) {
    {
        std::lock_guard lk(mu_);
        jobs_.push_back(std::move(image_id));
    }
    cv_.notify_one();
}

std::optional<std::string> JobQueue::pop() {
    std::unique_lock lk(mu_);
    cv_.wait(lk, [&] { return closed_ || !jobs_.empty(); });
    if (closed_) return std::nullopt;
    auto id = std::move(jobs_.front());
    jobs_.pop_front();
    return id;
}

std::optional<std::string> JobQueue::pop_for(std::chrono::milliseconds timeout) {
    std::unique_lock lk(mu_);
    if (!cv_.wait_for(lk, timeout, [&] { return closed_ || !jobs_.empty(); }) || closed_) {
        return std::nullopt;
    }
    auto id = std::move(jobs_.front());
    jobs_.pop_front();
    return id;
}

void JobQueue::close() {
    {
        std::lock_guard lk(mu_);
        closed_ = true;
    }
    cv_.notify_all();
}

bool JobQueue::closed() const {
    std::lock_guard lk(mu_);
    return closed_;
}

std::size_t JobQueue::depth() const {
    std::lock_guard lk(mu_);
    return jobs_.size() + reserved_;
}

}  // namespace orchard
