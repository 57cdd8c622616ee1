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

#include <memory>

#include <nlohmann/json.hpp>

#include "orchard/error.hpp"
#include "orchard/service_config.hpp"

namespace orchard {

class Store;
class Worker;
class Engine;
class JobQueue;

/// HTTP status for an error code surfaced by the API.
int http_status(ErrorCode code) noexcept;
/// {"error": "<code>", "detail": "<message>"}
nlohmann::json error_body(ErrorCode code, std::string_view detail);

/// The edge server: store, backends, queue, worker and the /api/v1 routes.
///
///   POST /api/v1/ingest             multipart capture upload
///   GET  /api/v1/images             ?since=&status=&task=&device_id=&limit=
///   GET  /api/v1/images/{id}/file   raw bytes
///   GET  /api/v1/results/{id}       result row, failure record, or 404
///   GET  /api/v1/stats              counters
///   GET  /api/v1/events             server-sent events, one per finished job
///   GET  /api/v1/health             liveness
class Service {
public:
    /// Opens the store, builds every backend and binds the listening socket.
    /// Any failure throws before the worker starts.
    explicit Service(ServiceConfig cfg);
    ~Service();
    Service(const Service&) = delete;
    Service& operator=(const Service&) = delete;

    /// Actual port (useful when the config asked for port 0).
    int port() const noexcept;

    /// Starts the worker and serves until stop(). Blocks.
    void run();
    /// Starts the worker and serves on a background thread.
    void start();
    /// Stops accepting requests, closes event streams, lets the in-flight
    /// job finish. Safe to call more than once and from a signal watcher.
    void stop();

    Store& store();
    Worker& worker();
    Engine& engine();
    JobQueue& queue();
    const ServiceConfig& config() const noexcept;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

}  // namespace orchard
