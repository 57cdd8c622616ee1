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
#include <filesystem>
#include <ostream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace orchard {

/// Stand-in for a camera node: uploads every JPEG/PNG in a directory (in
/// file-name order) to POST /api/v1/ingest.
///
/// Each frame's meta starts from a template (device "sim-01", altitude 0,
/// unknown framing, current time, sequence number = upload index), then the
/// `--meta k=v` overrides, then an optional sidecar `<stem>.json` beside the
/// image.
struct SimulateOptions {
    std::filesystem::path dir;
    /// Uploads per second; <= 0 means as fast as possible.
    double rate = 10.0;
    /// Base URL, e.g. "http://127.0.0.1:8080".
    std::string url;
    nlohmann::json meta_overrides = nlohmann::json::object();
    /// Extra attempts after a connection error or a 503.
    int retries = 3;
    std::chrono::milliseconds backoff{200};
    std::ostream* log = nullptr;
};

struct UploadOutcome {
    std::string file;
    /// HTTP status of the last attempt; 0 if the connection failed.
    int status = 0;
    int attempts = 0;
    std::string image_id;
    std::string task;
    std::string error;
};

struct SimulateReport {
    std::vector<UploadOutcome> uploads;
    std::size_t acknowledged = 0;
    std::size_t failed = 0;

    int exit_code() const noexcept { return failed == 0 && !uploads.empty() ? 0 : 1; }
};

/// Parses one `--meta` argument. Values of device_id, captured_at and
/// frame_kind stay strings; anything else is read as JSON when it parses.
void apply_meta_override(nlohmann::json& overrides, const std::string& kv);

/// The meta JSON sent for the `index`-th file.
nlohmann::json frame_meta(const std::filesystem::path& image, std::size_t index,
                          const nlohmann::json& overrides);

/// Image files considered for upload, sorted by name.
std::vector<std::filesystem::path> list_frames(const std::filesystem::path& dir);

SimulateReport simulate_device(const SimulateOptions& opts);

}  // namespace orchard
