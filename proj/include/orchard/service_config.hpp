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
#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "orchard/backend.hpp"
#include "orchard/job_queue.hpp"
#include "orchard/task_router.hpp"

namespace orchard {

/// Everything `serve` needs. JSON keys match the CLI flags with dashes
/// turned into underscores:
///
///   {"bind": "127.0.0.1:8080", "db_path": "orchard.db", "data_dir": "data",
///    "altitude_threshold": 8.0, "default_task": "apple_detection",
///    "queue_capacity": 128, "serve_dashboard": false,
///    "dashboard_dir": "dashboard/dist", "models": [ <slot>, ... ]}
///
/// A slot is {"task", "backend": "stub"|"external", "model_path", "input_side",
/// "norm": {"mean": [3], "std": [3]}, "labels", "conf_thresh", "iou_thresh"}.
/// Tasks without a slot entry get the stub backend.
struct ServiceConfig {
    std::string host = "127.0.0.1";
    int port = 8080;
    std::filesystem::path db_path = "orchard.db";
    std::filesystem::path data_dir = "data";
    RoutingConfig routing;
    std::vector<ModelSlot> models;
    std::size_t queue_capacity = kDefaultQueueCapacity;
    bool serve_dashboard = false;
    std::filesystem::path dashboard_dir = "dashboard/dist";

    /// Throws InvalidConfig.
    void validate() const;
    /// Replaces every backend with the stub.
    void force_stub();
};

/// Fills in any missing task with its default stub slot.
std::vector<ModelSlot> complete_slots(std::vector<ModelSlot> slots);

ModelSlot slot_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir);
/// Relative paths resolve against `base_dir`. Throws InvalidConfig.
ServiceConfig config_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir);
ServiceConfig load_config(const std::filesystem::path& path);

/// "host:port"; throws InvalidConfig.
void parse_bind(const std::string& bind, std::string& host, int& port);

}  // namespace orchard
