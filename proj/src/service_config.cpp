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
#include "orchard/service_config.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <set>

#include "orchard/error.hpp"

namespace orchard {
namespace {

[[noreturn]] void invalid(const std::string& what) { throw Error(ErrorCode::InvalidConfig, what); }

std::filesystem::path resolve(const std::filesystem::path& p, const std::filesystem::path& base) {
    return p.is_absolute() || base.empty() ? p : base / p;
}

std::array<double, 3> triple(const nlohmann::json& j, const char* what) {
    if (!j.is_array() || j.size() != 3) invalid(std::string(what) + " must be an array of 3 numbers");
    std::array<double, 3> out{};
    for (std::size_t i = 0; i < 3; ++i) {
        if (!j[i].is_number()) invalid(std::string(what) + " must be an array of 3 numbers");
        out[i] = j[i].get<double>();
    }
    return out;
}

template <typename T>
T field(const nlohmann::json& j, const char* key, T fallback) {
    if (!j.contains(key)) return fallback;
    try {
        return j.at(key).get<T>();
    } catch (const nlohmann::json::exception&) {
        invalid(std::string("config field '") + key + "' has the wrong type");
    }
}

}  // namespace

void parse_bind(const std::string& bind, std::string& host, int& port) {
    const auto colon = bind.rfind(':');
    if (colon == std::string::npos || colon == 0) invalid("bind must be host:port, got '" + bind + "'");
    int p = -1;
    const char* first = bind.data() + colon + 1;
    const char* last = bind.data() + bind.size();
    const auto [ptr, ec] = std::from_chars(first, last, p);
    if (ec != std::errc() || ptr != last || p < 0 || p > 65535) {
        invalid("bind port must be 0..65535, got '" + bind + "'");
    }
    host = bind.substr(0, colon);
    port = p;
}

ModelSlot slot_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir) {
    if (!j.is_object()) invalid("model slot must be an object");
    const auto task = parse_task(field<std::string>(j, "task", ""));
    if (!task) invalid("model slot has an unknown or missing task");
    ModelSlot slot = default_slot(*task);
    const auto backend = field<std::string>(j, "backend", "stub");
    if (backend == "stub") {
        slot.backend = BackendKind::Stub;
    } else if (backend == "external") {
        slot.backend = BackendKind::External;
    } else {
        invalid("backend must be stub or external, got '" + backend + "'");
    }
    if (j.contains("model_path")) {
        slot.model_path = resolve(field<std::string>(j, "model_path", ""), base_dir);
    }
    slot.input_side = field<int>(j, "input_side", slot.input_side);
    if (j.contains("norm")) {
        const auto& n = j.at("norm");
        if (!n.is_object()) invalid("norm must be an object");
        if (n.contains("mean")) slot.norm.mean = triple(n.at("mean"), "norm.mean");
        if (n.contains("std")) slot.norm.std = triple(n.at("std"), "norm.std");
    }
    slot.labels = field<std::vector<std::string>>(j, "labels", slot.labels);
    slot.decode.conf_thresh = field<double>(j, "conf_thresh", slot.decode.conf_thresh);
    slot.decode.iou_thresh = field<double>(j, "iou_thresh", slot.decode.iou_thresh);
    if (slot.backend == BackendKind::External && slot.model_path.empty()) {
        invalid(std::string(to_string(*task)) + ": external backend needs model_path");
    }
    slot.validate();
    return slot;
}

std::vector<ModelSlot> complete_slots(std::vector<ModelSlot> slots) {
    for (const TaskKind t : kAllTasks) {
        const bool present = std::any_of(slots.begin(), slots.end(),
                                         [&](const ModelSlot& s) { return s.task == t; });
        if (!present) slots.push_back(default_slot(t));
    }
    std::sort(slots.begin(), slots.end(),
              [](const ModelSlot& a, const ModelSlot& b) { return a.task < b.task; });
    return slots;
}

ServiceConfig config_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir) {
    if (!j.is_object()) invalid("config must be a JSON object");
    ServiceConfig cfg;
    if (j.contains("bind")) parse_bind(field<std::string>(j, "bind", ""), cfg.host, cfg.port);
    if (j.contains("db_path")) cfg.db_path = resolve(field<std::string>(j, "db_path", ""), base_dir);
    if (j.contains("data_dir")) cfg.data_dir = resolve(field<std::string>(j, "data_dir", ""), base_dir);
    cfg.routing.altitude_threshold_m =
        field<double>(j, "altitude_threshold", cfg.routing.altitude_threshold_m);
    if (j.contains("default_task")) {
        const auto t = parse_task(field<std::string>(j, "default_task", ""));
        if (!t) invalid("default_task must be leaf_disease, freshness or apple_detection");
        cfg.routing.default_task = *t;
    }
    const auto cap = field<long long>(j, "queue_capacity", static_cast<long long>(cfg.queue_capacity));
    if (cap < 1) invalid("queue_capacity must be at least 1");
    cfg.queue_capacity = static_cast<std::size_t>(cap);
    cfg.serve_dashboard = field<bool>(j, "serve_dashboard", cfg.serve_dashboard);
    if (j.contains("dashboard_dir")) {
        cfg.dashboard_dir = resolve(field<std::string>(j, "dashboard_dir", ""), base_dir);
    }
    std::vector<ModelSlot> slots;
    if (j.contains("models")) {
        const auto& m = j.at("models");
        if (!m.is_array()) invalid("models must be an array");
        std::set<TaskKind> seen;
        for (const auto& s : m) {
            slots.push_back(slot_from_json(s, base_dir));
            if (!seen.insert(slots.back().task).second) {
                invalid("duplicate model slot for " + std::string(to_string(slots.back().task)));
            }
        }
    }
    cfg.models = complete_slots(std::move(slots));
    cfg.validate();
    return cfg;
}

ServiceConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) invalid("cannot read config " + path.string());
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        invalid("config " + path.string() + ": " + e.what());
    }
    return config_from_json(j, path.parent_path());
}

void ServiceConfig::validate() const {
    routing.validate();
    if (queue_capacity < 1) invalid("queue_capacity must be at least 1");
    if (port < 0 || port > 65535) invalid("port out of range");
    if (db_path.empty()) invalid("db_path is empty");
    if (data_dir.empty()) invalid("data_dir is empty");
    const auto parent = db_path.has_parent_path() ? db_path.parent_path() : std::filesystem::path(".");
    if (!std::filesystem::is_directory(parent)) {
        invalid("db_path directory does not exist: " + parent.string());
    }
    if (serve_dashboard && !std::filesystem::is_directory(dashboard_dir)) {
        invalid("dashboard_dir does not exist: " + dashboard_dir.string());
    }
    for (const auto& s : models) s.validate();
}

void ServiceConfig::force_stub() {
    for (auto& s : models) s.backend = BackendKind::Stub;
}

}  // namespace orchard
