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

// orchard-edge: serve | simulate-device | evaluate

#include <csignal>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <pthread.h>
#include <unistd.h>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "orchard/api_service.hpp"
#include "orchard/error.hpp"
#include "orchard/evaluate.hpp"
#include "orchard/service_config.hpp"
#include "orchard/simulate.hpp"
#include "orchard/worker.hpp"

namespace {

namespace fs = std::filesystem;
using orchard::Error;
using orchard::ErrorCode;

int report_failure(std::string_view code, std::string_view detail, int exit_code) {
    std::cerr << nlohmann::json{{"error", std::string(code)}, {"detail", std::string(detail)}}.dump()
              << std::endl;
    return exit_code;
}

struct ServeArgs {
    std::string config;
    std::optional<std::string> bind;
    std::optional<std::string> db_path;
    std::optional<std::string> data_dir;
    std::optional<double> altitude_threshold;
    std::optional<std::string> default_task;
    std::optional<long long> queue_capacity;
    std::optional<bool> serve_dashboard;
    std::optional<std::string> dashboard_dir;
    bool stub = false;
};

orchard::ServiceConfig build_config(const ServeArgs& a) {
    nlohmann::json j = nlohmann::json::object();
    fs::path base;
    if (!a.config.empty()) {
        std::ifstream in(a.config);
        if (!in) throw Error(ErrorCode::InvalidConfig, "cannot read config " + a.config);
        try {
            j = nlohmann::json::parse(in);
        } catch (const nlohmann::json::exception& e) {
            throw Error(ErrorCode::InvalidConfig, "config " + a.config + ": " + e.what());
        }
        base = fs::path(a.config).parent_path();
    }
    if (!j.is_object()) throw Error(ErrorCode::InvalidConfig, "config must be a JSON object");
    // Command-line paths are relative to the working directory, not to the
    // config file.
    const auto abs = [](const std::string& p) { return fs::absolute(p).string(); };
    if (a.bind) j["bind"] = *a.bind;
    if (a.db_path) j["db_path"] = abs(*a.db_path);
    if (a.data_dir) j["data_dir"] = abs(*a.data_dir);
    if (a.altitude_threshold) j["altitude_threshold"] = *a.altitude_threshold;
    if (a.default_task) j["default_task"] = *a.default_task;
    if (a.queue_capacity) j["queue_capacity"] = *a.queue_capacity;
    if (a.serve_dashboard) j["serve_dashboard"] = *a.serve_dashboard;
    if (a.dashboard_dir) j["dashboard_dir"] = abs(*a.dashboard_dir);
    auto cfg = orchard::config_from_json(j, base);
    if (a.stub) cfg.force_stub();
    return cfg;
}

int run_serve(const ServeArgs& args) {
    // Signals are taken synchronously by a watcher thread, so every other
    // thread must start with them blocked.
    sigset_t set;
    sigemptyset(&set);
    sigaddset(&set, SIGINT);
    sigaddset(&set, SIGTERM);
    pthread_sigmask(SIG_BLOCK, &set, nullptr);

    std::unique_ptr<orchard::Service> service;
    try {
        service = std::make_unique<orchard::Service>(build_config(args));
    } catch (const Error& e) {
        return report_failure(e.code_name(), e.what(), 2);
    } catch (const std::exception& e) {
        return report_failure("Internal", e.what(), 2);
    }

    std::thread watcher([&] {
        int sig = 0;
        sigwait(&set, &sig);
        service->stop();
    });

    const auto& cfg = service->config();
    std::cout << nlohmann::json{{"event", "listening"},
                                {"host", cfg.host},
                                {"port", service->port()},
                                {"db_path", cfg.db_path.string()},
                                {"data_dir", cfg.data_dir.string()}}
                     .dump()
              << std::endl;
    service->run();
    // Wake the watcher if the server stopped on its own.
    kill(getpid(), SIGTERM);
    watcher.join();
    service->stop();
    std::cout << nlohmann::json{{"event", "stopped"},
                                {"processed", service->worker().processed()},
                                {"failed", service->worker().failed()}}
                     .dump()
              << std::endl;
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Orchard edge pipeline: ingestion server, device simulator and evaluator"};
    app.require_subcommand(1);

    ServeArgs serve;
    auto* serve_cmd = app.add_subcommand("serve", "Run the edge server");
    serve_cmd->add_option("--config", serve.config, "JSON config file");
    serve_cmd->add_option("--bind", serve.bind, "host:port (port 0 picks a free port)");
    serve_cmd->add_option("--db-path", serve.db_path, "SQLite database file");
    serve_cmd->add_option("--data-dir", serve.data_dir, "Directory for raw captures");
    serve_cmd->add_option("--altitude-threshold", serve.altitude_threshold,
                          "Altitude (m) at which unknown framing routes to detection");
    serve_cmd->add_option("--default-task", serve.default_task,
                          "Task for low-altitude frames with unknown framing");
    serve_cmd->add_option("--queue-capacity", serve.queue_capacity, "Bounded job queue size");
    serve_cmd->add_option("--serve-dashboard", serve.serve_dashboard, "Serve dashboard assets under /");
    serve_cmd->add_option("--dashboard-dir", serve.dashboard_dir, "Built dashboard assets");
    serve_cmd->add_flag("--stub", serve.stub, "Use the stub backend for every model");

    orchard::SimulateOptions sim;
    std::vector<std::string> meta_kv;
    auto* sim_cmd = app.add_subcommand("simulate-device", "Upload a directory of frames like a camera");
    sim_cmd->add_option("--dir", sim.dir, "Directory of JPEG/PNG frames")->required();
    sim_cmd->add_option("--rate", sim.rate, "Uploads per second (<= 0: no pacing)");
    sim_cmd->add_option("--url", sim.url, "Server base URL, e.g. http://127.0.0.1:8080")->required();
    sim_cmd->add_option("--meta", meta_kv, "Meta template override key=value (repeatable)");
    sim_cmd->add_option("--retries", sim.retries, "Retries on connection errors and 503");

    std::string eval_task, gt_path, pred_path;
    auto* eval_cmd = app.add_subcommand("evaluate", "Score predictions against ground truth");
    eval_cmd->add_option("--task", eval_task, "leaf_disease | freshness | apple_detection")->required();
    eval_cmd->add_option("--gt", gt_path, "Ground-truth JSONL")->required();
    eval_cmd->add_option("--pred", pred_path, "Prediction JSONL")->required();

    CLI11_PARSE(app, argc, argv);

    if (serve_cmd->parsed()) return run_serve(serve);

    if (sim_cmd->parsed()) {
        try {
            for (const auto& kv : meta_kv) orchard::apply_meta_override(sim.meta_overrides, kv);
            sim.log = &std::cout;
            return orchard::simulate_device(sim).exit_code();
        } catch (const Error& e) {
            return report_failure(e.code_name(), e.what(), 2);
        }
    }

    try {
        const auto task = orchard::parse_task(eval_task);
        if (!task) throw Error(ErrorCode::TaskMismatch, "unknown task '" + eval_task + "'");
        std::cout << orchard::evaluate_files(*task, gt_path, pred_path).dump(2) << std::endl;
        return 0;
    } catch (const Error& e) {
        return report_failure(e.code_name(), e.what(), 1);
    }
}
