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
#include "orchard/worker.hpp"

#include <iostream>
#include <utility>

#include "orchard/device_gateway.hpp"
#include "orchard/error.hpp"
#include "orchard/image_codec.hpp"
#include "orchard/image_prep.hpp"

namespace orchard {
namespace {

TimestampMs now_ms() {
    return std::chrono::time_point_cast<std::chrono::milliseconds>(std::chrono::system_clock::now());
}

/// Tracks concurrent backend calls for the sequential-execution check.
class InFlight {
public:
    InFlight(std::atomic<int>& current, std::atomic<int>& peak) : current_(current) {
        const int n = ++current_;
        int seen = peak.load();
        while (n > seen && !peak.compare_exchange_weak(seen, n)) {
        }
    }
    ~InFlight() { --current_; }

private:
    std::atomic<int>& current_;
};

}  // namespace

nlohmann::json classification_payload(const ClassificationResult& r, const ModelSlot& slot) {
    return {{"task", std::string(to_string(r.task))},
            {"labels", slot.labels},
            {"probs", r.probs},
            {"label", r.label},
            {"confidence", r.confidence}};
}

nlohmann::json detection_payload(const std::vector<Detection>& dets, int width_px, int height_px) {
    nlohmann::json list = nlohmann::json::array();
    for (const auto& d : dets) {
        list.push_back({{"bbox", {d.bbox.x1, d.bbox.y1, d.bbox.x2, d.bbox.y2}},
                        {"score", d.score},
                        {"class_id", d.class_id},
                        {"label", "apple"}});
    }
    return {{"task", std::string(to_string(TaskKind::AppleDetection))},
            {"width_px", width_px},
            {"height_px", height_px},
            {"detections", std::move(list)}};
}

Engine::Engine(const std::vector<ModelSlot>& slots) {
    for (const auto& s : slots) {
        s.validate();
        if (slots_.count(s.task)) {
            throw Error(ErrorCode::InvalidConfig,
                        "duplicate model slot for " + std::string(to_string(s.task)));
        }
        slots_.emplace(s.task, Loaded{s, make_backend(s)});
    }
}

const ModelSlot& Engine::slot(TaskKind task) const {
    const auto it = slots_.find(task);
    if (it == slots_.end()) {
        throw Error(ErrorCode::BackendUnavailable,
                    "no model configured for " + std::string(to_string(task)));
    }
    return it->second.slot;
}

Inference Engine::run(TaskKind task, std::span<const std::uint8_t> bytes) {
    const auto it = slots_.find(task);
    if (it == slots_.end()) {
        throw Error(ErrorCode::BackendUnavailable,
                    "no model configured for " + std::string(to_string(task)));
    }
    auto& [slot, backend] = it->second;
    const auto t0 = std::chrono::steady_clock::now();

    const ImageRGB img = decode_image(bytes);
    Inference out;
    out.model_version = backend->version();
    nlohmann::json payload;
    if (task == TaskKind::AppleDetection) {
        const auto [input, transform] = letterbox(img, slot.input_side, slot.norm);
        BackendOutput raw;
        {
            InFlight guard(in_flight_, max_in_flight_);
            raw = run_backend(slot, *backend, input, bytes);
        }
        const auto dets = postprocess(std::get<RawDetections>(raw), transform, img.width,
                                      img.height, slot.decode);
        out.detections = dets.size();
        payload = detection_payload(dets, img.width, img.height);
    } else {
        const auto input = resize_normalize(img, slot.input_side, slot.norm);
        BackendOutput raw;
        {
            InFlight guard(in_flight_, max_in_flight_);
            raw = run_backend(slot, *backend, input, bytes);
        }
        const Eigen::VectorXd probs = softmax(std::get<Logits>(raw)).matrix();
        auto result = classify(std::span<const double>(probs.data(), static_cast<std::size_t>(probs.size())), slot);
        out.label = result.label;
        payload = classification_payload(result, slot);
    }
    out.payload = payload.dump();
    out.latency_ms =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    return out;
}

Worker::Worker(Store& store, JobQueue& queue, Engine& engine, std::filesystem::path data_dir,
               EventSink sink, WorkerOptions options)
    : store_(store),
      queue_(queue),
      engine_(engine),
      data_dir_(std::move(data_dir)),
      sink_(std::move(sink)),
      options_(options) {}

Worker::~Worker() { stop(); }

void Worker::start() {
    if (thread_.joinable()) return;
    for (auto& id : store_.queued_ids()) queue_.restore(std::move(id));
    thread_ = std::thread([this] { loop(); });
}

void Worker::stop() {
    queue_.close();
    if (thread_.joinable()) thread_.join();
}

std::vector<std::string> Worker::history() const {
    std::lock_guard lk(history_mu_);
    return history_;
}

void Worker::loop() {
    while (auto id = queue_.pop()) {
        try {
            process(*id);
        } catch (const std::exception& e) {
            // Only storage trouble reaches here; the record stays queued and
            // is picked up again after a restart.
            std::cerr << R"({"event":"worker_error","image_id":")" << *id << R"(","detail":)"
                      << nlohmann::json(e.what()).dump() << "}\n";
        }
    }
}

template <typename Fn>
void Worker::with_retries(Fn&& fn) {
    for (int attempt = 1;; ++attempt) {
        try {
            fn();
            return;
        } catch (const Error& e) {
            const bool transient = e.code() == ErrorCode::StorageFailure || e.code() == ErrorCode::Locked;
            if (!transient || attempt >= options_.storage_attempts) throw;
        }
        std::this_thread::sleep_for(options_.retry_backoff * attempt);
    }
}

void Worker::emit(const nlohmann::json& event) {
    if (sink_) sink_(event);
}

bool Worker::process(const std::string& image_id) {
    const auto rec = store_.get_image(image_id);
    if (!rec || rec->status != ImageStatus::Queued) return false;
    {
        std::lock_guard lk(history_mu_);
        history_.push_back(image_id);
    }

    Inference inf;
    std::string reason;
    try {
        const auto bytes = read_file(image_file(data_dir_, *rec));
        inf = engine_.run(rec->task, bytes);
    } catch (const Error& e) {
        reason = std::string(e.code_name()) + ": " + e.what();
    } catch (const std::exception& e) {
        reason = e.what();
    }

    if (reason.empty()) {
        ResultRow row;
        row.result_id = ids_.next();
        row.image_id = image_id;
        row.task = rec->task;
        row.payload = inf.payload;
        row.created_at = now_ms();
        row.model_version = inf.model_version;
        row.latency_ms = inf.latency_ms;
        try {
            with_retries([&] { store_.put_result(row); });
            ++processed_;
            nlohmann::json ev = {{"image_id", image_id},
                                 {"task", std::string(to_string(rec->task))},
                                 {"status", "processed"}};
            if (rec->task == TaskKind::AppleDetection) {
                ev["detections"] = inf.detections;
            } else {
                ev["label"] = inf.label;
            }
            emit(ev);
            return true;
        } catch (const Error& e) {
            reason = std::string(e.code_name()) + ": " + e.what();
        }
    }

    with_retries([&] { store_.set_status(image_id, ImageStatus::Failed, reason); });
    ++failed_;
    emit({{"image_id", image_id},
          {"task", std::string(to_string(rec->task))},
          {"status", "failed"},
          {"reason", reason}});
    return true;
}

}  // namespace orchard
