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
#include "orchard/api_service.hpp"

#include <charconv>
#include <mutex>
#include <thread>

#include <httplib.h>

#include "orchard/capture_meta.hpp"
#include "orchard/device_gateway.hpp"
#include "orchard/event_hub.hpp"
#include "orchard/job_queue.hpp"
#include "orchard/result_store.hpp"
#include "orchard/worker.hpp"

namespace orchard {

int http_status(ErrorCode code) noexcept {
    switch (code) {
        case ErrorCode::MissingPart:
        case ErrorCode::MalformedMeta:
        case ErrorCode::UnsupportedImageFormat:
        case ErrorCode::DimensionOutOfRange:
        case ErrorCode::CorruptImage:
        case ErrorCode::UnsupportedColorModel:
        case ErrorCode::InvalidArgument: return 400;
        case ErrorCode::NotFound: return 404;
        case ErrorCode::ImageTooLarge: return 413;
        case ErrorCode::QueueFull: return 503;
        default: return 500;
    }
}

nlohmann::json error_body(ErrorCode code, std::string_view detail) {
    return {{"error", std::string(to_string(code))}, {"detail", std::string(detail)}};
}

namespace {

constexpr const char* kJson = "application/json";
constexpr auto kHeartbeat = std::chrono::seconds(15);

void send_json(httplib::Response& res, int status, const nlohmann::json& body) {
    res.status = status;
    res.set_content(body.dump(), kJson);
}

void send_error(httplib::Response& res, ErrorCode code, std::string_view detail) {
    if (code == ErrorCode::QueueFull) res.set_header("Retry-After", "1");
    send_json(res, http_status(code), error_body(code, detail));
}

[[noreturn]] void bad_query(const std::string& what) {
    throw Error(ErrorCode::InvalidArgument, what);
}

ImageFilter filter_from(const httplib::Request& req) {
    ImageFilter f;
    if (req.has_param("since")) f.since = req.get_param_value("since");
    if (req.has_param("device_id")) f.device_id = req.get_param_value("device_id");
    if (req.has_param("task")) {
        const auto v = req.get_param_value("task");
        f.task = parse_task(v);
        if (!f.task) bad_query("unknown task '" + v + "'");
    }
    if (req.has_param("status")) {
        const auto v = req.get_param_value("status");
        f.status = parse_status(v);
        if (!f.status) bad_query("unknown status '" + v + "'");
    }
    if (req.has_param("limit")) {
        const auto v = req.get_param_value("limit");
        int n = 0;
        const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), n);
        if (ec != std::errc() || p != v.data() + v.size() || n < 1 || n > 1000) {
            bad_query("limit must be an integer in [1, 1000]");
        }
        f.limit = n;
    }
    return f;
}

}  // namespace

struct Service::Impl {
    ServiceConfig cfg;
    std::unique_ptr<Store> store;
    Engine engine;
    JobQueue queue;
    Gateway gateway;
    EventHub hub;
    Worker worker;
    httplib::Server http;
    int port = 0;
    std::thread thread;
    std::once_flag stopped;

    explicit Impl(ServiceConfig c)
        : cfg((c.validate(), std::move(c))),
          store(Store::open(cfg.db_path)),
          engine(cfg.models),
          queue(cfg.queue_capacity),
          gateway(*store, queue, cfg.data_dir, cfg.routing),
          worker(*store, queue, engine, cfg.data_dir,
                 [this](const nlohmann::json& ev) { hub.publish(ev.dump()); }) {
        routes();
        if (cfg.port == 0) {
            port = http.bind_to_any_port(cfg.host);
        } else if (http.bind_to_port(cfg.host, cfg.port)) {
            port = cfg.port;
        } else {
            port = -1;
        }
        if (port <= 0) {
            throw Error(ErrorCode::InvalidConfig,
                        "cannot bind " + cfg.host + ":" + std::to_string(cfg.port));
        }
    }

    void routes();
    void ingest(const httplib::Request& req, httplib::Response& res,
                const httplib::ContentReader& reader);
    void events(const httplib::Request& req, httplib::Response& res);
};

void Service::Impl::routes() {
    http.new_task_queue = [] { return new httplib::ThreadPool(16); };
    http.set_payload_max_length(kMaxImageBytes + 1024 * 1024);

    http.set_exception_handler([](const httplib::Request&, httplib::Response& res,
                                  std::exception_ptr ep) {
        try {
            std::rethrow_exception(ep);
        } catch (const Error& e) {
            send_error(res, e.code(), e.what());
        } catch (const std::exception& e) {
            send_json(res, 500, {{"error", "Internal"}, {"detail", e.what()}});
        }
    });
    // Fills in bodies for errors raised inside the HTTP layer itself.
    http.set_error_handler([](const httplib::Request& req, httplib::Response& res) {
        if (!res.body.empty()) return httplib::Server::HandlerResponse::Unhandled;
        switch (res.status) {
            case 404:
                res.set_content(error_body(ErrorCode::NotFound, "no route for " + req.path).dump(), kJson);
                break;
            case 413:
                res.set_content(error_body(ErrorCode::ImageTooLarge, "request body too large").dump(), kJson);
                break;
            case 400:
                res.set_content(error_body(ErrorCode::MissingPart, "malformed request body").dump(), kJson);
                break;
            default:
                res.set_content(nlohmann::json{{"error", "HttpError"},
                                               {"detail", httplib::status_message(res.status)}}
                                    .dump(),
                                kJson);
        }
        return httplib::Server::HandlerResponse::Handled;
    });

    http.Post("/api/v1/ingest", [this](const httplib::Request& req, httplib::Response& res,
                                       const httplib::ContentReader& reader) {
        ingest(req, res, reader);
    });

    http.Get("/api/v1/health", [](const httplib::Request&, httplib::Response& res) {
        send_json(res, 200, {{"status", "ok"}});
    });

    http.Get("/api/v1/images", [this](const httplib::Request& req, httplib::Response& res) {
        const auto page = store->list_images(filter_from(req));
        nlohmann::json items = nlohmann::json::array();
        for (const auto& rec : page.items) items.push_back(record_to_json(rec));
        send_json(res, 200, {{"items", std::move(items)},
                             {"next", page.next ? nlohmann::json(*page.next) : nlohmann::json()}});
    });

    http.Get(R"(/api/v1/images/([^/]+)/file)", [this](const httplib::Request& req,
                                                     httplib::Response& res) {
        const std::string id = req.matches[1];
        const auto rec = store->get_image(id);
        if (!rec) return send_error(res, ErrorCode::NotFound, "unknown image " + id);
        const auto bytes = read_file(image_file(cfg.data_dir, *rec));
        res.set_content(reinterpret_cast<const char*>(bytes.data()), bytes.size(), rec->content_type);
    });

    http.Get(R"(/api/v1/results/([^/]+))", [this](const httplib::Request& req,
                                                httplib::Response& res) {
        const std::string id = req.matches[1];
        if (const auto row = store->get_result(id)) return send_json(res, 200, result_to_json(*row));
        const auto rec = store->get_image(id);
        if (rec && rec->status == ImageStatus::Failed) {
            return send_json(res, 200, {{"image_id", id},
                                        {"task", std::string(to_string(rec->task))},
                                        {"status", "failed"},
                                        {"reason", rec->failure_reason}});
        }
        send_error(res, ErrorCode::NotFound,
                   rec ? "no result yet for " + id + " (" + std::string(to_string(rec->status)) + ")"
                       : "unknown image " + id);
    });

    http.Get("/api/v1/stats", [this](const httplib::Request&, httplib::Response& res) {
        send_json(res, 200, stats_to_json(store->stats()));
    });

    http.Get("/api/v1/events", [this](const httplib::Request& req, httplib::Response& res) {
        events(req, res);
    });

    if (cfg.serve_dashboard) http.set_mount_point("/", cfg.dashboard_dir.string());
}

void Service::Impl::ingest(const httplib::Request& req, httplib::Response& res,
                           const httplib::ContentReader& reader) {
    if (!req.is_multipart_form_data()) {
        reader([](const char*, std::size_t) { return true; });
        return send_error(res, ErrorCode::MissingPart,
                          "expected multipart/form-data, got '" +
                              req.get_header_value("Content-Type") + "'");
    }
    std::vector<MultipartPart> parts;
    const bool ok = reader(
        [&](const httplib::MultipartFormData& f) {
            parts.push_back({f.name, f.filename, f.content_type, {}});
            return true;
        },
        [&](const char* data, std::size_t n) {
            parts.back().body.append(data, n);
            return true;
        });
    if (!ok) {
        res.set_header("Connection", "close");
        if (res.status == 413) {
            return send_error(res, ErrorCode::ImageTooLarge, "request body too large");
        }
        return send_error(res, ErrorCode::MissingPart, "malformed multipart body");
    }
    const auto rec = gateway.ingest(parse_ingest_parts(parts));
    send_json(res, 201, {{"image_id", rec.image_id},
                         {"task", std::string(to_string(rec.task))},
                         {"status", std::string(to_string(rec.status))}});
}

void Service::Impl::events(const httplib::Request& req, httplib::Response& res) {
    std::uint64_t start = hub.last_seq();
    // Reconnecting clients may resume from the last id they saw.
    if (req.has_header("Last-Event-ID")) {
        const auto v = req.get_header_value("Last-Event-ID");
        std::uint64_t n = 0;
        const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), n);
        if (ec == std::errc() && p == v.data() + v.size() && n <= start) start = n;
    }
    res.set_header("Cache-Control", "no-cache");
    auto cursor = std::make_shared<std::uint64_t>(start);
    res.set_chunked_content_provider(
        "text/event-stream", [this, cursor](std::size_t, httplib::DataSink& sink) {
            if (hub.closed()) {
                sink.done();
                return true;
            }
            const auto batch = hub.wait(*cursor, kHeartbeat);
            if (hub.closed()) {
                sink.done();
                return true;
            }
            std::string out;
            if (batch.empty()) out = ": keep-alive\n\n";
            for (const auto& e : batch) {
                out += "id: " + std::to_string(e.seq) + "\nevent: result\ndata: " + e.data + "\n\n";
                *cursor = e.seq;
            }
            return sink.write(out.data(), out.size());
        });
}

Service::Service(ServiceConfig cfg) : impl_(std::make_unique<Impl>(std::move(cfg))) {}

Service::~Service() { stop(); }

int Service::port() const noexcept { return impl_->port; }

void Service::run() {
    impl_->worker.start();
    impl_->http.listen_after_bind();
}

void Service::start() {
    impl_->worker.start();
    impl_->thread = std::thread([this] { impl_->http.listen_after_bind(); });
    impl_->http.wait_until_ready();
}

void Service::stop() {
    std::call_once(impl_->stopped, [this] {
        impl_->hub.close();
        impl_->http.stop();
        if (impl_->thread.joinable()) impl_->thread.join();
        impl_->worker.stop();
    });
}

Store& Service::store() { return *impl_->store; }
Worker& Service::worker() { return impl_->worker; }
Engine& Service::engine() { return impl_->engine; }
JobQueue& Service::queue() { return impl_->queue; }
const ServiceConfig& Service::config() const noexcept { return impl_->cfg; }

}  // namespace orchard
