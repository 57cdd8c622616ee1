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
#include <fstream>
#include <set>
#include <thread>

#include <gtest/gtest.h>

#include "orchard/api_service.hpp"
#include "orchard/job_queue.hpp"
#include "orchard/result_store.hpp"
#include "orchard/worker.hpp"
#include "service_fixtures.hpp"

// After Eigen: <resolv.h> defines a `_res` macro that collides with Eigen.
#include <httplib.h>

namespace orchard {
namespace {

using namespace testing_support;
using nlohmann::json;

class ApiTest : public ::testing::Test {
protected:
    TempDir dir;
    std::unique_ptr<Service> service;

    void boot(ServiceConfig cfg) {
        service = std::make_unique<Service>(std::move(cfg));
        service->start();
    }
    void SetUp() override {}
    void TearDown() override {
        if (service) service->stop();
    }

    httplib::Client client() {
        httplib::Client c("127.0.0.1", service->port());
        c.set_read_timeout(std::chrono::seconds(10));
        return c;
    }

    httplib::Result upload(const std::string& meta, const std::string& image) {
        return client().Post("/api/v1/ingest", ingest_body(meta, image), multipart_type());
    }

    json get_json(const std::string& path, int expect = 200) {
        auto res = client().Get(path);
        EXPECT_TRUE(res);
        if (!res) return {};
        EXPECT_EQ(res->status, expect) << path << " " << res->body;
        EXPECT_EQ(res->get_header_value("Content-Type"), "application/json");
        return json::parse(res->body);
    }

    json wait_result(const std::string& id) {
        for (int i = 0; i < 1000; ++i) {
            auto res = client().Get("/api/v1/results/" + id);
            if (res && res->status == 200) return json::parse(res->body);
            std::this_thread::sleep_for(std::chrono::milliseconds(10));
        }
        ADD_FAILURE() << "no result for " << id;
        return {};
    }
};

TEST_F(ApiTest, HealthAndEmptyStats) {
    boot(stub_config(dir));
    EXPECT_EQ(get_json("/api/v1/health"), json({{"status", "ok"}}));
    const auto s = get_json("/api/v1/stats");
    EXPECT_EQ(s["queue_depth"], 0);
    EXPECT_EQ(s["failed"], 0);
    EXPECT_EQ(s["images"]["total"], 0);
    for (const char* t : {"leaf_disease", "freshness", "apple_detection"}) {
        EXPECT_EQ(s["tasks"][t], 0) << t;
        ASSERT_TRUE(s["classes"].contains(t)) << t;
    }
    EXPECT_EQ(s["classes"]["leaf_disease"].size(), 4u);
}

TEST_F(ApiTest, IngestThenResult) {
    boot(stub_config(dir));
    auto res = upload(meta_json("leaf_closeup"), jpeg_frame());
    ASSERT_TRUE(res);
    ASSERT_EQ(res->status, 201) << res->body;
    const auto ack = json::parse(res->body);
    EXPECT_EQ(ack["task"], "leaf_disease");
    EXPECT_EQ(ack["status"], "queued");
    const std::string id = ack["image_id"];
    EXPECT_EQ(id.size(), 26u);

    const auto r = wait_result(id);
    EXPECT_EQ(r["image_id"], id);
    EXPECT_EQ(r["task"], "leaf_disease");
    EXPECT_EQ(r["model_version"], "stub-1");
    EXPECT_TRUE(r["payload"].is_object());
    EXPECT_EQ(r["payload"]["labels"].size(), 4u);
    EXPECT_TRUE(r.contains("created_at"));
    EXPECT_TRUE(r.contains("latency_ms"));

    const auto s = get_json("/api/v1/stats");
    EXPECT_EQ(s["tasks"]["leaf_disease"], 1);
    EXPECT_EQ(s["images"]["processed"], 1);
}

TEST_F(ApiTest, ValidationErrorsAre400WithCode) {
    boot(stub_config(dir));
    auto c = client();
    const std::vector<MultipartPart> only_image = {{"image", "f", "image/jpeg", jpeg_frame()}};
    auto res = c.Post("/api/v1/ingest", encode_multipart(only_image, kBoundary), multipart_type());
    ASSERT_TRUE(res);
    EXPECT_EQ(res->status, 400);
    EXPECT_EQ(json::parse(res->body)["error"], "MissingPart");

    res = upload(meta_json("canopy_wide", -1.0), jpeg_frame());
    EXPECT_EQ(res->status, 400);
    EXPECT_EQ(json::parse(res->body)["error"], "MalformedMeta");

    res = upload(meta_json(), png_frame(8, 8));
    EXPECT_EQ(res->status, 400);
    EXPECT_EQ(json::parse(res->body)["error"], "DimensionOutOfRange");

    res = upload(meta_json(), "GIF89a not really");
    EXPECT_EQ(res->status, 400);
    EXPECT_EQ(json::parse(res->body)["error"], "UnsupportedImageFormat");

    res = c.Post("/api/v1/ingest", "{}", "application/json");
    EXPECT_EQ(res->status, 400);
    EXPECT_EQ(json::parse(res->body)["error"], "MissingPart");

    EXPECT_EQ(get_json("/api/v1/stats")["images"]["total"], 0);
}

TEST_F(ApiTest, OversizeImageIs413) {
    boot(stub_config(dir));
    std::string big = jpeg_frame();
    big.resize(kMaxImageBytes + 1, '\0');
    auto res = upload(meta_json(), big);
    ASSERT_TRUE(res);
    EXPECT_EQ(res->status, 413);
    EXPECT_EQ(json::parse(res->body)["error"], "ImageTooLarge");

    big.resize(kMaxImageBytes * 2, '\0');
    res = upload(meta_json(), big);
    if (res) {
        EXPECT_EQ(res->status, 413);
        EXPECT_EQ(json::parse(res->body)["error"], "ImageTooLarge");
    }
    EXPECT_EQ(get_json("/api/v1/stats")["images"]["total"], 0);
}

TEST_F(ApiTest, FullQueueIs503WithRetryAfter) {
    auto cfg = stub_config(dir);
    cfg.queue_capacity = 1;
    boot(std::move(cfg));
    auto hold = service->queue().try_reserve();
    ASSERT_TRUE(hold);
    auto res = upload(meta_json(), jpeg_frame());
    ASSERT_TRUE(res);
    EXPECT_EQ(res->status, 503);
    EXPECT_EQ(res->get_header_value("Retry-After"), "1");
    EXPECT_EQ(json::parse(res->body)["error"], "QueueFull");
    EXPECT_EQ(get_json("/api/v1/stats")["images"]["total"], 0);
}

TEST_F(ApiTest, UnknownIdsAre404) {
    boot(stub_config(dir));
    EXPECT_EQ(get_json("/api/v1/results/01ARZ3NDEKTSV4RRFFQ69G5FAV", 404)["error"], "NotFound");
    EXPECT_EQ(get_json("/api/v1/images/nope/file", 404)["error"], "NotFound");
    EXPECT_EQ(get_json("/api/v1/nothing", 404)["error"], "NotFound");
}

TEST_F(ApiTest, FailedImageReportsReason) {
    boot(stub_config(dir));
    service->stop();
    // Re-open on a fresh service so the worker sees the truncated file.
    service.reset();
    {
        auto store = Store::open(dir / "orchard.db");
        JobQueue q;
        Gateway g(*store, q, dir / "data", RoutingConfig{});
        const auto rec = g.ingest(parse_ingest_parts(ingest_parts(meta_json("leaf_closeup"), jpeg_frame())));
        std::ofstream(image_file(dir / "data", rec), std::ios::binary | std::ios::trunc) << "\xff\xd8\xff";
    }
    boot(stub_config(dir));
    const auto page = get_json("/api/v1/images");
    ASSERT_EQ(page["items"].size(), 1u);
    const auto r = wait_result(page["items"][0]["image_id"]);
    EXPECT_EQ(r["status"], "failed");
    EXPECT_EQ(r["reason"].get<std::string>().rfind("CorruptImage", 0), 0u);
    EXPECT_EQ(get_json("/api/v1/stats")["failed"], 1);
}

TEST_F(ApiTest, ImagesPaginateAndFilter) {
    boot(stub_config(dir));
    std::vector<std::string> ids;
    for (int i = 0; i < 5; ++i) {
        auto res = upload(meta_json(i % 2 ? "fruit_closeup" : "canopy_wide", 12.5,
                                    static_cast<std::uint32_t>(i), i < 3 ? "a" : "b"),
                          jpeg_frame(64, 48, static_cast<std::uint64_t>(i)));
        ASSERT_EQ(res->status, 201);
        ids.push_back(json::parse(res->body)["image_id"]);
    }
    auto page = get_json("/api/v1/images?limit=2");
    ASSERT_EQ(page["items"].size(), 2u);
    EXPECT_EQ(page["items"][0]["image_id"], ids[0]);
    EXPECT_EQ(page["items"][0]["device_id"], "a");
    std::vector<std::string> seen;
    std::string path = "/api/v1/images?limit=2";
    for (;;) {
        page = get_json(path);
        for (const auto& it : page["items"]) seen.push_back(it["image_id"]);
        if (page["next"].is_null()) break;
        path = "/api/v1/images?limit=2&since=" + page["next"].get<std::string>();
    }
    EXPECT_EQ(seen, ids);
    EXPECT_EQ(get_json("/api/v1/images?device_id=b")["items"].size(), 2u);
    EXPECT_EQ(get_json("/api/v1/images?task=freshness")["items"].size(), 2u);
    EXPECT_EQ(get_json("/api/v1/images?limit=0", 400)["error"], "InvalidArgument");
    EXPECT_EQ(get_json("/api/v1/images?task=bogus", 400)["error"], "InvalidArgument");
}

TEST_F(ApiTest, FileIsServedWithItsContentType) {
    boot(stub_config(dir));
    const auto png = png_frame(40, 30, 9);
    auto res = upload(meta_json(), png);
    const std::string id = json::parse(res->body)["image_id"];
    auto file = client().Get("/api/v1/images/" + id + "/file");
    ASSERT_TRUE(file);
    EXPECT_EQ(file->status, 200);
    EXPECT_EQ(file->get_header_value("Content-Type"), "image/png");
    EXPECT_EQ(file->body, png);
}

TEST_F(ApiTest, EventStreamDeliversResults) {
    boot(stub_config(dir));
    std::string received;
    std::atomic<bool> connected{false};
    std::thread listener([&] {
        httplib::Client c("127.0.0.1", service->port());
        c.set_read_timeout(std::chrono::seconds(10));
        c.Get("/api/v1/events", [&](const httplib::Response& r) {
            EXPECT_EQ(r.get_header_value("Content-Type"), "text/event-stream");
            connected = true;
            return true;
        }, [&](const char* data, std::size_t n) {
            received.append(data, n);
            return received.find("\n\n") == std::string::npos;
        });
    });
    for (int i = 0; i < 500 && !connected; ++i) std::this_thread::sleep_for(std::chrono::milliseconds(10));
    ASSERT_TRUE(connected);
    auto res = upload(meta_json("fruit_closeup"), jpeg_frame());
    const std::string id = json::parse(res->body)["image_id"];
    listener.join();
    EXPECT_EQ(received.rfind("id: 1\nevent: result\ndata: ", 0), 0u) << received;
    const auto data = received.substr(received.find("data: ") + 6);
    const auto ev = json::parse(data.substr(0, data.find('\n')));
    EXPECT_EQ(ev["image_id"], id);
    EXPECT_EQ(ev["status"], "processed");
    EXPECT_EQ(ev["task"], "freshness");
}

TEST_F(ApiTest, EventStreamResumesFromLastEventId) {
    boot(stub_config(dir));
    for (int i = 0; i < 2; ++i) {
        auto res = upload(meta_json("leaf_closeup"), jpeg_frame(64, 48, static_cast<std::uint64_t>(i)));
        wait_result(json::parse(res->body)["image_id"]);
    }
    std::string received;
    httplib::Client c("127.0.0.1", service->port());
    c.Get("/api/v1/events", httplib::Headers{{"Last-Event-ID", "1"}},
          [&](const char* data, std::size_t n) {
              received.append(data, n);
              return received.find("\n\n") == std::string::npos;
          });
    EXPECT_EQ(received.rfind("id: 2\n", 0), 0u) << received;
}

TEST_F(ApiTest, DashboardMountServesStaticFiles) {
    std::filesystem::create_directories(dir / "dist");
    std::ofstream(dir / "dist" / "index.html") << "<html>orchard</html>";
    auto cfg = stub_config(dir);
    cfg.serve_dashboard = true;
    cfg.dashboard_dir = dir / "dist";
    boot(std::move(cfg));
    auto res = client().Get("/");
    ASSERT_TRUE(res);
    EXPECT_EQ(res->status, 200);
    EXPECT_EQ(res->body, "<html>orchard</html>");
    EXPECT_EQ(get_json("/api/v1/health")["status"], "ok");
}

TEST_F(ApiTest, ConcurrentDevicesAllAcknowledgedAndProcessed) {
    boot(stub_config(dir));
    constexpr int kDevices = 8, kEach = 6;
    std::mutex mu;
    std::set<std::string> ids;
    std::atomic<int> non_201{0};
    std::vector<std::thread> devices;
    for (int d = 0; d < kDevices; ++d) {
        devices.emplace_back([&, d] {
            for (int i = 0; i < kEach; ++i) {
                auto res = upload(meta_json("unknown", d * 2.0, static_cast<std::uint32_t>(i),
                                            "dev-" + std::to_string(d)),
                                  jpeg_frame(48, 48, static_cast<std::uint64_t>(d * 100 + i)));
                if (!res || res->status != 201) {
                    ++non_201;
                    continue;
                }
                std::lock_guard lk(mu);
                ids.insert(json::parse(res->body)["image_id"].get<std::string>());
            }
        });
    }
    for (auto& t : devices) t.join();
    EXPECT_EQ(non_201, 0);
    EXPECT_EQ(ids.size(), static_cast<std::size_t>(kDevices * kEach));
    for (const auto& id : ids) wait_result(id);
    const auto s = get_json("/api/v1/stats");
    EXPECT_EQ(s["images"]["total"], kDevices * kEach);
    EXPECT_EQ(s["images"]["processed"], kDevices * kEach);
    EXPECT_EQ(service->engine().max_in_flight(), 1);
}

TEST(HttpStatus, Mapping) {
    EXPECT_EQ(http_status(ErrorCode::MissingPart), 400);
    EXPECT_EQ(http_status(ErrorCode::ImageTooLarge), 413);
    EXPECT_EQ(http_status(ErrorCode::QueueFull), 503);
    EXPECT_EQ(http_status(ErrorCode::NotFound), 404);
    EXPECT_EQ(http_status(ErrorCode::StorageFailure), 500);
}

TEST(ServiceStartup, MissingExternalModelFailsBeforeListening) {
    TempDir dir;
    auto cfg = stub_config(dir);
    cfg.models[0].backend = BackendKind::External;
    cfg.models[0].model_path = dir / "absent.bin";
    try {
        Service s(cfg);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::BackendUnavailable);
    }
}

}  // namespace
}  // namespace orchard
