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

// Config loading, the offline evaluator and the device simulator.

#include <fstream>
#include <sstream>

#include <gtest/gtest.h>

#include "orchard/api_service.hpp"
#include "orchard/error.hpp"
#include "orchard/evaluate.hpp"
#include "orchard/result_store.hpp"
#include "orchard/simulate.hpp"
#include "service_fixtures.hpp"

namespace orchard {
namespace {

using namespace testing_support;
using nlohmann::json;

ErrorCode code_of(const std::function<void()>& fn, std::string* message = nullptr) {
    try {
        fn();
    } catch (const Error& e) {
        if (message) *message = e.what();
        return e.code();
    }
    ADD_FAILURE() << "no orchard::Error thrown";
    return ErrorCode::InvalidConfig;
}

// ---------------------------------------------------------------- config

TEST(ConfigTest, DefaultsFillEveryTaskWithStub) {
    TempDir dir;
    const auto cfg = config_from_json(json::object(), dir.path());
    ASSERT_EQ(cfg.models.size(), 3u);
    for (const auto& m : cfg.models) EXPECT_EQ(m.backend, BackendKind::Stub);
    EXPECT_EQ(cfg.queue_capacity, kDefaultQueueCapacity);
    EXPECT_EQ(cfg.port, 8080);
}

TEST(ConfigTest, FieldsAndRelativePaths) {
    TempDir dir;
    const auto cfg = config_from_json({{"bind", "0.0.0.0:9000"},
                                       {"db_path", "x.db"},
                                       {"altitude_threshold", 5.0},
                                       {"default_task", "freshness"},
                                       {"queue_capacity", 4}},
                                      dir.path());
    EXPECT_EQ(cfg.host, "0.0.0.0");
    EXPECT_EQ(cfg.port, 9000);
    EXPECT_EQ(cfg.db_path, dir / "x.db");
    EXPECT_EQ(cfg.routing.altitude_threshold_m, 5.0);
    EXPECT_EQ(cfg.routing.default_task, TaskKind::Freshness);
    EXPECT_EQ(cfg.queue_capacity, 4u);
}

TEST(ConfigTest, InvalidValuesRejected) {
    TempDir dir;
    for (const auto& bad : {json{{"bind", "nohost"}}, json{{"altitude_threshold", -1}},
                            json{{"default_task", "pears"}}, json{{"queue_capacity", 0}},
                            json{{"models", {{{"task", "freshness"}, {"backend", "external"}}}}},
                            json{{"models", {{{"task", "freshness"}, {"backend", "gpu"}}}}}}) {
        EXPECT_EQ(code_of([&] { config_from_json(bad, dir.path()); }), ErrorCode::InvalidConfig) << bad;
    }
}

TEST(ConfigTest, LoadFileAndForceStub) {
    TempDir dir;
    std::ofstream(dir / "c.json") << R"({"models":[{"task":"freshness","backend":"external","model_path":"m.bin"}]})";
    auto cfg = load_config(dir / "c.json");
    const auto it = std::find_if(cfg.models.begin(), cfg.models.end(),
                                 [](const ModelSlot& m) { return m.task == TaskKind::Freshness; });
    EXPECT_EQ(it->backend, BackendKind::External);
    EXPECT_EQ(it->model_path, dir / "m.bin");
    cfg.force_stub();
    for (const auto& m : cfg.models) EXPECT_EQ(m.backend, BackendKind::Stub);
}

// -------------------------------------------------------------- evaluate

std::string classification_lines(const std::vector<int>& labels, const char* key) {
    std::string out;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        out += json{{"id", "s" + std::to_string(i)}, {key, labels[i]}}.dump() + "\n";
    }
    return out;
}

TEST(EvaluateTest, PerfectClassificationScoresOne) {
    const std::vector<int> y = {0, 1, 2, 3, 0, 1, 2, 3, 1, 1};
    std::istringstream gt(classification_lines(y, "true")), pred(classification_lines(y, "pred"));
    const auto r = evaluate_classification(gt, pred, TaskKind::LeafDisease);
    EXPECT_EQ(r["samples"], 10);
    EXPECT_DOUBLE_EQ(r["Accuracy"].get<double>(), 1.0);
    EXPECT_DOUBLE_EQ(r["F1-score"].get<double>(), 1.0);
    EXPECT_EQ(r["confusion_matrix"][1][1], 4);
}

TEST(EvaluateTest, PredictionsJoinById) {
    std::istringstream gt(R"({"id":"a","true":0}
{"id":"b","true":1}
)");
    std::istringstream pred(R"({"id":"b","pred":1}
{"id":"a","pred":0}
)");
    const auto r = evaluate_classification(gt, pred, TaskKind::Freshness);
    EXPECT_DOUBLE_EQ(r["Accuracy"].get<double>(), 1.0);
}

TEST(EvaluateTest, ParseErrorNamesTheLine) {
    std::vector<int> y(20, 0);
    auto text = classification_lines(y, "true");
    std::size_t pos = 0;
    for (int i = 0; i < 16; ++i) pos = text.find('\n', pos) + 1;
    text.insert(pos, "{broken\n");
    std::istringstream gt(text), pred(classification_lines(y, "pred"));
    std::string message;
    EXPECT_EQ(code_of([&] { evaluate_classification(gt, pred, TaskKind::Freshness); }, &message),
              ErrorCode::ParseError);
    EXPECT_NE(message.find("line 17"), std::string::npos) << message;
}

TEST(EvaluateTest, DetectionRecordsUnderClassificationTask) {
    std::istringstream gt(R"({"image":"a","boxes":[[0,0,10,10]]})" "\n");
    std::istringstream pred(R"({"image":"a","dets":[[0,0,10,10,0.9]]})" "\n");
    EXPECT_EQ(code_of([&] { evaluate_classification(gt, pred, TaskKind::LeafDisease); }),
              ErrorCode::TaskMismatch);
}

TEST(EvaluateTest, CountMismatch) {
    std::istringstream gt(classification_lines({0, 1}, "true"));
    std::istringstream pred(classification_lines({0, 1, 1}, "pred"));
    EXPECT_EQ(code_of([&] { evaluate_classification(gt, pred, TaskKind::Freshness); }),
              ErrorCode::LengthMismatch);
}

TEST(EvaluateTest, PerfectDetection) {
    std::istringstream gt(R"({"image":"a","boxes":[[0,0,10,10],[20,20,40,40]]}
{"image":"b","boxes":[[5,5,15,25]]}
)");
    std::istringstream pred(R"({"image":"a","dets":[[0,0,10,10,0.9],[20,20,40,40,0.8]]}
{"image":"b","dets":[[5,5,15,25,0.7]]}
)");
    const auto r = evaluate_detection(gt, pred);
    EXPECT_DOUBLE_EQ(r["Precision"].get<double>(), 1.0);
    EXPECT_DOUBLE_EQ(r["Recall"].get<double>(), 1.0);
    EXPECT_NEAR(r["mAP50"].get<double>(), 1.0, 1e-12);
    EXPECT_NEAR(r["mAP50-95"].get<double>(), 1.0, 1e-12);
    EXPECT_EQ(r["ground_truth"], 3);
}

TEST(EvaluateTest, ClassificationRecordsUnderDetectionTask) {
    std::istringstream gt(classification_lines({0}, "true")), pred(classification_lines({0}, "pred"));
    EXPECT_EQ(code_of([&] { evaluate_detection(gt, pred); }), ErrorCode::TaskMismatch);
}

// -------------------------------------------------------------- simulate

TEST(SimulateTest, MetaOverridesKeepStringsAndParseNumbers) {
    json o = json::object();
    apply_meta_override(o, "device_id=42");
    apply_meta_override(o, "altitude_m=3.5");
    apply_meta_override(o, "frame_kind=leaf_closeup");
    EXPECT_EQ(o["device_id"], "42");
    EXPECT_EQ(o["altitude_m"], 3.5);
    EXPECT_EQ(o["frame_kind"], "leaf_closeup");
    EXPECT_EQ(code_of([&] { apply_meta_override(o, "novalue"); }), ErrorCode::InvalidArgument);
}

TEST(SimulateTest, SidecarWinsOverTemplate) {
    TempDir dir;
    std::ofstream(dir / "a.jpg") << jpeg_frame();
    std::ofstream(dir / "a.json") << R"({"frame_kind":"fruit_closeup"})";
    const auto m = frame_meta(dir / "a.jpg", 4, {{"frame_kind", "canopy_wide"}, {"device_id", "cam"}});
    EXPECT_EQ(m["frame_kind"], "fruit_closeup");
    EXPECT_EQ(m["device_id"], "cam");
    EXPECT_EQ(m["sequence_no"], 4);
}

TEST(SimulateTest, ListsOnlyImagesSorted) {
    TempDir dir;
    for (const char* n : {"b.png", "a.jpg", "c.jpeg", "a.json", "notes.txt"}) std::ofstream(dir / n) << "x";
    const auto frames = list_frames(dir.path());
    ASSERT_EQ(frames.size(), 3u);
    EXPECT_EQ(frames[0].filename(), "a.jpg");
    EXPECT_EQ(frames[2].filename(), "c.jpeg");
}

TEST(SimulateTest, UploadsDirectoryAndRoutesBySidecar) {
    TempDir dir;
    std::filesystem::create_directories(dir / "frames");
    std::ofstream(dir / "frames" / "f0.jpg") << jpeg_frame(64, 48, 1);
    std::ofstream(dir / "frames" / "f1.png") << png_frame(64, 48, 2);
    std::ofstream(dir / "frames" / "f1.json") << R"({"frame_kind":"leaf_closeup"})";
    std::ofstream(dir / "frames" / "f2.jpg") << jpeg_frame(64, 48, 3);

    Service service(stub_config(dir));
    service.start();
    SimulateOptions opts;
    opts.dir = dir / "frames";
    opts.rate = 0;
    opts.url = "http://127.0.0.1:" + std::to_string(service.port());
    opts.meta_overrides = {{"altitude_m", 20.0}};
    std::ostringstream log;
    opts.log = &log;
    const auto report = simulate_device(opts);
    service.stop();

    EXPECT_EQ(report.exit_code(), 0) << log.str();
    EXPECT_EQ(report.acknowledged, 3u);
    ASSERT_EQ(report.uploads.size(), 3u);
    EXPECT_EQ(report.uploads[0].task, "apple_detection");
    EXPECT_EQ(report.uploads[1].task, "leaf_disease");
    EXPECT_NE(log.str().find("uploaded 3/3, failed 0"), std::string::npos) << log.str();
}

TEST(SimulateTest, RejectedFramesMakeExitCodeNonZero) {
    TempDir dir;
    std::filesystem::create_directories(dir / "frames");
    std::ofstream(dir / "frames" / "ok.jpg") << jpeg_frame();
    std::ofstream(dir / "frames" / "bad.jpg") << "not an image";
    Service service(stub_config(dir));
    service.start();
    SimulateOptions opts;
    opts.dir = dir / "frames";
    opts.rate = 0;
    opts.url = "http://127.0.0.1:" + std::to_string(service.port());
    const auto report = simulate_device(opts);
    service.stop();
    EXPECT_EQ(report.acknowledged, 1u);
    EXPECT_EQ(report.failed, 1u);
    EXPECT_EQ(report.exit_code(), 1);
    EXPECT_EQ(report.uploads[0].status, 400);
    EXPECT_EQ(report.uploads[0].attempts, 1);
}

TEST(SimulateTest, UnreachableServerRetriesThenFails) {
    TempDir dir;
    std::filesystem::create_directories(dir / "frames");
    std::ofstream(dir / "frames" / "ok.jpg") << jpeg_frame();
    SimulateOptions opts;
    opts.dir = dir / "frames";
    opts.url = "http://127.0.0.1:1";
    opts.retries = 2;
    opts.backoff = std::chrono::milliseconds(1);
    const auto report = simulate_device(opts);
    EXPECT_EQ(report.exit_code(), 1);
    EXPECT_EQ(report.uploads[0].status, 0);
    EXPECT_EQ(report.uploads[0].attempts, 3);
}

}  // namespace
}  // namespace orchard
