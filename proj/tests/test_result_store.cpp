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
#include <thread>

#include <gtest/gtest.h>

#include "orchard/error.hpp"
#include "orchard/result_store.hpp"
#include "orchard/ulid.hpp"
#include "service_fixtures.hpp"

namespace orchard {
namespace {

using testing_support::TempDir;

class StoreTest : public ::testing::Test {
protected:
    TempDir dir;
    UlidGenerator ids{99};

    ImageRecord record(TaskKind task = TaskKind::LeafDisease, std::string device = "cam-1") {
        ImageRecord r;
        r.image_id = ids.next();
        r.meta.device_id = std::move(device);
        r.meta.captured_at = TimestampMs(std::chrono::milliseconds(1714557600123LL));
        r.meta.altitude_m = 3.5;
        r.meta.frame_kind = FrameKind::LeafCloseup;
        r.meta.sequence_no = 17;
        r.width_px = 640;
        r.height_px = 480;
        r.byte_len = 1234;
        r.status = ImageStatus::Queued;
        r.task = task;
        r.stored_path = r.image_id + ".jpg";
        r.content_type = "image/jpeg";
        return r;
    }

    ResultRow result_for(const ImageRecord& rec, const std::string& label = "healthy") {
        ResultRow row;
        row.result_id = ids.next();
        row.image_id = rec.image_id;
        row.task = rec.task;
        row.payload = rec.task == TaskKind::AppleDetection
                          ? R"({"detections":[{"score":0.9},{"score":0.8}],"task":"apple_detection"})"
                          : R"({"label":")" + label + R"(","task":")" +
                                std::string(to_string(rec.task)) + R"("})";
        row.created_at = TimestampMs(std::chrono::milliseconds(1714557601000LL));
        row.model_version = "stub-1";
        row.latency_ms = 1.5;
        return row;
    }
};

ErrorCode code_of(const std::function<void()>& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.code();
    }
    ADD_FAILURE() << "no orchard::Error thrown";
    return ErrorCode::InvalidConfig;
}

TEST_F(StoreTest, FreshStoreIsEmptyAtSchemaV1) {
    auto store = Store::open(dir / "o.db");
    EXPECT_EQ(store->schema_version(), 1);
    const auto s = store->stats();
    EXPECT_EQ(s.images, 0);
    EXPECT_EQ(s.results, 0);
    EXPECT_EQ(s.failed, 0);
    EXPECT_EQ(s.queue_depth(), 0);
    for (const auto& [task, n] : s.results_per_task) EXPECT_EQ(n, 0);
    for (const auto& [task, labels] : s.per_class) {
        for (const auto& [label, n] : labels) EXPECT_EQ(n, 0) << label;
    }
}

TEST_F(StoreTest, ReopenKeepsContentsWithoutRemigrating) {
    const auto rec = record();
    {
        auto store = Store::open(dir / "o.db");
        store->put_image(rec);
    }
    auto store = Store::open(dir / "o.db");
    EXPECT_EQ(store->schema_version(), 1);
    const auto back = store->get_image(rec.image_id);
    ASSERT_TRUE(back);
    EXPECT_EQ(*back, rec);
}

TEST_F(StoreTest, SecondOpenerIsLocked) {
    auto first = Store::open(dir / "o.db");
    EXPECT_EQ(code_of([&] { Store::open(dir / "o.db"); }), ErrorCode::Locked);
    first.reset();
    EXPECT_NO_THROW(Store::open(dir / "o.db"));
}

TEST_F(StoreTest, GarbageFileIsCorrupt) {
    {
        std::ofstream out(dir / "junk.db", std::ios::binary);
        out << std::string(8192, 'x');
    }
    EXPECT_EQ(code_of([&] { Store::open(dir / "junk.db"); }), ErrorCode::Corrupt);
}

TEST_F(StoreTest, ReadYourWrites) {
    auto store = Store::open(dir / "o.db");
    const auto rec = record();
    store->put_image(rec);
    EXPECT_EQ(store->get_image(rec.image_id), rec);
    const auto row = result_for(rec);
    store->put_result(row);
    const auto got = store->get_result(rec.image_id);
    ASSERT_TRUE(got);
    EXPECT_EQ(got->payload, row.payload);
    EXPECT_EQ(got->model_version, "stub-1");
    EXPECT_EQ(got->created_at, row.created_at);
    EXPECT_EQ(store->get_image(rec.image_id)->status, ImageStatus::Processed);
}

TEST_F(StoreTest, DuplicateResultRejected) {
    auto store = Store::open(dir / "o.db");
    const auto rec = record();
    store->put_image(rec);
    store->put_result(result_for(rec));
    EXPECT_EQ(code_of([&] { store->put_result(result_for(rec)); }), ErrorCode::DuplicateResult);
}

TEST_F(StoreTest, ResultForUnknownImageIsForeignKeyViolation) {
    auto store = Store::open(dir / "o.db");
    EXPECT_EQ(code_of([&] { store->put_result(result_for(record())); }),
              ErrorCode::ForeignKeyViolation);
}

TEST_F(StoreTest, SetStatusUnknownIdIsNotFound) {
    auto store = Store::open(dir / "o.db");
    EXPECT_EQ(code_of([&] { store->set_status("nope", ImageStatus::Failed, "x"); }), ErrorCode::NotFound);
}

TEST_F(StoreTest, FailedStatusKeepsReason) {
    auto store = Store::open(dir / "o.db");
    const auto rec = record();
    store->put_image(rec);
    store->set_status(rec.image_id, ImageStatus::Failed, "CorruptImage: truncated");
    const auto back = store->get_image(rec.image_id);
    EXPECT_EQ(back->status, ImageStatus::Failed);
    EXPECT_EQ(back->failure_reason, "CorruptImage: truncated");
    EXPECT_EQ(store->stats().failed, 1);
}

TEST_F(StoreTest, PerClassCounts) {
    auto store = Store::open(dir / "o.db");
    for (const char* label : {"healthy", "black_rot", "healthy", "black_rot", "healthy"}) {
        const auto rec = record();
        store->put_image(rec);
        store->put_result(result_for(rec, label));
    }
    const auto det = record(TaskKind::AppleDetection);
    store->put_image(det);
    store->put_result(result_for(det));

    const auto s = store->stats();
    EXPECT_EQ(s.per_class.at(TaskKind::LeafDisease).at("healthy"), 3);
    EXPECT_EQ(s.per_class.at(TaskKind::LeafDisease).at("black_rot"), 2);
    EXPECT_EQ(s.per_class.at(TaskKind::LeafDisease).at("apple_scab"), 0);
    EXPECT_EQ(s.per_class.at(TaskKind::AppleDetection).at("apple"), 2);
    EXPECT_EQ(s.results_per_task.at(TaskKind::LeafDisease), 5);
    EXPECT_EQ(s.results_per_task.at(TaskKind::AppleDetection), 1);
    EXPECT_EQ(s.processed, 6);

    const auto j = stats_to_json(s);
    EXPECT_EQ(j["classes"]["leaf_disease"]["healthy"], 3);
    EXPECT_EQ(j["tasks"]["freshness"], 0);
    EXPECT_EQ(j["queue_depth"], 0);
}

TEST_F(StoreTest, PaginationWithCursor) {
    auto store = Store::open(dir / "o.db");
    std::vector<std::string> all;
    for (int i = 0; i < 5; ++i) {
        const auto rec = record();
        store->put_image(rec);
        all.push_back(rec.image_id);
    }
    ImageFilter f;
    f.limit = 2;
    auto page = store->list_images(f);
    ASSERT_EQ(page.items.size(), 2u);
    ASSERT_TRUE(page.next);
    EXPECT_EQ(page.items[0].image_id, all[0]);
    EXPECT_EQ(*page.next, all[1]);

    std::vector<std::string> seen;
    f.since.reset();
    for (;;) {
        page = store->list_images(f);
        for (const auto& r : page.items) seen.push_back(r.image_id);
        if (!page.next) break;
        f.since = page.next;
    }
    EXPECT_EQ(seen, all);
}

TEST_F(StoreTest, FiltersCombine) {
    auto store = Store::open(dir / "o.db");
    store->put_image(record(TaskKind::LeafDisease, "a"));
    store->put_image(record(TaskKind::AppleDetection, "a"));
    store->put_image(record(TaskKind::AppleDetection, "b"));
    ImageFilter f;
    f.device_id = "a";
    EXPECT_EQ(store->list_images(f).items.size(), 2u);
    f.task = TaskKind::AppleDetection;
    EXPECT_EQ(store->list_images(f).items.size(), 1u);
    f.status = ImageStatus::Failed;
    EXPECT_TRUE(store->list_images(f).items.empty());
}

TEST_F(StoreTest, QueuedIdsInArrivalOrder) {
    auto store = Store::open(dir / "o.db");
    std::vector<std::string> ids;
    for (int i = 0; i < 4; ++i) {
        const auto rec = record();
        store->put_image(rec);
        ids.push_back(rec.image_id);
    }
    store->set_status(ids[1], ImageStatus::Failed, "x");
    EXPECT_EQ(store->queued_ids(), (std::vector<std::string>{ids[0], ids[2], ids[3]}));
}

TEST_F(StoreTest, ConcurrentWritersAndReaders) {
    auto store = Store::open(dir / "o.db");
    std::vector<std::thread> threads;
    std::atomic<bool> bad_snapshot{false};
    for (int t = 0; t < 4; ++t) {
        threads.emplace_back([&, t] {
            UlidGenerator local(static_cast<std::uint64_t>(t) + 1);
            for (int i = 0; i < 25; ++i) {
                auto rec = record();
                rec.image_id = local.next();
                store->put_image(rec);
                auto row = result_for(rec);
                row.result_id = local.next();
                store->put_result(row);
                const auto s = store->stats();
                if (s.results != s.processed) bad_snapshot = true;
            }
        });
    }
    for (auto& th : threads) th.join();
    const auto s = store->stats();
    EXPECT_EQ(s.images, 100);
    EXPECT_EQ(s.results, 100);
    EXPECT_FALSE(bad_snapshot);
}

}  // namespace
}  // namespace orchard
