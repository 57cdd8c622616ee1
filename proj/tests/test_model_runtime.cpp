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
#include <filesystem>
#include <fstream>
#include <random>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include "orchard/backend.hpp"
#include "orchard/classification.hpp"
#include "orchard/error.hpp"
#include "orchard/splitmix.hpp"

namespace orchard {
namespace {

namespace fs = std::filesystem;

ErrorCode code_of(const std::function<void()>& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.code();
    }
    ADD_FAILURE() << "no orchard::Error thrown";
    return ErrorCode::InvalidConfig;
}

TEST(Softmax, UniformLogits) {
    Eigen::Vector4d l = Eigen::Vector4d::Zero();
    const auto p = softmax(l);
    for (int i = 0; i < 4; ++i) EXPECT_DOUBLE_EQ(p(i), 0.25);
}

TEST(Softmax, TwoClass) {
    const auto p = softmax(Eigen::Vector2d(1.0, 0.0));
    EXPECT_NEAR(p(0), 0.73106, 1e-5);
    EXPECT_NEAR(p(1), 0.26894, 1e-5);
    EXPECT_NEAR(p(0), 0.731058578630004879, 1e-15);
}

TEST(Softmax, LargeLogitsDoNotOverflow) {
    const auto p = softmax(Eigen::Vector2d(1000.0, 0.0));
    EXPECT_TRUE(p.allFinite());
    EXPECT_EQ(p(0), 1.0);
    EXPECT_LT(p(1), 1e-300);
}

TEST(Softmax, Properties) {
    std::mt19937_64 rng(8);
    std::uniform_real_distribution<double> logit(-50.0, 50.0), shift(-1e3, 1e3);
    std::uniform_int_distribution<int> len(1, 12);
    for (int trial = 0; trial < 1000; ++trial) {
        Eigen::VectorXd l(len(rng));
        for (Eigen::Index i = 0; i < l.size(); ++i) l(i) = logit(rng);
        const auto p = softmax(l);
        EXPECT_NEAR(p.sum(), 1.0, 1e-9);
        EXPECT_EQ(argmax(p), argmax(l));
        const double s = std::round(shift(rng));  // integral shifts are exact
        const auto q = softmax((l.array() + s).matrix());
        EXPECT_LT((p - q).abs().maxCoeff(), 1e-12);
    }
}

TEST(Classify, ArgmaxAndConfidence) {
    const auto slot = default_slot(TaskKind::LeafDisease);
    const std::vector<double> probs = {0.1, 0.7, 0.1, 0.1};
    const auto r = classify(probs, slot);
    EXPECT_EQ(r.label, "black_rot");
    EXPECT_EQ(r.confidence, 0.7);
    EXPECT_EQ(r.task, TaskKind::LeafDisease);
}

TEST(Classify, TieBreaksToLowestIndex) {
    const auto slot = default_slot(TaskKind::Freshness);
    const std::vector<double> probs = {0.5, 0.5};
    EXPECT_EQ(classify(probs, slot).label, "fresh");
}

TEST(Classify, OneHot) {
    const auto slot = default_slot(TaskKind::LeafDisease);
    const std::vector<double> probs = {0, 0, 0, 1};
    const auto r = classify(probs, slot);
    EXPECT_EQ(r.label, "healthy");
    EXPECT_EQ(r.confidence, 1.0);
}

TEST(Slots, LabelMapsAndSides) {
    EXPECT_EQ(default_labels(TaskKind::LeafDisease),
              (std::vector<std::string>{"apple_scab", "black_rot", "cedar_apple_rust", "healthy"}));
    EXPECT_EQ(default_labels(TaskKind::Freshness), (std::vector<std::string>{"fresh", "rotten"}));
    EXPECT_EQ(default_labels(TaskKind::AppleDetection), (std::vector<std::string>{"apple"}));
    EXPECT_EQ(default_input_side(TaskKind::LeafDisease), 224);
    EXPECT_EQ(default_input_side(TaskKind::Freshness), 256);
    EXPECT_EQ(default_input_side(TaskKind::AppleDetection), 640);
    for (TaskKind t : kAllTasks) EXPECT_NO_THROW(default_slot(t).validate());
    auto bad = default_slot(TaskKind::Freshness);
    bad.labels = {"rotten", "fresh"};
    EXPECT_EQ(code_of([&] { bad.validate(); }), ErrorCode::InvalidConfig);
}

TEST(StubBackend, SeedIsFnvOfBytesThenTaskName) {
    const std::vector<std::uint8_t> bytes = {1, 2, 3, 250};
    std::vector<std::uint8_t> concat = bytes;
    for (char c : std::string("freshness")) concat.push_back(static_cast<std::uint8_t>(c));
    // Straight FNV-1a over the concatenation, computed in the test.
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (auto b : concat) {
        h ^= b;
        h *= 0x100000001b3ULL;
    }
    EXPECT_EQ(StubBackend::seed_for(bytes, TaskKind::Freshness), h);
}

TEST(StubBackend, ClassifierLogitsDeterministic) {
    const auto slot = default_slot(TaskKind::LeafDisease);
    auto backend = make_backend(slot);
    InputTensor input(224, 224);
    input.values.setZero();
    const std::vector<std::uint8_t> bytes = {9, 8, 7, 6, 5};
    const auto a = std::get<Logits>(run_backend(slot, *backend, input, bytes));
    const auto b = std::get<Logits>(run_backend(slot, *backend, input, bytes));
    ASSERT_EQ(a.size(), 4);
    EXPECT_EQ(a, b);
    EXPECT_LE(a.maxCoeff(), 3.0);
    EXPECT_GE(a.minCoeff(), -3.0);
    // Reproduce the draws independently.
    SplitMix64 rng(StubBackend::seed_for(bytes, TaskKind::LeafDisease));
    for (int i = 0; i < 4; ++i) EXPECT_EQ(a(i), -3.0 + 6.0 * rng.next_unit());
    const std::vector<std::uint8_t> other = {9, 8, 7, 6, 4};
    EXPECT_NE(std::get<Logits>(run_backend(slot, *backend, input, other)), a);
}

TEST(StubBackend, DetectorCandidates) {
    const auto slot = default_slot(TaskKind::AppleDetection);
    auto backend = make_backend(slot);
    InputTensor input(640, 640);
    input.values.setZero();
    int seen[6] = {0};
    for (std::uint8_t v = 0; v < 64; ++v) {
        const std::vector<std::uint8_t> bytes = {v, static_cast<std::uint8_t>(v / 3)};
        const auto raw = std::get<RawDetections>(run_backend(slot, *backend, input, bytes));
        const auto k = StubBackend::seed_for(bytes, TaskKind::AppleDetection) % 6;
        ASSERT_EQ(raw.size(), k);
        ++seen[k];
        for (const auto& c : raw) {
            EXPECT_GE(c.cx, 64.0);
            EXPECT_LE(c.cx, 576.0);
            EXPECT_GE(c.w, 32.0);
            EXPECT_LE(c.h, 160.0);
            EXPECT_GE(c.score, 0.05);
            EXPECT_LE(c.score, 0.95);
        }
    }
    for (int k = 0; k < 6; ++k) EXPECT_GT(seen[k], 0) << k;
}

TEST(RunBackend, ShapeMismatch) {
    const auto slot = default_slot(TaskKind::AppleDetection);
    auto backend = make_backend(slot);
    InputTensor input(256, 256);
    input.values.setZero();
    EXPECT_EQ(code_of([&] { run_backend(slot, *backend, input, {}); }), ErrorCode::ShapeMismatch);
}

class LinearHeadTest : public ::testing::Test {
protected:
    void SetUp() override {
        dir_ = fs::temp_directory_path() /
               ("orchard_linear_" + std::to_string(::testing::UnitTest::GetInstance()->random_seed()) +
                "_" + ::testing::UnitTest::GetInstance()->current_test_info()->name());
        fs::create_directories(dir_);
    }
    void TearDown() override { fs::remove_all(dir_); }

    fs::path write(const std::string& name, const nlohmann::json& j) {
        auto p = dir_ / name;
        std::ofstream(p) << j.dump();
        return p;
    }

    fs::path dir_;
};

TEST_F(LinearHeadTest, MissingFileFailsFast) {
    auto slot = default_slot(TaskKind::LeafDisease);
    slot.backend = BackendKind::External;
    slot.model_path = dir_ / "absent.json";
    EXPECT_EQ(code_of([&] { make_backend(slot); }), ErrorCode::BackendUnavailable);
}

TEST_F(LinearHeadTest, CorruptOrMismatchedArtifact) {
    auto slot = default_slot(TaskKind::Freshness);
    slot.backend = BackendKind::External;
    slot.model_path = dir_ / "bad.json";
    std::ofstream(slot.model_path) << "{ not json";
    EXPECT_EQ(code_of([&] { make_backend(slot); }), ErrorCode::BackendUnavailable);
    slot.model_path = write("wrong_task.json", {{"format", "orchard-linear-v1"},
                                                {"task", "leaf_disease"},
                                                {"grid", 1},
                                                {"weights", {{1, 2, 3}, {4, 5, 6}}},
                                                {"bias", {0, 0}}});
    EXPECT_EQ(code_of([&] { make_backend(slot); }), ErrorCode::BackendUnavailable);
    slot.model_path = write("wrong_shape.json", {{"format", "orchard-linear-v1"},
                                                 {"task", "freshness"},
                                                 {"grid", 2},
                                                 {"weights", {{1, 2, 3}, {4, 5, 6}}},
                                                 {"bias", {0, 0}}});
    EXPECT_EQ(code_of([&] { make_backend(slot); }), ErrorCode::BackendUnavailable);
}

TEST_F(LinearHeadTest, ClassifierIsLinearInPooledFeatures) {
    auto slot = default_slot(TaskKind::Freshness);
    slot.backend = BackendKind::External;
    // Logit 0 follows the red channel, logit 1 the blue channel.
    slot.model_path = write("fresh.json", {{"format", "orchard-linear-v1"},
                                           {"task", "freshness"},
                                           {"grid", 1},
                                           {"weights", {{2, 0, 0}, {0, 0, 2}}},
                                           {"bias", {0.5, -0.5}}});
    auto backend = make_backend(slot);
    InputTensor input(256, 256);
    input.values.row(0).setConstant(0.25f);
    input.values.row(1).setConstant(0.0f);
    input.values.row(2).setConstant(1.0f);
    const auto logits = std::get<Logits>(run_backend(slot, *backend, input, {}));
    EXPECT_NEAR(logits(0), 1.0, 1e-9);
    EXPECT_NEAR(logits(1), 1.5, 1e-9);
    EXPECT_EQ(backend->version().rfind("linear-v1:", 0), 0u);
}

TEST_F(LinearHeadTest, DetectorDecodesOneCandidatePerCell) {
    auto slot = default_slot(TaskKind::AppleDetection);
    slot.backend = BackendKind::External;
    slot.model_path = write("det.json", {{"format", "orchard-linear-v1"},
                                         {"task", "apple_detection"},
                                         {"grid", 4},
                                         {"weights", {{0, 0, 0}, {0, 0, 0}, {0, 0, 0}, {0, 0, 0}, {0, 0, 0}}},
                                         {"bias", {0, 0, 0, 0, 0}}});
    auto backend = make_backend(slot);
    InputTensor input(640, 640);
    input.values.setZero();
    const auto raw = std::get<RawDetections>(run_backend(slot, *backend, input, {}));
    ASSERT_EQ(raw.size(), 16u);
    EXPECT_DOUBLE_EQ(raw[0].cx, 80.0);
    EXPECT_DOUBLE_EQ(raw[5].cy, 240.0);
    EXPECT_DOUBLE_EQ(raw[0].w, 160.0);
    EXPECT_DOUBLE_EQ(raw[0].score, 0.5);
}

}  // namespace
}  // namespace orchard
