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
#include "orchard/backend.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "orchard/error.hpp"
#include "orchard/splitmix.hpp"

namespace orchard {

std::string_view to_string(BackendKind kind) noexcept {
    return kind == BackendKind::Stub ? "stub" : "external";
}

std::vector<std::string> default_labels(TaskKind task) {
    switch (task) {
        case TaskKind::LeafDisease:
            return {"apple_scab", "black_rot", "cedar_apple_rust", "healthy"};
        case TaskKind::Freshness: return {"fresh", "rotten"};
        case TaskKind::AppleDetection: return {"apple"};
    }
    return {};
}

int default_input_side(TaskKind task) {
    switch (task) {
        case TaskKind::LeafDisease: return kLeafDiseaseSide;
        case TaskKind::Freshness: return kFreshnessSide;
        case TaskKind::AppleDetection: return kDetectorSide;
    }
    return kDetectorSide;
}

NormSpec default_norm(TaskKind task) {
    return task == TaskKind::AppleDetection ? NormSpec::identity() : NormSpec::imagenet();
}

ModelSlot default_slot(TaskKind task) {
    ModelSlot slot;
    slot.task = task;
    slot.labels = default_labels(task);
    slot.input_side = default_input_side(task);
    slot.norm = default_norm(task);
    return slot;
}

void ModelSlot::validate() const {
    const std::string name(to_string(task));
    if (labels != default_labels(task)) {
        throw Error(ErrorCode::InvalidConfig, name + ": label map does not match the task");
    }
    if (input_side != default_input_side(task)) {
        throw Error(ErrorCode::InvalidConfig,
                    name + ": input_side must be " + std::to_string(default_input_side(task)));
    }
    for (int c = 0; c < 3; ++c) {
        if (!std::isfinite(norm.mean[c]) || !std::isfinite(norm.std[c]) || norm.std[c] <= 0.0) {
            throw Error(ErrorCode::InvalidConfig, name + ": norm std must be positive and finite");
        }
    }
    if (task == TaskKind::AppleDetection) {
        if (!(decode.iou_thresh > 0.0 && decode.iou_thresh < 1.0)) {
            throw Error(ErrorCode::InvalidConfig, name + ": iou_thresh must be in (0, 1)");
        }
        if (!(decode.conf_thresh >= 0.0 && decode.conf_thresh <= 1.0)) {
            throw Error(ErrorCode::InvalidConfig, name + ": conf_thresh must be in [0, 1]");
        }
    }
}

// ---------------------------------------------------------------------------

StubBackend::StubBackend(TaskKind task, std::size_t num_labels)
    : task_(task), num_labels_(num_labels) {}

std::uint64_t StubBackend::seed_for(std::span<const std::uint8_t> source_bytes, TaskKind task) {
    return fnv1a64(to_string(task), fnv1a64(source_bytes));
}

BackendOutput StubBackend::run(const InputTensor& /*input*/,
                               std::span<const std::uint8_t> source_bytes) {
    const std::uint64_t seed = seed_for(source_bytes, task_);
    SplitMix64 rng(seed);
    if (task_ != TaskKind::AppleDetection) {
        Logits logits(static_cast<Eigen::Index>(num_labels_));
        for (Eigen::Index i = 0; i < logits.size(); ++i) logits(i) = rng.uniform(-3.0, 3.0);
        return logits;
    }
    RawDetections raw;
    const std::uint64_t k = seed % 6;
    for (std::uint64_t i = 0; i < k; ++i) {
        RawCandidate c;
        c.cx = rng.uniform(64.0, 576.0);
        c.cy = rng.uniform(64.0, 576.0);
        c.w = rng.uniform(32.0, 160.0);
        c.h = rng.uniform(32.0, 160.0);
        c.score = rng.uniform(0.05, 0.95);
        raw.push_back(c);
    }
    return raw;
}

// ---------------------------------------------------------------------------

namespace {

[[noreturn]] void unavailable(const ModelSlot& slot, const std::string& why) {
    throw Error(ErrorCode::BackendUnavailable,
                std::string(to_string(slot.task)) + ": " + slot.model_path.string() + ": " + why);
}

Eigen::MatrixXd read_matrix(const nlohmann::json& j, const ModelSlot& slot, const char* field) {
    if (!j.is_array() || j.empty() || !j[0].is_array()) unavailable(slot, std::string(field) + " must be a 2-D array");
    const auto rows = static_cast<Eigen::Index>(j.size());
    const auto cols = static_cast<Eigen::Index>(j[0].size());
    Eigen::MatrixXd m(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r) {
        const auto& row = j[static_cast<std::size_t>(r)];
        if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != cols) {
            unavailable(slot, std::string(field) + " is ragged");
        }
        for (Eigen::Index c = 0; c < cols; ++c) {
            const auto& v = row[static_cast<std::size_t>(c)];
            if (!v.is_number()) unavailable(slot, std::string(field) + " has a non-numeric entry");
            m(r, c) = v.get<double>();
        }
    }
    if (!m.allFinite()) unavailable(slot, std::string(field) + " has non-finite entries");
    return m;
}

Eigen::VectorXd read_vector(const nlohmann::json& j, const ModelSlot& slot, const char* field) {
    if (!j.is_array()) unavailable(slot, std::string(field) + " must be an array");
    Eigen::VectorXd v(static_cast<Eigen::Index>(j.size()));
    for (std::size_t i = 0; i < j.size(); ++i) {
        if (!j[i].is_number()) unavailable(slot, std::string(field) + " has a non-numeric entry");
        v(static_cast<Eigen::Index>(i)) = j[i].get<double>();
    }
    if (!v.allFinite()) unavailable(slot, std::string(field) + " has non-finite entries");
    return v;
}

double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

}  // namespace

LinearHeadBackend::LinearHeadBackend(const ModelSlot& slot) : task_(slot.task) {
    std::ifstream in(slot.model_path, std::ios::binary);
    if (!in) unavailable(slot, "model file missing or unreadable");
    std::stringstream buf;
    buf << in.rdbuf();
    const std::string text = buf.str();
    auto j = nlohmann::json::parse(text, nullptr, /*allow_exceptions=*/false);
    if (j.is_discarded() || !j.is_object()) unavailable(slot, "not a JSON model artifact");
    if (j.value("format", "") != "orchard-linear-v1") unavailable(slot, "unknown artifact format");
    if (j.value("task", "") != to_string(slot.task)) unavailable(slot, "artifact built for another task");
    if (!j.contains("grid") || !j["grid"].is_number_integer()) unavailable(slot, "missing grid");
    grid_ = j["grid"].get<int>();
    if (grid_ < 1 || grid_ > slot.input_side) unavailable(slot, "grid out of range");
    if (!j.contains("weights") || !j.contains("bias")) unavailable(slot, "missing weights or bias");
    weights_ = read_matrix(j["weights"], slot, "weights");
    bias_ = read_vector(j["bias"], slot, "bias");

    const Eigen::Index expect_rows =
        task_ == TaskKind::AppleDetection ? 5 : static_cast<Eigen::Index>(slot.labels.size());
    const Eigen::Index expect_cols =
        task_ == TaskKind::AppleDetection ? 3 : Eigen::Index{3} * grid_ * grid_;
    if (weights_.rows() != expect_rows || weights_.cols() != expect_cols ||
        bias_.size() != expect_rows) {
        unavailable(slot, "weight shape does not match the slot");
    }
    char hash[17];
    std::snprintf(hash, sizeof(hash), "%016llx",
                  static_cast<unsigned long long>(fnv1a64(std::string_view(text))));
    version_ = std::string("linear-v1:") + hash;
}

Eigen::VectorXd LinearHeadBackend::pooled_features(const InputTensor& input, int grid) {
    Eigen::VectorXd features = Eigen::VectorXd::Zero(Eigen::Index{3} * grid * grid);
    Eigen::VectorXd counts = Eigen::VectorXd::Zero(Eigen::Index{grid} * grid);
    for (int y = 0; y < input.height; ++y) {
        const int gy = y * grid / input.height;
        for (int x = 0; x < input.width; ++x) {
            const int gx = x * grid / input.width;
            const Eigen::Index cell = Eigen::Index{gy} * grid + gx;
            counts(cell) += 1.0;
            for (int c = 0; c < 3; ++c) {
                features(c * counts.size() + cell) += input.at(c, y, x);
            }
        }
    }
    for (int c = 0; c < 3; ++c) {
        features.segment(c * counts.size(), counts.size()).array() /= counts.array();
    }
    return features;
}

BackendOutput LinearHeadBackend::run(const InputTensor& input,
                                     std::span<const std::uint8_t> /*source_bytes*/) {
    const Eigen::VectorXd features = pooled_features(input, grid_);
    if (task_ != TaskKind::AppleDetection) {
        Logits logits = weights_ * features + bias_;
        return logits;
    }
    RawDetections raw;
    const Eigen::Index cells = Eigen::Index{grid_} * grid_;
    const double stride_x = static_cast<double>(input.width) / grid_;
    const double stride_y = static_cast<double>(input.height) / grid_;
    for (Eigen::Index cell = 0; cell < cells; ++cell) {
        const Eigen::Vector3d f(features(cell), features(cells + cell), features(2 * cells + cell));
        const Eigen::VectorXd z = weights_ * f + bias_;
        const double gx = static_cast<double>(cell % grid_);
        const double gy = static_cast<double>(cell / grid_);
        RawCandidate c;
        c.score = sigmoid(z(0));
        c.cx = (gx + 0.5 + std::tanh(z(1))) * stride_x;
        c.cy = (gy + 0.5 + std::tanh(z(2))) * stride_y;
        c.w = stride_x * std::exp(std::clamp(z(3), -8.0, 8.0));
        c.h = stride_y * std::exp(std::clamp(z(4), -8.0, 8.0));
        raw.push_back(c);
    }
    return raw;
}

// ---------------------------------------------------------------------------

std::unique_ptr<Backend> make_backend(const ModelSlot& slot) {
    if (slot.backend == BackendKind::Stub) {
        return std::make_unique<StubBackend>(slot.task, slot.labels.size());
    }
    return std::make_unique<LinearHeadBackend>(slot);
}

BackendOutput run_backend(const ModelSlot& slot, Backend& backend, const InputTensor& input,
                          std::span<const std::uint8_t> source_bytes) {
    if (input.height != slot.input_side || input.width != slot.input_side ||
        input.values.cols() != Eigen::Index{slot.input_side} * slot.input_side) {
        throw Error(ErrorCode::ShapeMismatch,
                    std::string(to_string(slot.task)) + " expects " +
                        std::to_string(slot.input_side) + "x" + std::to_string(slot.input_side) +
                        ", got " + std::to_string(input.height) + "x" + std::to_string(input.width));
    }
    BackendOutput out = backend.run(input, source_bytes);
    if (slot.task == TaskKind::AppleDetection) {
        const auto* raw = std::get_if<RawDetections>(&out);
        if (!raw) throw Error(ErrorCode::ShapeMismatch, "detector backend returned logits");
        for (const auto& c : *raw) {
            if (!(c.w > 0.0 && c.h > 0.0) || !std::isfinite(c.cx) || !std::isfinite(c.cy) ||
                !(c.score >= 0.0 && c.score <= 1.0)) {
                throw Error(ErrorCode::ShapeMismatch, "detector candidate violates contract");
            }
        }
    } else {
        const auto* logits = std::get_if<Logits>(&out);
        if (!logits || logits->size() != static_cast<Eigen::Index>(slot.labels.size()) ||
            !logits->allFinite()) {
            throw Error(ErrorCode::ShapeMismatch, "classifier backend returned a bad logits vector");
        }
    }
    return out;
}

}  // namespace orchard
