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

#include <cstdint>
#include <filesystem>
#include <memory>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Core>

#include "orchard/detection.hpp"
#include "orchard/image_prep.hpp"
#include "orchard/types.hpp"

namespace orchard {

enum class BackendKind { Stub, External };

std::string_view to_string(BackendKind kind) noexcept;

/// One of the three model positions in the pipeline.
struct ModelSlot {
    TaskKind task = TaskKind::AppleDetection;
    BackendKind backend = BackendKind::Stub;
    std::filesystem::path model_path;
    std::vector<std::string> labels;
    int input_side = kDetectorSide;
    NormSpec norm;
    /// Only meaningful for the detection slot.
    DecodeParams decode;

    /// Throws Error(InvalidConfig) when labels or input side disagree with
    /// what the task requires.
    void validate() const;
};

/// Fixed label maps and input geometry for each task.
std::vector<std::string> default_labels(TaskKind task);
int default_input_side(TaskKind task);
NormSpec default_norm(TaskKind task);
ModelSlot default_slot(TaskKind task);

using Logits = Eigen::VectorXd;
using BackendOutput = std::variant<Logits, RawDetections>;

/// Opaque model execution. Implementations need not be thread-safe; the
/// worker calls them one at a time.
class Backend {
public:
    virtual ~Backend() = default;

    /// `source_bytes` are the raw encoded image the tensor was made from.
    virtual BackendOutput run(const InputTensor& input,
                              std::span<const std::uint8_t> source_bytes) = 0;
    virtual std::string version() const = 0;
};

/// Deterministic pseudo-model. The seed is FNV-1a over the image bytes
/// followed by the task name; a SplitMix64 stream seeded with it yields
/// either |labels| logits in [-3, 3], or (seed mod 6) detector candidates
/// with centers in [64, 576], sizes in [32, 160] and scores in [0.05, 0.95].
class StubBackend final : public Backend {
public:
    StubBackend(TaskKind task, std::size_t num_labels);

    BackendOutput run(const InputTensor& input, std::span<const std::uint8_t> source_bytes) override;
    std::string version() const override { return "stub-1"; }

    static std::uint64_t seed_for(std::span<const std::uint8_t> source_bytes, TaskKind task);

private:
    TaskKind task_;
    std::size_t num_labels_;
};

/// Linear head over an average-pooled grid of the input tensor, loaded from
/// an "orchard-linear-v1" JSON artifact. Classifiers map the pooled feature
/// vector to logits; the detector applies a per-cell 5x3 head and decodes
/// anchor-free (objectness, center offset, log size) per grid cell.
class LinearHeadBackend final : public Backend {
public:
    /// Throws Error(BackendUnavailable) if the artifact is missing, corrupt
    /// or built for another slot.
    explicit LinearHeadBackend(const ModelSlot& slot);

    BackendOutput run(const InputTensor& input, std::span<const std::uint8_t> source_bytes) override;
    std::string version() const override { return version_; }

    /// Average of each channel over a grid x grid partition of the tensor;
    /// feature index is c * grid^2 + gy * grid + gx.
    static Eigen::VectorXd pooled_features(const InputTensor& input, int grid);

private:
    TaskKind task_;
    int grid_ = 1;
    Eigen::MatrixXd weights_;
    Eigen::VectorXd bias_;
    std::string version_;
};

/// Builds the configured backend; fails fast with BackendUnavailable.
std::unique_ptr<Backend> make_backend(const ModelSlot& slot);

/// Shape-checked invocation. Classifiers must produce |labels| finite logits;
/// the detector must produce candidates with positive extent.
BackendOutput run_backend(const ModelSlot& slot, Backend& backend, const InputTensor& input,
                          std::span<const std::uint8_t> source_bytes);

}  // namespace orchard
