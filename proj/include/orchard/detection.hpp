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

#include <cstddef>
#include <span>
#include <vector>

#include "orchard/bbox.hpp"
#include "orchard/image_prep.hpp"

namespace orchard {

struct Detection {
    BBoxd bbox;
    double score = 0.0;
    int class_id = 0;

    friend bool operator==(const Detection&, const Detection&) = default;
};

/// Detector backend output in letterboxed canvas coordinates (center form).
struct RawCandidate {
    double cx = 0.0;
    double cy = 0.0;
    double w = 0.0;
    double h = 0.0;
    double score = 0.0;

    friend bool operator==(const RawCandidate&, const RawCandidate&) = default;
};

using RawDetections = std::vector<RawCandidate>;

struct DecodeParams {
    double conf_thresh = 0.25;
    double iou_thresh = 0.45;
    std::size_t max_detections = 300;
};

/// Counters for candidates dropped along the way.
struct DecodeStats {
    std::size_t below_threshold = 0;
    std::size_t degenerate = 0;
    std::size_t suppressed = 0;
    std::size_t capped = 0;
};

/// Ranking used by NMS: score descending, then smaller x1, then smaller y1.
bool ranks_before(const Detection& a, const Detection& b) noexcept;

/// Greedy hard NMS. Keeps the best remaining box and discards every other
/// box whose IoU with it exceeds `iou_thresh`. Output is in rank order.
std::vector<Detection> nms(std::vector<Detection> dets, double iou_thresh);

/// Full decode: confidence filter, center->corner conversion, letterbox
/// inversion with clipping, NMS, and the output cap.
std::vector<Detection> postprocess(std::span<const RawCandidate> raw, const LetterboxTransform& t,
                                   int orig_w, int orig_h, const DecodeParams& params,
                                   DecodeStats* stats = nullptr);

}  // namespace orchard
