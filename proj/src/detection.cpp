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
#include "orchard/detection.hpp"

#include <algorithm>

namespace orchard {

bool ranks_before(const Detection& a, const Detection& b) noexcept {
    if (a.score != b.score) return a.score > b.score;
    if (a.bbox.x1 != b.bbox.x1) return a.bbox.x1 < b.bbox.x1;
    return a.bbox.y1 < b.bbox.y1;
}

std::vector<Detection> nms(std::vector<Detection> dets, double iou_thresh) {
    std::stable_sort(dets.begin(), dets.end(), ranks_before);
    std::vector<Detection> kept;
    std::vector<bool> removed(dets.size(), false);
    for (std::size_t i = 0; i < dets.size(); ++i) {
        if (removed[i]) continue;
        kept.push_back(dets[i]);
        for (std::size_t j = i + 1; j < dets.size(); ++j) {
            if (!removed[j] && iou(dets[i].bbox, dets[j].bbox) > iou_thresh) removed[j] = true;
        }
    }
    return kept;
}

std::vector<Detection> postprocess(std::span<const RawCandidate> raw, const LetterboxTransform& t,
                                   int orig_w, int orig_h, const DecodeParams& params,
                                   DecodeStats* stats) {
    DecodeStats local;
    std::vector<Detection> candidates;
    candidates.reserve(raw.size());
    for (const RawCandidate& c : raw) {
        if (c.score < params.conf_thresh) {
            ++local.below_threshold;
            continue;
        }
        if (!(c.w > 0.0) || !(c.h > 0.0)) {
            ++local.degenerate;
            continue;
        }
        auto box = try_unletterbox_box(BBoxd::from_center(c.cx, c.cy, c.w, c.h), t, orig_w, orig_h);
        if (!box) {
            ++local.degenerate;
            continue;
        }
        candidates.push_back({*box, c.score, 0});
    }
    const std::size_t before_nms = candidates.size();
    auto kept = nms(std::move(candidates), params.iou_thresh);
    local.suppressed = before_nms - kept.size();
    if (kept.size() > params.max_detections) {
        local.capped = kept.size() - params.max_detections;
        kept.resize(params.max_detections);
    }
    if (stats) *stats = local;
    return kept;
}

}  // namespace orchard
