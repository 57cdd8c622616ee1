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
#include "orchard/image_prep.hpp"

#include "orchard/error.hpp"

namespace orchard {

std::optional<BBoxd> try_unletterbox_box(const BBoxd& b, const LetterboxTransform& t, int orig_w,
                                         int orig_h) noexcept {
    const double w = orig_w;
    const double h = orig_h;
    BBoxd out{std::clamp((b.x1 - t.pad_x) / t.scale, 0.0, w),
              std::clamp((b.y1 - t.pad_y) / t.scale, 0.0, h),
              std::clamp((b.x2 - t.pad_x) / t.scale, 0.0, w),
              std::clamp((b.y2 - t.pad_y) / t.scale, 0.0, h)};
    if (!out.valid()) return std::nullopt;
    return out;
}

BBoxd unletterbox_box(const BBoxd& b, const LetterboxTransform& t, int orig_w, int orig_h) {
    auto out = try_unletterbox_box(b, t, orig_w, orig_h);
    if (!out) throw Error(ErrorCode::DegenerateBox, "box has no extent inside the image");
    return *out;
}

}  // namespace orchard
