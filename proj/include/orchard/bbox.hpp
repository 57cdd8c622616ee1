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

#include <algorithm>

namespace orchard {

/// Axis-aligned box in corner form, pixels of the original image.
template <typename Scalar>
struct BBox {
    Scalar x1{}, y1{}, x2{}, y2{};

    Scalar width() const noexcept { return x2 - x1; }
    Scalar height() const noexcept { return y2 - y1; }
    Scalar area() const noexcept { return width() * height(); }
    bool valid() const noexcept { return x1 < x2 && y1 < y2; }

    template <typename Other>
    BBox<Other> cast() const {
        return {static_cast<Other>(x1), static_cast<Other>(y1), static_cast<Other>(x2),
                static_cast<Other>(y2)};
    }

    static BBox from_center(Scalar cx, Scalar cy, Scalar w, Scalar h) noexcept {
        return {cx - w / 2, cy - h / 2, cx + w / 2, cy + h / 2};
    }

    friend bool operator==(const BBox&, const BBox&) = default;
};

using BBoxd = BBox<double>;
using BBoxf = BBox<float>;

/// Intersection over union; 0 for disjoint or touching boxes. Symmetric in
/// its arguments bit for bit.
template <typename Scalar>
Scalar iou(const BBox<Scalar>& a, const BBox<Scalar>& b) noexcept {
    const Scalar iw = std::min(a.x2, b.x2) - std::max(a.x1, b.x1);
    const Scalar ih = std::min(a.y2, b.y2) - std::max(a.y1, b.y1);
    if (iw <= Scalar(0) || ih <= Scalar(0)) return Scalar(0);
    const Scalar inter = iw * ih;
    // a.area() + b.area() commutes exactly, so iou(a, b) == iou(b, a).
    const Scalar uni = a.area() + b.area() - inter;
    if (uni <= Scalar(0)) return Scalar(0);
    return std::clamp(inter / uni, Scalar(0), Scalar(1));
}

}  // namespace orchard
