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
#include <array>
#include <cmath>
#include <optional>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "orchard/bbox.hpp"
#include "orchard/image.hpp"

namespace orchard {

/// Per-channel normalization applied after scaling pixels to [0, 1].
struct NormSpec {
    std::array<double, 3> mean{0.0, 0.0, 0.0};
    std::array<double, 3> std{1.0, 1.0, 1.0};

    static NormSpec identity() { return {}; }
    static NormSpec imagenet() {
        return {{0.485, 0.456, 0.406}, {0.229, 0.224, 0.225}};
    }

    friend bool operator==(const NormSpec&, const NormSpec&) = default;
};

inline constexpr int kLeafDiseaseSide = 224;
inline constexpr int kFreshnessSide = 256;
inline constexpr int kDetectorSide = 640;
inline constexpr double kLetterboxPadValue = 114.0;

/// Channel-major model input: row c of `values` is channel c, laid out as
/// height * width samples in scan order.
template <typename Scalar>
struct BasicInputTensor {
    using Values = Eigen::Array<Scalar, 3, Eigen::Dynamic, Eigen::RowMajor>;

    int height = 0;
    int width = 0;
    Values values;

    BasicInputTensor() = default;
    BasicInputTensor(int h, int w) : height(h), width(w), values(3, Eigen::Index{h} * w) {}

    Scalar& at(int c, int y, int x) { return values(c, Eigen::Index{y} * width + x); }
    Scalar at(int c, int y, int x) const { return values(c, Eigen::Index{y} * width + x); }
};

using InputTensor = BasicInputTensor<float>;

/// Geometry of an aspect-preserving fit onto a square canvas.
struct LetterboxTransform {
    double scale = 1.0;
    double pad_x = 0.0;
    double pad_y = 0.0;

    static LetterboxTransform fit(int width, int height, int side) {
        const double sx = static_cast<double>(side) / width;
        const double sy = static_cast<double>(side) / height;
        // The binding axis gets exactly zero padding; the product s * dim may
        // round a hair above side.
        if (sx <= sy) return {sx, 0.0, std::max(0.0, (side - sx * height) / 2.0)};
        return {sy, std::max(0.0, (side - sy * width) / 2.0), 0.0};
    }

    /// Original-image box -> canvas box.
    BBoxd forward(const BBoxd& b) const noexcept {
        return {b.x1 * scale + pad_x, b.y1 * scale + pad_y, b.x2 * scale + pad_x,
                b.y2 * scale + pad_y};
    }

    friend bool operator==(const LetterboxTransform&, const LetterboxTransform&) = default;
};

namespace detail {

/// Bilinear taps for one axis with half-pixel centers, clamped at the edges.
struct Tap {
    int i0;
    int i1;
    double w1;
};

inline Tap make_tap(double src, int extent) {
    src = std::clamp(src, 0.0, static_cast<double>(extent - 1));
    const int i0 = static_cast<int>(std::floor(src));
    const int i1 = std::min(i0 + 1, extent - 1);
    return {i0, i1, src - i0};
}

inline double sample(const ImageRGB& img, const Tap& tx, const Tap& ty, int c) {
    const double p00 = img.at(tx.i0, ty.i0, c);
    const double p10 = img.at(tx.i1, ty.i0, c);
    const double p01 = img.at(tx.i0, ty.i1, c);
    const double p11 = img.at(tx.i1, ty.i1, c);
    const double top = p00 + (p10 - p00) * tx.w1;
    const double bottom = p01 + (p11 - p01) * tx.w1;
    return top + (bottom - top) * ty.w1;
}

template <typename Scalar>
void normalize_in_place(BasicInputTensor<Scalar>& t, const NormSpec& norm) {
    for (int c = 0; c < 3; ++c) {
        t.values.row(c) = (t.values.row(c) - static_cast<Scalar>(norm.mean[c])) /
                          static_cast<Scalar>(norm.std[c]);
    }
}

}  // namespace detail

/// Bilinear squash to side x side (aspect ratio not preserved), scaled to
/// [0, 1], then normalized per channel.
template <typename Scalar = float>
BasicInputTensor<Scalar> resize_normalize(const ImageRGB& img, int side, const NormSpec& norm) {
    BasicInputTensor<Scalar> out(side, side);
    const double sx = static_cast<double>(img.width) / side;
    const double sy = static_cast<double>(img.height) / side;
    std::vector<detail::Tap> xs(static_cast<std::size_t>(side));
    for (int x = 0; x < side; ++x) xs[x] = detail::make_tap((x + 0.5) * sx - 0.5, img.width);
    for (int y = 0; y < side; ++y) {
        const detail::Tap ty = detail::make_tap((y + 0.5) * sy - 0.5, img.height);
        for (int x = 0; x < side; ++x) {
            for (int c = 0; c < 3; ++c) {
                out.at(c, y, x) = static_cast<Scalar>(detail::sample(img, xs[x], ty, c) / 255.0);
            }
        }
    }
    detail::normalize_in_place(out, norm);
    return out;
}

/// Aspect-preserving bilinear resize centered on a side x side canvas filled
/// with gray 114/255. Canvas pixels whose centers fall outside the resized
/// region keep the pad value.
template <typename Scalar = float>
std::pair<BasicInputTensor<Scalar>, LetterboxTransform> letterbox(
    const ImageRGB& img, int side = kDetectorSide, const NormSpec& norm = NormSpec::identity()) {
    const LetterboxTransform t = LetterboxTransform::fit(img.width, img.height, side);
    BasicInputTensor<Scalar> out(side, side);
    out.values.setConstant(static_cast<Scalar>(kLetterboxPadValue / 255.0));

    const double x_end = t.pad_x + t.scale * img.width;
    const double y_end = t.pad_y + t.scale * img.height;
    std::vector<std::optional<detail::Tap>> xs(static_cast<std::size_t>(side));
    for (int u = 0; u < side; ++u) {
        const double center = u + 0.5;
        if (center >= t.pad_x && center < x_end) {
            xs[u] = detail::make_tap((center - t.pad_x) / t.scale - 0.5, img.width);
        }
    }
    for (int v = 0; v < side; ++v) {
        const double center = v + 0.5;
        if (center < t.pad_y || center >= y_end) continue;
        const detail::Tap ty = detail::make_tap((center - t.pad_y) / t.scale - 0.5, img.height);
        for (int u = 0; u < side; ++u) {
            if (!xs[u]) continue;
            for (int c = 0; c < 3; ++c) {
                out.at(c, v, u) = static_cast<Scalar>(detail::sample(img, *xs[u], ty, c) / 255.0);
            }
        }
    }
    detail::normalize_in_place(out, norm);
    return {std::move(out), t};
}

/// Canvas box -> original-image box, clipped to the image. Returns nullopt
/// when clipping leaves no positive extent.
std::optional<BBoxd> try_unletterbox_box(const BBoxd& box_in_target, const LetterboxTransform& t,
                                         int orig_w, int orig_h) noexcept;

/// As above; throws Error(DegenerateBox) instead of returning nullopt.
BBoxd unletterbox_box(const BBoxd& box_in_target, const LetterboxTransform& t, int orig_w,
                      int orig_h);

}  // namespace orchard
