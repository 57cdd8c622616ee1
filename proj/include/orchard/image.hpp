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

#include <Eigen/Core>

namespace orchard {

/// Interleaved RGB8 raster: one row per pixel (row-major scan order), one
/// column per channel. The underlying buffer is therefore the usual packed
/// `RGBRGB...` layout of length width * height * 3.
using PixelArray = Eigen::Array<std::uint8_t, Eigen::Dynamic, 3, Eigen::RowMajor>;

struct ImageRGB {
    int width = 0;
    int height = 0;
    PixelArray pixels;

    ImageRGB() = default;
    ImageRGB(int w, int h) : width(w), height(h), pixels(Eigen::Index{w} * h, 3) {}

    Eigen::Index index(int x, int y) const noexcept { return Eigen::Index{y} * width + x; }

    std::uint8_t& at(int x, int y, int c) { return pixels(index(x, y), c); }
    std::uint8_t at(int x, int y, int c) const { return pixels(index(x, y), c); }

    const std::uint8_t* data() const noexcept { return pixels.data(); }
    std::uint8_t* data() noexcept { return pixels.data(); }

    static ImageRGB filled(int w, int h, std::uint8_t r, std::uint8_t g, std::uint8_t b) {
        ImageRGB img(w, h);
        img.pixels.col(0).setConstant(r);
        img.pixels.col(1).setConstant(g);
        img.pixels.col(2).setConstant(b);
        return img;
    }
};

}  // namespace orchard
