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
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "orchard/image.hpp"

namespace orchard {

enum class ImageFormat { Jpeg, Png };

std::string_view mime_type(ImageFormat format) noexcept;

/// Magic-number check only.
std::optional<ImageFormat> sniff_format(std::span<const std::uint8_t> bytes) noexcept;

struct ImageInfo {
    ImageFormat format;
    /// Display dimensions, i.e. after the EXIF orientation is applied.
    int width;
    int height;
    /// EXIF orientation tag (1..8); 1 when absent.
    int orientation;
};

/// Reads just enough of the header to report format and dimensions.
/// Throws UnsupportedImageFormat or CorruptImage.
ImageInfo probe_image(std::span<const std::uint8_t> bytes);

/// Full decode to RGB8 with the EXIF orientation applied. Grayscale and
/// palette sources are expanded (R = G = B for gray); alpha is dropped.
/// Throws CorruptImage, UnsupportedColorModel or UnsupportedImageFormat.
ImageRGB decode_image(std::span<const std::uint8_t> bytes);

/// Reorients a stored raster into display orientation.
ImageRGB apply_orientation(const ImageRGB& stored, int orientation);

std::vector<std::uint8_t> encode_png(const ImageRGB& img);
/// Single-channel 8-bit PNG; `gray` holds width * height samples.
std::vector<std::uint8_t> encode_png_gray(int width, int height,
                                          std::span<const std::uint8_t> gray);
std::vector<std::uint8_t> encode_jpeg(const ImageRGB& img, int quality = 90);

}  // namespace orchard
