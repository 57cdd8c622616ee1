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
#include <gtest/gtest.h>

#include "orchard/error.hpp"
#include "orchard/image_codec.hpp"

namespace orchard {
namespace {

ErrorCode code_of(const std::function<void()>& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.code();
    }
    ADD_FAILURE() << "no orchard::Error thrown";
    return ErrorCode::InvalidConfig;
}

ImageRGB gradient(int w, int h) {
    ImageRGB img(w, h);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            img.at(x, y, 0) = static_cast<std::uint8_t>(x * 255 / std::max(1, w - 1));
            img.at(x, y, 1) = static_cast<std::uint8_t>(y * 255 / std::max(1, h - 1));
            img.at(x, y, 2) = 90;
        }
    }
    return img;
}

// Builds an APP1 Exif segment (big-endian TIFF) carrying one orientation tag
// and splices it after the SOI marker.
std::vector<std::uint8_t> with_orientation(std::vector<std::uint8_t> jpeg, int orientation) {
    std::vector<std::uint8_t> tiff = {'M', 'M', 0, 42, 0, 0, 0, 8,  // header, IFD at 8
                                      0, 1,                          // one entry
                                      0x01, 0x12, 0, 3, 0, 0, 0, 1,  // tag, SHORT, count
                                      0, static_cast<std::uint8_t>(orientation), 0, 0,
                                      0, 0, 0, 0};                   // next IFD
    std::vector<std::uint8_t> seg = {'E', 'x', 'i', 'f', 0, 0};
    seg.insert(seg.end(), tiff.begin(), tiff.end());
    const std::size_t len = seg.size() + 2;
    std::vector<std::uint8_t> app1 = {0xFF, 0xE1, static_cast<std::uint8_t>(len >> 8),
                                      static_cast<std::uint8_t>(len & 0xFF)};
    app1.insert(app1.end(), seg.begin(), seg.end());
    jpeg.insert(jpeg.begin() + 2, app1.begin(), app1.end());
    return jpeg;
}

TEST(ImageCodec, PngLosslessTwoByTwo) {
    ImageRGB img(2, 2);
    const std::uint8_t values[] = {255, 0, 0, 0, 255, 0, 0, 0, 255, 10, 20, 30};
    std::copy(std::begin(values), std::end(values), img.data());
    const auto bytes = encode_png(img);
    const auto info = probe_image(bytes);
    EXPECT_EQ(info.format, ImageFormat::Png);
    EXPECT_EQ(info.width, 2);
    EXPECT_EQ(info.height, 2);
    const auto decoded = decode_image(bytes);
    EXPECT_EQ(decoded.width, 2);
    EXPECT_EQ(decoded.height, 2);
    EXPECT_TRUE((decoded.pixels == img.pixels).all());
}

TEST(ImageCodec, GrayscalePngReplicatesChannels) {
    std::vector<std::uint8_t> gray = {0, 64, 128, 255, 7, 9};
    const auto bytes = encode_png_gray(3, 2, gray);
    const auto decoded = decode_image(bytes);
    ASSERT_EQ(decoded.width, 3);
    ASSERT_EQ(decoded.height, 2);
    for (int i = 0; i < 6; ++i) {
        EXPECT_EQ(decoded.pixels(i, 0), gray[static_cast<std::size_t>(i)]);
        EXPECT_EQ(decoded.pixels(i, 1), gray[static_cast<std::size_t>(i)]);
        EXPECT_EQ(decoded.pixels(i, 2), gray[static_cast<std::size_t>(i)]);
    }
}

TEST(ImageCodec, JpegDecodesCloseToSource) {
    const auto img = gradient(64, 48);
    const auto bytes = encode_jpeg(img, 95);
    const auto info = probe_image(bytes);
    EXPECT_EQ(info.format, ImageFormat::Jpeg);
    EXPECT_EQ(info.width, 64);
    EXPECT_EQ(info.height, 48);
    const auto decoded = decode_image(bytes);
    const auto diff = (decoded.pixels.cast<int>() - img.pixels.cast<int>()).abs();
    EXPECT_LT(diff.cast<double>().mean(), 4.0);
}

TEST(ImageCodec, TruncatedJpegIsCorrupt) {
    auto bytes = encode_jpeg(gradient(64, 64));
    bytes.resize(bytes.size() / 2);
    EXPECT_EQ(code_of([&] { decode_image(bytes); }), ErrorCode::CorruptImage);
}

TEST(ImageCodec, TruncatedPngIsCorrupt) {
    auto bytes = encode_png(gradient(64, 64));
    bytes.resize(bytes.size() - 30);
    EXPECT_EQ(code_of([&] { decode_image(bytes); }), ErrorCode::CorruptImage);
}

TEST(ImageCodec, UnknownFormat) {
    std::vector<std::uint8_t> gif = {'G', 'I', 'F', '8', '9', 'a', 0, 0, 0, 0};
    EXPECT_EQ(code_of([&] { probe_image(gif); }), ErrorCode::UnsupportedImageFormat);
    EXPECT_EQ(code_of([&] { decode_image(gif); }), ErrorCode::UnsupportedImageFormat);
}

TEST(ImageCodec, ExifRotationSwapsDimensions) {
    const auto img = gradient(40, 16);
    const auto bytes = with_orientation(encode_jpeg(img, 95), 6);
    const auto info = probe_image(bytes);
    EXPECT_EQ(info.orientation, 6);
    EXPECT_EQ(info.width, 16);
    EXPECT_EQ(info.height, 40);
    const auto decoded = decode_image(bytes);
    ASSERT_EQ(decoded.width, 16);
    ASSERT_EQ(decoded.height, 40);
    // Rotating 90 degrees clockwise puts the stored left column on top, so
    // red (which grows with stored x) now grows with display y.
    EXPECT_LT(decoded.at(8, 0, 0), 30);
    EXPECT_GT(decoded.at(8, 39, 0), 225);
}

TEST(ImageCodec, OrientationTransformsAreConsistent) {
    ImageRGB img(3, 2);
    for (int i = 0; i < 6; ++i) img.pixels.row(i).setConstant(static_cast<std::uint8_t>(i));
    // Stored:   0 1 2
    //           3 4 5
    EXPECT_EQ(apply_orientation(img, 3).pixels(0, 0), 5);
    EXPECT_EQ(apply_orientation(img, 2).pixels(0, 0), 2);
    EXPECT_EQ(apply_orientation(img, 4).pixels(0, 0), 3);
    const auto r6 = apply_orientation(img, 6);  // 3 0 / 4 1 / 5 2
    EXPECT_EQ(r6.width, 2);
    EXPECT_EQ(r6.at(0, 0, 0), 3);
    EXPECT_EQ(r6.at(1, 0, 0), 0);
    EXPECT_EQ(r6.at(1, 2, 0), 2);
    const auto r8 = apply_orientation(img, 8);  // 2 5 / 1 4 / 0 3
    EXPECT_EQ(r8.at(0, 0, 0), 2);
    EXPECT_EQ(r8.at(1, 2, 0), 3);
    // 6 then 8 is the identity.
    const auto round = apply_orientation(apply_orientation(img, 6), 8);
    EXPECT_TRUE((round.pixels == img.pixels).all());
}

}  // namespace
}  // namespace orchard
