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
#include "orchard/image_codec.hpp"

#include <csetjmp>
#include <cstdio>
#include <cstring>
#include <string>

#include <jpeglib.h>
#include <png.h>

#include "orchard/error.hpp"

namespace orchard {

namespace {

using Bytes = std::span<const std::uint8_t>;

std::uint32_t read_be32(Bytes b, std::size_t pos) {
    return (std::uint32_t{b[pos]} << 24) | (std::uint32_t{b[pos + 1]} << 16) |
           (std::uint32_t{b[pos + 2]} << 8) | std::uint32_t{b[pos + 3]};
}

std::uint16_t read_be16(Bytes b, std::size_t pos) {
    return static_cast<std::uint16_t>((b[pos] << 8) | b[pos + 1]);
}

[[noreturn]] void corrupt(const std::string& why) {
    throw Error(ErrorCode::CorruptImage, why);
}

// Orientation tag from a TIFF-structured EXIF payload (after "Exif\0\0").
int exif_orientation(Bytes tiff) {
    if (tiff.size() < 8) return 1;
    bool little;
    if (tiff[0] == 'I' && tiff[1] == 'I') {
        little = true;
    } else if (tiff[0] == 'M' && tiff[1] == 'M') {
        little = false;
    } else {
        return 1;
    }
    auto u16 = [&](std::size_t p) -> std::uint32_t {
        return little ? (tiff[p] | (tiff[p + 1] << 8)) : ((tiff[p] << 8) | tiff[p + 1]);
    };
    auto u32 = [&](std::size_t p) -> std::uint32_t {
        return little ? (u16(p) | (u16(p + 2) << 16)) : ((u16(p) << 16) | u16(p + 2));
    };
    std::size_t ifd = u32(4);
    if (ifd + 2 > tiff.size()) return 1;
    std::uint32_t entries = u16(ifd);
    for (std::uint32_t i = 0; i < entries; ++i) {
        std::size_t e = ifd + 2 + 12 * i;
        if (e + 12 > tiff.size()) break;
        if (u16(e) == 0x0112 && u16(e + 2) == 3) {
            auto v = static_cast<int>(u16(e + 8));
            return (v >= 1 && v <= 8) ? v : 1;
        }
    }
    return 1;
}

ImageInfo probe_jpeg(Bytes b) {
    std::size_t pos = 2;
    int orientation = 1;
    while (pos + 4 <= b.size()) {
        if (b[pos] != 0xFF) corrupt("JPEG marker expected");
        std::uint8_t marker = b[pos + 1];
        if (marker == 0xFF) {  // fill byte
            ++pos;
            continue;
        }
        if (marker == 0xD8 || (marker >= 0xD0 && marker <= 0xD7) || marker == 0x01) {
            pos += 2;
            continue;
        }
        std::size_t len = read_be16(b, pos + 2);
        if (len < 2 || pos + 2 + len > b.size()) corrupt("truncated JPEG segment");
        Bytes seg = b.subspan(pos + 4, len - 2);
        if (marker == 0xE1 && seg.size() > 6 && std::memcmp(seg.data(), "Exif\0\0", 6) == 0) {
            orientation = exif_orientation(seg.subspan(6));
        }
        bool sof = marker >= 0xC0 && marker <= 0xCF && marker != 0xC4 && marker != 0xC8 &&
                   marker != 0xCC;
        if (sof) {
            if (seg.size() < 5) corrupt("short SOF segment");
            int h = read_be16(seg, 1);
            int w = read_be16(seg, 3);
            if (w == 0 || h == 0) corrupt("JPEG with zero dimension");
            if (orientation >= 5) std::swap(w, h);
            return {ImageFormat::Jpeg, w, h, orientation};
        }
        if (marker == 0xDA || marker == 0xD9) break;
        pos += 2 + len;
    }
    corrupt("JPEG without frame header");
}

ImageInfo probe_png(Bytes b) {
    if (b.size() < 33) corrupt("truncated PNG header");
    if (std::memcmp(b.data() + 12, "IHDR", 4) != 0) corrupt("PNG without IHDR");
    auto w = read_be32(b, 16);
    auto h = read_be32(b, 20);
    if (w == 0 || h == 0 || w > 0x7fffffff || h > 0x7fffffff) corrupt("PNG with invalid dimension");
    int orientation = 1;
    std::size_t pos = 8;
    while (pos + 12 <= b.size()) {
        std::size_t len = read_be32(b, pos);
        if (pos + 12 + len > b.size()) break;
        if (std::memcmp(b.data() + pos + 4, "eXIf", 4) == 0) {
            orientation = exif_orientation(b.subspan(pos + 8, len));
            break;
        }
        if (std::memcmp(b.data() + pos + 4, "IDAT", 4) == 0) break;
        pos += 12 + len;
    }
    int width = static_cast<int>(w);
    int height = static_cast<int>(h);
    if (orientation >= 5) std::swap(width, height);
    return {ImageFormat::Png, width, height, orientation};
}

struct JpegErrorManager {
    jpeg_error_mgr pub;
    std::jmp_buf jump;
    char message[JMSG_LENGTH_MAX];
    bool warned;
};

void jpeg_error_exit(j_common_ptr cinfo) {
    auto* err = reinterpret_cast<JpegErrorManager*>(cinfo->err);
    (*cinfo->err->format_message)(cinfo, err->message);
    std::longjmp(err->jump, 1);
}

void jpeg_emit_message(j_common_ptr cinfo, int level) {
    auto* err = reinterpret_cast<JpegErrorManager*>(cinfo->err);
    // Warnings (level -1) include premature end of data; libjpeg would
    // otherwise pad the image with gray and report success.
    if (level < 0 && !err->warned) {
        err->warned = true;
        (*cinfo->err->format_message)(cinfo, err->message);
    }
}

ImageRGB decode_jpeg_stored(Bytes b) {
    jpeg_decompress_struct cinfo;
    JpegErrorManager err{};
    cinfo.err = jpeg_std_error(&err.pub);
    err.pub.error_exit = jpeg_error_exit;
    err.pub.emit_message = jpeg_emit_message;
    ImageRGB img;
    // 0: ok, 1: libjpeg error, 2: unsupported color model
    volatile int failure = 0;

    if (setjmp(err.jump)) {
        failure = 1;
    } else {
        jpeg_create_decompress(&cinfo);
        jpeg_mem_src(&cinfo, b.data(), static_cast<unsigned long>(b.size()));
        jpeg_read_header(&cinfo, TRUE);
        if (cinfo.jpeg_color_space == JCS_CMYK || cinfo.jpeg_color_space == JCS_YCCK) {
            failure = 2;
        } else {
            cinfo.out_color_space = JCS_RGB;
            jpeg_start_decompress(&cinfo);
            img = ImageRGB(static_cast<int>(cinfo.output_width),
                           static_cast<int>(cinfo.output_height));
            while (cinfo.output_scanline < cinfo.output_height) {
                JSAMPROW row = img.data() + std::size_t{cinfo.output_scanline} *
                                                cinfo.output_width * 3;
                jpeg_read_scanlines(&cinfo, &row, 1);
            }
            jpeg_finish_decompress(&cinfo);
        }
    }
    jpeg_destroy_decompress(&cinfo);
    if (failure == 1) corrupt(std::string("JPEG decode failed: ") + err.message);
    if (failure == 2) throw Error(ErrorCode::UnsupportedColorModel, "CMYK/YCCK JPEG");
    if (err.warned) corrupt(std::string("JPEG data damaged: ") + err.message);
    return img;
}

ImageRGB decode_png_stored(Bytes b) {
    png_image image;
    std::memset(&image, 0, sizeof(image));
    image.version = PNG_IMAGE_VERSION;
    if (!png_image_begin_read_from_memory(&image, b.data(), b.size())) {
        std::string why = image.message;
        png_image_free(&image);
        corrupt("PNG header: " + why);
    }
    image.format = PNG_FORMAT_RGB;
    ImageRGB img(static_cast<int>(image.width), static_cast<int>(image.height));
    png_color background{0, 0, 0};
    if (!png_image_finish_read(&image, &background, img.data(), 0, nullptr)) {
        std::string why = image.message;
        png_image_free(&image);
        corrupt("PNG decode: " + why);
    }
    return img;
}

struct PngWriteBuffer {
    std::vector<std::uint8_t> out;
};

void png_write_to_vector(png_structp png, png_bytep data, png_size_t length) {
    auto* buf = static_cast<PngWriteBuffer*>(png_get_io_ptr(png));
    buf->out.insert(buf->out.end(), data, data + length);
}

std::vector<std::uint8_t> encode_png_raw(int width, int height, int color_type,
                                         const std::uint8_t* data, int channels) {
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!png) throw std::runtime_error("png_create_write_struct failed");
    png_infop info = png_create_info_struct(png);
    PngWriteBuffer buffer;
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        throw std::runtime_error("PNG encode failed");
    }
    png_set_write_fn(png, &buffer, png_write_to_vector, nullptr);
    png_set_IHDR(png, info, static_cast<png_uint_32>(width), static_cast<png_uint_32>(height), 8,
                 color_type, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
                 PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    for (int y = 0; y < height; ++y) {
        png_write_row(png, const_cast<png_bytep>(data + std::size_t(y) * width * channels));
    }
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
    return std::move(buffer.out);
}

}  // namespace

std::string_view mime_type(ImageFormat format) noexcept {
    return format == ImageFormat::Jpeg ? "image/jpeg" : "image/png";
}

std::optional<ImageFormat> sniff_format(Bytes bytes) noexcept {
    static constexpr std::uint8_t kPng[8] = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1A, '\n'};
    if (bytes.size() >= 8 && std::memcmp(bytes.data(), kPng, 8) == 0) return ImageFormat::Png;
    if (bytes.size() >= 3 && bytes[0] == 0xFF && bytes[1] == 0xD8 && bytes[2] == 0xFF) {
        return ImageFormat::Jpeg;
    }
    return std::nullopt;
}

ImageInfo probe_image(Bytes bytes) {
    auto format = sniff_format(bytes);
    if (!format) throw Error(ErrorCode::UnsupportedImageFormat, "expected JPEG or PNG data");
    return *format == ImageFormat::Jpeg ? probe_jpeg(bytes) : probe_png(bytes);
}

ImageRGB apply_orientation(const ImageRGB& s, int orientation) {
    if (orientation <= 1 || orientation > 8) return s;
    const int w = s.width;
    const int h = s.height;
    const bool swap = orientation >= 5;
    ImageRGB d(swap ? h : w, swap ? w : h);
    for (int y = 0; y < d.height; ++y) {
        for (int x = 0; x < d.width; ++x) {
            int sx = x, sy = y;
            switch (orientation) {
                case 2: sx = w - 1 - x; sy = y; break;
                case 3: sx = w - 1 - x; sy = h - 1 - y; break;
                case 4: sx = x; sy = h - 1 - y; break;
                case 5: sx = y; sy = x; break;
                case 6: sx = y; sy = h - 1 - x; break;
                case 7: sx = w - 1 - y; sy = h - 1 - x; break;
                case 8: sx = w - 1 - y; sy = x; break;
                default: break;
            }
            d.pixels.row(d.index(x, y)) = s.pixels.row(s.index(sx, sy));
        }
    }
    return d;
}

ImageRGB decode_image(Bytes bytes) {
    ImageInfo info = probe_image(bytes);
    ImageRGB stored = info.format == ImageFormat::Jpeg ? decode_jpeg_stored(bytes)
                                                       : decode_png_stored(bytes);
    return apply_orientation(stored, info.orientation);
}

std::vector<std::uint8_t> encode_png(const ImageRGB& img) {
    return encode_png_raw(img.width, img.height, PNG_COLOR_TYPE_RGB, img.data(), 3);
}

std::vector<std::uint8_t> encode_png_gray(int width, int height, Bytes gray) {
    if (gray.size() != std::size_t(width) * height) {
        throw std::invalid_argument("gray buffer size mismatch");
    }
    return encode_png_raw(width, height, PNG_COLOR_TYPE_GRAY, gray.data(), 1);
}

std::vector<std::uint8_t> encode_jpeg(const ImageRGB& img, int quality) {
    jpeg_compress_struct cinfo;
    JpegErrorManager err{};
    cinfo.err = jpeg_std_error(&err.pub);
    err.pub.error_exit = jpeg_error_exit;
    unsigned char* out = nullptr;
    unsigned long out_size = 0;
    if (setjmp(err.jump)) {
        jpeg_destroy_compress(&cinfo);
        std::free(out);
        throw std::runtime_error(std::string("JPEG encode failed: ") + err.message);
    }
    jpeg_create_compress(&cinfo);
    jpeg_mem_dest(&cinfo, &out, &out_size);
    cinfo.image_width = static_cast<JDIMENSION>(img.width);
    cinfo.image_height = static_cast<JDIMENSION>(img.height);
    cinfo.input_components = 3;
    cinfo.in_color_space = JCS_RGB;
    jpeg_set_defaults(&cinfo);
    jpeg_set_quality(&cinfo, quality, TRUE);
    jpeg_start_compress(&cinfo, TRUE);
    while (cinfo.next_scanline < cinfo.image_height) {
        auto* row = const_cast<JSAMPROW>(img.data() + std::size_t{cinfo.next_scanline} *
                                                          img.width * 3);
        jpeg_write_scanlines(&cinfo, &row, 1);
    }
    jpeg_finish_compress(&cinfo);
    std::vector<std::uint8_t> result(out, out + out_size);
    jpeg_destroy_compress(&cinfo);
    std::free(out);
    return result;
}

}  // namespace orchard
