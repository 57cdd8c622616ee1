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
#include "orchard/device_gateway.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <algorithm>
#include <cctype>
#include <fstream>
#include <iterator>
#include <optional>
#include <system_error>
#include <utility>

#include "orchard/capture_meta.hpp"
#include "orchard/error.hpp"

namespace orchard {
namespace {

std::string_view trim(std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    return s;
}

bool iequals(std::string_view a, std::string_view b) {
    return a.size() == b.size() &&
           std::equal(a.begin(), a.end(), b.begin(), [](char x, char y) {
               return std::tolower(static_cast<unsigned char>(x)) ==
                      std::tolower(static_cast<unsigned char>(y));
           });
}

/// Value of `key` among ";"-separated header parameters, unquoted.
std::optional<std::string> header_param(std::string_view header, std::string_view key) {
    std::size_t pos = header.find(';');
    while (pos != std::string_view::npos) {
        const std::size_t next = header.find(';', pos + 1);
        const auto item = trim(header.substr(pos + 1, next == std::string_view::npos
                                                          ? std::string_view::npos
                                                          : next - pos - 1));
        const auto eq = item.find('=');
        if (eq != std::string_view::npos && iequals(trim(item.substr(0, eq)), key)) {
            auto value = trim(item.substr(eq + 1));
            if (value.size() >= 2 && value.front() == '"' && value.back() == '"') {
                value = value.substr(1, value.size() - 2);
            }
            return std::string(value);
        }
        pos = next;
    }
    return std::nullopt;
}

[[noreturn]] void malformed(const std::string& why) {
    throw Error(ErrorCode::MissingPart, "malformed multipart body: " + why);
}

void write_durably(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
    const auto tmp = path.string() + ".part";
    const int fd = ::open(tmp.c_str(), O_WRONLY | O_CREAT | O_TRUNC | O_CLOEXEC, 0644);
    if (fd < 0) throw Error(ErrorCode::StorageFailure, "cannot create " + tmp);
    std::size_t off = 0;
    while (off < bytes.size()) {
        const ssize_t n = ::write(fd, bytes.data() + off, bytes.size() - off);
        if (n <= 0) {
            ::close(fd);
            ::unlink(tmp.c_str());
            throw Error(ErrorCode::StorageFailure, "short write to " + tmp);
        }
        off += static_cast<std::size_t>(n);
    }
    const bool synced = ::fsync(fd) == 0;
    ::close(fd);
    if (!synced || ::rename(tmp.c_str(), path.c_str()) != 0) {
        ::unlink(tmp.c_str());
        throw Error(ErrorCode::StorageFailure, "cannot persist " + path.string());
    }
}

std::string_view extension(ImageFormat f) { return f == ImageFormat::Jpeg ? ".jpg" : ".png"; }

}  // namespace

std::vector<MultipartPart> parse_multipart(std::string_view content_type, std::string_view body) {
    const auto semi = content_type.find(';');
    if (!iequals(trim(content_type.substr(0, semi)), "multipart/form-data")) {
        throw Error(ErrorCode::MissingPart, "expected multipart/form-data, got '" +
                                                std::string(content_type) + "'");
    }
    const auto boundary = header_param(content_type, "boundary");
    if (!boundary || boundary->empty() || boundary->size() > 70) malformed("missing boundary");

    const std::string delim = "--" + *boundary;
    const std::string sep = "\r\n" + delim;

    std::size_t pos;
    if (body.substr(0, delim.size()) == delim) {
        pos = delim.size();
    } else {
        const auto first = body.find(sep);
        if (first == std::string_view::npos) malformed("no opening boundary");
        pos = first + sep.size();
    }

    std::vector<MultipartPart> parts;
    for (;;) {
        if (body.substr(pos, 2) == "--") return parts;
        // Transport padding before the line break is allowed.
        while (pos < body.size() && (body[pos] == ' ' || body[pos] == '\t')) ++pos;
        if (body.substr(pos, 2) != "\r\n") malformed("boundary not followed by CRLF");
        pos += 2;

        const auto header_end = body.find("\r\n\r\n", pos);
        if (header_end == std::string_view::npos) malformed("unterminated part headers");
        MultipartPart part;
        bool has_disposition = false;
        std::string_view headers = body.substr(pos, header_end - pos);
        while (!headers.empty()) {
            const auto eol = headers.find("\r\n");
            const auto line = headers.substr(0, eol);
            headers = eol == std::string_view::npos ? std::string_view{} : headers.substr(eol + 2);
            const auto colon = line.find(':');
            if (colon == std::string_view::npos) malformed("bad header line");
            const auto name = trim(line.substr(0, colon));
            const auto value = trim(line.substr(colon + 1));
            if (iequals(name, "Content-Disposition")) {
                if (!iequals(trim(value.substr(0, value.find(';'))), "form-data")) {
                    malformed("part is not form-data");
                }
                const auto n = header_param(value, "name");
                if (!n) malformed("part without a name");
                part.name = *n;
                part.filename = header_param(value, "filename").value_or("");
                has_disposition = true;
            } else if (iequals(name, "Content-Type")) {
                part.content_type = std::string(value);
            }
        }
        if (!has_disposition) malformed("part without Content-Disposition");

        const std::size_t data_begin = header_end + 4;
        const auto data_end = body.find(sep, data_begin);
        if (data_end == std::string_view::npos) malformed("unterminated part '" + part.name + "'");
        part.body = std::string(body.substr(data_begin, data_end - data_begin));
        parts.push_back(std::move(part));
        pos = data_end + sep.size();
    }
}

std::string encode_multipart(std::span<const MultipartPart> parts, std::string_view boundary) {
    std::string out;
    for (const auto& p : parts) {
        out += "--";
        out += boundary;
        out += "\r\nContent-Disposition: form-data; name=\"" + p.name + "\"";
        if (!p.filename.empty()) out += "; filename=\"" + p.filename + "\"";
        out += "\r\n";
        if (!p.content_type.empty()) out += "Content-Type: " + p.content_type + "\r\n";
        out += "\r\n";
        out += p.body;
        out += "\r\n";
    }
    out += "--";
    out += boundary;
    out += "--\r\n";
    return out;
}

IngestRequest parse_ingest_parts(std::span<const MultipartPart> parts) {
    const auto find = [&](std::string_view name) {
        return std::find_if(parts.begin(), parts.end(),
                            [&](const MultipartPart& p) { return p.name == name; });
    };
    const auto meta = find("meta");
    const auto image = find("image");
    if (meta == parts.end()) throw Error(ErrorCode::MissingPart, "meta");
    if (image == parts.end()) throw Error(ErrorCode::MissingPart, "image");
    if (parts.size() != 2) {
        throw Error(ErrorCode::MissingPart, "expected exactly the parts meta and image, got " +
                                                std::to_string(parts.size()));
    }
    if (meta > image) throw Error(ErrorCode::MissingPart, "meta must precede image");

    IngestRequest req;
    req.meta = parse_meta(meta->body);
    if (image->body.size() > kMaxImageBytes) {
        throw Error(ErrorCode::ImageTooLarge, std::to_string(image->body.size()) +
                                                  " bytes exceeds " +
                                                  std::to_string(kMaxImageBytes));
    }
    if (image->body.empty()) throw Error(ErrorCode::MissingPart, "image part is empty");
    req.image.assign(image->body.begin(), image->body.end());
    req.info = probe_image(req.image);
    const auto in_range = [](int v) { return v >= kMinImageSide && v <= kMaxImageSide; };
    if (!in_range(req.info.width) || !in_range(req.info.height)) {
        throw Error(ErrorCode::DimensionOutOfRange,
                    std::to_string(req.info.width) + "x" + std::to_string(req.info.height) +
                        " outside [" + std::to_string(kMinImageSide) + ", " +
                        std::to_string(kMaxImageSide) + "]");
    }
    return req;
}

IngestRequest parse_ingest_request(std::string_view content_type, std::string_view body) {
    const auto parts = parse_multipart(content_type, body);
    return parse_ingest_parts(parts);
}

Gateway::Gateway(Store& store, JobQueue& queue, std::filesystem::path data_dir,
                 RoutingConfig routing, Clock clock)
    : store_(store),
      queue_(queue),
      data_dir_(std::move(data_dir)),
      routing_(routing),
      clock_(std::move(clock)) {
    routing_.validate();
    std::error_code ec;
    std::filesystem::create_directories(data_dir_, ec);
    if (ec) throw Error(ErrorCode::StorageFailure, "cannot create " + data_dir_.string());
}

ImageRecord Gateway::ingest(const IngestRequest& req) {
    auto slot = queue_.try_reserve();
    if (!slot) {
        throw Error(ErrorCode::QueueFull, "inference queue holds " +
                                              std::to_string(queue_.capacity()) + " jobs");
    }

    const auto now = clock_ ? clock_()
                            : std::chrono::time_point_cast<std::chrono::milliseconds>(
                                  std::chrono::system_clock::now());
    ImageRecord rec;
    rec.image_id = ids_.next(now);
    rec.meta = req.meta;
    rec.width_px = req.info.width;
    rec.height_px = req.info.height;
    rec.byte_len = static_cast<std::int64_t>(req.image.size());
    rec.status = ImageStatus::Queued;
    rec.task = route(req.meta, rec.width_px, rec.height_px, routing_);
    rec.content_type = std::string(mime_type(req.info.format));
    rec.stored_path = rec.image_id + std::string(extension(req.info.format));

    const auto path = image_file(data_dir_, rec);
    write_durably(path, req.image);
    try {
        store_.put_image(rec);
    } catch (...) {
        std::error_code ec;
        std::filesystem::remove(path, ec);
        throw;
    }
    slot->commit(rec.image_id);
    return rec;
}

std::filesystem::path image_file(const std::filesystem::path& data_dir, const ImageRecord& rec) {
    return data_dir / rec.stored_path;
}

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::StorageFailure, "cannot read " + path.string());
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace orchard
