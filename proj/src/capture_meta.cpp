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
#include "orchard/capture_meta.hpp"

#include <cmath>
#include <limits>

#include "orchard/error.hpp"

namespace orchard {

namespace {

[[noreturn]] void malformed(const std::string& field, const std::string& why) {
    throw Error(ErrorCode::MalformedMeta, field + ": " + why);
}

}  // namespace

bool is_valid_device_id(std::string_view id) noexcept {
    if (id.empty() || id.size() > 64) return false;
    for (char c : id) {
        bool ok = (c >= 'A' && c <= 'Z') || (c >= 'a' && c <= 'z') ||
                  (c >= '0' && c <= '9') || c == '_' || c == '-';
        if (!ok) return false;
    }
    return true;
}

CaptureMeta meta_from_json(const nlohmann::json& j) {
    if (!j.is_object()) malformed("meta", "expected a JSON object");
    CaptureMeta meta;

    auto it = j.find("device_id");
    if (it == j.end()) malformed("device_id", "missing");
    if (!it->is_string()) malformed("device_id", "expected string");
    meta.device_id = it->get<std::string>();
    if (!is_valid_device_id(meta.device_id)) {
        malformed("device_id", "must be 1-64 chars of [A-Za-z0-9_-]");
    }

    it = j.find("captured_at");
    if (it == j.end()) malformed("captured_at", "missing");
    if (!it->is_string()) malformed("captured_at", "expected string");
    auto ts = parse_rfc3339(it->get<std::string>());
    if (!ts) malformed("captured_at", "not an RFC 3339 timestamp with explicit offset");
    meta.captured_at = *ts;

    it = j.find("altitude_m");
    if (it == j.end()) malformed("altitude_m", "missing");
    if (!it->is_number()) malformed("altitude_m", "expected number");
    meta.altitude_m = it->get<double>();
    if (!std::isfinite(meta.altitude_m) || meta.altitude_m < 0.0 ||
        meta.altitude_m > kMaxAltitudeM) {
        malformed("altitude_m", "must be within [0, 500]");
    }

    it = j.find("frame_kind");
    if (it != j.end() && !it->is_null()) {
        if (!it->is_string()) malformed("frame_kind", "expected string");
        auto kind = parse_frame_kind(it->get<std::string>());
        if (!kind) malformed("frame_kind", "unknown value '" + it->get<std::string>() + "'");
        meta.frame_kind = *kind;
    }

    it = j.find("sequence_no");
    if (it == j.end()) malformed("sequence_no", "missing");
    if (!it->is_number_integer()) malformed("sequence_no", "expected unsigned integer");
    if (it->is_number_unsigned()) {
        auto v = it->get<std::uint64_t>();
        if (v > std::numeric_limits<std::uint32_t>::max()) {
            malformed("sequence_no", "exceeds 32 bits");
        }
        meta.sequence_no = static_cast<std::uint32_t>(v);
    } else {
        auto v = it->get<std::int64_t>();
        if (v < 0 || v > std::numeric_limits<std::uint32_t>::max()) {
            malformed("sequence_no", "must be within [0, 4294967295]");
        }
        meta.sequence_no = static_cast<std::uint32_t>(v);
    }
    return meta;
}

CaptureMeta parse_meta(std::string_view text) {
    auto j = nlohmann::json::parse(text, nullptr, /*allow_exceptions=*/false);
    if (j.is_discarded()) malformed("meta", "invalid JSON");
    return meta_from_json(j);
}

nlohmann::json meta_to_json(const CaptureMeta& meta) {
    return {
        {"device_id", meta.device_id},
        {"captured_at", format_rfc3339(meta.captured_at)},
        {"altitude_m", meta.altitude_m},
        {"frame_kind", to_string(meta.frame_kind)},
        {"sequence_no", meta.sequence_no},
    };
}

std::string serialize_meta(const CaptureMeta& meta) { return meta_to_json(meta).dump(); }

nlohmann::json record_to_json(const ImageRecord& rec) {
    nlohmann::json j = meta_to_json(rec.meta);
    j["image_id"] = rec.image_id;
    j["width_px"] = rec.width_px;
    j["height_px"] = rec.height_px;
    j["byte_len"] = rec.byte_len;
    j["status"] = to_string(rec.status);
    j["task"] = to_string(rec.task);
    j["content_type"] = rec.content_type;
    if (!rec.failure_reason.empty()) j["reason"] = rec.failure_reason;
    return j;
}

}  // namespace orchard
