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

#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

#include "orchard/types.hpp"

namespace orchard {

/// Validates and converts the "meta" JSON object. Throws Error(MalformedMeta)
/// naming the offending field. Unknown fields are ignored.
CaptureMeta meta_from_json(const nlohmann::json& j);
CaptureMeta parse_meta(std::string_view text);

nlohmann::json meta_to_json(const CaptureMeta& meta);
std::string serialize_meta(const CaptureMeta& meta);

bool is_valid_device_id(std::string_view id) noexcept;

nlohmann::json record_to_json(const ImageRecord& rec);

}  // namespace orchard
