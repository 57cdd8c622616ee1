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

#include "orchard/types.hpp"

namespace orchard {

struct RoutingConfig {
    double altitude_threshold_m = 8.0;
    TaskKind default_task = TaskKind::AppleDetection;

    /// Throws Error(InvalidConfig) unless the threshold is positive and finite.
    void validate() const;
};

/// Picks the single model that sees this capture. An explicit frame_kind
/// always wins; for unknown framing, captures at or above the altitude
/// threshold are orchard scenes (detection) and everything lower goes to
/// the configured default. Image dimensions are accepted for interface
/// stability but do not influence the decision.
constexpr TaskKind route(const CaptureMeta& meta, int /*width_px*/, int /*height_px*/,
                         const RoutingConfig& cfg) noexcept {
    switch (meta.frame_kind) {
        case FrameKind::LeafCloseup: return TaskKind::LeafDisease;
        case FrameKind::FruitCloseup: return TaskKind::Freshness;
        case FrameKind::CanopyWide: return TaskKind::AppleDetection;
        case FrameKind::Unknown: break;
    }
    if (meta.altitude_m >= cfg.altitude_threshold_m) return TaskKind::AppleDetection;
    return cfg.default_task;
}

}  // namespace orchard
