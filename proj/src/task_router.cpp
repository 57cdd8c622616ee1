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
#include "orchard/task_router.hpp"

#include <cmath>
#include <string>

#include "orchard/error.hpp"

namespace orchard {

void RoutingConfig::validate() const {
    if (!std::isfinite(altitude_threshold_m) || altitude_threshold_m <= 0.0) {
        throw Error(ErrorCode::InvalidConfig,
                    "altitude_threshold_m must be positive, got " +
                        std::to_string(altitude_threshold_m));
    }
}

}  // namespace orchard
