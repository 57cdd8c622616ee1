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
#include "orchard/classification.hpp"

#include "orchard/backend.hpp"
#include "orchard/error.hpp"

namespace orchard {

ClassificationResult classify(std::span<const double> probs, const ModelSlot& slot) {
    if (probs.size() != slot.labels.size() || probs.empty()) {
        throw Error(ErrorCode::ShapeMismatch, "probability vector does not match the label map");
    }
    const Eigen::Map<const Eigen::ArrayXd> p(probs.data(), static_cast<Eigen::Index>(probs.size()));
    const Eigen::Index best = argmax(p);
    ClassificationResult r;
    r.task = slot.task;
    r.probs.assign(probs.begin(), probs.end());
    r.label = slot.labels[static_cast<std::size_t>(best)];
    r.confidence = p(best);
    return r;
}

}  // namespace orchard
