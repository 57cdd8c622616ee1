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

#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "orchard/types.hpp"

namespace orchard {

/// Numerically stable softmax: exponentiates after subtracting the maximum,
/// so large logits never overflow.
template <typename Derived>
Eigen::Array<typename Derived::Scalar, Eigen::Dynamic, 1> softmax(
    const Eigen::DenseBase<Derived>& logits) {
    using Scalar = typename Derived::Scalar;
    using Result = Eigen::Array<Scalar, Eigen::Dynamic, 1>;
    const Result l = logits.derived().array().template cast<Scalar>().reshaped();
    const Result e = (l - l.maxCoeff()).exp();
    return e / e.sum();
}

/// Index of the largest entry; ties resolve to the lowest index.
template <typename Derived>
Eigen::Index argmax(const Eigen::DenseBase<Derived>& v) {
    Eigen::Index best = 0;
    for (Eigen::Index i = 1; i < v.size(); ++i) {
        if (v(i) > v(best)) best = i;
    }
    return best;
}

struct ClassificationResult {
    TaskKind task = TaskKind::LeafDisease;
    std::vector<double> probs;
    std::string label;
    double confidence = 0.0;
    double latency_ms = 0.0;
};

struct ModelSlot;

/// Argmax decision over the slot's label map.
ClassificationResult classify(std::span<const double> probs, const ModelSlot& slot);

}  // namespace orchard
