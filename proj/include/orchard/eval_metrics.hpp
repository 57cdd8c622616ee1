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

// Offline evaluation: classification confusion-matrix metrics, detection
// matching with COCO-style 101-point AP, and stratified dataset splits.
//
// All reductions sum in ascending index order so results do not depend on
// vectorization or threading.

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "orchard/bbox.hpp"
#include "orchard/detection.hpp"

namespace orchard {

using CountMatrix = Eigen::Matrix<std::int64_t, Eigen::Dynamic, Eigen::Dynamic>;

/// Rows are true classes, columns predicted classes.
struct ConfusionMatrix {
    CountMatrix counts;

    int k() const noexcept { return static_cast<int>(counts.rows()); }
    std::int64_t total() const noexcept { return counts.sum(); }
};

ConfusionMatrix confusion_matrix(std::span<const int> y_true, std::span<const int> y_pred, int k);

/// trace / total. Throws EmptyMatrix when there are no samples.
double accuracy(const ConfusionMatrix& cm);

struct PerClassMetrics {
    Eigen::ArrayXd precision;
    Eigen::ArrayXd recall;
    Eigen::ArrayXd f1;
};

/// Per-class precision (diag / column sum), recall (diag / row sum) and F1.
/// A zero denominator yields 0 for that entry.
PerClassMetrics per_class_metrics(const ConfusionMatrix& cm);

struct MacroMetrics {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
};

/// Unweighted means of the per-class values. Throws EmptyMatrix.
MacroMetrics prf_macro(const ConfusionMatrix& cm);

/// Harmonic mean of precision and recall; 0 when both are 0.
template <typename Scalar>
constexpr Scalar f1(Scalar p, Scalar r) noexcept {
    const Scalar s = p + r;
    return s == Scalar(0) ? Scalar(0) : Scalar(2) * p * r / s;
}

struct RankedFlag {
    double score = 0.0;
    bool is_tp = false;

    friend bool operator==(const RankedFlag&, const RankedFlag&) = default;
};

struct MatchResult {
    std::vector<RankedFlag> flags;  // score-descending
    std::size_t n_gt = 0;
};

/// Greedy matching: predictions in score order (stable for ties) each take
/// the unmatched ground-truth box of highest IoU (lowest index on ties) if
/// that IoU reaches `iou_thresh`; otherwise they are false positives.
MatchResult match_detections(std::span<const Detection> preds, std::span<const BBoxd> gts,
                             double iou_thresh);

/// 101-point interpolated AP. Flags are ranked by score (stable). Returns
/// nullopt when there is neither ground truth nor any prediction; 0 when
/// there are predictions but no ground truth.
std::optional<double> average_precision(std::span<const RankedFlag> flags, std::size_t n_gt);

struct DetEvalInstance {
    std::string image;
    std::vector<Detection> preds;
    std::vector<BBoxd> gts;
};

/// IoU thresholds 0.50, 0.55, ..., 0.95, each computed as an exact
/// quotient so that e.g. 0.60 compares equal to a 3/5 overlap.
std::array<double, 10> coco_iou_thresholds() noexcept;

struct MapResult {
    double map50 = 0.0;
    double map50_95 = 0.0;
    std::array<double, 10> ap{};
};

/// Flags are pooled across all images per threshold. Throws NoGroundTruth if
/// no image has ground truth or predictions.
MapResult map_range(std::span<const DetEvalInstance> instances);

struct DetectionPR {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    std::size_t true_positives = 0;
    std::size_t predictions = 0;
    std::size_t n_gt = 0;
};

/// Operating-point precision/recall: predictions below `conf_thresh` are
/// discarded, the rest matched at `iou_thresh`.
DetectionPR detection_pr(std::span<const DetEvalInstance> instances, double conf_thresh = 0.25,
                         double iou_thresh = 0.5);

struct SplitSpec {
    std::vector<double> ratios;
    std::uint64_t seed = 0;

    /// Throws InvalidConfig: 2 or 3 positive parts summing to 1 +- 1e-9.
    void validate() const;
};

/// Integer part sizes for n items: floors of ratio * n, with the leftover
/// units going to the largest fractional remainders (lowest index on ties).
std::vector<std::size_t> largest_remainder(std::size_t n, std::span<const double> ratios);

/// Per class, shuffles the member indices with a generator seeded by
/// (seed, class id) and cuts them by largest-remainder sizes. The returned
/// index sets (one per ratio, ascending) are a disjoint cover of all inputs.
/// Throws ClassTooSmall if any class has fewer members than parts.
std::vector<std::vector<std::size_t>> stratified_split(std::span<const int> labels,
                                                       const SplitSpec& spec);

}  // namespace orchard
