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
#include "orchard/eval_metrics.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include "orchard/error.hpp"
#include "orchard/splitmix.hpp"

namespace orchard {

ConfusionMatrix confusion_matrix(std::span<const int> y_true, std::span<const int> y_pred, int k) {
    if (y_true.size() != y_pred.size()) {
        throw Error(ErrorCode::LengthMismatch, "y_true has " + std::to_string(y_true.size()) +
                                                   " labels, y_pred has " +
                                                   std::to_string(y_pred.size()));
    }
    if (k < 1) throw Error(ErrorCode::LabelOutOfRange, "class count must be positive");
    ConfusionMatrix cm{CountMatrix::Zero(k, k)};
    for (std::size_t i = 0; i < y_true.size(); ++i) {
        const int t = y_true[i];
        const int p = y_pred[i];
        if (t < 0 || t >= k || p < 0 || p >= k) {
            throw Error(ErrorCode::LabelOutOfRange,
                        "sample " + std::to_string(i) + " has a label outside [0, " +
                            std::to_string(k) + ")");
        }
        ++cm.counts(t, p);
    }
    return cm;
}

double accuracy(const ConfusionMatrix& cm) {
    const std::int64_t total = cm.total();
    if (total <= 0) throw Error(ErrorCode::EmptyMatrix, "confusion matrix has no samples");
    return static_cast<double>(cm.counts.trace()) / static_cast<double>(total);
}

PerClassMetrics per_class_metrics(const ConfusionMatrix& cm) {
    const int k = cm.k();
    PerClassMetrics m{Eigen::ArrayXd::Zero(k), Eigen::ArrayXd::Zero(k), Eigen::ArrayXd::Zero(k)};
    for (int c = 0; c < k; ++c) {
        const auto tp = static_cast<double>(cm.counts(c, c));
        const auto predicted = static_cast<double>(cm.counts.col(c).sum());
        const auto actual = static_cast<double>(cm.counts.row(c).sum());
        m.precision(c) = predicted > 0 ? tp / predicted : 0.0;
        m.recall(c) = actual > 0 ? tp / actual : 0.0;
        m.f1(c) = f1(m.precision(c), m.recall(c));
    }
    return m;
}

namespace {

double ordered_mean(const Eigen::ArrayXd& v) {
    double sum = 0.0;
    for (Eigen::Index i = 0; i < v.size(); ++i) sum += v(i);
    return v.size() > 0 ? sum / static_cast<double>(v.size()) : 0.0;
}

}  // namespace

MacroMetrics prf_macro(const ConfusionMatrix& cm) {
    if (cm.total() <= 0) throw Error(ErrorCode::EmptyMatrix, "confusion matrix has no samples");
    const PerClassMetrics m = per_class_metrics(cm);
    return {ordered_mean(m.precision), ordered_mean(m.recall), ordered_mean(m.f1)};
}

MatchResult match_detections(std::span<const Detection> preds, std::span<const BBoxd> gts,
                             double iou_thresh) {
    std::vector<std::size_t> order(preds.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return preds[a].score > preds[b].score;
    });
    MatchResult out;
    out.n_gt = gts.size();
    out.flags.reserve(preds.size());
    std::vector<bool> taken(gts.size(), false);
    for (std::size_t idx : order) {
        double best_iou = -1.0;
        std::size_t best = gts.size();
        for (std::size_t g = 0; g < gts.size(); ++g) {
            if (taken[g]) continue;
            const double v = iou(preds[idx].bbox, gts[g]);
            if (v > best_iou) {
                best_iou = v;
                best = g;
            }
        }
        const bool tp = best < gts.size() && best_iou >= iou_thresh;
        if (tp) taken[best] = true;
        out.flags.push_back({preds[idx].score, tp});
    }
    return out;
}

std::optional<double> average_precision(std::span<const RankedFlag> flags, std::size_t n_gt) {
    if (n_gt == 0) {
        if (flags.empty()) return std::nullopt;
        return 0.0;
    }
    std::vector<RankedFlag> ranked(flags.begin(), flags.end());
    std::stable_sort(ranked.begin(), ranked.end(),
                     [](const RankedFlag& a, const RankedFlag& b) { return a.score > b.score; });

    const std::size_t n = ranked.size();
    std::vector<double> recall(n);
    std::vector<double> precision(n);
    std::size_t tp = 0;
    for (std::size_t i = 0; i < n; ++i) {
        if (ranked[i].is_tp) ++tp;
        recall[i] = static_cast<double>(tp) / static_cast<double>(n_gt);
        precision[i] = static_cast<double>(tp) / static_cast<double>(i + 1);
    }
    // Precision envelope: max precision at any rank at or beyond i.
    for (std::size_t i = n; i-- > 1;) precision[i - 1] = std::max(precision[i - 1], precision[i]);

    double sum = 0.0;
    for (int t = 0; t <= 100; ++t) {
        const double level = static_cast<double>(t) / 100.0;
        auto it = std::lower_bound(recall.begin(), recall.end(), level);
        if (it != recall.end()) sum += precision[static_cast<std::size_t>(it - recall.begin())];
    }
    return sum / 101.0;
}

std::array<double, 10> coco_iou_thresholds() noexcept {
    std::array<double, 10> t{};
    for (int i = 0; i < 10; ++i) t[static_cast<std::size_t>(i)] = (50.0 + 5.0 * i) / 100.0;
    return t;
}

MapResult map_range(std::span<const DetEvalInstance> instances) {
    const auto thresholds = coco_iou_thresholds();
    MapResult result;
    for (std::size_t ti = 0; ti < thresholds.size(); ++ti) {
        std::vector<RankedFlag> pooled;
        std::size_t n_gt = 0;
        for (const auto& inst : instances) {
            MatchResult m = match_detections(inst.preds, inst.gts, thresholds[ti]);
            pooled.insert(pooled.end(), m.flags.begin(), m.flags.end());
            n_gt += m.n_gt;
        }
        auto ap = average_precision(pooled, n_gt);
        if (!ap) throw Error(ErrorCode::NoGroundTruth, "no ground truth and no predictions");
        result.ap[ti] = *ap;
    }
    result.map50 = result.ap[0];
    double sum = 0.0;
    for (double v : result.ap) sum += v;
    result.map50_95 = sum / static_cast<double>(result.ap.size());
    return result;
}

DetectionPR detection_pr(std::span<const DetEvalInstance> instances, double conf_thresh,
                         double iou_thresh) {
    DetectionPR pr;
    for (const auto& inst : instances) {
        std::vector<Detection> kept;
        for (const auto& d : inst.preds) {
            if (d.score >= conf_thresh) kept.push_back(d);
        }
        MatchResult m = match_detections(kept, inst.gts, iou_thresh);
        pr.n_gt += m.n_gt;
        pr.predictions += m.flags.size();
        for (const auto& f : m.flags) pr.true_positives += f.is_tp ? 1 : 0;
    }
    const auto tp = static_cast<double>(pr.true_positives);
    pr.precision = pr.predictions ? tp / static_cast<double>(pr.predictions) : 0.0;
    pr.recall = pr.n_gt ? tp / static_cast<double>(pr.n_gt) : 0.0;
    pr.f1 = f1(pr.precision, pr.recall);
    return pr;
}

void SplitSpec::validate() const {
    if (ratios.size() < 2 || ratios.size() > 3) {
        throw Error(ErrorCode::InvalidConfig, "split must have 2 or 3 parts");
    }
    double sum = 0.0;
    for (double r : ratios) {
        if (!(r > 0.0) || !std::isfinite(r)) {
            throw Error(ErrorCode::InvalidConfig, "split ratios must be positive");
        }
        sum += r;
    }
    if (std::abs(sum - 1.0) > 1e-9) throw Error(ErrorCode::InvalidConfig, "split ratios must sum to 1");
}

std::vector<std::size_t> largest_remainder(std::size_t n, std::span<const double> ratios) {
    std::vector<std::size_t> counts(ratios.size());
    std::vector<double> remainder(ratios.size());
    std::size_t assigned = 0;
    for (std::size_t i = 0; i < ratios.size(); ++i) {
        const double quota = ratios[i] * static_cast<double>(n);
        // Absorb representation error such as 0.2 * 10 landing a hair under 2.
        double whole = std::floor(quota + 1e-9);
        counts[i] = static_cast<std::size_t>(whole);
        remainder[i] = std::max(0.0, quota - whole);
        assigned += counts[i];
    }
    std::vector<std::size_t> order(ratios.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return remainder[a] > remainder[b]; });
    for (std::size_t i = 0; assigned < n; i = (i + 1) % order.size()) {
        ++counts[order[i]];
        ++assigned;
    }
    return counts;
}

std::vector<std::vector<std::size_t>> stratified_split(std::span<const int> labels,
                                                       const SplitSpec& spec) {
    spec.validate();
    std::map<int, std::vector<std::size_t>> by_class;
    for (std::size_t i = 0; i < labels.size(); ++i) by_class[labels[i]].push_back(i);

    std::vector<std::vector<std::size_t>> parts(spec.ratios.size());
    for (auto& [cls, members] : by_class) {
        if (members.size() < spec.ratios.size()) {
            throw Error(ErrorCode::ClassTooSmall,
                        "class " + std::to_string(cls) + " has " + std::to_string(members.size()) +
                            " samples, need at least " + std::to_string(spec.ratios.size()));
        }
        std::uint8_t key[16];
        const auto cls64 = static_cast<std::uint64_t>(static_cast<std::int64_t>(cls));
        for (int b = 0; b < 8; ++b) {
            key[b] = static_cast<std::uint8_t>(spec.seed >> (8 * b));
            key[8 + b] = static_cast<std::uint8_t>(cls64 >> (8 * b));
        }
        SplitMix64 rng(fnv1a64(std::span<const std::uint8_t>(key, 16)));
        for (std::size_t i = members.size(); i-- > 1;) {
            std::swap(members[i], members[rng.below(i + 1)]);
        }
        const auto sizes = largest_remainder(members.size(), spec.ratios);
        std::size_t offset = 0;
        for (std::size_t p = 0; p < sizes.size(); ++p) {
            parts[p].insert(parts[p].end(), members.begin() + static_cast<std::ptrdiff_t>(offset),
                            members.begin() + static_cast<std::ptrdiff_t>(offset + sizes[p]));
            offset += sizes[p];
        }
    }
    for (auto& part : parts) std::sort(part.begin(), part.end());
    return parts;
}

}  // namespace orchard
