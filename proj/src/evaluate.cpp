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
#include "orchard/evaluate.hpp"

#include <fstream>
#include <map>
#include <string>
#include <unordered_map>
#include <vector>

#include "orchard/backend.hpp"
#include "orchard/error.hpp"
#include "orchard/eval_metrics.hpp"

namespace orchard {
namespace {

struct Line {
    std::size_t number;
    nlohmann::json value;
};

[[noreturn]] void parse_error(std::string_view source, std::size_t line, const std::string& why) {
    throw Error(ErrorCode::ParseError,
                std::string(source) + " line " + std::to_string(line) + ": " + why);
}

std::vector<Line> read_lines(std::istream& in, std::string_view source) {
    std::vector<Line> out;
    std::string text;
    for (std::size_t n = 1; std::getline(in, text); ++n) {
        if (text.find_first_not_of(" \t\r") == std::string::npos) continue;
        try {
            auto j = nlohmann::json::parse(text);
            if (!j.is_object()) parse_error(source, n, "expected a JSON object");
            out.push_back({n, std::move(j)});
        } catch (const nlohmann::json::exception& e) {
            parse_error(source, n, e.what());
        }
    }
    return out;
}

bool looks_like_detection(const nlohmann::json& j) {
    return j.contains("image") || j.contains("boxes") || j.contains("dets");
}

bool looks_like_classification(const nlohmann::json& j) {
    return j.contains("true") || j.contains("pred");
}

std::string string_field(const Line& l, const char* key, std::string_view source) {
    const auto it = l.value.find(key);
    if (it == l.value.end() || !it->is_string()) {
        parse_error(source, l.number, std::string("missing string field '") + key + "'");
    }
    return it->get<std::string>();
}

int int_field(const Line& l, const char* key, std::string_view source) {
    const auto it = l.value.find(key);
    if (it == l.value.end() || !it->is_number_integer()) {
        parse_error(source, l.number, std::string("missing integer field '") + key + "'");
    }
    return it->get<int>();
}

BBoxd box_from(const nlohmann::json& a, std::size_t arity, const Line& l, std::string_view source) {
    if (!a.is_array() || a.size() != arity) {
        parse_error(source, l.number, "box must have " + std::to_string(arity) + " numbers");
    }
    for (const auto& v : a) {
        if (!v.is_number()) parse_error(source, l.number, "box entries must be numbers");
    }
    const BBoxd b{a[0].get<double>(), a[1].get<double>(), a[2].get<double>(), a[3].get<double>()};
    if (!b.valid()) parse_error(source, l.number, "box needs x1 < x2 and y1 < y2");
    return b;
}

}  // namespace

nlohmann::json evaluate_classification(std::istream& gt_in, std::istream& pred_in, TaskKind task) {
    if (task == TaskKind::AppleDetection) {
        throw Error(ErrorCode::TaskMismatch, "apple_detection is not a classification task");
    }
    const auto gt = read_lines(gt_in, "gt");
    const auto pred = read_lines(pred_in, "pred");
    for (const auto* lines : {&gt, &pred}) {
        for (const auto& l : *lines) {
            if (looks_like_detection(l.value) && !looks_like_classification(l.value)) {
                throw Error(ErrorCode::TaskMismatch,
                            std::string(lines == &gt ? "gt" : "pred") + " line " +
                                std::to_string(l.number) + " is a detection record but task is " +
                                std::string(to_string(task)));
            }
        }
    }

    std::unordered_map<std::string, int> predicted;
    for (const auto& l : pred) {
        const auto id = string_field(l, "id", "pred");
        if (!predicted.emplace(id, int_field(l, "pred", "pred")).second) {
            parse_error("pred", l.number, "duplicate id '" + id + "'");
        }
    }
    std::vector<int> y_true, y_pred;
    std::unordered_map<std::string, bool> seen;
    for (const auto& l : gt) {
        const auto id = string_field(l, "id", "gt");
        if (!seen.emplace(id, true).second) parse_error("gt", l.number, "duplicate id '" + id + "'");
        const auto it = predicted.find(id);
        if (it == predicted.end()) parse_error("gt", l.number, "no prediction for id '" + id + "'");
        y_true.push_back(int_field(l, "true", "gt"));
        y_pred.push_back(it->second);
    }
    if (predicted.size() != y_true.size()) {
        throw Error(ErrorCode::LengthMismatch, std::to_string(predicted.size()) + " predictions for " +
                                                   std::to_string(y_true.size()) +
                                                   " ground-truth samples");
    }

    const auto labels = default_labels(task);
    const int k = static_cast<int>(labels.size());
    const auto cm = confusion_matrix(y_true, y_pred, k);
    const auto macro = prf_macro(cm);
    const auto per = per_class_metrics(cm);

    nlohmann::json matrix = nlohmann::json::array();
    nlohmann::json per_class = nlohmann::json::object();
    for (int i = 0; i < k; ++i) {
        nlohmann::json row = nlohmann::json::array();
        for (int j = 0; j < k; ++j) row.push_back(cm.counts(i, j));
        matrix.push_back(std::move(row));
        per_class[labels[static_cast<std::size_t>(i)]] = {{"precision", per.precision(i)},
                                                          {"recall", per.recall(i)},
                                                          {"f1", per.f1(i)},
                                                          {"support", cm.counts.row(i).sum()}};
    }
    return {{"task", std::string(to_string(task))},
            {"samples", cm.total()},
            {"averaging", "macro"},
            {"Accuracy", accuracy(cm)},
            {"Precision", macro.precision},
            {"Recall", macro.recall},
            {"F1-score", macro.f1},
            {"labels", labels},
            {"confusion_matrix", std::move(matrix)},
            {"per_class", std::move(per_class)}};
}

nlohmann::json evaluate_detection(std::istream& gt_in, std::istream& pred_in) {
    const auto gt = read_lines(gt_in, "gt");
    const auto pred = read_lines(pred_in, "pred");
    for (const auto* lines : {&gt, &pred}) {
        for (const auto& l : *lines) {
            if (looks_like_classification(l.value) && !looks_like_detection(l.value)) {
                throw Error(ErrorCode::TaskMismatch,
                            std::string(lines == &gt ? "gt" : "pred") + " line " +
                                std::to_string(l.number) +
                                " is a classification record but task is apple_detection");
            }
        }
    }

    // Images keep first-appearance order: ground truth first, then any
    // image that only has predictions.
    std::vector<DetEvalInstance> instances;
    std::map<std::string, std::size_t> index;
    const auto slot_for = [&](const std::string& image) -> DetEvalInstance& {
        const auto [it, fresh] = index.emplace(image, instances.size());
        if (fresh) instances.push_back({image, {}, {}});
        return instances[it->second];
    };
    std::map<std::string, bool> gt_seen, pred_seen;
    for (const auto& l : gt) {
        const auto image = string_field(l, "image", "gt");
        if (!gt_seen.emplace(image, true).second) parse_error("gt", l.number, "duplicate image '" + image + "'");
        const auto it = l.value.find("boxes");
        if (it == l.value.end() || !it->is_array()) parse_error("gt", l.number, "missing array 'boxes'");
        auto& inst = slot_for(image);
        for (const auto& b : *it) inst.gts.push_back(box_from(b, 4, l, "gt"));
    }
    for (const auto& l : pred) {
        const auto image = string_field(l, "image", "pred");
        if (!pred_seen.emplace(image, true).second) parse_error("pred", l.number, "duplicate image '" + image + "'");
        const auto it = l.value.find("dets");
        if (it == l.value.end() || !it->is_array()) parse_error("pred", l.number, "missing array 'dets'");
        auto& inst = slot_for(image);
        for (const auto& d : *it) {
            const BBoxd box = box_from(d, 5, l, "pred");
            const double score = d[4].get<double>();
            if (!(score >= 0.0 && score <= 1.0)) parse_error("pred", l.number, "score must be in [0, 1]");
            inst.preds.push_back({box, score, 0});
        }
    }

    const auto pr = detection_pr(instances, 0.25, 0.5);
    const auto map = map_range(instances);
    nlohmann::json ap = nlohmann::json::object();
    const auto thresholds = coco_iou_thresholds();
    for (std::size_t i = 0; i < thresholds.size(); ++i) {
        ap[std::to_string(50 + 5 * static_cast<int>(i))] = map.ap[i];
    }
    return {{"task", "apple_detection"},
            {"images", instances.size()},
            {"conf_thresh", 0.25},
            {"iou_thresh", 0.5},
            {"Precision", pr.precision},
            {"Recall", pr.recall},
            {"F1-score", pr.f1},
            {"true_positives", pr.true_positives},
            {"predictions", pr.predictions},
            {"ground_truth", pr.n_gt},
            {"mAP50", map.map50},
            {"mAP50-95", map.map50_95},
            {"ap_by_iou", std::move(ap)}};
}

nlohmann::json evaluate_files(TaskKind task, const std::filesystem::path& gt_path,
                              const std::filesystem::path& pred_path) {
    std::ifstream gt(gt_path);
    if (!gt) throw Error(ErrorCode::ParseError, "cannot read " + gt_path.string());
    std::ifstream pred(pred_path);
    if (!pred) throw Error(ErrorCode::ParseError, "cannot read " + pred_path.string());
    return task == TaskKind::AppleDetection ? evaluate_detection(gt, pred)
                                            : evaluate_classification(gt, pred, task);
}

}  // namespace orchard
