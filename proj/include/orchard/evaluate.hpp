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

#include <filesystem>
#include <istream>

#include <nlohmann/json.hpp>

#include "orchard/types.hpp"

namespace orchard {

// Line-delimited JSON inputs:
//   classification  {"id": "...", "true": int, "pred": int}
//                   ground truth lines need "true", prediction lines "pred";
//                   a combined dump may be passed as both files.
//   detection gt    {"image": "...", "boxes": [[x1, y1, x2, y2], ...]}
//   detection pred  {"image": "...", "dets": [[x1, y1, x2, y2, score], ...]}
// Blank lines are skipped. Errors: ParseError naming the file and line,
// TaskMismatch when a line has the other task family's shape.

/// Accuracy, macro Precision / Recall / F1-score and the confusion matrix.
nlohmann::json evaluate_classification(std::istream& gt, std::istream& pred, TaskKind task);

/// Precision / Recall / F1-score at conf 0.25 and IoU 0.5, plus mAP50 and
/// mAP50-95 over all predictions.
nlohmann::json evaluate_detection(std::istream& gt, std::istream& pred);

nlohmann::json evaluate_files(TaskKind task, const std::filesystem::path& gt_path,
                              const std::filesystem::path& pred_path);

}  // namespace orchard
