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

#include <stdexcept>
#include <string>
#include <string_view>

namespace orchard {

enum class ErrorCode {
    // ingestion
    MissingPart,
    MalformedMeta,
    UnsupportedImageFormat,
    ImageTooLarge,
    DimensionOutOfRange,
    QueueFull,
    // storage
    StorageFailure,
    Corrupt,
    Locked,
    MigrationFailure,
    ForeignKeyViolation,
    DuplicateResult,
    NotFound,
    // imaging
    CorruptImage,
    UnsupportedColorModel,
    DegenerateBox,
    // runtime
    BackendUnavailable,
    ShapeMismatch,
    // evaluation
    LengthMismatch,
    LabelOutOfRange,
    EmptyMatrix,
    NoGroundTruth,
    ClassTooSmall,
    ParseError,
    TaskMismatch,
    // configuration and API
    InvalidConfig,
    InvalidArgument,
};

std::string_view to_string(ErrorCode code) noexcept;

/// Exception type carried by every fallible operation in the library. The
/// code is stable and machine-readable; the message is for humans.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& detail)
        : std::runtime_error(detail), code_(code) {}

    ErrorCode code() const noexcept { return code_; }
    std::string_view code_name() const noexcept { return to_string(code_); }

private:
    ErrorCode code_;
};

}  // namespace orchard
