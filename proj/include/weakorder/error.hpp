// Copyright 2026 The weakorder Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
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

namespace weakorder {

enum class ErrorCode {
    InvalidArgument,
    NonHermitianInput,
    DecompositionFailure,
    DimensionMismatch,
    NotAProjector,
    InvalidDensityMatrix,
    GridUnderResolved,
    BackendUnsupported,
    TranslationOutOfRange,
    ImaginaryResidualTooLarge,
    OracleTooLarge,
    PostSelectionTooRare,
    PointerConditionsViolated,
    DegenerateSchedule,
    IllConditionedFit,
    FlowDivergence,
    QuadratureUnsupported,
    ConfigInvalid,
};

constexpr std::string_view error_name(ErrorCode code) {
    switch (code) {
        case ErrorCode::InvalidArgument: return "InvalidArgument";
        case ErrorCode::NonHermitianInput: return "NonHermitianInput";
        case ErrorCode::DecompositionFailure: return "DecompositionFailure";
        case ErrorCode::DimensionMismatch: return "DimensionMismatch";
        case ErrorCode::NotAProjector: return "NotAProjector";
        case ErrorCode::InvalidDensityMatrix: return "InvalidDensityMatrix";
        case ErrorCode::GridUnderResolved: return "GridUnderResolved";
        case ErrorCode::BackendUnsupported: return "BackendUnsupported";
        case ErrorCode::TranslationOutOfRange: return "TranslationOutOfRange";
        case ErrorCode::ImaginaryResidualTooLarge: return "ImaginaryResidualTooLarge";
        case ErrorCode::OracleTooLarge: return "OracleTooLarge";
        case ErrorCode::PostSelectionTooRare: return "PostSelectionTooRare";
        case ErrorCode::PointerConditionsViolated: return "PointerConditionsViolated";
        case ErrorCode::DegenerateSchedule: return "DegenerateSchedule";
        case ErrorCode::IllConditionedFit: return "IllConditionedFit";
        case ErrorCode::FlowDivergence: return "FlowDivergence";
        case ErrorCode::QuadratureUnsupported: return "QuadratureUnsupported";
        case ErrorCode::ConfigInvalid: return "ConfigInvalid";
    }
    return "Unknown";
}

/// Every failure raised by the library carries a machine-readable code; the
/// CLI reports `error_name(code())` in its summary.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string &message)
        : std::runtime_error(std::string(error_name(code)) + ": " + message), code_(code) {}

    ErrorCode code() const noexcept { return code_; }
    std::string_view name() const noexcept { return error_name(code_); }

private:
    ErrorCode code_;
};

}  // namespace weakorder
