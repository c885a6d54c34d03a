// Copyright (C) 2026 The KVCrush Toolkit Authors
// SPDX-License-Identifier: Apache-2.0

#include "kvcrush/error.hpp"

namespace kvcrush {

std::string_view error_code_name(ErrorCode code) noexcept {
    switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::MalformedHeader: return "MalformedHeader";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::NonFiniteValue: return "NonFiniteValue";
    case ErrorCode::IoFailure: return "IoFailure";
    case ErrorCode::InvalidSpec: return "InvalidSpec";
    case ErrorCode::Overflow: return "OverflowExceedsAddressSpace";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::InvalidFraction: return "InvalidFraction";
    case ErrorCode::LayerOutOfRange: return "LayerOutOfRange";
    case ErrorCode::EmptyInput: return "EmptyInput";
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::ZeroBuckets: return "ZeroBuckets";
    case ErrorCode::InconsistentAssignment: return "InconsistentAssignment";
    case ErrorCode::KTooLarge: return "KTooLarge";
    case ErrorCode::BudgetExceedsSequence: return "BudgetExceedsSequence";
    case ErrorCode::WindowTooLarge: return "WindowTooLarge";
    case ErrorCode::BudgetTooSmall: return "BudgetTooSmall";
    case ErrorCode::EmptyPage: return "EmptyPage";
    case ErrorCode::InvalidPartition: return "InvalidPartition";
    case ErrorCode::IndexOutOfRange: return "IndexOutOfRange";
    case ErrorCode::Schema: return "Schema";
    case ErrorCode::TooManyCells: return "TooManyCells";
    case ErrorCode::Internal: return "Internal";
    }
    return "Unknown";
}

void raise(ErrorCode code, const std::string& message) {
    throw Error(code, std::string(error_code_name(code)) + ": " + message);
}

}  // namespace kvcrush
