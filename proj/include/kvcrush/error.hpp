// Copyright (C) 2026 The KVCrush Toolkit Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace kvcrush {

/// Failure categories raised by the toolkit. The numeric values are mirrored
/// by the C status codes in kvcrush.h, so only append.
enum class ErrorCode : int {
    InvalidArgument = 1,
    MalformedHeader,
    DimensionMismatch,
    NonFiniteValue,
    IoFailure,
    InvalidSpec,
    Overflow,
    ShapeMismatch,
    InvalidFraction,
    LayerOutOfRange,
    EmptyInput,
    LengthMismatch,
    ZeroBuckets,
    InconsistentAssignment,
    KTooLarge,
    BudgetExceedsSequence,
    WindowTooLarge,
    BudgetTooSmall,
    EmptyPage,
    InvalidPartition,
    IndexOutOfRange,
    Schema,
    TooManyCells,
    Internal,
};

std::string_view error_code_name(ErrorCode code) noexcept;

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message)
        : std::runtime_error(message), m_code(code) {}

    ErrorCode code() const noexcept { return m_code; }

private:
    ErrorCode m_code;
};

[[noreturn]] void raise(ErrorCode code, const std::string& message);

inline void require(bool condition, ErrorCode code, const std::string& message) {
    if (!condition) {
        raise(code, message);
    }
}

}  // namespace kvcrush
