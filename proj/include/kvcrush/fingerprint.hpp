// Copyright (C) 2026 The KVCrush Toolkit Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "kvcrush/attention.hpp"
#include "kvcrush/bits.hpp"
#include "kvcrush/matrix.hpp"
#include "kvcrush/trace.hpp"

namespace kvcrush {

/// Per-token, per-head importance (S x H, mean attention received) and the
/// per-head thresholds used to binarize it.
struct HeadScores {
    Matrix<double> scores;
    std::vector<double> thresholds;
};

struct FingerprintResult {
    FingerprintMatrix fingerprints;  // one H-bit row per token
    HeadScores head_scores;
};

/// Number of entries a head keeps at `retain_fraction`: ceil(fraction * n).
std::size_t retained_count(std::size_t n, double retain_fraction);

/// The value that keeps ceil(fraction * n) scores at or above it (the
/// (1 - fraction) empirical quantile).
double retention_threshold(std::span<const double> scores, double retain_fraction);

/// Binarizes the listed rows of an S x H score matrix. Thresholds are derived
/// per head from the listed rows only; row i of the result is rows[i]. Each
/// head sets exactly ceil(fraction * rows) bits, ties at the threshold going
/// to earlier rows.
FingerprintMatrix threshold_fingerprints(const Matrix<double>& scores, std::span<const std::size_t> rows,
                                         double retain_fraction, std::vector<double>* thresholds = nullptr);

/// Per-head mean attention received, S x H.
Matrix<double> mean_received(const LayerAttention& attention);

/// Fingerprints for every token of one layer. Bit h of token t is set iff
/// head h's mean received attention for t reaches that head's threshold.
FingerprintResult compute_fingerprints(const AttentionTrace& trace, std::size_t layer, double retain_fraction,
                                       bool causal = true);
FingerprintResult compute_fingerprints(const LayerAttention& attention, double retain_fraction);

void validate_retain_fraction(double retain_fraction);

}  // namespace kvcrush
