// Copyright (C) 2026 The KVCrush Toolkit Authors
// SPDX-License-Identifier: Apache-2.0

#include "kvcrush/fingerprint.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>

#include "kvcrush/error.hpp"

namespace kvcrush {

void validate_retain_fraction(double retain_fraction) {
    require(retain_fraction > 0.0 && retain_fraction <= 1.0, ErrorCode::InvalidFraction,
            "retain_fraction must lie in (0, 1], got " + std::to_string(retain_fraction));
}

std::size_t retained_count(std::size_t n, double retain_fraction) {
    validate_retain_fraction(retain_fraction);
    if (n == 0) {
        return 0;
    }
    // The epsilon keeps products like 0.3 * 10 from rounding up to 4.
    const double exact = retain_fraction * static_cast<double>(n);
    auto k = static_cast<std::size_t>(std::ceil(exact - 1e-9 * std::max(1.0, exact)));
    return std::clamp<std::size_t>(k, 1, n);
}

double retention_threshold(std::span<const double> scores, double retain_fraction) {
    require(!scores.empty(), ErrorCode::EmptyInput, "cannot threshold an empty score list");
    const std::size_t k = retained_count(scores.size(), retain_fraction);
    std::vector<double> sorted(scores.begin(), scores.end());
    std::nth_element(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(k - 1), sorted.end(),
                     std::greater<>());
    return sorted[k - 1];
}

FingerprintMatrix threshold_fingerprints(const Matrix<double>& scores, std::span<const std::size_t> rows,
                                         double retain_fraction, std::vector<double>* thresholds) {
    validate_retain_fraction(retain_fraction);
    const std::size_t H = scores.cols();
    FingerprintMatrix out(rows.size(), H);
    if (thresholds) {
        thresholds->assign(H, 0.0);
    }
    if (rows.empty()) {
        return out;
    }
    std::vector<double> column(rows.size());
    for (std::size_t h = 0; h < H; ++h) {
        for (std::size_t i = 0; i < rows.size(); ++i) {
            require(rows[i] < scores.rows(), ErrorCode::IndexOutOfRange, "score row out of range");
            column[i] = scores(rows[i], h);
            require(std::isfinite(column[i]) && column[i] >= 0.0, ErrorCode::NonFiniteValue,
                    "head scores must be finite and nonnegative");
        }
        const double theta = retention_threshold(column, retain_fraction);
        if (thresholds) {
            (*thresholds)[h] = theta;
        }
        // Scores above theta first, then ties at theta by position.
        const std::size_t k = retained_count(rows.size(), retain_fraction);
        std::size_t kept = 0;
        for (std::size_t i = 0; i < rows.size(); ++i) {
            if (column[i] > theta) {
                out.set(i, h);
                ++kept;
            }
        }
        for (std::size_t i = 0; i < rows.size() && kept < k; ++i) {
            if (column[i] == theta) {
                out.set(i, h);
                ++kept;
            }
        }
    }
    return out;
}

Matrix<double> mean_received(const LayerAttention& attention) {
    Matrix<double> scores = attention.received;
    const double inv = 1.0 / static_cast<double>(attention.seq_len);
    for (auto& v : scores.data()) {
        v *= inv;
    }
    return scores;
}

FingerprintResult compute_fingerprints(const LayerAttention& attention, double retain_fraction) {
    validate_retain_fraction(retain_fraction);
    FingerprintResult out;
    out.head_scores.scores = mean_received(attention);
    std::vector<std::size_t> all(attention.seq_len);
    std::iota(all.begin(), all.end(), std::size_t{0});
    out.fingerprints =
        threshold_fingerprints(out.head_scores.scores, all, retain_fraction, &out.head_scores.thresholds);
    return out;
}

FingerprintResult compute_fingerprints(const AttentionTrace& trace, std::size_t layer, double retain_fraction,
                                       bool causal) {
    validate_retain_fraction(retain_fraction);
    return compute_fingerprints(accumulate_layer_attention(trace, layer, causal), retain_fraction);
}

}  // namespace kvcrush
