// Copyright (C) 2026 The KVCrush Toolkit Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "kvcrush/matrix.hpp"
#include "kvcrush/trace.hpp"

namespace kvcrush {

/// Receives one softmax row: (query row index, probabilities over all S keys).
/// Masked entries are exactly zero.
using AttentionRowFn = std::function<void(std::size_t, std::span<const double>)>;

/// Streams rows [row_begin, row_end) of softmax(Q K^T / sqrt(d_k)) without
/// materializing the S x S matrix.
void for_each_attention_row(const Matrix<float>& query, const Matrix<float>& key, bool causal,
                            std::size_t row_begin, std::size_t row_end, const AttentionRowFn& fn);

/// Full S x S attention matrix. Rows sum to 1; with `causal` set, entries
/// above the diagonal are exactly 0.
Matrix<double> attention_matrix(const Matrix<float>& query, const Matrix<float>& key, bool causal = true);

/// Mean attention received per token: w(t) = (1/S) sum_j A(j, t).
std::vector<double> head_scores(const Matrix<double>& attention);

/// Column sums of every head's attention in one layer, over all rows and over
/// the trailing observation window. Shared by the importance policies and
/// the fingerprinting step so each layer's attention is computed once.
struct LayerAttention {
    std::size_t layer = 0;
    std::size_t seq_len = 0;
    std::size_t num_heads = 0;
    std::size_t window = 0;
    Matrix<double> received;         // S x H, sum over all query rows
    Matrix<double> window_received;  // S x H, sum over the last `window` rows
};

/// Throws LayerOutOfRange / WindowTooLarge. window = 0 skips the windowed sums.
LayerAttention accumulate_layer_attention(const AttentionTrace& trace, std::size_t layer, bool causal = true,
                                          std::size_t window = 0);

}  // namespace kvcrush
