// Copyright (C) 2026 The KVCrush Toolkit Authors
// SPDX-License-Identifier: Apache-2.0

#include "kvcrush/attention.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "kvcrush/error.hpp"

namespace kvcrush {

namespace {

float dot(std::span<const float> a, std::span<const float> b) noexcept {
    float acc = 0.0F;
    for (std::size_t i = 0; i < a.size(); ++i) {
        acc += a[i] * b[i];
    }
    return acc;
}

}  // namespace

void for_each_attention_row(const Matrix<float>& query, const Matrix<float>& key, bool causal,
                            std::size_t row_begin, std::size_t row_end, const AttentionRowFn& fn) {
    require(query.rows() == key.rows() && query.cols() == key.cols(), ErrorCode::ShapeMismatch,
            "Q and K must have identical shapes");
    require(query.cols() >= 1, ErrorCode::ShapeMismatch, "head dimension must be at least 1");
    require(row_begin <= row_end && row_end <= query.rows(), ErrorCode::IndexOutOfRange, "row range out of bounds");

    const std::size_t S = query.rows();
    const double scale = 1.0 / std::sqrt(static_cast<double>(query.cols()));
    std::vector<double> row(S, 0.0);
    for (std::size_t j = row_begin; j < row_end; ++j) {
        const std::size_t visible = causal ? j + 1 : S;
        const auto q = query.row(j);
        double max_logit = -std::numeric_limits<double>::infinity();
        for (std::size_t t = 0; t < visible; ++t) {
            row[t] = static_cast<double>(dot(q, key.row(t))) * scale;
            max_logit = std::max(max_logit, row[t]);
        }
        require(std::isfinite(max_logit), ErrorCode::NonFiniteValue,
                "non-finite attention logit in row " + std::to_string(j));
        double total = 0.0;
        for (std::size_t t = 0; t < visible; ++t) {
            row[t] = std::exp(row[t] - max_logit);
            total += row[t];
        }
        const double inv = 1.0 / total;
        for (std::size_t t = 0; t < visible; ++t) {
            row[t] *= inv;
        }
        std::fill(row.begin() + static_cast<std::ptrdiff_t>(visible), row.end(), 0.0);
        fn(j, row);
    }
}

Matrix<double> attention_matrix(const Matrix<float>& query, const Matrix<float>& key, bool causal) {
    Matrix<double> out(query.rows(), query.rows());
    for_each_attention_row(query, key, causal, 0, query.rows(), [&](std::size_t j, std::span<const double> row) {
        std::copy(row.begin(), row.end(), out.row(j).begin());
    });
    return out;
}

std::vector<double> head_scores(const Matrix<double>& attention) {
    require(attention.rows() == attention.cols() && attention.rows() >= 1, ErrorCode::ShapeMismatch,
            "attention matrix must be square and non-empty");
    const std::size_t S = attention.rows();
    std::vector<double> w(S, 0.0);
    for (std::size_t j = 0; j < S; ++j) {
        const auto row = attention.row(j);
        for (std::size_t t = 0; t < S; ++t) {
            w[t] += row[t];
        }
    }
    for (auto& v : w) {
        v /= static_cast<double>(S);
    }
    return w;
}

LayerAttention accumulate_layer_attention(const AttentionTrace& trace, std::size_t layer, bool causal,
                                          std::size_t window) {
    require(layer < trace.num_layers(), ErrorCode::LayerOutOfRange,
            "layer " + std::to_string(layer) + " >= " + std::to_string(trace.num_layers()));
    const std::size_t S = trace.seq_len();
    const std::size_t H = trace.num_heads();
    require(window <= S, ErrorCode::WindowTooLarge,
            "observation window " + std::to_string(window) + " exceeds sequence length " + std::to_string(S));

    LayerAttention out;
    out.layer = layer;
    out.seq_len = S;
    out.num_heads = H;
    out.window = window;
    out.received = Matrix<double>(S, H);
    out.window_received = Matrix<double>(S, H);

    const std::size_t window_begin = S - window;
    std::vector<double> all(S);
    std::vector<double> tail(S);
    for (std::size_t h = 0; h < H; ++h) {
        std::fill(all.begin(), all.end(), 0.0);
        std::fill(tail.begin(), tail.end(), 0.0);
        const auto& tensors = trace.head(layer, h);
        for_each_attention_row(tensors.query, tensors.key, causal, 0, S,
                               [&](std::size_t j, std::span<const double> row) {
                                   const std::size_t n = causal ? j + 1 : S;
                                   for (std::size_t t = 0; t < n; ++t) {
                                       all[t] += row[t];
                                   }
                                   if (j >= window_begin) {
                                       for (std::size_t t = 0; t < n; ++t) {
                                           tail[t] += row[t];
                                       }
                                   }
                               });
        for (std::size_t t = 0; t < S; ++t) {
            out.received(t, h) = all[t];
            out.window_received(t, h) = tail[t];
        }
    }
    return out;
}

}  // namespace kvcrush
