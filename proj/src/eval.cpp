// Copyright (C) 2026 The KVCrush Toolkit Authors
// SPDX-License-Identifier: Apache-2.0

#include "kvcrush/eval.hpp"

#include <algorithm>
#include <cmath>

#include "kvcrush/attention.hpp"
#include "kvcrush/error.hpp"

namespace kvcrush {

LayerReport evaluate_layer(const AttentionTrace& trace, std::size_t layer, std::span<const std::size_t> retained,
                           bool causal) {
    require(layer < trace.num_layers(), ErrorCode::LayerOutOfRange, "layer out of range");
    require(!retained.empty(), ErrorCode::EmptyInput, "retained set is empty");
    const std::size_t S = trace.seq_len();
    std::vector<char> keep(S, 0);
    for (std::size_t t : retained) {
        require(t < S, ErrorCode::IndexOutOfRange,
                "retained index " + std::to_string(t) + " outside [0, " + std::to_string(S) + ")");
        keep[t] = 1;
    }
    const std::size_t kept_count = static_cast<std::size_t>(std::count(keep.begin(), keep.end(), 1));

    const std::size_t rows = std::min(kDecodeProxyRows, S);
    double mass_sum = 0.0;
    double error_sum = 0.0;
    for (std::size_t h = 0; h < trace.num_heads(); ++h) {
        const auto& tensors = trace.head(layer, h);
        for_each_attention_row(tensors.query, tensors.key, causal, S - rows, S,
                               [&](std::size_t, std::span<const double> row) {
                                   double mass = 0.0;
                                   for (std::size_t t = 0; t < S; ++t) {
                                       if (keep[t]) {
                                           mass += row[t];
                                       }
                                   }
                                   // Compressed-cache row: evicted columns zeroed, renormalized.
                                   double err2 = 0.0;
                                   const double inv = mass > 0.0 ? 1.0 / mass : 0.0;
                                   for (std::size_t t = 0; t < S; ++t) {
                                       const double compressed = keep[t] ? row[t] * inv : 0.0;
                                       const double diff = compressed - row[t];
                                       err2 += diff * diff;
                                   }
                                   mass_sum += std::min(1.0, mass);
                                   error_sum += std::sqrt(err2);
                               });
    }
    const double n = static_cast<double>(rows * trace.num_heads());
    LayerReport out;
    out.layer = layer;
    out.attention_mass_retained = mass_sum / n;
    out.renormalized_output_error = error_sum / n;
    out.compression_ratio = static_cast<double>(S) / static_cast<double>(kept_count);
    return out;
}

EvalReport evaluate(const AttentionTrace& trace, const EvictionDecision& decision, bool causal) {
    require(decision.seq_len == trace.seq_len(), ErrorCode::Schema,
            "decision seq_len " + std::to_string(decision.seq_len) + " != trace seq_len " +
                std::to_string(trace.seq_len()));
    require(decision.num_layers == trace.num_layers() && decision.layers.size() == trace.num_layers(),
            ErrorCode::Schema, "decision layer count does not match trace");

    EvalReport report;
    for (std::size_t l = 0; l < decision.layers.size(); ++l) {
        const auto& d = decision.layers[l];
        require(d.layer == l, ErrorCode::Schema, "decision layers must be listed in order");
        const auto indices = d.indices();
        if (indices.size() == trace.seq_len()) {
            // Nothing evicted: identical rows, exactly zero error.
            LayerReport full;
            full.layer = l;
            full.attention_mass_retained = 1.0;
            full.renormalized_output_error = 0.0;
            full.compression_ratio = 1.0;
            full.latency = d.latency;
            full.distance_op_count = d.distance_ops;
            report.layers.push_back(full);
            continue;
        }
        LayerReport r = evaluate_layer(trace, l, indices, causal);
        r.latency = d.latency;
        r.distance_op_count = d.distance_ops;
        report.layers.push_back(r);
    }

    auto& agg = report.aggregate;
    agg.compression_ratio = 0.0;
    const double n = static_cast<double>(report.layers.size());
    double scoring = 0.0;
    double fingerprint = 0.0;
    double grouping = 0.0;
    double merge = 0.0;
    double ops = 0.0;
    for (const auto& r : report.layers) {
        agg.attention_mass_retained += r.attention_mass_retained / n;
        agg.renormalized_output_error += r.renormalized_output_error / n;
        agg.compression_ratio += r.compression_ratio / n;
        scoring += static_cast<double>(r.latency.scoring_ns);
        fingerprint += static_cast<double>(r.latency.fingerprint_ns);
        grouping += static_cast<double>(r.latency.grouping_ns);
        merge += static_cast<double>(r.latency.merge_ns);
        ops += static_cast<double>(r.distance_op_count);
    }
    agg.layer = report.layers.size();
    agg.latency = {std::llround(scoring / n), std::llround(fingerprint / n), std::llround(grouping / n),
                   std::llround(merge / n)};
    agg.distance_op_count = static_cast<std::uint64_t>(std::llround(ops / n));
    return report;
}

}  // namespace kvcrush
