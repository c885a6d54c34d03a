// Copyright (C) 2026 The KVCrush Toolkit Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "kvcrush/pipeline.hpp"
#include "kvcrush/trace.hpp"

namespace kvcrush {

/// Number of trailing query rows treated as decode-time queries.
inline constexpr std::size_t kDecodeProxyRows = 64;

struct LayerReport {
    std::size_t layer = 0;
    /// Mean over decode rows and heads of the full-cache attention mass that
    /// lands on retained tokens.
    double attention_mass_retained = 0.0;
    /// Mean over decode rows and heads of || renorm(row on retained) - row ||_2.
    double renormalized_output_error = 0.0;
    double compression_ratio = 1.0;
    PhaseLatency latency;
    std::uint64_t distance_op_count = 0;
};

struct EvalReport {
    std::vector<LayerReport> layers;
    /// Arithmetic means over layers (latencies and distance ops included).
    LayerReport aggregate;
};

/// Fidelity of one retained set against the full cache for a layer.
LayerReport evaluate_layer(const AttentionTrace& trace, std::size_t layer, std::span<const std::size_t> retained,
                           bool causal = true);

/// Throws Schema when the decision's shape does not match the trace and
/// IndexOutOfRange / EmptyInput for invalid retained sets.
EvalReport evaluate(const AttentionTrace& trace, const EvictionDecision& decision, bool causal = true);

}  // namespace kvcrush
