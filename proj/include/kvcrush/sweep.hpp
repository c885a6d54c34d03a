// Copyright (C) 2026 The KVCrush Toolkit Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "kvcrush/eval.hpp"
#include "kvcrush/pipeline.hpp"
#include "kvcrush/trace.hpp"

namespace kvcrush {

/// Parameter grid. An empty axis contributes the base configuration's value.
struct SweepGrid {
    std::vector<AnchorStrategy> anchors;
    std::vector<double> fractions;
    std::vector<PolicyKind> policies;
    std::vector<std::size_t> budgets;
    std::vector<GroupingMethod> groupings;
    std::vector<double> retain_fractions;
    /// Paired seeds: every cell of the grid is evaluated once per seed on the
    /// same trace (synthetic traces are regenerated from each seed).
    std::vector<std::uint64_t> seeds;
};

struct SweepConfig {
    SelectOptions base;
    SyntheticSpec synthetic;
    SweepGrid grid;
    std::size_t max_cells = 4096;
};

struct SweepRow {
    std::uint64_t seed = 0;
    PolicyKind policy = PolicyKind::H2O;
    std::size_t budget = 0;
    double kvcrush_fraction = 0.0;
    AnchorStrategy anchor = AnchorStrategy::Mean;
    GroupingMethod grouping = GroupingMethod::Hamming;
    double retain_fraction = 0.5;
    Granularity granularity = Granularity::Token;
    std::size_t unit_size = 1;
    LayerReport result;  // aggregate over layers
};

/// Grid cells times seeds.
std::size_t sweep_cell_count(const SweepConfig& config);

/// Evaluates every cell. With `fixed_trace` set, every seed reuses that trace
/// and only drives the anchor RNG. Throws TooManyCells above max_cells.
/// Rows come back in canonical knob order.
std::vector<SweepRow> run_sweep(const SweepConfig& config, const AttentionTrace* fixed_trace = nullptr);

std::string sweep_to_csv(const std::vector<SweepRow>& rows);

}  // namespace kvcrush
