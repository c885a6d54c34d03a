// Copyright (C) 2026 The KVCrush Toolkit Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "kvcrush/attention.hpp"
#include "kvcrush/trace.hpp"

namespace kvcrush {

enum class PolicyKind { FullKV, H2O, Window, SnapKV, PyramidKV };

std::string_view to_string(PolicyKind kind) noexcept;
std::optional<PolicyKind> parse_policy(std::string_view name) noexcept;

struct PolicyConfig {
    PolicyKind kind = PolicyKind::H2O;
    /// SnapKV / PyramidKV observation window (trailing query rows).
    std::size_t window = 32;
    /// SnapKV / PyramidKV max-pool width, odd.
    std::size_t pool_width = 7;
    /// Window policy: leading sink tokens and trailing recent tokens.
    std::size_t sinks = 32;
    std::size_t recents = 128;
    /// PyramidKV geometric budget ratio between consecutive layers.
    double taper = 0.5;
};

/// Scores plus the descending order of token indices (stable: earlier index
/// first on equal scores).
struct ImportanceRanking {
    std::vector<double> scores;
    std::vector<std::size_t> order;
};

ImportanceRanking rank_scores(std::vector<double> scores);

/// H2O: attention received, summed over every query row and head.
ImportanceRanking h2o_rank(const LayerAttention& attention);
ImportanceRanking h2o_rank(const AttentionTrace& trace, std::size_t layer, bool causal = true);

/// StreamingLLM-style window: [0, sinks) U [S - recents, S).
std::vector<std::size_t> window_select(std::size_t seq_len, std::size_t sinks, std::size_t recents);

/// Window policy as a ranking: sinks, then recents newest first, then the
/// middle by attention received. Its top-(sinks + recents) equals
/// window_select; larger budgets spill into heavy hitters of the middle.
ImportanceRanking window_rank(const LayerAttention& attention, std::size_t sinks, std::size_t recents);

/// 1-D max pool of odd width, window clipped at the ends.
std::vector<double> max_pool(std::span<const double> values, std::size_t width);

/// SnapKV: attention received from the last `window` query rows, summed over
/// heads, then max-pooled over positions. Pooling is applied to the
/// head-aggregated scores.
ImportanceRanking snapkv_rank(const LayerAttention& attention, std::size_t pool_width);
ImportanceRanking snapkv_rank(const AttentionTrace& trace, std::size_t layer, std::size_t window,
                              std::size_t pool_width, bool causal = true);

/// PyramidKV budgets: geometric taper from the first to the last layer,
/// rescaled to mean `budget_per_layer`; largest-remainder rounding keeps the
/// sum at num_layers * budget_per_layer, with every layer >= 1.
std::vector<std::size_t> pyramid_budgets(std::size_t budget_per_layer, std::size_t num_layers, double taper);

/// Ranking used by `policy` for one layer. FullKV ranks by position.
ImportanceRanking policy_rank(const LayerAttention& attention, const PolicyConfig& policy);

/// Per-layer token budget for `policy` (PyramidKV tapers, others uniform).
std::vector<std::size_t> policy_budgets(const PolicyConfig& policy, std::size_t budget, std::size_t num_layers);

/// First `budget` entries of a ranking, sorted ascending.
std::vector<std::size_t> top_budget(const ImportanceRanking& ranking, std::size_t budget);

void validate_policy(const PolicyConfig& policy, std::size_t seq_len);

}  // namespace kvcrush
