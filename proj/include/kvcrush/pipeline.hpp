// Copyright (C) 2026 The KVCrush Toolkit Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "kvcrush/attention.hpp"
#include "kvcrush/baselines.hpp"
#include "kvcrush/bits.hpp"
#include "kvcrush/grouping.hpp"
#include "kvcrush/trace.hpp"

namespace kvcrush {

enum class Granularity { Token, Chunk, Page };

std::string_view to_string(Granularity granularity) noexcept;
std::optional<Granularity> parse_granularity(std::string_view name) noexcept;

/// Total cache budget B (tokens) and the share handed to representatives.
struct BudgetSpec {
    std::size_t total = 2048;
    double kvcrush_fraction = 0.25;
    Granularity granularity = Granularity::Token;
    /// Chunk or page size in tokens; ignored (treated as 1) for Token.
    std::size_t unit_size = 1;

    std::size_t representative_budget() const;
    std::size_t important_budget() const { return total - representative_budget(); }
    std::size_t effective_unit_size() const { return granularity == Granularity::Token ? 1 : unit_size; }
};

void validate_budget(const BudgetSpec& budget);

enum class Provenance { Important, Representative, Backfill };

std::string_view to_string(Provenance provenance) noexcept;
std::optional<Provenance> parse_provenance(std::string_view name) noexcept;

struct RetainedToken {
    std::size_t index = 0;
    Provenance provenance = Provenance::Important;

    bool operator==(const RetainedToken&) const = default;
};

/// Wall-clock nanoseconds spent in each selection phase.
struct PhaseLatency {
    std::int64_t scoring_ns = 0;
    std::int64_t fingerprint_ns = 0;
    std::int64_t grouping_ns = 0;
    std::int64_t merge_ns = 0;
};

struct LayerDecision {
    std::size_t layer = 0;
    std::size_t budget = 0;
    std::vector<RetainedToken> retained;  // sorted by index, unique
    double compression_ratio = 1.0;
    std::uint64_t distance_ops = 0;
    PhaseLatency latency;  // not serialized

    std::vector<std::size_t> indices() const;
    std::vector<std::size_t> indices(Provenance provenance) const;
};

struct EvictionDecision {
    std::size_t seq_len = 0;
    std::size_t num_layers = 0;
    Granularity granularity = Granularity::Token;
    std::size_t unit_size = 1;
    std::vector<LayerDecision> layers;
};

enum class GroupingMethod { Hamming, KMeans };

std::string_view to_string(GroupingMethod method) noexcept;
std::optional<GroupingMethod> parse_grouping(std::string_view name) noexcept;

struct SelectOptions {
    BudgetSpec budget;
    PolicyConfig policy;
    double retain_fraction = 0.5;
    AnchorStrategy anchor = AnchorStrategy::Mean;
    GroupingMethod grouping = GroupingMethod::Hamming;
    std::size_t kmeans_iters = 100;
    std::uint64_t seed = 0;
    bool causal = true;
};

void validate_options(const SelectOptions& options, std::size_t seq_len);

/// Half-open token range [begin, end).
struct TokenRange {
    std::size_t begin = 0;
    std::size_t end = 0;

    std::size_t size() const noexcept { return end - begin; }
};

/// Contiguous units of `unit_size` tokens; the last may be short.
std::vector<TokenRange> make_units(std::size_t seq_len, std::size_t unit_size);

/// Concatenates `count` token fingerprints starting at row `first`, zero
/// padding to page_size * H bits when count < page_size.
BitVector page_fingerprint(const FingerprintMatrix& tokens, std::size_t first, std::size_t count,
                           std::size_t page_size);

/// Attention received by each page, summed over its tokens, query rows and
/// heads. The pages must partition [0, S).
std::vector<double> page_importance(std::span<const Matrix<double>> attention, std::span<const TokenRange> pages);

/// Budget split selection for one layer:
///   1. the baseline keeps the top B_important tokens (whole units, as a
///      ranking prefix);
///   2. the remaining units are fingerprinted and grouped into at most
///      B_representative / unit_size buckets, one representative each;
///   3. unused slots are backfilled from the baseline's token ranking.
/// `layer_budget` overrides budget.total (PyramidKV schedules).
LayerDecision kvcrush_select(const LayerAttention& attention, std::size_t layer_budget,
                             const SelectOptions& options);
LayerDecision kvcrush_select(const AttentionTrace& trace, std::size_t layer, const SelectOptions& options);

/// kvcrush_select with Chunk granularity of `chunk_size` tokens.
LayerDecision chunked_select(const AttentionTrace& trace, std::size_t layer, SelectOptions options,
                             std::size_t chunk_size);

/// Baseline alone: ranking prefix of whole units, token backfill.
LayerDecision baseline_select(const LayerAttention& attention, std::size_t layer_budget,
                              const SelectOptions& options);

/// Runs kvcrush_select on every layer.
EvictionDecision select_all_layers(const AttentionTrace& trace, const SelectOptions& options);

/// Every token of every layer retained.
EvictionDecision full_kv_decision(std::size_t seq_len, std::size_t num_layers);

/// Window length used when accumulating attention for `policy`.
std::size_t observation_window(const PolicyConfig& policy, std::size_t seq_len);

}  // namespace kvcrush
