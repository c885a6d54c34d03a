// Copyright (C) 2026 The KVCrush Toolkit Authors
// SPDX-License-Identifier: Apache-2.0

#include "kvcrush/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>

#include "kvcrush/error.hpp"
#include "kvcrush/fingerprint.hpp"

namespace kvcrush {

namespace {

using Clock = std::chrono::steady_clock;

std::int64_t elapsed_ns(Clock::time_point since) {
    return std::chrono::duration_cast<std::chrono::nanoseconds>(Clock::now() - since).count();
}

std::uint64_t layer_seed(std::uint64_t seed, std::size_t layer) {
    return seed + 0x9E3779B97F4A7C15ULL * static_cast<std::uint64_t>(layer);
}

// Tracks retained tokens and their tags during one layer's selection.
class Retention {
public:
    explicit Retention(std::size_t seq_len) : m_tag(seq_len), m_taken(seq_len, 0) {}

    std::size_t size() const noexcept { return m_count; }
    bool contains(std::size_t t) const noexcept { return m_taken[t] != 0; }

    void add(std::size_t t, Provenance p) {
        if (!m_taken[t]) {
            m_taken[t] = 1;
            m_tag[t] = p;
            ++m_count;
        }
    }
    void add(const TokenRange& unit, Provenance p) {
        for (std::size_t t = unit.begin; t < unit.end; ++t) {
            add(t, p);
        }
    }

    void backfill(const ImportanceRanking& tokens, std::size_t target) {
        for (std::size_t i = 0; i < tokens.order.size() && m_count < target; ++i) {
            add(tokens.order[i], Provenance::Backfill);
        }
    }

    std::vector<RetainedToken> sorted() const {
        std::vector<RetainedToken> out;
        out.reserve(m_count);
        for (std::size_t t = 0; t < m_taken.size(); ++t) {
            if (m_taken[t]) {
                out.push_back({t, m_tag[t]});
            }
        }
        return out;
    }

private:
    std::vector<Provenance> m_tag;
    std::vector<char> m_taken;
    std::size_t m_count = 0;
};

ImportanceRanking unit_ranking(const ImportanceRanking& tokens, const std::vector<TokenRange>& units) {
    std::vector<double> scores(units.size(), 0.0);
    for (std::size_t u = 0; u < units.size(); ++u) {
        for (std::size_t t = units[u].begin; t < units[u].end; ++t) {
            scores[u] += tokens.scores[t];
        }
    }
    return rank_scores(std::move(scores));
}

// Longest prefix of the unit ranking whose token count fits `budget`.
std::vector<std::size_t> unit_prefix(const ImportanceRanking& units_ranked, const std::vector<TokenRange>& units,
                                     std::size_t budget) {
    std::vector<std::size_t> out;
    std::size_t used = 0;
    for (std::size_t u : units_ranked.order) {
        if (used + units[u].size() > budget) {
            break;
        }
        used += units[u].size();
        out.push_back(u);
    }
    return out;
}

LayerDecision finish(std::size_t layer, std::size_t budget, std::size_t seq_len, const Retention& kept) {
    LayerDecision d;
    d.layer = layer;
    d.budget = budget;
    d.retained = kept.sorted();
    d.compression_ratio = static_cast<double>(seq_len) / static_cast<double>(d.retained.size());
    return d;
}

LayerDecision keep_everything(std::size_t layer, std::size_t budget, std::size_t seq_len) {
    Retention kept(seq_len);
    for (std::size_t t = 0; t < seq_len; ++t) {
        kept.add(t, Provenance::Important);
    }
    return finish(layer, budget, seq_len, kept);
}

// Fingerprints of the candidate units, one row per candidate.
FingerprintMatrix candidate_fingerprints(const LayerAttention& attention, const std::vector<TokenRange>& units,
                                         const std::vector<std::size_t>& candidates, Granularity granularity,
                                         std::size_t unit_size, double retain_fraction) {
    const Matrix<double> per_head = mean_received(attention);
    const std::size_t H = attention.num_heads;

    if (granularity == Granularity::Page) {
        std::vector<std::size_t> tokens;
        for (std::size_t u : candidates) {
            for (std::size_t t = units[u].begin; t < units[u].end; ++t) {
                tokens.push_back(t);
            }
        }
        const FingerprintMatrix token_bits = threshold_fingerprints(per_head, tokens, retain_fraction);
        FingerprintMatrix out(candidates.size(), unit_size * H);
        std::size_t row = 0;
        for (std::size_t i = 0; i < candidates.size(); ++i) {
            const std::size_t count = units[candidates[i]].size();
            const BitVector page = page_fingerprint(token_bits, row, count, unit_size);
            std::copy(page.words().begin(), page.words().end(), out.row(i).begin());
            row += count;
        }
        return out;
    }

    // Token and Chunk: per-head scores summed over each unit, thresholded
    // across the candidate units.
    Matrix<double> unit_scores(units.size(), H);
    for (std::size_t u = 0; u < units.size(); ++u) {
        for (std::size_t t = units[u].begin; t < units[u].end; ++t) {
            for (std::size_t h = 0; h < H; ++h) {
                unit_scores(u, h) += per_head(t, h);
            }
        }
    }
    return threshold_fingerprints(unit_scores, candidates, retain_fraction);
}

}  // namespace

std::string_view to_string(Granularity granularity) noexcept {
    switch (granularity) {
    case Granularity::Token: return "token";
    case Granularity::Chunk: return "chunk";
    case Granularity::Page: return "page";
    }
    return "unknown";
}

std::optional<Granularity> parse_granularity(std::string_view name) noexcept {
    if (name == "token") return Granularity::Token;
    if (name == "chunk") return Granularity::Chunk;
    if (name == "page") return Granularity::Page;
    return std::nullopt;
}

std::string_view to_string(Provenance provenance) noexcept {
    switch (provenance) {
    case Provenance::Important: return "important";
    case Provenance::Representative: return "representative";
    case Provenance::Backfill: return "backfill";
    }
    return "unknown";
}

std::optional<Provenance> parse_provenance(std::string_view name) noexcept {
    if (name == "important") return Provenance::Important;
    if (name == "representative") return Provenance::Representative;
    if (name == "backfill") return Provenance::Backfill;
    return std::nullopt;
}

std::string_view to_string(GroupingMethod method) noexcept {
    switch (method) {
    case GroupingMethod::Hamming: return "kvcrush";
    case GroupingMethod::KMeans: return "kmeans";
    }
    return "unknown";
}

std::optional<GroupingMethod> parse_grouping(std::string_view name) noexcept {
    if (name == "kvcrush" || name == "hamming") return GroupingMethod::Hamming;
    if (name == "kmeans") return GroupingMethod::KMeans;
    return std::nullopt;
}

std::size_t BudgetSpec::representative_budget() const {
    return static_cast<std::size_t>(std::lround(kvcrush_fraction * static_cast<double>(total)));
}

void validate_budget(const BudgetSpec& budget) {
    require(budget.total >= 1, ErrorCode::BudgetTooSmall, "total budget must be at least 1");
    require(budget.kvcrush_fraction >= 0.0 && budget.kvcrush_fraction <= 1.0, ErrorCode::InvalidFraction,
            "kvcrush_fraction must lie in [0, 1]");
    require(budget.granularity == Granularity::Token || budget.unit_size >= 1, ErrorCode::InvalidArgument,
            "chunk/page size must be at least 1");
}

void validate_options(const SelectOptions& options, std::size_t seq_len) {
    validate_budget(options.budget);
    validate_policy(options.policy, seq_len);
    validate_retain_fraction(options.retain_fraction);
    require(options.grouping != GroupingMethod::KMeans || options.kmeans_iters >= 1, ErrorCode::InvalidArgument,
            "k-means needs at least one iteration");
}

std::vector<std::size_t> LayerDecision::indices() const {
    std::vector<std::size_t> out;
    out.reserve(retained.size());
    for (const auto& r : retained) {
        out.push_back(r.index);
    }
    return out;
}

std::vector<std::size_t> LayerDecision::indices(Provenance provenance) const {
    std::vector<std::size_t> out;
    for (const auto& r : retained) {
        if (r.provenance == provenance) {
            out.push_back(r.index);
        }
    }
    return out;
}

std::vector<TokenRange> make_units(std::size_t seq_len, std::size_t unit_size) {
    require(unit_size >= 1, ErrorCode::InvalidArgument, "unit size must be at least 1");
    std::vector<TokenRange> units;
    for (std::size_t begin = 0; begin < seq_len; begin += unit_size) {
        units.push_back({begin, std::min(seq_len, begin + unit_size)});
    }
    return units;
}

BitVector page_fingerprint(const FingerprintMatrix& tokens, std::size_t first, std::size_t count,
                           std::size_t page_size) {
    require(count >= 1, ErrorCode::EmptyPage, "page holds no tokens");
    require(count <= page_size, ErrorCode::InvalidArgument, "page holds more tokens than page_size");
    require(first + count <= tokens.rows(), ErrorCode::IndexOutOfRange, "page exceeds fingerprint rows");
    const std::size_t H = tokens.width();
    BitVector out(page_size * H);
    for (std::size_t i = 0; i < count; ++i) {
        for (std::size_t h = 0; h < H; ++h) {
            if (tokens.get(first + i, h)) {
                out.set(i * H + h);
            }
        }
    }
    return out;
}

std::vector<double> page_importance(std::span<const Matrix<double>> attention, std::span<const TokenRange> pages) {
    require(!attention.empty(), ErrorCode::EmptyInput, "no attention heads");
    const std::size_t S = attention.front().cols();
    std::size_t expected = 0;
    for (const auto& p : pages) {
        require(p.begin == expected && p.end > p.begin, ErrorCode::InvalidPartition,
                "pages must be non-empty, contiguous and ordered");
        expected = p.end;
    }
    require(expected == S, ErrorCode::InvalidPartition, "pages must cover [0, S) exactly");

    std::vector<double> received(S, 0.0);
    for (const auto& a : attention) {
        require(a.rows() == S && a.cols() == S, ErrorCode::ShapeMismatch, "attention heads must be S x S");
        for (std::size_t j = 0; j < S; ++j) {
            const auto row = a.row(j);
            for (std::size_t t = 0; t < S; ++t) {
                received[t] += row[t];
            }
        }
    }
    std::vector<double> out(pages.size(), 0.0);
    for (std::size_t p = 0; p < pages.size(); ++p) {
        for (std::size_t t = pages[p].begin; t < pages[p].end; ++t) {
            out[p] += received[t];
        }
    }
    return out;
}

std::size_t observation_window(const PolicyConfig& policy, std::size_t seq_len) {
    if (policy.kind == PolicyKind::SnapKV || policy.kind == PolicyKind::PyramidKV) {
        return std::min(policy.window, seq_len);
    }
    return 0;
}

LayerDecision baseline_select(const LayerAttention& attention, std::size_t layer_budget,
                              const SelectOptions& options) {
    validate_budget(options.budget);
    const std::size_t S = attention.seq_len;
    if (options.policy.kind == PolicyKind::FullKV || layer_budget >= S) {
        return keep_everything(attention.layer, layer_budget, S);
    }
    const ImportanceRanking tokens = policy_rank(attention, options.policy);
    Retention kept(S);
    if (options.budget.effective_unit_size() == 1) {
        for (std::size_t t : top_budget(tokens, layer_budget)) {
            kept.add(t, Provenance::Important);
        }
    } else {
        const auto units = make_units(S, options.budget.effective_unit_size());
        for (std::size_t u : unit_prefix(unit_ranking(tokens, units), units, layer_budget)) {
            kept.add(units[u], Provenance::Important);
        }
        kept.backfill(tokens, layer_budget);
    }
    return finish(attention.layer, layer_budget, S, kept);
}

LayerDecision kvcrush_select(const LayerAttention& attention, std::size_t layer_budget,
                             const SelectOptions& options) {
    validate_options(options, attention.seq_len);
    require(layer_budget >= 1, ErrorCode::BudgetTooSmall, "layer budget must be at least 1");
    const std::size_t S = attention.seq_len;
    if (options.policy.kind == PolicyKind::FullKV || layer_budget >= S) {
        return keep_everything(attention.layer, layer_budget, S);
    }

    BudgetSpec budget = options.budget;
    budget.total = layer_budget;
    const std::size_t unit_size = budget.effective_unit_size();
    const std::size_t rep_budget = budget.representative_budget();
    const std::size_t imp_budget = budget.important_budget();

    PhaseLatency latency;
    auto start = Clock::now();
    const ImportanceRanking tokens = policy_rank(attention, options.policy);
    const auto units = make_units(S, unit_size);
    const ImportanceRanking units_ranked = unit_size == 1 ? tokens : unit_ranking(tokens, units);
    latency.scoring_ns = elapsed_ns(start);

    start = Clock::now();
    Retention kept(S);
    std::vector<char> is_important(units.size(), 0);
    for (std::size_t u : unit_prefix(units_ranked, units, imp_budget)) {
        is_important[u] = 1;
        kept.add(units[u], Provenance::Important);
    }
    latency.merge_ns = elapsed_ns(start);

    std::uint64_t distance_ops = 0;
    const std::size_t rep_units = rep_budget / unit_size;
    std::vector<std::size_t> candidates;
    for (std::size_t u = 0; u < units.size(); ++u) {
        if (!is_important[u]) {
            candidates.push_back(u);
        }
    }
    if (rep_units >= 1 && !candidates.empty()) {
        start = Clock::now();
        const FingerprintMatrix fingerprints = candidate_fingerprints(
            attention, units, candidates, budget.granularity, unit_size, options.retain_fraction);
        latency.fingerprint_ns = elapsed_ns(start);

        start = Clock::now();
        const std::uint64_t seed = layer_seed(options.seed, attention.layer);
        RepresentativeSet reps;
        if (options.grouping == GroupingMethod::Hamming) {
            DistanceCounter counter;
            reps = kvcrush_group(fingerprints, rep_units, options.anchor, seed, &counter);
            distance_ops = counter.count;
        } else {
            reps = kmeans_oracle(fingerprints, std::min(rep_units, candidates.size()), options.kmeans_iters, seed);
        }
        latency.grouping_ns = elapsed_ns(start);

        start = Clock::now();
        for (std::size_t i : reps.indices) {
            kept.add(units[candidates[i]], Provenance::Representative);
        }
        latency.merge_ns += elapsed_ns(start);
    }

    start = Clock::now();
    kept.backfill(tokens, layer_budget);
    LayerDecision out = finish(attention.layer, layer_budget, S, kept);
    latency.merge_ns += elapsed_ns(start);
    out.distance_ops = distance_ops;
    out.latency = latency;
    return out;
}

LayerDecision kvcrush_select(const AttentionTrace& trace, std::size_t layer, const SelectOptions& options) {
    validate_options(options, trace.seq_len());
    require(layer < trace.num_layers(), ErrorCode::LayerOutOfRange,
            "layer " + std::to_string(layer) + " >= " + std::to_string(trace.num_layers()));
    const auto budgets = policy_budgets(options.policy, options.budget.total, trace.num_layers());
    const auto start = Clock::now();
    const LayerAttention attention = accumulate_layer_attention(
        trace, layer, options.causal, observation_window(options.policy, trace.seq_len()));
    const auto attention_ns = elapsed_ns(start);
    LayerDecision out = kvcrush_select(attention, budgets[layer], options);
    out.latency.scoring_ns += attention_ns;
    return out;
}

LayerDecision chunked_select(const AttentionTrace& trace, std::size_t layer, SelectOptions options,
                             std::size_t chunk_size) {
    options.budget.granularity = Granularity::Chunk;
    options.budget.unit_size = chunk_size;
    return kvcrush_select(trace, layer, options);
}

EvictionDecision select_all_layers(const AttentionTrace& trace, const SelectOptions& options) {
    EvictionDecision out;
    out.seq_len = trace.seq_len();
    out.num_layers = trace.num_layers();
    out.granularity = options.budget.granularity;
    out.unit_size = options.budget.effective_unit_size();
    for (std::size_t l = 0; l < trace.num_layers(); ++l) {
        out.layers.push_back(kvcrush_select(trace, l, options));
    }
    return out;
}

EvictionDecision full_kv_decision(std::size_t seq_len, std::size_t num_layers) {
    EvictionDecision out;
    out.seq_len = seq_len;
    out.num_layers = num_layers;
    for (std::size_t l = 0; l < num_layers; ++l) {
        out.layers.push_back(keep_everything(l, seq_len, seq_len));
    }
    return out;
}

}  // namespace kvcrush
