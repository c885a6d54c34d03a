// Copyright (C) 2026 The KVCrush Toolkit Authors
// SPDX-License-Identifier: Apache-2.0

#include "kvcrush/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "kvcrush/error.hpp"

namespace kvcrush {

std::string_view to_string(PolicyKind kind) noexcept {
    switch (kind) {
    case PolicyKind::FullKV: return "fullkv";
    case PolicyKind::H2O: return "h2o";
    case PolicyKind::Window: return "window";
    case PolicyKind::SnapKV: return "snapkv";
    case PolicyKind::PyramidKV: return "pyramidkv";
    }
    return "unknown";
}

std::optional<PolicyKind> parse_policy(std::string_view name) noexcept {
    if (name == "fullkv" || name == "full") return PolicyKind::FullKV;
    if (name == "h2o") return PolicyKind::H2O;
    if (name == "window" || name == "streamingllm") return PolicyKind::Window;
    if (name == "snapkv") return PolicyKind::SnapKV;
    if (name == "pyramidkv") return PolicyKind::PyramidKV;
    return std::nullopt;
}

ImportanceRanking rank_scores(std::vector<double> scores) {
    ImportanceRanking r;
    r.order.resize(scores.size());
    std::iota(r.order.begin(), r.order.end(), std::size_t{0});
    std::stable_sort(r.order.begin(), r.order.end(),
                     [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
    r.scores = std::move(scores);
    return r;
}

namespace {

std::vector<double> sum_heads(const Matrix<double>& per_head) {
    std::vector<double> out(per_head.rows(), 0.0);
    for (std::size_t t = 0; t < per_head.rows(); ++t) {
        for (double v : per_head.row(t)) {
            out[t] += v;
        }
    }
    return out;
}

}  // namespace

ImportanceRanking h2o_rank(const LayerAttention& attention) {
    return rank_scores(sum_heads(attention.received));
}

ImportanceRanking h2o_rank(const AttentionTrace& trace, std::size_t layer, bool causal) {
    return h2o_rank(accumulate_layer_attention(trace, layer, causal));
}

std::vector<std::size_t> window_select(std::size_t seq_len, std::size_t sinks, std::size_t recents) {
    require(sinks + recents <= seq_len, ErrorCode::BudgetExceedsSequence,
            "sinks + recents = " + std::to_string(sinks + recents) + " exceeds sequence length " +
                std::to_string(seq_len));
    std::vector<std::size_t> out;
    for (std::size_t t = 0; t < sinks; ++t) {
        out.push_back(t);
    }
    for (std::size_t t = std::max(sinks, seq_len - recents); t < seq_len; ++t) {
        out.push_back(t);
    }
    return out;
}

ImportanceRanking window_rank(const LayerAttention& attention, std::size_t sinks, std::size_t recents) {
    const std::size_t S = attention.seq_len;
    sinks = std::min(sinks, S);
    recents = std::min(recents, S - sinks);
    const auto heavy = sum_heads(attention.received);

    // Synthetic scores that realize the ordering: sinks > recents > middle,
    // with the middle ordered by received attention (<= H * S).
    const double middle_cap = static_cast<double>(attention.num_heads * S) + 1.0;
    std::vector<double> scores(S);
    for (std::size_t t = 0; t < S; ++t) {
        if (t < sinks) {
            scores[t] = 3.0 * middle_cap + static_cast<double>(S - t);
        } else if (t >= S - recents) {
            scores[t] = 2.0 * middle_cap + static_cast<double>(t);
        } else {
            scores[t] = heavy[t];
        }
    }
    return rank_scores(std::move(scores));
}

std::vector<double> max_pool(std::span<const double> values, std::size_t width) {
    require(width >= 1 && width % 2 == 1, ErrorCode::InvalidArgument, "pool width must be odd");
    const std::size_t half = width / 2;
    const std::size_t n = values.size();
    std::vector<double> out(n);
    for (std::size_t t = 0; t < n; ++t) {
        const std::size_t lo = t >= half ? t - half : 0;
        const std::size_t hi = std::min(n, t + half + 1);
        out[t] = *std::max_element(values.begin() + static_cast<std::ptrdiff_t>(lo),
                                   values.begin() + static_cast<std::ptrdiff_t>(hi));
    }
    return out;
}

ImportanceRanking snapkv_rank(const LayerAttention& attention, std::size_t pool_width) {
    require(attention.window >= 1, ErrorCode::InvalidArgument, "SnapKV needs an observation window >= 1");
    return rank_scores(max_pool(sum_heads(attention.window_received), pool_width));
}

ImportanceRanking snapkv_rank(const AttentionTrace& trace, std::size_t layer, std::size_t window,
                              std::size_t pool_width, bool causal) {
    require(window >= 1, ErrorCode::InvalidArgument, "SnapKV needs an observation window >= 1");
    require(window <= trace.seq_len(), ErrorCode::WindowTooLarge,
            "observation window " + std::to_string(window) + " exceeds sequence length");
    return snapkv_rank(accumulate_layer_attention(trace, layer, causal, window), pool_width);
}

std::vector<std::size_t> pyramid_budgets(std::size_t budget_per_layer, std::size_t num_layers, double taper) {
    require(num_layers >= 1, ErrorCode::InvalidArgument, "num_layers must be at least 1");
    require(taper > 0.0 && taper <= 1.0, ErrorCode::InvalidArgument, "taper must lie in (0, 1]");
    require(budget_per_layer >= 1, ErrorCode::BudgetTooSmall, "per-layer budget must be at least 1");

    const std::size_t total = budget_per_layer * num_layers;
    std::vector<double> raw(num_layers);
    double sum = 0.0;
    for (std::size_t l = 0; l < num_layers; ++l) {
        raw[l] = std::pow(taper, static_cast<double>(l));
        sum += raw[l];
    }
    std::vector<std::size_t> out(num_layers);
    std::vector<std::pair<double, std::size_t>> remainders;
    std::size_t assigned = 0;
    for (std::size_t l = 0; l < num_layers; ++l) {
        const double exact = raw[l] * static_cast<double>(total) / sum;
        out[l] = static_cast<std::size_t>(std::floor(exact));
        assigned += out[l];
        remainders.emplace_back(exact - std::floor(exact), l);
    }
    std::stable_sort(remainders.begin(), remainders.end(),
                     [](const auto& a, const auto& b) { return a.first > b.first; });
    for (std::size_t i = 0; assigned < total; ++i, ++assigned) {
        ++out[remainders[i % num_layers].second];
    }
    // Lift starved layers to one token, taking from the largest.
    for (std::size_t l = 0; l < num_layers; ++l) {
        while (out[l] == 0) {
            auto largest = std::max_element(out.begin(), out.end());
            require(*largest > 1, ErrorCode::BudgetTooSmall, "budget too small to give every layer a token");
            --*largest;
            ++out[l];
        }
    }
    return out;
}

void validate_policy(const PolicyConfig& policy, std::size_t seq_len) {
    if (policy.kind == PolicyKind::SnapKV || policy.kind == PolicyKind::PyramidKV) {
        require(policy.window >= 1, ErrorCode::InvalidArgument, "observation window must be at least 1");
        require(policy.window <= seq_len, ErrorCode::WindowTooLarge,
                "observation window " + std::to_string(policy.window) + " exceeds sequence length " +
                    std::to_string(seq_len));
        require(policy.pool_width % 2 == 1, ErrorCode::InvalidArgument, "pool width must be odd");
    }
    if (policy.kind == PolicyKind::PyramidKV) {
        require(policy.taper > 0.0 && policy.taper <= 1.0, ErrorCode::InvalidArgument, "taper must lie in (0, 1]");
    }
}

ImportanceRanking policy_rank(const LayerAttention& attention, const PolicyConfig& policy) {
    switch (policy.kind) {
    case PolicyKind::FullKV: {
        std::vector<double> scores(attention.seq_len);
        for (std::size_t t = 0; t < scores.size(); ++t) {
            scores[t] = static_cast<double>(attention.seq_len - t);
        }
        return rank_scores(std::move(scores));
    }
    case PolicyKind::H2O: return h2o_rank(attention);
    case PolicyKind::Window: return window_rank(attention, policy.sinks, policy.recents);
    case PolicyKind::SnapKV:
    case PolicyKind::PyramidKV: return snapkv_rank(attention, policy.pool_width);
    }
    raise(ErrorCode::Internal, "unhandled policy");
}

std::vector<std::size_t> policy_budgets(const PolicyConfig& policy, std::size_t budget, std::size_t num_layers) {
    if (policy.kind == PolicyKind::PyramidKV) {
        return pyramid_budgets(budget, num_layers, policy.taper);
    }
    return std::vector<std::size_t>(num_layers, budget);
}

std::vector<std::size_t> top_budget(const ImportanceRanking& ranking, std::size_t budget) {
    const std::size_t n = std::min(budget, ranking.order.size());
    std::vector<std::size_t> out(ranking.order.begin(), ranking.order.begin() + static_cast<std::ptrdiff_t>(n));
    std::sort(out.begin(), out.end());
    return out;
}

}  // namespace kvcrush
