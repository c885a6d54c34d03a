// Copyright (C) 2026 The KVCrush Toolkit Authors
// SPDX-License-Identifier: Apache-2.0

#include "kvcrush/sweep.hpp"

#include <algorithm>
#include <sstream>
#include <tuple>

#include "kvcrush/error.hpp"
#include "kvcrush/serialize.hpp"

namespace kvcrush {

namespace {

template <typename T>
std::vector<T> axis(const std::vector<T>& values, T fallback) {
    return values.empty() ? std::vector<T>{fallback} : values;
}

auto row_key(const SweepRow& r) {
    return std::make_tuple(r.seed, static_cast<int>(r.policy), r.budget, r.kvcrush_fraction,
                           static_cast<int>(r.anchor), static_cast<int>(r.grouping), r.retain_fraction);
}

}  // namespace

std::size_t sweep_cell_count(const SweepConfig& config) {
    const auto& g = config.grid;
    std::size_t n = 1;
    for (std::size_t len : {g.anchors.size(), g.fractions.size(), g.policies.size(), g.budgets.size(),
                            g.groupings.size(), g.retain_fractions.size(), g.seeds.size()}) {
        const std::size_t f = std::max<std::size_t>(len, 1);
        if (n > config.max_cells * 2 / f + 1) {
            return config.max_cells + 1;  // saturate, already over the cap
        }
        n *= f;
    }
    return n;
}

std::vector<SweepRow> run_sweep(const SweepConfig& config, const AttentionTrace* fixed_trace) {
    const std::size_t cells = sweep_cell_count(config);
    require(cells <= config.max_cells, ErrorCode::TooManyCells,
            "sweep has " + std::to_string(cells) + " cells, cap is " + std::to_string(config.max_cells));

    const auto& g = config.grid;
    const auto& base = config.base;
    const auto seeds = axis(g.seeds, base.seed);
    const auto policies = axis(g.policies, base.policy.kind);
    const auto budgets = axis(g.budgets, base.budget.total);
    const auto fractions = axis(g.fractions, base.budget.kvcrush_fraction);
    const auto anchors = axis(g.anchors, base.anchor);
    const auto groupings = axis(g.groupings, base.grouping);
    const auto retains = axis(g.retain_fractions, base.retain_fraction);

    std::vector<SweepRow> rows;
    for (std::uint64_t seed : seeds) {
        AttentionTrace generated;
        if (!fixed_trace) {
            SyntheticSpec spec = config.synthetic;
            spec.rng_seed = seed;
            generated = generate_synthetic(spec);
        }
        const AttentionTrace& trace = fixed_trace ? *fixed_trace : generated;

        const std::size_t window = std::min(base.policy.window, trace.seq_len());
        std::vector<LayerAttention> attention;
        for (std::size_t l = 0; l < trace.num_layers(); ++l) {
            attention.push_back(accumulate_layer_attention(trace, l, base.causal, window));
        }

        for (PolicyKind policy : policies) {
            for (std::size_t budget : budgets) {
                for (double fraction : fractions) {
                    for (AnchorStrategy anchor : anchors) {
                        for (GroupingMethod grouping : groupings) {
                            for (double retain : retains) {
                                SelectOptions options = base;
                                options.policy.kind = policy;
                                options.budget.total = budget;
                                options.budget.kvcrush_fraction = fraction;
                                options.anchor = anchor;
                                options.grouping = grouping;
                                options.retain_fraction = retain;
                                options.seed = seed;
                                validate_options(options, trace.seq_len());

                                const auto layer_budgets =
                                    policy_budgets(options.policy, budget, trace.num_layers());
                                EvictionDecision decision;
                                decision.seq_len = trace.seq_len();
                                decision.num_layers = trace.num_layers();
                                decision.granularity = options.budget.granularity;
                                decision.unit_size = options.budget.effective_unit_size();
                                for (std::size_t l = 0; l < trace.num_layers(); ++l) {
                                    decision.layers.push_back(
                                        kvcrush_select(attention[l], layer_budgets[l], options));
                                }
                                const EvalReport report = evaluate(trace, decision, base.causal);

                                SweepRow row;
                                row.seed = seed;
                                row.policy = policy;
                                row.budget = budget;
                                row.kvcrush_fraction = fraction;
                                row.anchor = anchor;
                                row.grouping = grouping;
                                row.retain_fraction = retain;
                                row.granularity = decision.granularity;
                                row.unit_size = decision.unit_size;
                                row.result = report.aggregate;
                                rows.push_back(row);
                            }
                        }
                    }
                }
            }
        }
    }
    std::stable_sort(rows.begin(), rows.end(),
                     [](const SweepRow& a, const SweepRow& b) { return row_key(a) < row_key(b); });
    return rows;
}

std::string sweep_to_csv(const std::vector<SweepRow>& rows) {
    std::ostringstream out;
    out << "seed,policy,budget,kvcrush_fraction,anchor,grouping,retain_fraction,granularity,unit_size,"
           "attention_mass_retained,renormalized_output_error,compression_ratio,"
           "scoring_ns,fingerprint_ns,grouping_ns,merge_ns,distance_op_count\n";
    for (const auto& r : rows) {
        out << r.seed << ',' << to_string(r.policy) << ',' << r.budget << ',' << format_double(r.kvcrush_fraction)
            << ',' << to_string(r.anchor) << ',' << to_string(r.grouping) << ','
            << format_double(r.retain_fraction) << ',' << to_string(r.granularity) << ',' << r.unit_size << ','
            << format_double(r.result.attention_mass_retained) << ','
            << format_double(r.result.renormalized_output_error) << ','
            << format_double(r.result.compression_ratio) << ',' << r.result.latency.scoring_ns << ','
            << r.result.latency.fingerprint_ns << ',' << r.result.latency.grouping_ns << ','
            << r.result.latency.merge_ns << ',' << r.result.distance_op_count << '\n';
    }
    return out.str();
}

}  // namespace kvcrush
