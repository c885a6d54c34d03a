// Copyright (C) 2026 The KVCrush Toolkit Authors
// SPDX-License-Identifier: Apache-2.0

#include "kvcrush/kvcrush.h"

#include <cstdlib>
#include <cstring>
#include <new>
#include <string>

#include "kvcrush/bench.hpp"
#include "kvcrush/error.hpp"
#include "kvcrush/eval.hpp"
#include "kvcrush/pipeline.hpp"
#include "kvcrush/serialize.hpp"
#include "kvcrush/sweep.hpp"
#include "kvcrush/trace.hpp"

struct kvc_trace_s {
    kvcrush::AttentionTrace trace;
};

struct kvc_decision_s {
    kvcrush::EvictionDecision decision;
};

struct kvc_report_s {
    kvcrush::EvalReport report;
};

namespace {

thread_local std::string g_last_error;

kvc_status fail(kvc_status status, const std::string& message) {
    g_last_error = message;
    return status;
}

template <typename Fn>
kvc_status guarded(Fn&& fn) {
    try {
        fn();
        g_last_error.clear();
        return KVC_OK;
    } catch (const kvcrush::Error& e) {
        return fail(static_cast<kvc_status>(e.code()), e.what());
    } catch (const std::bad_alloc&) {
        return fail(KVC_ERR_INTERNAL, "out of memory");
    } catch (const std::exception& e) {
        return fail(KVC_ERR_INTERNAL, e.what());
    }
}

void require_arg(const void* p, const char* name) {
    kvcrush::require(p != nullptr, kvcrush::ErrorCode::InvalidArgument, std::string(name) + " must not be NULL");
}

char* copy_string(const std::string& s) {
    auto* out = static_cast<char*>(std::malloc(s.size() + 1));
    if (!out) {
        throw std::bad_alloc();
    }
    std::memcpy(out, s.c_str(), s.size() + 1);
    return out;
}

kvcrush::SyntheticSpec to_cpp(const kvc_synthetic_spec& c) {
    kvcrush::SyntheticSpec s;
    s.seq_len = c.seq_len;
    s.num_layers = c.num_layers;
    s.num_heads = c.num_heads;
    s.head_dim = c.head_dim;
    s.rng_seed = c.rng_seed;
    s.num_clusters = c.num_clusters;
    s.cluster_spread = c.cluster_spread;
    s.sink_fraction = c.sink_fraction;
    s.recency_bias = c.recency_bias;
    s.focus = c.focus;
    s.decode_rows = c.decode_rows;
    s.precision = c.precision;
    return s;
}

template <typename E>
E checked_enum(int value, int max_value, const char* what) {
    kvcrush::require(value >= 0 && value <= max_value, kvcrush::ErrorCode::InvalidArgument,
                     std::string("invalid ") + what + " value " + std::to_string(value));
    return static_cast<E>(value);
}

kvcrush::SelectOptions to_cpp(const kvc_select_config& c) {
    kvcrush::SelectOptions o;
    o.budget.total = c.budget;
    o.budget.kvcrush_fraction = c.kvcrush_fraction;
    o.budget.granularity = checked_enum<kvcrush::Granularity>(c.granularity, 2, "granularity");
    o.budget.unit_size = c.unit_size;
    o.policy.kind = checked_enum<kvcrush::PolicyKind>(c.policy, 4, "policy");
    o.policy.window = c.window;
    o.policy.pool_width = c.pool_width;
    o.policy.sinks = c.sinks;
    o.policy.recents = c.recents;
    o.policy.taper = c.taper;
    o.retain_fraction = c.retain_fraction;
    o.anchor = checked_enum<kvcrush::AnchorStrategy>(c.anchor, 2, "anchor");
    o.grouping = checked_enum<kvcrush::GroupingMethod>(c.grouping, 1, "grouping");
    o.kmeans_iters = c.kmeans_iters;
    o.seed = c.seed;
    o.causal = c.causal != 0;
    return o;
}

template <typename Out, typename In, typename Fn>
std::vector<Out> axis(const In* values, std::size_t count, Fn&& convert) {
    std::vector<Out> out;
    if (values) {
        for (std::size_t i = 0; i < count; ++i) {
            out.push_back(convert(values[i]));
        }
    }
    return out;
}

}  // namespace

extern "C" {

const char* kvc_version(void) { return "0.1.0"; }

const char* kvc_last_error(void) { return g_last_error.c_str(); }

const char* kvc_status_name(kvc_status status) {
    if (status == KVC_OK) {
        return "OK";
    }
    static thread_local std::string name;
    name = std::string(kvcrush::error_code_name(static_cast<kvcrush::ErrorCode>(status)));
    return name.c_str();
}

void kvc_string_free(char* str) { std::free(str); }

void kvc_synthetic_spec_default(kvc_synthetic_spec* spec) {
    if (!spec) {
        return;
    }
    const kvcrush::SyntheticSpec d;
    *spec = kvc_synthetic_spec{d.seq_len,      d.num_layers,    d.num_heads,     d.head_dim,
                               d.rng_seed,     d.num_clusters,  d.cluster_spread, d.sink_fraction,
                               d.recency_bias, d.focus,         d.decode_rows,   d.precision};
}

kvc_status kvc_trace_generate(const kvc_synthetic_spec* spec, kvc_trace* out) {
    return guarded([&] {
        require_arg(spec, "spec");
        require_arg(out, "out");
        *out = new kvc_trace_s{kvcrush::generate_synthetic(to_cpp(*spec))};
    });
}

kvc_status kvc_trace_read(const char* path, kvc_trace* out) {
    return guarded([&] {
        require_arg(path, "path");
        require_arg(out, "out");
        *out = new kvc_trace_s{kvcrush::read_trace(path)};
    });
}

kvc_status kvc_trace_write(kvc_trace trace, const char* path) {
    return guarded([&] {
        require_arg(trace, "trace");
        require_arg(path, "path");
        kvcrush::write_trace(trace->trace, path);
    });
}

kvc_status kvc_trace_get_info(kvc_trace trace, kvc_trace_info* info) {
    return guarded([&] {
        require_arg(trace, "trace");
        require_arg(info, "info");
        const auto& h = trace->trace.header();
        *info = kvc_trace_info{};
        info->num_layers = h.num_layers;
        info->num_heads = h.num_heads;
        info->head_dim = h.head_dim;
        info->seq_len = h.seq_len;
        info->precision = h.precision;
        info->has_labels = trace->trace.labels().has_value() ? 1 : 0;
        std::strncpy(info->model_name, h.model_name.c_str(), sizeof(info->model_name) - 1);
    });
}

void kvc_trace_free(kvc_trace trace) { delete trace; }

kvc_status kvc_kv_memory_bytes(uint32_t num_layers, uint32_t num_heads, uint32_t head_dim, uint32_t seq_len,
                               uint32_t precision, uint64_t batch, uint64_t* out) {
    return guarded([&] {
        require_arg(out, "out");
        kvcrush::TraceHeader h;
        h.num_layers = num_layers;
        h.num_heads = num_heads;
        h.head_dim = head_dim;
        h.seq_len = seq_len;
        h.precision = precision;
        *out = kvcrush::kv_memory_bytes(h, batch);
    });
}

void kvc_select_config_default(kvc_select_config* config) {
    if (!config) {
        return;
    }
    const kvcrush::SelectOptions d;
    *config = kvc_select_config{};
    config->budget = d.budget.total;
    config->kvcrush_fraction = d.budget.kvcrush_fraction;
    config->granularity = static_cast<kvc_granularity>(d.budget.granularity);
    config->unit_size = d.budget.unit_size;
    config->policy = static_cast<kvc_policy>(d.policy.kind);
    config->window = d.policy.window;
    config->pool_width = d.policy.pool_width;
    config->sinks = d.policy.sinks;
    config->recents = d.policy.recents;
    config->taper = d.policy.taper;
    config->retain_fraction = d.retain_fraction;
    config->anchor = static_cast<kvc_anchor>(d.anchor);
    config->grouping = static_cast<kvc_grouping>(d.grouping);
    config->kmeans_iters = d.kmeans_iters;
    config->seed = d.seed;
    config->causal = d.causal ? 1 : 0;
}

kvc_status kvc_select(kvc_trace trace, const kvc_select_config* config, kvc_decision* out) {
    return guarded([&] {
        require_arg(trace, "trace");
        require_arg(config, "config");
        require_arg(out, "out");
        *out = new kvc_decision_s{kvcrush::select_all_layers(trace->trace, to_cpp(*config))};
    });
}

kvc_status kvc_decision_full(kvc_trace trace, kvc_decision* out) {
    return guarded([&] {
        require_arg(trace, "trace");
        require_arg(out, "out");
        *out = new kvc_decision_s{kvcrush::full_kv_decision(trace->trace.seq_len(), trace->trace.num_layers())};
    });
}

kvc_status kvc_decision_to_json(kvc_decision decision, char** out) {
    return guarded([&] {
        require_arg(decision, "decision");
        require_arg(out, "out");
        *out = copy_string(kvcrush::decision_to_json(decision->decision));
    });
}

kvc_status kvc_decision_from_json(const char* json, kvc_decision* out) {
    return guarded([&] {
        require_arg(json, "json");
        require_arg(out, "out");
        *out = new kvc_decision_s{kvcrush::decision_from_json(json)};
    });
}

kvc_status kvc_decision_retained_count(kvc_decision decision, size_t layer, size_t* out) {
    return guarded([&] {
        require_arg(decision, "decision");
        require_arg(out, "out");
        kvcrush::require(layer < decision->decision.layers.size(), kvcrush::ErrorCode::LayerOutOfRange,
                         "layer out of range");
        *out = decision->decision.layers[layer].retained.size();
    });
}

void kvc_decision_free(kvc_decision decision) { delete decision; }

kvc_status kvc_evaluate(kvc_trace trace, kvc_decision decision, kvc_report* out) {
    return guarded([&] {
        require_arg(trace, "trace");
        require_arg(decision, "decision");
        require_arg(out, "out");
        *out = new kvc_report_s{kvcrush::evaluate(trace->trace, decision->decision)};
    });
}

kvc_status kvc_report_get_summary(kvc_report report, kvc_report_summary* out) {
    return guarded([&] {
        require_arg(report, "report");
        require_arg(out, "out");
        const auto& a = report->report.aggregate;
        *out = kvc_report_summary{report->report.layers.size(), a.attention_mass_retained,
                                  a.renormalized_output_error, a.compression_ratio, a.distance_op_count};
    });
}

kvc_status kvc_report_to_json(kvc_report report, char** out) {
    return guarded([&] {
        require_arg(report, "report");
        require_arg(out, "out");
        *out = copy_string(kvcrush::report_to_json(report->report));
    });
}

kvc_status kvc_report_to_csv(kvc_report report, char** out) {
    return guarded([&] {
        require_arg(report, "report");
        require_arg(out, "out");
        *out = copy_string(kvcrush::report_to_csv(report->report));
    });
}

void kvc_report_free(kvc_report report) { delete report; }

kvc_status kvc_sweep_run(kvc_trace trace, const kvc_synthetic_spec* synthetic, const kvc_select_config* base,
                         const kvc_sweep_grid* grid, char** csv_out) {
    return guarded([&] {
        require_arg(base, "base");
        require_arg(grid, "grid");
        require_arg(csv_out, "csv_out");
        kvcrush::require(trace != nullptr || synthetic != nullptr, kvcrush::ErrorCode::InvalidArgument,
                         "a sweep needs either a trace or a synthetic spec");
        kvcrush::SweepConfig config;
        config.base = to_cpp(*base);
        if (synthetic) {
            config.synthetic = to_cpp(*synthetic);
        }
        if (grid->max_cells != 0) {
            config.max_cells = grid->max_cells;
        }
        auto& g = config.grid;
        g.anchors = axis<kvcrush::AnchorStrategy>(grid->anchors, grid->anchor_count, [](kvc_anchor a) {
            return checked_enum<kvcrush::AnchorStrategy>(a, 2, "anchor");
        });
        g.fractions = axis<double>(grid->fractions, grid->fraction_count, [](double v) { return v; });
        g.policies = axis<kvcrush::PolicyKind>(grid->policies, grid->policy_count, [](kvc_policy p) {
            return checked_enum<kvcrush::PolicyKind>(p, 4, "policy");
        });
        g.budgets = axis<std::size_t>(grid->budgets, grid->budget_count,
                                      [](uint64_t v) { return static_cast<std::size_t>(v); });
        g.groupings = axis<kvcrush::GroupingMethod>(grid->groupings, grid->grouping_count, [](kvc_grouping m) {
            return checked_enum<kvcrush::GroupingMethod>(m, 1, "grouping");
        });
        g.retain_fractions =
            axis<double>(grid->retain_fractions, grid->retain_fraction_count, [](double v) { return v; });
        g.seeds = axis<std::uint64_t>(grid->seeds, grid->seed_count, [](uint64_t v) { return v; });
        const auto rows = kvcrush::run_sweep(config, trace ? &trace->trace : nullptr);
        *csv_out = copy_string(kvcrush::sweep_to_csv(rows));
    });
}

kvc_status kvc_bench_grouping(uint64_t seq_len, uint64_t num_heads, uint64_t buckets, uint64_t kmeans_iters,
                              uint64_t repetitions, uint64_t seed, char** json_out) {
    return guarded([&] {
        require_arg(json_out, "json_out");
        const auto scaling = kvcrush::measure_grouping_scaling(seq_len, num_heads, buckets, repetitions, seed);
        const auto comparison = kvcrush::compare_kmeans(seq_len, num_heads, buckets, kmeans_iters, 1, seed);
        *json_out = copy_string(kvcrush::bench_to_json(scaling, comparison));
    });
}

}  // extern "C"
