/* Copyright (C) 2026 The KVCrush Toolkit Authors
 * SPDX-License-Identifier: Apache-2.0
 *
 * C interface of the kvcrush shared library.
 *
 * Objects are opaque handles created by kvc_*_create / read / generate calls
 * and released with the matching kvc_*_free. Every fallible call returns a
 * kvc_status; on failure a human-readable message for the calling thread is
 * available from kvc_last_error(). Strings returned through char** out
 * parameters are owned by the caller and released with kvc_string_free.
 */
#ifndef KVCRUSH_KVCRUSH_H
#define KVCRUSH_KVCRUSH_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#  if defined(KVCRUSH_BUILDING_LIBRARY)
#    define KVC_API __declspec(dllexport)
#  else
#    define KVC_API __declspec(dllimport)
#  endif
#else
#  define KVC_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum kvc_status {
    KVC_OK = 0,
    KVC_ERR_INVALID_ARGUMENT = 1,
    KVC_ERR_MALFORMED_HEADER = 2,
    KVC_ERR_DIMENSION_MISMATCH = 3,
    KVC_ERR_NON_FINITE_VALUE = 4,
    KVC_ERR_IO_FAILURE = 5,
    KVC_ERR_INVALID_SPEC = 6,
    KVC_ERR_OVERFLOW = 7,
    KVC_ERR_SHAPE_MISMATCH = 8,
    KVC_ERR_INVALID_FRACTION = 9,
    KVC_ERR_LAYER_OUT_OF_RANGE = 10,
    KVC_ERR_EMPTY_INPUT = 11,
    KVC_ERR_LENGTH_MISMATCH = 12,
    KVC_ERR_ZERO_BUCKETS = 13,
    KVC_ERR_INCONSISTENT_ASSIGNMENT = 14,
    KVC_ERR_K_TOO_LARGE = 15,
    KVC_ERR_BUDGET_EXCEEDS_SEQUENCE = 16,
    KVC_ERR_WINDOW_TOO_LARGE = 17,
    KVC_ERR_BUDGET_TOO_SMALL = 18,
    KVC_ERR_EMPTY_PAGE = 19,
    KVC_ERR_INVALID_PARTITION = 20,
    KVC_ERR_INDEX_OUT_OF_RANGE = 21,
    KVC_ERR_SCHEMA = 22,
    KVC_ERR_TOO_MANY_CELLS = 23,
    KVC_ERR_INTERNAL = 24
} kvc_status;

typedef enum kvc_policy {
    KVC_POLICY_FULLKV = 0,
    KVC_POLICY_H2O = 1,
    KVC_POLICY_WINDOW = 2,
    KVC_POLICY_SNAPKV = 3,
    KVC_POLICY_PYRAMIDKV = 4
} kvc_policy;

typedef enum kvc_anchor {
    KVC_ANCHOR_RANDOM = 0,
    KVC_ANCHOR_MEAN = 1,
    KVC_ANCHOR_ALTERNATING = 2
} kvc_anchor;

typedef enum kvc_granularity {
    KVC_GRANULARITY_TOKEN = 0,
    KVC_GRANULARITY_CHUNK = 1,
    KVC_GRANULARITY_PAGE = 2
} kvc_granularity;

typedef enum kvc_grouping {
    KVC_GROUPING_KVCRUSH = 0,
    KVC_GROUPING_KMEANS = 1
} kvc_grouping;

typedef struct kvc_trace_s* kvc_trace;
typedef struct kvc_decision_s* kvc_decision;
typedef struct kvc_report_s* kvc_report;

typedef struct kvc_trace_info {
    uint32_t num_layers;
    uint32_t num_heads;
    uint32_t head_dim;
    uint32_t seq_len;
    uint32_t precision;
    int has_labels;
    char model_name[128]; /* truncated, NUL-terminated */
} kvc_trace_info;

typedef struct kvc_synthetic_spec {
    uint32_t seq_len;
    uint32_t num_layers;
    uint32_t num_heads;
    uint32_t head_dim;
    uint64_t rng_seed;
    uint32_t num_clusters;
    double cluster_spread;
    double sink_fraction;
    double recency_bias;
    double focus;
    uint32_t decode_rows;
    uint32_t precision;
} kvc_synthetic_spec;

typedef struct kvc_select_config {
    uint64_t budget;
    double kvcrush_fraction;
    kvc_granularity granularity;
    uint64_t unit_size;
    kvc_policy policy;
    uint64_t window;
    uint64_t pool_width;
    uint64_t sinks;
    uint64_t recents;
    double taper;
    double retain_fraction;
    kvc_anchor anchor;
    kvc_grouping grouping;
    uint64_t kmeans_iters;
    uint64_t seed;
    int causal;
} kvc_select_config;

typedef struct kvc_report_summary {
    uint64_t num_layers;
    double attention_mass_retained;
    double renormalized_output_error;
    double compression_ratio;
    uint64_t distance_op_count;
} kvc_report_summary;

/* Sweep axes: a NULL pointer or zero count means "use the base value". */
typedef struct kvc_sweep_grid {
    const kvc_anchor* anchors;
    size_t anchor_count;
    const double* fractions;
    size_t fraction_count;
    const kvc_policy* policies;
    size_t policy_count;
    const uint64_t* budgets;
    size_t budget_count;
    const kvc_grouping* groupings;
    size_t grouping_count;
    const double* retain_fractions;
    size_t retain_fraction_count;
    const uint64_t* seeds;
    size_t seed_count;
    uint64_t max_cells; /* 0 selects the default cap of 4096 */
} kvc_sweep_grid;

KVC_API const char* kvc_version(void);
KVC_API const char* kvc_last_error(void);
KVC_API const char* kvc_status_name(kvc_status status);
KVC_API void kvc_string_free(char* str);

/* Traces */
KVC_API void kvc_synthetic_spec_default(kvc_synthetic_spec* spec);
KVC_API kvc_status kvc_trace_generate(const kvc_synthetic_spec* spec, kvc_trace* out);
KVC_API kvc_status kvc_trace_read(const char* path, kvc_trace* out);
KVC_API kvc_status kvc_trace_write(kvc_trace trace, const char* path);
KVC_API kvc_status kvc_trace_get_info(kvc_trace trace, kvc_trace_info* info);
KVC_API void kvc_trace_free(kvc_trace trace);

/* 2 * batch * layers * heads * seq_len * head_dim * precision */
KVC_API kvc_status kvc_kv_memory_bytes(uint32_t num_layers, uint32_t num_heads, uint32_t head_dim,
                                       uint32_t seq_len, uint32_t precision, uint64_t batch, uint64_t* out);

/* Selection */
KVC_API void kvc_select_config_default(kvc_select_config* config);
KVC_API kvc_status kvc_select(kvc_trace trace, const kvc_select_config* config, kvc_decision* out);
KVC_API kvc_status kvc_decision_full(kvc_trace trace, kvc_decision* out);
KVC_API kvc_status kvc_decision_to_json(kvc_decision decision, char** out);
KVC_API kvc_status kvc_decision_from_json(const char* json, kvc_decision* out);
KVC_API kvc_status kvc_decision_retained_count(kvc_decision decision, size_t layer, size_t* out);
KVC_API void kvc_decision_free(kvc_decision decision);

/* Evaluation */
KVC_API kvc_status kvc_evaluate(kvc_trace trace, kvc_decision decision, kvc_report* out);
KVC_API kvc_status kvc_report_get_summary(kvc_report report, kvc_report_summary* out);
KVC_API kvc_status kvc_report_to_json(kvc_report report, char** out);
KVC_API kvc_status kvc_report_to_csv(kvc_report report, char** out);
KVC_API void kvc_report_free(kvc_report report);

/* Sweeps. With trace == NULL each seed regenerates `synthetic` with that
 * seed; otherwise the given trace is reused. Writes tidy CSV. */
KVC_API kvc_status kvc_sweep_run(kvc_trace trace, const kvc_synthetic_spec* synthetic,
                                 const kvc_select_config* base, const kvc_sweep_grid* grid, char** csv_out);

/* Latency benchmark: grouping scaling at S, 2S, 4S plus a k-means
 * comparison at S. Writes JSON. */
KVC_API kvc_status kvc_bench_grouping(uint64_t seq_len, uint64_t num_heads, uint64_t buckets, uint64_t kmeans_iters,
                                      uint64_t repetitions, uint64_t seed, char** json_out);

#ifdef __cplusplus
}
#endif

#endif /* KVCRUSH_KVCRUSH_H */
