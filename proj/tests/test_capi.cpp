// Copyright (C) 2026 The KVCrush Toolkit Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <filesystem>
#include <string>

#include "kvcrush/kvcrush.h"

namespace {

struct TraceHandle {
    kvc_trace h = nullptr;
    ~TraceHandle() { kvc_trace_free(h); }
};
struct DecisionHandle {
    kvc_decision h = nullptr;
    ~DecisionHandle() { kvc_decision_free(h); }
};
struct ReportHandle {
    kvc_report h = nullptr;
    ~ReportHandle() { kvc_report_free(h); }
};

std::string take(char* s) {
    std::string out = s ? s : "";
    kvc_string_free(s);
    return out;
}

kvc_synthetic_spec small_spec(uint64_t seed) {
    kvc_synthetic_spec spec;
    kvc_synthetic_spec_default(&spec);
    spec.seq_len = 96;
    spec.num_layers = 2;
    spec.num_heads = 4;
    spec.rng_seed = seed;
    return spec;
}

}  // namespace

TEST(CApi, StatusNames) {
    EXPECT_STREQ(kvc_status_name(KVC_OK), "OK");
    EXPECT_STREQ(kvc_status_name(KVC_ERR_SCHEMA), "Schema");
    EXPECT_STREQ(kvc_status_name(KVC_ERR_TOO_MANY_CELLS), "TooManyCells");
    EXPECT_STRNE(kvc_version(), "");
}

TEST(CApi, NullArgumentsAreRejected) {
    kvc_trace t = nullptr;
    EXPECT_EQ(kvc_trace_generate(nullptr, &t), KVC_ERR_INVALID_ARGUMENT);
    EXPECT_NE(std::string(kvc_last_error()).find("spec"), std::string::npos);
    const auto spec = small_spec(1);
    EXPECT_EQ(kvc_trace_generate(&spec, nullptr), KVC_ERR_INVALID_ARGUMENT);
    EXPECT_EQ(kvc_trace_read(nullptr, &t), KVC_ERR_INVALID_ARGUMENT);
    kvc_trace_info info;
    EXPECT_EQ(kvc_trace_get_info(nullptr, &info), KVC_ERR_INVALID_ARGUMENT);
    kvc_select_config cfg;
    kvc_select_config_default(&cfg);
    kvc_decision d = nullptr;
    EXPECT_EQ(kvc_select(nullptr, &cfg, &d), KVC_ERR_INVALID_ARGUMENT);
    EXPECT_EQ(kvc_decision_from_json(nullptr, &d), KVC_ERR_INVALID_ARGUMENT);
    uint64_t bytes = 0;
    EXPECT_EQ(kvc_kv_memory_bytes(1, 1, 1, 1, 1, 1, nullptr), KVC_ERR_INVALID_ARGUMENT);
    EXPECT_EQ(kvc_kv_memory_bytes(1, 1, 1, 1, 1, 1, &bytes), KVC_OK);
    EXPECT_EQ(bytes, 2u);
    kvc_trace_free(nullptr);
    kvc_decision_free(nullptr);
    kvc_report_free(nullptr);
    kvc_string_free(nullptr);
}

TEST(CApi, MemoryFormula) {
    uint64_t bytes = 0;
    ASSERT_EQ(kvc_kv_memory_bytes(96, 96, 128, 8192, 2, 128, &bytes), KVC_OK);
    EXPECT_EQ(bytes, 4947802324992ull);
    EXPECT_EQ(kvc_kv_memory_bytes(1, 1, 1, 1, 1, 0, &bytes), KVC_ERR_INVALID_ARGUMENT);
    EXPECT_EQ(kvc_kv_memory_bytes(UINT32_MAX, UINT32_MAX, UINT32_MAX, UINT32_MAX, 4, 1, &bytes), KVC_ERR_OVERFLOW);
}

TEST(CApi, GenerateWriteReadSelectEvaluate) {
    const auto spec = small_spec(2);
    TraceHandle t;
    ASSERT_EQ(kvc_trace_generate(&spec, &t.h), KVC_OK);
    kvc_trace_info info;
    ASSERT_EQ(kvc_trace_get_info(t.h, &info), KVC_OK);
    EXPECT_EQ(info.seq_len, 96u);
    EXPECT_EQ(info.num_layers, 2u);
    EXPECT_EQ(info.has_labels, 1);

    const auto path = std::filesystem::temp_directory_path() / "kvcrush_capi_trace.kvt";
    ASSERT_EQ(kvc_trace_write(t.h, path.c_str()), KVC_OK);
    TraceHandle back;
    ASSERT_EQ(kvc_trace_read(path.c_str(), &back.h), KVC_OK);
    std::filesystem::remove(path);

    kvc_select_config cfg;
    kvc_select_config_default(&cfg);
    EXPECT_EQ(cfg.budget, 2048u);
    EXPECT_DOUBLE_EQ(cfg.kvcrush_fraction, 0.25);
    cfg.budget = 32;
    DecisionHandle d1;
    DecisionHandle d2;
    ASSERT_EQ(kvc_select(t.h, &cfg, &d1.h), KVC_OK);
    ASSERT_EQ(kvc_select(back.h, &cfg, &d2.h), KVC_OK);
    char* j1 = nullptr;
    char* j2 = nullptr;
    ASSERT_EQ(kvc_decision_to_json(d1.h, &j1), KVC_OK);
    ASSERT_EQ(kvc_decision_to_json(d2.h, &j2), KVC_OK);
    const auto json = take(j1);
    EXPECT_EQ(json, take(j2));

    size_t count = 0;
    ASSERT_EQ(kvc_decision_retained_count(d1.h, 1, &count), KVC_OK);
    EXPECT_EQ(count, 32u);
    EXPECT_EQ(kvc_decision_retained_count(d1.h, 2, &count), KVC_ERR_LAYER_OUT_OF_RANGE);

    DecisionHandle parsed;
    ASSERT_EQ(kvc_decision_from_json(json.c_str(), &parsed.h), KVC_OK);
    ReportHandle r;
    ASSERT_EQ(kvc_evaluate(t.h, parsed.h, &r.h), KVC_OK);
    kvc_report_summary s;
    ASSERT_EQ(kvc_report_get_summary(r.h, &s), KVC_OK);
    EXPECT_EQ(s.num_layers, 2u);
    EXPECT_GT(s.attention_mass_retained, 0.0);
    EXPECT_LT(s.attention_mass_retained, 1.0);
    EXPECT_DOUBLE_EQ(s.compression_ratio, 3.0);
    char* csv = nullptr;
    ASSERT_EQ(kvc_report_to_csv(r.h, &csv), KVC_OK);
    EXPECT_EQ(take(csv).rfind("layer,", 0), 0u);
    char* rj = nullptr;
    ASSERT_EQ(kvc_report_to_json(r.h, &rj), KVC_OK);
    EXPECT_NE(take(rj).find("aggregate"), std::string::npos);

    DecisionHandle full;
    ASSERT_EQ(kvc_decision_full(t.h, &full.h), KVC_OK);
    ReportHandle fr;
    ASSERT_EQ(kvc_evaluate(t.h, full.h, &fr.h), KVC_OK);
    ASSERT_EQ(kvc_report_get_summary(fr.h, &s), KVC_OK);
    EXPECT_EQ(s.attention_mass_retained, 1.0);
    EXPECT_EQ(s.renormalized_output_error, 0.0);
}

TEST(CApi, ErrorStatuses) {
    const auto spec = small_spec(3);
    TraceHandle t;
    ASSERT_EQ(kvc_trace_generate(&spec, &t.h), KVC_OK);
    kvc_select_config cfg;
    kvc_select_config_default(&cfg);

    cfg.kvcrush_fraction = 2.0;
    kvc_decision d = nullptr;
    EXPECT_EQ(kvc_select(t.h, &cfg, &d), KVC_ERR_INVALID_FRACTION);
    EXPECT_EQ(d, nullptr);
    EXPECT_NE(std::string(kvc_last_error()), "");

    kvc_select_config_default(&cfg);
    cfg.policy = static_cast<kvc_policy>(42);
    EXPECT_EQ(kvc_select(t.h, &cfg, &d), KVC_ERR_INVALID_ARGUMENT);
    kvc_select_config_default(&cfg);
    cfg.policy = KVC_POLICY_SNAPKV;
    cfg.window = 97;
    EXPECT_EQ(kvc_select(t.h, &cfg, &d), KVC_ERR_WINDOW_TOO_LARGE);

    EXPECT_EQ(kvc_decision_from_json("{}", &d), KVC_ERR_SCHEMA);
    kvc_trace bad = nullptr;
    EXPECT_EQ(kvc_trace_read("/nonexistent/dir/trace.kvt", &bad), KVC_ERR_IO_FAILURE);
    auto bad_spec = spec;
    bad_spec.seq_len = 0;
    EXPECT_EQ(kvc_trace_generate(&bad_spec, &bad), KVC_ERR_INVALID_SPEC);

    auto other = small_spec(3);
    other.seq_len = 50;
    TraceHandle t2;
    ASSERT_EQ(kvc_trace_generate(&other, &t2.h), KVC_OK);
    DecisionHandle full;
    ASSERT_EQ(kvc_decision_full(t.h, &full.h), KVC_OK);
    kvc_report r = nullptr;
    EXPECT_EQ(kvc_evaluate(t2.h, full.h, &r), KVC_ERR_SCHEMA);
    EXPECT_NE(std::string(kvc_last_error()).find("seq_len"), std::string::npos);
}

TEST(CApi, Sweep) {
    const auto spec = small_spec(4);
    kvc_select_config cfg;
    kvc_select_config_default(&cfg);
    cfg.budget = 32;
    const kvc_anchor anchors[] = {KVC_ANCHOR_RANDOM, KVC_ANCHOR_MEAN, KVC_ANCHOR_ALTERNATING};
    const uint64_t seeds[] = {1, 2};
    kvc_sweep_grid grid{};
    grid.anchors = anchors;
    grid.anchor_count = 3;
    grid.seeds = seeds;
    grid.seed_count = 2;
    char* csv = nullptr;
    ASSERT_EQ(kvc_sweep_run(nullptr, &spec, &cfg, &grid, &csv), KVC_OK) << kvc_last_error();
    const auto text = take(csv);
    EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 7);

    grid.max_cells = 5;
    EXPECT_EQ(kvc_sweep_run(nullptr, &spec, &cfg, &grid, &csv), KVC_ERR_TOO_MANY_CELLS);
    EXPECT_EQ(kvc_sweep_run(nullptr, nullptr, &cfg, &grid, &csv), KVC_ERR_INVALID_ARGUMENT);
}

TEST(CApi, Bench) {
    char* json = nullptr;
    ASSERT_EQ(kvc_bench_grouping(256, 8, 16, 5, 5, 1, &json), KVC_OK) << kvc_last_error();
    const auto text = take(json);
    EXPECT_NE(text.find("\"points\""), std::string::npos);
    EXPECT_EQ(kvc_bench_grouping(256, 8, 16, 5, 1, 1, &json), KVC_ERR_INVALID_ARGUMENT);
}
