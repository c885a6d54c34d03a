// Copyright (C) 2026 The KVCrush Toolkit Authors
// SPDX-License-Identifier: Apache-2.0
//
// Acceptance checks. Prints one PASS/FAIL line per criterion and exits
// nonzero if any fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numeric>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "kvcrush/bench.hpp"
#include "kvcrush/error.hpp"
#include "kvcrush/eval.hpp"
#include "kvcrush/fingerprint.hpp"
#include "kvcrush/pipeline.hpp"
#include "support.hpp"

using namespace kvcrush;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

int failures = 0;

void report(const char* name, const std::function<Outcome()>& check) {
    Outcome o;
    try {
        o = check();
    } catch (const std::exception& e) {
        o = {false, std::string("exception: ") + e.what()};
    }
    std::printf("%s %s: %s\n", o.pass ? "PASS" : "FAIL", name, o.detail.c_str());
    std::fflush(stdout);
    failures += o.pass ? 0 : 1;
}

std::string fmt(const char* format, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, format, args...);
    return buf;
}

// Largest distance-op count seen relative to 2S across every grouping run.
std::uint64_t worst_ops_excess = 0;
std::uint64_t grouping_runs = 0;

void note_ops(std::uint64_t ops, std::size_t candidates) {
    ++grouping_runs;
    if (ops > 2 * candidates) {
        worst_ops_excess = std::max<std::uint64_t>(worst_ops_excess, ops - 2 * candidates);
    }
}

AttentionTrace synthetic(std::uint32_t S, std::uint32_t layers, std::uint32_t heads, std::uint64_t seed) {
    SyntheticSpec s;
    s.seq_len = S;
    s.num_layers = layers;
    s.num_heads = heads;
    s.rng_seed = seed;
    return generate_synthetic(s);
}

const PolicyKind kPolicies[] = {PolicyKind::FullKV, PolicyKind::H2O, PolicyKind::Window, PolicyKind::SnapKV,
                                PolicyKind::PyramidKV};

Outcome oracle_equivalence() {
    const auto start = std::chrono::steady_clock::now();
    std::mt19937_64 rng(2024);
    int matched = 0;
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t S = 1 + rng() % 16;
        const std::size_t H = 1 + rng() % 6;
        const std::size_t B = 1 + rng() % 8;
        const auto strategy = static_cast<AnchorStrategy>(rng() % 3);
        const std::uint64_t seed = rng();
        const auto fps = kvtest::random_strings(rng, S, H, 1 + rng() % S);
        DistanceCounter counter;
        const auto got = kvcrush_group(kvtest::to_matrix(fps), B, strategy, seed, &counter);
        note_ops(counter.count, S);
        const auto expected = kvtest::naive_group(fps, B, kvtest::naive_anchor(strategy, fps, seed));
        matched += got.indices == expected ? 1 : 0;
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return {matched == 200 && secs < 5.0, fmt("%d/200 instances match the reference, %.3f s", matched, secs)};
}

bool disjoint_partition(const LayerDecision& d) {
    std::set<std::size_t> seen;
    for (auto p : {Provenance::Important, Provenance::Representative, Provenance::Backfill}) {
        for (auto i : d.indices(p)) {
            if (!seen.insert(i).second) {
                return false;
            }
        }
    }
    return seen.size() == d.retained.size();
}

Outcome budget_exactness() {
    std::mt19937_64 rng(77);
    int ok = 0;
    const Granularity grans[] = {Granularity::Token, Granularity::Chunk, Granularity::Page};
    const std::size_t units[] = {1, 8, 32};
    const PolicyKind policies[] = {PolicyKind::H2O, PolicyKind::Window, PolicyKind::SnapKV, PolicyKind::PyramidKV};
    for (int trial = 0; trial < 100; ++trial) {
        const std::uint32_t S = 64 + static_cast<std::uint32_t>(rng() % 450);
        const auto t = synthetic(S, 2, 4, rng());
        SelectOptions o;
        o.budget.total = 2 + rng() % (S + 40);
        o.budget.kvcrush_fraction = (rng() % 11) / 10.0;
        o.budget.granularity = grans[trial % 3];
        o.budget.unit_size = units[trial % 3];
        o.policy.kind = policies[rng() % 4];
        o.policy.sinks = rng() % 40;
        o.policy.recents = rng() % 80;
        o.anchor = static_cast<AnchorStrategy>(rng() % 3);
        o.retain_fraction = 0.1 + (rng() % 10) / 10.0;
        o.seed = rng();
        const auto d = select_all_layers(t, o);
        const auto budgets = policy_budgets(o.policy, o.budget.total, 2);
        bool good = true;
        for (std::size_t l = 0; l < 2; ++l) {
            const auto& ld = d.layers[l];
            good = good && ld.retained.size() == std::min<std::size_t>(budgets[l], S) && disjoint_partition(ld);
            const std::size_t candidate_units = (S + o.budget.unit_size - 1) / o.budget.unit_size;
            note_ops(ld.distance_ops, candidate_units);
        }
        ok += good ? 1 : 0;
    }
    return {ok == 100, fmt("%d/100 configs exact with disjoint provenance (token, chunk 8, page 32)", ok)};
}

Outcome reductions() {
    int failed = 0;
    int checks = 0;
    const auto t = synthetic(300, 2, 8, 5);
    for (auto kind : kPolicies) {
        for (int g = 0; g < 3; ++g) {
            SelectOptions o;
            o.budget.total = 100;
            o.budget.kvcrush_fraction = 0.0;
            o.budget.granularity = static_cast<Granularity>(g);
            o.budget.unit_size = g == 0 ? 1 : 8;
            o.policy.kind = kind;
            const auto budgets = policy_budgets(o.policy, 100, 2);
            const auto d = select_all_layers(t, o);
            for (std::size_t l = 0; l < 2; ++l) {
                const auto la = accumulate_layer_attention(t, l, true, observation_window(o.policy, 300));
                ++checks;
                failed += d.layers[l].retained == baseline_select(la, budgets[l], o).retained ? 0 : 1;
            }
            // budget at or above S in every layer keeps everything
            o.budget.kvcrush_fraction = 0.25;
            o.budget.total = (kind == PolicyKind::PyramidKV ? 600 : 300) + 50 * static_cast<std::size_t>(g);
            const auto full = full_kv_decision(300, 2);
            const auto all = select_all_layers(t, o);
            const auto layer_budgets = policy_budgets(o.policy, o.budget.total, 2);
            for (std::size_t l = 0; l < 2; ++l) {
                ++checks;
                failed += layer_budgets[l] >= 300 && all.layers[l].retained == full.layers[l].retained ? 0 : 1;
            }
            // chunk size 1 is token mode
            for (double f : {0.25, 0.5}) {
                SelectOptions token = o;
                token.budget.total = 100;
                token.budget.kvcrush_fraction = f;
                token.budget.granularity = Granularity::Token;
                SelectOptions chunk = token;
                chunk.budget.granularity = Granularity::Chunk;
                chunk.budget.unit_size = 1;
                for (std::size_t l = 0; l < 2; ++l) {
                    ++checks;
                    failed += kvcrush_select(t, l, token).retained == kvcrush_select(t, l, chunk).retained ? 0 : 1;
                }
            }
        }
    }
    // retain fraction 1 gives all-ones fingerprints
    for (std::size_t l = 0; l < 2; ++l) {
        const auto fp = compute_fingerprints(t, l, 1.0).fingerprints;
        for (std::size_t r = 0; r < fp.rows(); ++r) {
            ++checks;
            failed += fp.row_vector(r).popcount() == fp.width() ? 0 : 1;
        }
    }
    return {failed == 0, fmt("%d/%d identities hold across all policies", checks - failed, checks)};
}

Outcome linear_time() {
    const auto scaling = measure_grouping_scaling(4096, 32, 64, 5, 11);
    double t4096 = 0.0;
    double t8192 = 0.0;
    for (const auto& p : scaling.points) {
        note_ops(p.distance_ops, p.seq_len);
        if (p.seq_len == 4096) t4096 = p.median_ns;
        if (p.seq_len == 8192) t8192 = p.median_ns;
    }
    const double ratio = t8192 / t4096;
    return {worst_ops_excess == 0 && ratio <= 2.5,
            fmt("distance ops <= 2S on all %llu runs; median(S=8192)/median(S=4096) = %.2f (%.0f/%.0f ns, H=32)",
                static_cast<unsigned long long>(grouping_runs), ratio, t8192, t4096)};
}

Outcome kmeans_gap() {
    const auto start = std::chrono::steady_clock::now();
    const auto c = compare_kmeans(4096, 32, 64, 100, 3, 12);
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return {c.speedup() >= 10.0, fmt("k-means(k=64, 100 iters) %.2f ms vs grouping %.3f ms: %.0fx, %.1f s total",
                                     c.kmeans_ns / 1e6, c.kvcrush_ns / 1e6, c.speedup(), secs)};
}

Outcome fidelity() {
    int wins = 0;
    double sum_kv = 0.0;
    double sum_h2o = 0.0;
    for (std::uint64_t i = 0; i < 100; ++i) {
        SyntheticSpec s;
        s.seq_len = 1024;
        s.num_heads = 16;
        s.num_clusters = 8;
        s.rng_seed = 1000 + i;
        const auto t = generate_synthetic(s);
        SelectOptions o;
        o.budget.total = 256;
        o.budget.kvcrush_fraction = 0.25;
        o.seed = i;
        const auto la = accumulate_layer_attention(t, 0);
        const auto with = kvcrush_select(la, 256, o).indices();
        const auto without = baseline_select(la, 256, o).indices();
        const double a = evaluate_layer(t, 0, with).attention_mass_retained;
        const double b = evaluate_layer(t, 0, without).attention_mass_retained;
        wins += a >= b ? 1 : 0;
        sum_kv += a;
        sum_h2o += b;
    }
    return {wins >= 60 && sum_kv > sum_h2o,
            fmt("H2O+KVCrush >= H2O in %d/100 pairs; mean mass %.4f vs %.4f", wins, sum_kv / 100, sum_h2o / 100)};
}

Outcome cluster_recovery() {
    int covered_all = 0;
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        SyntheticSpec s;
        s.seq_len = 64;
        s.num_heads = 16;
        s.num_clusters = 4;
        s.cluster_spread = 0.05;
        s.decode_rows = 0;
        s.rng_seed = seed;
        const auto t = generate_synthetic(s);
        SelectOptions o;
        o.budget.total = 16;
        o.budget.kvcrush_fraction = 1.0;
        o.seed = seed;
        const auto d = kvcrush_select(t, 0, o);
        std::set<std::uint32_t> labels;
        for (auto i : d.indices(Provenance::Representative)) {
            labels.insert((*t.labels())[i]);
        }
        covered_all += labels.size() == 4 ? 1 : 0;
    }
    return {covered_all >= 95, fmt("16 representatives cover all 4 clusters in %d/100 seeds", covered_all)};
}

Outcome softmax() {
    Matrix<float> eye(2, 2);
    eye(0, 0) = 1.0f;
    eye(1, 1) = 1.0f;
    const auto a = attention_matrix(eye, eye, true);
    // softmax([0, 1/sqrt(2)])
    const double low = 1.0 / (1.0 + std::exp(1.0 / std::sqrt(2.0)));
    const bool hand = std::abs(a(1, 0) - low) < 1e-4 && std::abs(a(1, 1) - (1.0 - low)) < 1e-4 && a(0, 1) == 0.0 &&
                      a(0, 0) == 1.0;
    double worst_sum = 0.0;
    bool zeros = true;
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const auto t = kvtest::random_trace(1, 2, 16, 200, seed, 3.0);
        for (bool causal : {true, false}) {
            for (std::size_t h = 0; h < 2; ++h) {
                const auto m = attention_matrix(t.head(0, h).query, t.head(0, h).key, causal);
                for (std::size_t i = 0; i < 200; ++i) {
                    double sum = 0.0;
                    for (std::size_t j = 0; j < 200; ++j) {
                        sum += m(i, j);
                        if (causal && j > i && m(i, j) != 0.0) {
                            zeros = false;
                        }
                    }
                    worst_sum = std::max(worst_sum, std::abs(sum - 1.0));
                }
            }
        }
    }
    return {hand && zeros && worst_sum <= 1e-5,
            fmt("S=2 example [%.4f, %.4f]; max |row sum - 1| = %.2e; causal zeros %s", a(1, 0), a(1, 1), worst_sum,
                zeros ? "exact" : "violated")};
}

Outcome memory_formula() {
    TraceHeader h;
    h.num_layers = 96;
    h.num_heads = 96;
    h.head_dim = 128;
    h.seq_len = 8192;
    h.precision = 2;
    const auto bytes = kv_memory_bytes(h, 128);
    const double gib = static_cast<double>(bytes) / (1024.0 * 1024.0 * 1024.0);
    const double gb = static_cast<double>(bytes) / 1e9;
    const bool within = std::abs(gib - 4608.0) <= 460.8 && std::abs(gb - 4608.0) <= 460.8;
    return {within, fmt("OPT-175B, batch 128, S=8192, fp16: %llu bytes = %.1f GiB (%.1f GB)",
                        static_cast<unsigned long long>(bytes), gib, gb)};
}

}  // namespace

int main() {
    report("oracle-equivalence", oracle_equivalence);
    report("budget-exactness", budget_exactness);
    report("reduction-identities", reductions);
    report("cluster-recovery", cluster_recovery);
    report("softmax-correctness", softmax);
    report("kv-memory-formula", memory_formula);
    report("fidelity-direction", fidelity);
    report("kmeans-latency-gap", kmeans_gap);
    report("linear-time", linear_time);
    return failures == 0 ? 0 : 1;
}
