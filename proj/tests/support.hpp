// Copyright (C) 2026 The KVCrush Toolkit Authors
// SPDX-License-Identifier: Apache-2.0

// Shared fixtures and slow, obviously-correct reference implementations.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "kvcrush/bits.hpp"
#include "kvcrush/grouping.hpp"
#include "kvcrush/trace.hpp"

namespace kvtest {

using kvcrush::AttentionTrace;
using kvcrush::TraceHeader;

inline AttentionTrace empty_trace(std::uint32_t layers, std::uint32_t heads, std::uint32_t dim, std::uint32_t S) {
    TraceHeader h;
    h.model_name = "test";
    h.num_layers = layers;
    h.num_heads = heads;
    h.head_dim = dim;
    h.seq_len = S;
    return AttentionTrace(h);
}

inline AttentionTrace random_trace(std::uint32_t layers, std::uint32_t heads, std::uint32_t dim, std::uint32_t S,
                                   std::uint64_t seed, double scale = 1.0) {
    auto trace = empty_trace(layers, heads, dim, S);
    std::mt19937_64 rng(seed);
    std::normal_distribution<float> g(0.0f, static_cast<float>(scale));
    for (std::uint32_t l = 0; l < layers; ++l) {
        for (std::uint32_t h = 0; h < heads; ++h) {
            auto& t = trace.head(l, h);
            for (std::uint32_t r = 0; r < S; ++r) {
                for (std::uint32_t c = 0; c < dim; ++c) {
                    t.query(r, c) = g(rng);
                    t.key(r, c) = g(rng);
                }
            }
        }
    }
    return trace;
}

// Dense softmax(Q K^T / sqrt(d)) computed one scalar at a time in long double.
inline std::vector<std::vector<double>> naive_attention(const AttentionTrace& trace, std::size_t layer,
                                                        std::size_t head, bool causal) {
    const auto& t = trace.head(layer, head);
    const std::size_t S = trace.seq_len();
    const std::size_t D = trace.head_dim();
    std::vector<std::vector<double>> out(S, std::vector<double>(S, 0.0));
    for (std::size_t i = 0; i < S; ++i) {
        const std::size_t last = causal ? i : S - 1;
        std::vector<long double> logits(last + 1);
        long double peak = -1e300L;
        for (std::size_t j = 0; j <= last; ++j) {
            long double dot = 0;
            for (std::size_t d = 0; d < D; ++d) {
                dot += static_cast<long double>(t.query(i, d)) * static_cast<long double>(t.key(j, d));
            }
            logits[j] = dot / std::sqrt(static_cast<long double>(D));
            peak = std::max(peak, logits[j]);
        }
        long double total = 0;
        for (auto& v : logits) {
            v = std::exp(v - peak);
            total += v;
        }
        for (std::size_t j = 0; j <= last; ++j) {
            out[i][j] = static_cast<double>(logits[j] / total);
        }
    }
    return out;
}

inline std::size_t naive_hamming(const std::string& a, const std::string& b) {
    std::size_t d = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        d += a[i] != b[i] ? 1 : 0;
    }
    return d;
}

inline std::string naive_mean_anchor(const std::vector<std::string>& fps) {
    std::string out(fps.front().size(), '0');
    for (std::size_t h = 0; h < out.size(); ++h) {
        std::size_t ones = 0;
        for (const auto& f : fps) {
            ones += f[h] == '1' ? 1 : 0;
        }
        if (2 * ones >= fps.size()) {
            out[h] = '1';
        }
    }
    return out;
}

inline std::string naive_alternating_anchor(std::size_t width) {
    std::string out(width, '0');
    for (std::size_t h = 1; h < width; h += 2) {
        out[h] = '1';
    }
    return out;
}

// Random anchor contract: bit h is the top bit of the h-th mt19937_64 draw.
inline std::string naive_random_anchor(std::size_t width, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::string out(width, '0');
    for (std::size_t h = 0; h < width; ++h) {
        out[h] = (rng() >> 63) ? '1' : '0';
    }
    return out;
}

inline std::string naive_anchor(kvcrush::AnchorStrategy s, const std::vector<std::string>& fps, std::uint64_t seed) {
    switch (s) {
    case kvcrush::AnchorStrategy::Random: return naive_random_anchor(fps.front().size(), seed);
    case kvcrush::AnchorStrategy::Mean: return naive_mean_anchor(fps);
    case kvcrush::AnchorStrategy::Alternating: return naive_alternating_anchor(fps.front().size());
    }
    return {};
}

// Anchor, uniform distance bins over [0, H], majority centroid per bucket,
// nearest member (earliest on ties). Strings only, no bit tricks.
inline std::vector<std::size_t> naive_group(const std::vector<std::string>& fps, std::size_t buckets,
                                            const std::string& anchor) {
    const std::size_t H = anchor.size();
    std::vector<std::vector<std::size_t>> members(buckets);
    for (std::size_t t = 0; t < fps.size(); ++t) {
        const std::size_t d = naive_hamming(fps[t], anchor);
        std::size_t b = d * buckets / (H + 1);
        if (b > buckets - 1) {
            b = buckets - 1;
        }
        members[b].push_back(t);
    }
    std::vector<std::size_t> reps;
    for (const auto& m : members) {
        if (m.empty()) {
            continue;
        }
        std::vector<std::string> group;
        for (auto t : m) {
            group.push_back(fps[t]);
        }
        const std::string centroid = naive_mean_anchor(group);
        std::size_t best = m.front();
        for (auto t : m) {
            if (naive_hamming(fps[t], centroid) < naive_hamming(fps[best], centroid)) {
                best = t;
            }
        }
        reps.push_back(best);
    }
    std::sort(reps.begin(), reps.end());
    return reps;
}

inline kvcrush::FingerprintMatrix to_matrix(const std::vector<std::string>& fps) {
    return kvcrush::FingerprintMatrix::from_strings(fps);
}

inline std::vector<std::string> random_strings(std::mt19937_64& rng, std::size_t n, std::size_t width,
                                               std::size_t distinct) {
    std::uniform_int_distribution<int> bit(0, 1);
    std::vector<std::string> pool(distinct, std::string(width, '0'));
    for (auto& p : pool) {
        for (auto& c : p) {
            c = bit(rng) ? '1' : '0';
        }
    }
    std::uniform_int_distribution<std::size_t> pick(0, distinct - 1);
    std::vector<std::string> out;
    for (std::size_t i = 0; i < n; ++i) {
        out.push_back(pool[pick(rng)]);
    }
    return out;
}

// 2 * batch * layers * heads * S * d * bytes via repeated addition in
// 128-bit arithmetic.
inline unsigned __int128 naive_kv_bytes(std::uint64_t batch, std::uint64_t layers, std::uint64_t heads,
                                        std::uint64_t S, std::uint64_t d, std::uint64_t bytes) {
    unsigned __int128 v = 2;
    for (std::uint64_t f : {batch, layers, heads, S, d, bytes}) {
        v *= f;
    }
    return v;
}

}  // namespace kvtest
