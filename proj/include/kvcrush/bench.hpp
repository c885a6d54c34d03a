// Copyright (C) 2026 The KVCrush Toolkit Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "kvcrush/bits.hpp"

namespace kvcrush {

/// S fingerprints of width H with i.i.d. fair bits.
FingerprintMatrix random_fingerprints(std::size_t seq_len, std::size_t width, std::uint64_t seed);

struct LatencyPoint {
    std::size_t seq_len = 0;
    double median_ns = 0.0;
    std::uint64_t distance_ops = 0;
};

/// Grouping-phase latency at S, 2S and 4S.
struct GroupingScaling {
    std::size_t num_heads = 0;
    std::size_t buckets = 0;
    std::size_t repetitions = 0;
    std::vector<LatencyPoint> points;
};

/// Median over `repetitions` (>= 5) timed samples. Each sample averages
/// enough back-to-back calls to cover about a millisecond.
GroupingScaling measure_grouping_scaling(std::size_t seq_len, std::size_t num_heads, std::size_t buckets,
                                         std::size_t repetitions, std::uint64_t seed);

struct KMeansComparison {
    std::size_t seq_len = 0;
    std::size_t num_heads = 0;
    std::size_t k = 0;
    std::size_t iters = 0;
    double kvcrush_ns = 0.0;
    double kmeans_ns = 0.0;

    double speedup() const { return kvcrush_ns > 0.0 ? kmeans_ns / kvcrush_ns : 0.0; }
};

/// Isolated selection-phase latency of the Hamming grouping vs k-means with
/// k clusters, on the same fingerprints.
KMeansComparison compare_kmeans(std::size_t seq_len, std::size_t num_heads, std::size_t k, std::size_t iters,
                                std::size_t repetitions, std::uint64_t seed);

std::string bench_to_json(const GroupingScaling& scaling, const KMeansComparison& comparison);

}  // namespace kvcrush
