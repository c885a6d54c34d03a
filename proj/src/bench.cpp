// Copyright (C) 2026 The KVCrush Toolkit Authors
// SPDX-License-Identifier: Apache-2.0

#include "kvcrush/bench.hpp"

#include <algorithm>
#include <chrono>
#include <random>

#include "json.hpp"
#include "kvcrush/error.hpp"
#include "kvcrush/grouping.hpp"

namespace kvcrush {

namespace {

using Clock = std::chrono::steady_clock;

template <typename Fn>
double median_ns(std::size_t repetitions, Fn&& fn) {
    // Warm-up call also sizes the inner loop.
    auto start = Clock::now();
    fn();
    const auto once = std::chrono::duration<double, std::nano>(Clock::now() - start).count();
    const auto inner = static_cast<std::size_t>(std::clamp(1.0e6 / std::max(once, 1.0), 1.0, 10000.0));

    std::vector<double> samples;
    samples.reserve(repetitions);
    for (std::size_t r = 0; r < repetitions; ++r) {
        start = Clock::now();
        for (std::size_t i = 0; i < inner; ++i) {
            fn();
        }
        samples.push_back(std::chrono::duration<double, std::nano>(Clock::now() - start).count() /
                          static_cast<double>(inner));
    }
    std::nth_element(samples.begin(), samples.begin() + static_cast<std::ptrdiff_t>(samples.size() / 2),
                     samples.end());
    return samples[samples.size() / 2];
}

}  // namespace

FingerprintMatrix random_fingerprints(std::size_t seq_len, std::size_t width, std::uint64_t seed) {
    FingerprintMatrix out(seq_len, width);
    std::mt19937_64 rng(seed);
    for (std::size_t t = 0; t < seq_len; ++t) {
        for (std::size_t h = 0; h < width; ++h) {
            out.set(t, h, (rng() >> 63) != 0);
        }
    }
    return out;
}

GroupingScaling measure_grouping_scaling(std::size_t seq_len, std::size_t num_heads, std::size_t buckets,
                                         std::size_t repetitions, std::uint64_t seed) {
    require(repetitions >= 5, ErrorCode::InvalidArgument, "latency medians need at least 5 repetitions");
    require(seq_len >= 1 && num_heads >= 1 && buckets >= 1, ErrorCode::InvalidArgument,
            "benchmark dimensions must be positive");
    GroupingScaling out;
    out.num_heads = num_heads;
    out.buckets = buckets;
    out.repetitions = repetitions;
    for (std::size_t factor : {1, 2, 4}) {
        const std::size_t S = seq_len * factor;
        const auto fingerprints = random_fingerprints(S, num_heads, seed + factor);
        DistanceCounter counter;
        kvcrush_group(fingerprints, buckets, AnchorStrategy::Mean, seed, &counter);
        const double ns = median_ns(repetitions, [&] {
            auto reps = kvcrush_group(fingerprints, buckets, AnchorStrategy::Mean, seed);
            if (reps.indices.empty()) {
                raise(ErrorCode::Internal, "grouping returned no representatives");
            }
        });
        out.points.push_back({S, ns, counter.count});
    }
    return out;
}

KMeansComparison compare_kmeans(std::size_t seq_len, std::size_t num_heads, std::size_t k, std::size_t iters,
                                std::size_t repetitions, std::uint64_t seed) {
    require(repetitions >= 1, ErrorCode::InvalidArgument, "need at least one repetition");
    const auto fingerprints = random_fingerprints(seq_len, num_heads, seed);
    KMeansComparison out{seq_len, num_heads, k, iters, 0.0, 0.0};
    out.kvcrush_ns = median_ns(std::max<std::size_t>(repetitions, 5), [&] {
        auto reps = kvcrush_group(fingerprints, k, AnchorStrategy::Mean, seed);
        if (reps.indices.empty()) {
            raise(ErrorCode::Internal, "grouping returned no representatives");
        }
    });
    out.kmeans_ns = median_ns(repetitions, [&] {
        auto reps = kmeans_oracle(fingerprints, k, iters, seed);
        if (reps.indices.empty()) {
            raise(ErrorCode::Internal, "k-means returned no representatives");
        }
    });
    return out;
}

std::string bench_to_json(const GroupingScaling& scaling, const KMeansComparison& comparison) {
    nlohmann::json points = nlohmann::json::array();
    for (const auto& p : scaling.points) {
        points.push_back({{"seq_len", p.seq_len}, {"median_ns", p.median_ns}, {"distance_ops", p.distance_ops}});
    }
    nlohmann::json doc = {
        {"grouping_scaling",
         {{"num_heads", scaling.num_heads},
          {"buckets", scaling.buckets},
          {"repetitions", scaling.repetitions},
          {"points", std::move(points)}}},
        {"kmeans_comparison",
         {{"seq_len", comparison.seq_len},
          {"num_heads", comparison.num_heads},
          {"k", comparison.k},
          {"iters", comparison.iters},
          {"kvcrush_ns", comparison.kvcrush_ns},
          {"kmeans_ns", comparison.kmeans_ns},
          {"speedup", comparison.speedup()}}}};
    return doc.dump(2) + "\n";
}

}  // namespace kvcrush
