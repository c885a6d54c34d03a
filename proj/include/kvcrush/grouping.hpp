// Copyright (C) 2026 The KVCrush Toolkit Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string_view>
#include <vector>

#include "kvcrush/bits.hpp"

namespace kvcrush {

enum class AnchorStrategy { Random, Mean, Alternating };

std::string_view to_string(AnchorStrategy strategy) noexcept;
std::optional<AnchorStrategy> parse_anchor_strategy(std::string_view name) noexcept;

struct Anchor {
    BitVector bits;
    AnchorStrategy strategy = AnchorStrategy::Mean;
};

/// Counts Hamming distance evaluations performed by the grouping passes.
struct DistanceCounter {
    std::uint64_t count = 0;
};

/// Random: i.i.d. fair bits from the seed. Mean: per-bit majority over the
/// fingerprints, ties to 1 (EmptyInput on an empty set). Alternating: 0101...
Anchor make_anchor(AnchorStrategy strategy, const FingerprintMatrix& fingerprints, std::uint64_t rng_seed);

struct BucketAssignment {
    std::vector<std::uint32_t> bucket_of;
    std::size_t bucket_count = 0;
};

/// Uniform binning of the anchor distance range [0, H] into bucket_count
/// bins: bucket = min(B - 1, floor(d * B / (H + 1))).
BucketAssignment bucketize(const FingerprintMatrix& fingerprints, const Anchor& anchor, std::size_t bucket_count,
                           DistanceCounter* counter = nullptr);

struct RepresentativeSet {
    std::vector<std::size_t> indices;  // strictly increasing
    std::vector<std::size_t> buckets;  // source bucket of indices[i]

    std::size_t size() const noexcept { return indices.size(); }
};

/// One token per non-empty bucket: the member nearest the bucket's majority
/// centroid (centroid ties to 1, distance ties to the smaller index).
RepresentativeSet select_representatives(const FingerprintMatrix& fingerprints, const BucketAssignment& assignment,
                                         DistanceCounter* counter = nullptr);

/// Anchor, bucket, then pick representatives. Performs exactly 2S distance
/// computations.
RepresentativeSet kvcrush_group(const FingerprintMatrix& fingerprints, std::size_t bucket_count,
                                AnchorStrategy strategy, std::uint64_t rng_seed,
                                DistanceCounter* counter = nullptr);

/// Lloyd's k-means over the fingerprints as 0/1 real vectors (Euclidean,
/// k-means++ seeding, exactly `iters` iterations). Returns the member nearest
/// each final center. Comparison baseline only. `assignment`, when given,
/// receives each point's final cluster.
RepresentativeSet kmeans_oracle(const FingerprintMatrix& fingerprints, std::size_t k, std::size_t iters,
                                std::uint64_t rng_seed, std::vector<std::size_t>* assignment = nullptr);

}  // namespace kvcrush
