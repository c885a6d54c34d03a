// Copyright (C) 2026 The KVCrush Toolkit Authors
// SPDX-License-Identifier: Apache-2.0

#include "kvcrush/grouping.hpp"

#include <algorithm>
#include <limits>
#include <random>

#include "kvcrush/error.hpp"

namespace kvcrush {

std::string_view to_string(AnchorStrategy strategy) noexcept {
    switch (strategy) {
    case AnchorStrategy::Random: return "random";
    case AnchorStrategy::Mean: return "mean";
    case AnchorStrategy::Alternating: return "alternating";
    }
    return "unknown";
}

std::optional<AnchorStrategy> parse_anchor_strategy(std::string_view name) noexcept {
    if (name == "random") return AnchorStrategy::Random;
    if (name == "mean") return AnchorStrategy::Mean;
    if (name == "alternating" || name == "alternate") return AnchorStrategy::Alternating;
    return std::nullopt;
}

Anchor make_anchor(AnchorStrategy strategy, const FingerprintMatrix& fingerprints, std::uint64_t rng_seed) {
    const std::size_t H = fingerprints.width();
    Anchor anchor{BitVector(H), strategy};
    switch (strategy) {
    case AnchorStrategy::Random: {
        std::mt19937_64 rng(rng_seed);
        for (std::size_t h = 0; h < H; ++h) {
            anchor.bits.set(h, (rng() >> 63) != 0);
        }
        break;
    }
    case AnchorStrategy::Mean: {
        require(fingerprints.rows() > 0, ErrorCode::EmptyInput, "mean anchor needs at least one fingerprint");
        std::vector<std::size_t> ones(H, 0);
        for (std::size_t r = 0; r < fingerprints.rows(); ++r) {
            for (std::size_t h = 0; h < H; ++h) {
                ones[h] += fingerprints.get(r, h) ? 1 : 0;
            }
        }
        for (std::size_t h = 0; h < H; ++h) {
            anchor.bits.set(h, 2 * ones[h] >= fingerprints.rows());
        }
        break;
    }
    case AnchorStrategy::Alternating:
        for (std::size_t h = 1; h < H; h += 2) {
            anchor.bits.set(h);
        }
        break;
    }
    return anchor;
}

BucketAssignment bucketize(const FingerprintMatrix& fingerprints, const Anchor& anchor, std::size_t bucket_count,
                           DistanceCounter* counter) {
    require(bucket_count >= 1, ErrorCode::ZeroBuckets, "bucket count must be at least 1");
    require(fingerprints.rows() > 0, ErrorCode::EmptyInput, "no fingerprints to bucketize");
    require(anchor.bits.size() == fingerprints.width(), ErrorCode::LengthMismatch,
            "anchor width " + std::to_string(anchor.bits.size()) + " != fingerprint width " +
                std::to_string(fingerprints.width()));

    const std::size_t span = fingerprints.width() + 1;
    BucketAssignment out;
    out.bucket_count = bucket_count;
    out.bucket_of.resize(fingerprints.rows());
    const auto anchor_words = anchor.bits.words();
    for (std::size_t t = 0; t < fingerprints.rows(); ++t) {
        const std::size_t d = hamming(fingerprints.row(t), anchor_words);
        out.bucket_of[t] = static_cast<std::uint32_t>(std::min(bucket_count - 1, d * bucket_count / span));
    }
    if (counter) {
        counter->count += fingerprints.rows();
    }
    return out;
}

RepresentativeSet select_representatives(const FingerprintMatrix& fingerprints, const BucketAssignment& assignment,
                                         DistanceCounter* counter) {
    const std::size_t S = fingerprints.rows();
    const std::size_t H = fingerprints.width();
    const std::size_t B = assignment.bucket_count;
    require(assignment.bucket_of.size() == S, ErrorCode::InconsistentAssignment,
            "assignment covers " + std::to_string(assignment.bucket_of.size()) + " tokens, expected " +
                std::to_string(S));
    for (auto b : assignment.bucket_of) {
        require(b < B, ErrorCode::InconsistentAssignment, "bucket index out of range");
    }

    // Per-bucket bit counts -> majority centroid.
    std::vector<std::size_t> members(B, 0);
    std::vector<std::size_t> ones(B * H, 0);
    for (std::size_t t = 0; t < S; ++t) {
        const std::size_t b = assignment.bucket_of[t];
        ++members[b];
        for (std::size_t h = 0; h < H; ++h) {
            ones[b * H + h] += fingerprints.get(t, h) ? 1 : 0;
        }
    }
    FingerprintMatrix centroids(B, H);
    for (std::size_t b = 0; b < B; ++b) {
        for (std::size_t h = 0; h < H; ++h) {
            if (members[b] > 0 && 2 * ones[b * H + h] >= members[b]) {
                centroids.set(b, h);
            }
        }
    }

    constexpr auto kNone = std::numeric_limits<std::size_t>::max();
    std::vector<std::size_t> best(B, kNone);
    std::vector<std::size_t> best_distance(B, kNone);
    for (std::size_t t = 0; t < S; ++t) {
        const std::size_t b = assignment.bucket_of[t];
        const std::size_t d = hamming(fingerprints.row(t), centroids.row(b));
        if (d < best_distance[b]) {
            best_distance[b] = d;
            best[b] = t;
        }
    }
    if (counter) {
        counter->count += S;
    }

    RepresentativeSet out;
    std::vector<std::pair<std::size_t, std::size_t>> picked;
    for (std::size_t b = 0; b < B; ++b) {
        if (best[b] != kNone) {
            picked.emplace_back(best[b], b);
        }
    }
    std::sort(picked.begin(), picked.end());
    for (auto [index, bucket] : picked) {
        out.indices.push_back(index);
        out.buckets.push_back(bucket);
    }
    return out;
}

RepresentativeSet kvcrush_group(const FingerprintMatrix& fingerprints, std::size_t bucket_count,
                                AnchorStrategy strategy, std::uint64_t rng_seed, DistanceCounter* counter) {
    require(fingerprints.rows() > 0, ErrorCode::EmptyInput, "no fingerprints to group");
    const Anchor anchor = make_anchor(strategy, fingerprints, rng_seed);
    const BucketAssignment assignment = bucketize(fingerprints, anchor, bucket_count, counter);
    return select_representatives(fingerprints, assignment, counter);
}

RepresentativeSet kmeans_oracle(const FingerprintMatrix& fingerprints, std::size_t k, std::size_t iters,
                                std::uint64_t rng_seed, std::vector<std::size_t>* assignment) {
    const std::size_t S = fingerprints.rows();
    const std::size_t H = fingerprints.width();
    require(S > 0, ErrorCode::EmptyInput, "no fingerprints to cluster");
    require(k >= 1 && k <= S, ErrorCode::KTooLarge,
            "k = " + std::to_string(k) + " must lie in [1, " + std::to_string(S) + "]");
    require(iters >= 1, ErrorCode::InvalidArgument, "k-means needs at least one iteration");

    std::vector<float> points(S * H);
    for (std::size_t t = 0; t < S; ++t) {
        for (std::size_t h = 0; h < H; ++h) {
            points[t * H + h] = fingerprints.get(t, h) ? 1.0F : 0.0F;
        }
    }
    auto sq_dist = [H](const float* a, const float* b) {
        float acc = 0.0F;
        for (std::size_t i = 0; i < H; ++i) {
            const float d = a[i] - b[i];
            acc += d * d;
        }
        return acc;
    };

    // k-means++ seeding.
    std::mt19937_64 rng(rng_seed);
    std::vector<float> centers(k * H);
    std::vector<char> chosen(S, 0);
    std::vector<double> nearest(S, std::numeric_limits<double>::infinity());
    std::size_t first = std::uniform_int_distribution<std::size_t>(0, S - 1)(rng);
    std::copy_n(points.begin() + static_cast<std::ptrdiff_t>(first * H), H, centers.begin());
    chosen[first] = 1;
    for (std::size_t c = 1; c < k; ++c) {
        const float* prev = centers.data() + (c - 1) * H;
        double total = 0.0;
        for (std::size_t t = 0; t < S; ++t) {
            nearest[t] = std::min(nearest[t], static_cast<double>(sq_dist(points.data() + t * H, prev)));
            total += nearest[t];
        }
        std::size_t next = S;
        if (total > 0.0) {
            double target = std::uniform_real_distribution<double>(0.0, total)(rng);
            for (std::size_t t = 0; t < S; ++t) {
                target -= nearest[t];
                if (target <= 0.0 && nearest[t] > 0.0) {
                    next = t;
                    break;
                }
            }
            if (next == S) {
                for (std::size_t t = S; t-- > 0;) {
                    if (nearest[t] > 0.0) {
                        next = t;
                        break;
                    }
                }
            }
        } else {
            // Every point coincides with a center; take the first unused one.
            next = static_cast<std::size_t>(std::find(chosen.begin(), chosen.end(), 0) - chosen.begin());
        }
        chosen[next] = 1;
        std::copy_n(points.begin() + static_cast<std::ptrdiff_t>(next * H), H,
                    centers.begin() + static_cast<std::ptrdiff_t>(c * H));
    }

    std::vector<std::size_t> assign(S, 0);
    std::vector<double> sums(k * H);
    std::vector<std::size_t> counts(k);
    auto assign_points = [&] {
        for (std::size_t t = 0; t < S; ++t) {
            const float* p = points.data() + t * H;
            float best = std::numeric_limits<float>::infinity();
            std::size_t best_c = 0;
            for (std::size_t c = 0; c < k; ++c) {
                const float d = sq_dist(p, centers.data() + c * H);
                if (d < best) {
                    best = d;
                    best_c = c;
                }
            }
            assign[t] = best_c;
        }
    };
    for (std::size_t it = 0; it < iters; ++it) {
        assign_points();
        std::fill(sums.begin(), sums.end(), 0.0);
        std::fill(counts.begin(), counts.end(), 0);
        for (std::size_t t = 0; t < S; ++t) {
            ++counts[assign[t]];
            for (std::size_t h = 0; h < H; ++h) {
                sums[assign[t] * H + h] += points[t * H + h];
            }
        }
        for (std::size_t c = 0; c < k; ++c) {
            if (counts[c] == 0) {
                continue;  // empty cluster keeps its center
            }
            for (std::size_t h = 0; h < H; ++h) {
                centers[c * H + h] = static_cast<float>(sums[c * H + h] / static_cast<double>(counts[c]));
            }
        }
    }
    assign_points();

    constexpr auto kNone = std::numeric_limits<std::size_t>::max();
    std::vector<std::size_t> best(k, kNone);
    std::vector<float> best_distance(k, std::numeric_limits<float>::infinity());
    for (std::size_t t = 0; t < S; ++t) {
        const std::size_t c = assign[t];
        const float d = sq_dist(points.data() + t * H, centers.data() + c * H);
        if (d < best_distance[c]) {
            best_distance[c] = d;
            best[c] = t;
        }
    }
    std::vector<std::pair<std::size_t, std::size_t>> picked;
    for (std::size_t c = 0; c < k; ++c) {
        if (best[c] != kNone) {
            picked.emplace_back(best[c], c);
        }
    }
    std::sort(picked.begin(), picked.end());
    if (assignment) {
        *assignment = assign;
    }
    RepresentativeSet out;
    for (auto [index, cluster] : picked) {
        out.indices.push_back(index);
        out.buckets.push_back(cluster);
    }
    return out;
}

}  // namespace kvcrush
