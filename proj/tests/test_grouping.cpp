// Copyright (C) 2026 The KVCrush Toolkit Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <algorithm>
#include <numeric>
#include <random>
#include <set>

#include "kvcrush/bench.hpp"
#include "kvcrush/error.hpp"
#include "kvcrush/fingerprint.hpp"
#include "kvcrush/grouping.hpp"
#include "support.hpp"

using namespace kvcrush;
using kvtest::to_matrix;

namespace {

template <typename Fn>
ErrorCode code_of(Fn&& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.code();
    }
    return ErrorCode::Internal;
}

}  // namespace

TEST(Hamming, Basics) {
    const auto a = BitVector::from_string("0000");
    const auto b = BitVector::from_string("1111");
    EXPECT_EQ(hamming(a, a), 0u);
    EXPECT_EQ(hamming(a, b), 4u);
    EXPECT_EQ(code_of([&] { hamming(a, BitVector::from_string("000")); }), ErrorCode::LengthMismatch);
}

TEST(Hamming, MatchesCharacterComparisonAcrossWordBoundaries) {
    std::mt19937_64 rng(3);
    for (int trial = 0; trial < 300; ++trial) {
        const std::size_t width = 1 + rng() % 200;
        const auto s = kvtest::random_strings(rng, 2, width, 2);
        const auto a = BitVector::from_string(s[0]);
        const auto b = BitVector::from_string(s[1]);
        ASSERT_EQ(hamming(a, b), kvtest::naive_hamming(s[0], s[1]));
        ASSERT_EQ(hamming(a, b), hamming(b, a));
        ASSERT_EQ(a.to_string(), s[0]);
    }
}

TEST(Anchor, Strategies) {
    const auto fps = to_matrix({"0011", "0011", "1100"});
    EXPECT_EQ(make_anchor(AnchorStrategy::Alternating, fps, 0).bits.to_string(), "0101");
    EXPECT_EQ(make_anchor(AnchorStrategy::Mean, fps, 0).bits.to_string(), "0011");
    EXPECT_EQ(make_anchor(AnchorStrategy::Mean, to_matrix({"01", "10"}), 0).bits.to_string(), "11");
    const auto r1 = make_anchor(AnchorStrategy::Random, fps, 42);
    const auto r2 = make_anchor(AnchorStrategy::Random, fps, 42);
    EXPECT_EQ(r1.bits, r2.bits);
    EXPECT_EQ(r1.bits.to_string(), kvtest::naive_random_anchor(4, 42));
    EXPECT_EQ(code_of([] { make_anchor(AnchorStrategy::Mean, FingerprintMatrix(0, 4), 0); }),
              ErrorCode::EmptyInput);
    EXPECT_EQ(make_anchor(AnchorStrategy::Random, FingerprintMatrix(0, 4), 1).bits.size(), 4u);
}

TEST(Anchor, RandomBitsAreRoughlyFair) {
    const auto a = make_anchor(AnchorStrategy::Random, FingerprintMatrix(1, 4096), 9);
    EXPECT_GT(a.bits.popcount(), 1900u);
    EXPECT_LT(a.bits.popcount(), 2200u);
}

TEST(Bucketize, SingleBucketAndExactBins) {
    const auto fps = to_matrix({"0000", "1000", "1100", "1110", "1111"});
    const Anchor zero{BitVector(4), AnchorStrategy::Mean};
    for (auto b : bucketize(fps, zero, 1).bucket_of) {
        EXPECT_EQ(b, 0u);
    }
    const auto five = bucketize(fps, zero, 5);
    for (std::uint32_t k = 0; k < 5; ++k) {
        EXPECT_EQ(five.bucket_of[k], k);
    }
    const Anchor self{BitVector::from_string("1110"), AnchorStrategy::Mean};
    EXPECT_EQ(bucketize(fps, self, 3).bucket_of[3], 0u);
}

TEST(Bucketize, Errors) {
    const auto fps = to_matrix({"01"});
    const Anchor a{BitVector(2), AnchorStrategy::Mean};
    EXPECT_EQ(code_of([&] { bucketize(fps, a, 0); }), ErrorCode::ZeroBuckets);
    EXPECT_EQ(code_of([&] { bucketize(fps, Anchor{BitVector(3), AnchorStrategy::Mean}, 2); }),
              ErrorCode::LengthMismatch);
    EXPECT_EQ(code_of([&] { bucketize(FingerprintMatrix(0, 2), a, 2); }), ErrorCode::EmptyInput);
}

TEST(Representatives, HandExamples) {
    {
        const auto fps = to_matrix({"0110"});
        const auto r = select_representatives(fps, BucketAssignment{{0}, 1});
        EXPECT_EQ(r.indices, std::vector<std::size_t>{0});
    }
    {
        const auto fps = to_matrix({"0111", "0011", "0011"});
        const auto r = select_representatives(fps, BucketAssignment{{0, 0, 0}, 1});
        EXPECT_EQ(r.indices, std::vector<std::size_t>{1});
    }
    {
        // centroid of {1100, 0011} is 1111 (ties -> 1); both at distance 2
        const auto fps = to_matrix({"1100", "0011"});
        const auto r = select_representatives(fps, BucketAssignment{{0, 0}, 2});
        EXPECT_EQ(r.indices, std::vector<std::size_t>{0});
        EXPECT_EQ(r.buckets, std::vector<std::size_t>{0});
    }
}

TEST(Representatives, InconsistentAssignment) {
    const auto fps = to_matrix({"01", "10"});
    EXPECT_EQ(code_of([&] { select_representatives(fps, BucketAssignment{{0}, 1}); }),
              ErrorCode::InconsistentAssignment);
    EXPECT_EQ(code_of([&] { select_representatives(fps, BucketAssignment{{0, 3}, 2}); }),
              ErrorCode::InconsistentAssignment);
}

TEST(Group, DistinctDistancesFillEveryBucket) {
    // distances to 0101: 0, 1, 2, 3
    const auto fps = to_matrix({"0101", "1101", "1001", "1011"});
    const auto r = kvcrush_group(fps, 5, AnchorStrategy::Alternating, 0);
    EXPECT_EQ(r.indices, (std::vector<std::size_t>{0, 1, 2, 3}));
    EXPECT_EQ(r.buckets, (std::vector<std::size_t>{0, 1, 2, 3}));
    // 4 buckets over 5 distances merge distances 0 and 1
    EXPECT_EQ(kvcrush_group(fps, 4, AnchorStrategy::Alternating, 0).size(), 3u);
}

TEST(Group, IdenticalFingerprintsGiveOneRepresentative) {
    const auto fps = to_matrix({"1010", "1010", "1010", "1010"});
    const auto r = kvcrush_group(fps, 3, AnchorStrategy::Random, 5);
    EXPECT_EQ(r.size(), 1u);
    EXPECT_EQ(r.indices.front(), 0u);
}

TEST(Group, SeededRandomIsDeterministic) {
    std::mt19937_64 rng(1);
    const auto fps = to_matrix(kvtest::random_strings(rng, 100, 12, 30));
    EXPECT_EQ(kvcrush_group(fps, 7, AnchorStrategy::Random, 99).indices,
              kvcrush_group(fps, 7, AnchorStrategy::Random, 99).indices);
}

TEST(Group, MatchesNaiveReference) {
    std::mt19937_64 rng(2024);
    const AnchorStrategy strategies[] = {AnchorStrategy::Random, AnchorStrategy::Mean, AnchorStrategy::Alternating};
    for (int trial = 0; trial < 500; ++trial) {
        const std::size_t S = 1 + rng() % 40;
        const std::size_t H = 1 + rng() % 70;
        const std::size_t B = 1 + rng() % 12;
        const auto fps = kvtest::random_strings(rng, S, H, 1 + rng() % S);
        const auto strategy = strategies[trial % 3];
        const std::uint64_t seed = rng();
        const auto expected = kvtest::naive_group(fps, B, kvtest::naive_anchor(strategy, fps, seed));
        DistanceCounter counter;
        const auto got = kvcrush_group(to_matrix(fps), B, strategy, seed, &counter);
        ASSERT_EQ(got.indices, expected) << "trial " << trial;
        ASSERT_EQ(counter.count, 2 * S);
    }
}

TEST(Group, InvariantsOnRandomInputs) {
    std::mt19937_64 rng(8);
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t S = 1 + rng() % 300;
        const std::size_t H = 1 + rng() % 40;
        const std::size_t B = 1 + rng() % 40;
        const auto fps = to_matrix(kvtest::random_strings(rng, S, H, 1 + rng() % S));
        const auto anchor = make_anchor(AnchorStrategy::Mean, fps, 0);
        const auto assignment = bucketize(fps, anchor, B);
        std::vector<std::size_t> sizes(B, 0);
        for (auto b : assignment.bucket_of) {
            ++sizes[b];
        }
        ASSERT_EQ(std::accumulate(sizes.begin(), sizes.end(), std::size_t{0}), S);
        const auto r = select_representatives(fps, assignment);
        ASSERT_LE(r.size(), B);
        ASSERT_TRUE(std::is_sorted(r.indices.begin(), r.indices.end()));
        ASSERT_EQ(std::set<std::size_t>(r.indices.begin(), r.indices.end()).size(), r.size());
        const auto non_empty = static_cast<std::size_t>(std::count_if(sizes.begin(), sizes.end(), [](auto n) {
            return n > 0;
        }));
        ASSERT_EQ(r.size(), non_empty);
    }
}

TEST(Group, PermutationEquivariant) {
    std::mt19937_64 rng(77);
    int checked = 0;
    for (int trial = 0; trial < 400 && checked < 100; ++trial) {
        const std::size_t S = 2 + rng() % 20;
        const std::size_t H = 4 + rng() % 12;
        auto fps = kvtest::random_strings(rng, S, H, 1u << 12);
        std::set<std::string> unique(fps.begin(), fps.end());
        if (unique.size() != S) {
            continue;
        }
        // Skip instances where a bucket has two members tied for nearest.
        const std::size_t B = 1 + rng() % 6;
        const auto anchor = kvtest::naive_alternating_anchor(H);
        bool ties = false;
        std::vector<std::vector<std::size_t>> members(B);
        for (std::size_t t = 0; t < S; ++t) {
            members[std::min(B - 1, kvtest::naive_hamming(fps[t], anchor) * B / (H + 1))].push_back(t);
        }
        for (const auto& m : members) {
            if (m.empty()) {
                continue;
            }
            std::vector<std::string> group;
            for (auto t : m) {
                group.push_back(fps[t]);
            }
            const auto c = kvtest::naive_mean_anchor(group);
            std::vector<std::size_t> d;
            for (const auto& g : group) {
                d.push_back(kvtest::naive_hamming(g, c));
            }
            std::sort(d.begin(), d.end());
            ties = ties || (d.size() > 1 && d[0] == d[1]);
        }
        if (ties) {
            continue;
        }
        ++checked;
        std::vector<std::size_t> perm(S);
        std::iota(perm.begin(), perm.end(), 0);
        std::shuffle(perm.begin(), perm.end(), rng);
        std::vector<std::string> permuted(S);
        for (std::size_t i = 0; i < S; ++i) {
            permuted[i] = fps[perm[i]];
        }
        const auto a = kvcrush_group(to_matrix(fps), B, AnchorStrategy::Alternating, 0);
        const auto b = kvcrush_group(to_matrix(permuted), B, AnchorStrategy::Alternating, 0);
        std::set<std::size_t> mapped;
        for (auto i : b.indices) {
            mapped.insert(perm[i]);
        }
        ASSERT_EQ(mapped, std::set<std::size_t>(a.indices.begin(), a.indices.end()));
    }
    EXPECT_GE(checked, 50);
}

TEST(KMeans, KEqualsSReturnsEveryToken) {
    const auto fps = to_matrix({"0000", "0011", "1100", "1111", "1010"});
    const auto r = kmeans_oracle(fps, 5, 10, 1);
    EXPECT_EQ(r.indices, (std::vector<std::size_t>{0, 1, 2, 3, 4}));
    EXPECT_EQ(code_of([&] { kmeans_oracle(fps, 6, 10, 1); }), ErrorCode::KTooLarge);
    EXPECT_EQ(code_of([&] { kmeans_oracle(fps, 2, 0, 1); }), ErrorCode::InvalidArgument);
}

TEST(KMeans, SeparatesPlantedClusters) {
    SyntheticSpec spec;
    spec.seq_len = 64;
    spec.num_heads = 16;
    spec.num_clusters = 2;
    spec.cluster_spread = 0.05;
    spec.sink_fraction = 0.0;
    spec.recency_bias = 0.0;
    spec.decode_rows = 0;
    int distinct = 0;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        spec.rng_seed = seed;
        const auto trace = generate_synthetic(spec);
        const auto fps = compute_fingerprints(trace, 0, 0.5, false).fingerprints;
        const auto r = kmeans_oracle(fps, 2, 100, seed);
        const auto& labels = *trace.labels();
        distinct += r.size() == 2 && labels[r.indices[0]] != labels[r.indices[1]] ? 1 : 0;
    }
    EXPECT_GE(distinct, 19);
}

namespace {

// Every within-label distance below every cross-label distance.
bool separable(const FingerprintMatrix& fps, const std::vector<std::uint32_t>& labels) {
    std::size_t within = 0;
    std::size_t across = fps.width() + 1;
    for (std::size_t i = 0; i < fps.rows(); ++i) {
        for (std::size_t j = i + 1; j < fps.rows(); ++j) {
            const auto d = hamming(fps.row(i), fps.row(j));
            if (labels[i] == labels[j]) {
                within = std::max(within, d);
            } else {
                across = std::min(across, d);
            }
        }
    }
    return within < across;
}

bool matches_labels(const std::vector<std::size_t>& assign, const std::vector<std::uint32_t>& labels) {
    bool same = true;
    bool swapped = true;
    for (std::size_t i = 0; i < assign.size(); ++i) {
        same = same && assign[i] == labels[i];
        swapped = swapped && assign[i] != labels[i];
    }
    return same || swapped;
}

}  // namespace

TEST(KMeans, PartitionIsStableOnSeparableClusters) {
    SyntheticSpec spec;
    spec.seq_len = 64;
    spec.num_heads = 64;
    spec.num_clusters = 2;
    spec.cluster_spread = 0.05;
    spec.sink_fraction = 0.0;
    spec.recency_bias = 0.0;
    spec.decode_rows = 0;
    int checked = 0;
    int settled_after_one = 0;
    for (std::uint64_t seed = 0; checked < 20 && seed < 200; ++seed) {
        spec.rng_seed = seed;
        const auto trace = generate_synthetic(spec);
        const auto fps = compute_fingerprints(trace, 0, 0.5, false).fingerprints;
        const auto& labels = *trace.labels();
        if (!separable(fps, labels)) {
            continue;
        }
        ++checked;
        std::vector<std::size_t> one;
        std::vector<std::size_t> hundred;
        kmeans_oracle(fps, 2, 1, seed, &one);
        kmeans_oracle(fps, 2, 100, seed, &hundred);
        EXPECT_TRUE(matches_labels(hundred, labels)) << "seed " << seed;
        if (matches_labels(one, labels)) {
            ++settled_after_one;
            EXPECT_EQ(one, hundred) << "seed " << seed;
        }
    }
    EXPECT_EQ(checked, 20);
    EXPECT_GE(settled_after_one, 10);
}

TEST(KMeans, Deterministic) {
    std::mt19937_64 rng(4);
    const auto fps = to_matrix(kvtest::random_strings(rng, 200, 16, 50));
    EXPECT_EQ(kmeans_oracle(fps, 8, 20, 3).indices, kmeans_oracle(fps, 8, 20, 3).indices);
}

TEST(Bench, OpsAreLinearAndScalingHasThreePoints) {
    const auto s = measure_grouping_scaling(256, 8, 16, 5, 1);
    ASSERT_EQ(s.points.size(), 3u);
    for (const auto& p : s.points) {
        EXPECT_EQ(p.distance_ops, 2 * p.seq_len);
        EXPECT_GT(p.median_ns, 0.0);
    }
    EXPECT_EQ(s.points[2].seq_len, 1024u);
    EXPECT_EQ(code_of([] { measure_grouping_scaling(16, 4, 4, 4, 0); }), ErrorCode::InvalidArgument);
}
