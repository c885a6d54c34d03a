// Copyright (C) 2026 The KVCrush Toolkit Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "kvcrush/matrix.hpp"

namespace kvcrush {

struct TraceHeader {
    std::string model_name;
    std::uint32_t num_layers = 1;
    std::uint32_t num_heads = 1;
    std::uint32_t head_dim = 1;
    std::uint32_t seq_len = 1;
    /// Bytes per scalar in the source model (2 or 4). Only used for memory
    /// accounting; tensors are always held and stored as float.
    std::uint32_t precision = 4;

    bool operator==(const TraceHeader&) const = default;
};

/// Throws MalformedHeader if any dimension is zero or precision is not 2/4.
void validate_header(const TraceHeader& header);

struct HeadTensors {
    Matrix<float> query;  // seq_len x head_dim
    Matrix<float> key;    // seq_len x head_dim

    bool operator==(const HeadTensors&) const = default;
};

/// Per-layer, per-head query/key activations of one sequence. Attention
/// matrices are derived on demand and never stored.
class AttentionTrace {
public:
    AttentionTrace() = default;
    /// Allocates zeroed tensors for every (layer, head).
    explicit AttentionTrace(TraceHeader header);

    const TraceHeader& header() const noexcept { return m_header; }
    std::size_t seq_len() const noexcept { return m_header.seq_len; }
    std::size_t num_layers() const noexcept { return m_header.num_layers; }
    std::size_t num_heads() const noexcept { return m_header.num_heads; }
    std::size_t head_dim() const noexcept { return m_header.head_dim; }

    HeadTensors& head(std::size_t layer, std::size_t head) { return m_heads[layer * m_header.num_heads + head]; }
    const HeadTensors& head(std::size_t layer, std::size_t head) const {
        return m_heads[layer * m_header.num_heads + head];
    }

    /// Ground-truth cluster label per token, present for synthetic traces.
    const std::optional<std::vector<std::uint32_t>>& labels() const noexcept { return m_labels; }
    void set_labels(std::vector<std::uint32_t> labels);

    /// Checks shapes against the header and that every scalar is finite.
    /// Errors name the offending layer/head/offset.
    void validate() const;

    bool operator==(const AttentionTrace&) const = default;

private:
    TraceHeader m_header;
    std::vector<HeadTensors> m_heads;
    std::optional<std::vector<std::uint32_t>> m_labels;
};

/// Parameters of the synthetic trace generator.
///
/// Tokens are drawn around `num_clusters` latent key centers (per layer and
/// head). Every head routes each query cluster to a target key cluster through
/// its own random map, so different heads favour different token groups. The
/// first `sink_fraction` of heads add an attention-sink component on the
/// earliest tokens; the next `recency_bias` fraction add a rotary recency term.
/// The last `decode_rows` queries form a trailing segment whose targets are
/// drawn independently of the bulk routing (a prompt's closing question
/// attending to arbitrary context).
struct SyntheticSpec {
    std::uint32_t seq_len = 256;
    std::uint32_t num_layers = 1;
    std::uint32_t num_heads = 8;
    std::uint32_t head_dim = 16;
    std::uint64_t rng_seed = 0;
    std::uint32_t num_clusters = 8;
    /// Noise norm relative to the distance between two cluster centers.
    double cluster_spread = 0.1;
    double sink_fraction = 0.25;
    double recency_bias = 0.25;
    /// Logit gap between a query's target cluster and other clusters.
    double focus = 6.0;
    std::uint32_t decode_rows = 64;
    std::uint32_t precision = 2;
    std::string model_name = "synthetic";
};

/// Throws InvalidSpec when the spec invariants do not hold.
void validate_spec(const SyntheticSpec& spec);

/// Pure function of the spec. The result carries ground-truth labels.
AttentionTrace generate_synthetic(const SyntheticSpec& spec);

std::vector<std::uint8_t> encode_trace(const AttentionTrace& trace);
AttentionTrace decode_trace(std::span<const std::uint8_t> bytes);

AttentionTrace read_trace(const std::filesystem::path& path);
void write_trace(const AttentionTrace& trace, const std::filesystem::path& path);

/// 2 * batch * layers * heads * seq_len * head_dim * precision, checked for
/// overflow.
std::uint64_t kv_memory_bytes(const TraceHeader& header, std::uint64_t batch);

}  // namespace kvcrush
