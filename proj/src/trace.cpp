// Copyright (C) 2026 The KVCrush Toolkit Authors
// SPDX-License-Identifier: Apache-2.0

#include "kvcrush/trace.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <limits>
#include <numbers>
#include <random>

#include "kvcrush/error.hpp"

namespace kvcrush {

namespace {

constexpr std::uint8_t kMagic[4] = {'K', 'V', 'C', 'R'};
constexpr std::uint8_t kLabelsTag[4] = {'L', 'B', 'L', 'S'};
constexpr std::uint32_t kFormatVersion = 1;

std::string where(std::size_t layer, std::size_t head, std::size_t offset) {
    return "layer " + std::to_string(layer) + ", head " + std::to_string(head) + ", offset " +
           std::to_string(offset);
}

class ByteWriter {
public:
    void u32(std::uint32_t v) {
        for (int i = 0; i < 4; ++i) {
            m_bytes.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
        }
    }
    void f32(float v) { u32(std::bit_cast<std::uint32_t>(v)); }
    void raw(std::span<const std::uint8_t> bytes) { m_bytes.insert(m_bytes.end(), bytes.begin(), bytes.end()); }

    std::vector<std::uint8_t> take() { return std::move(m_bytes); }

private:
    std::vector<std::uint8_t> m_bytes;
};

class ByteReader {
public:
    explicit ByteReader(std::span<const std::uint8_t> bytes) : m_bytes(bytes) {}

    std::size_t remaining() const noexcept { return m_bytes.size() - m_pos; }
    std::size_t position() const noexcept { return m_pos; }

    bool has(std::size_t n) const noexcept { return remaining() >= n; }

    std::uint32_t u32() {
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) {
            v |= static_cast<std::uint32_t>(m_bytes[m_pos + i]) << (8 * i);
        }
        m_pos += 4;
        return v;
    }
    float f32() { return std::bit_cast<float>(u32()); }
    std::span<const std::uint8_t> raw(std::size_t n) {
        auto out = m_bytes.subspan(m_pos, n);
        m_pos += n;
        return out;
    }

private:
    std::span<const std::uint8_t> m_bytes;
    std::size_t m_pos = 0;
};

std::uint64_t checked_mul(std::uint64_t a, std::uint64_t b) {
    if (a != 0 && b > std::numeric_limits<std::uint64_t>::max() / a) {
        raise(ErrorCode::Overflow, "kv memory size exceeds 64-bit address space");
    }
    return a * b;
}

}  // namespace

void validate_header(const TraceHeader& header) {
    require(header.num_layers >= 1 && header.num_heads >= 1 && header.head_dim >= 1 && header.seq_len >= 1,
            ErrorCode::MalformedHeader, "trace dimensions must all be at least 1");
    require(header.precision == 2 || header.precision == 4, ErrorCode::MalformedHeader,
            "precision must be 2 or 4 bytes, got " + std::to_string(header.precision));
}

AttentionTrace::AttentionTrace(TraceHeader header) : m_header(std::move(header)) {
    validate_header(m_header);
    m_heads.resize(static_cast<std::size_t>(m_header.num_layers) * m_header.num_heads);
    for (auto& h : m_heads) {
        h.query = Matrix<float>(m_header.seq_len, m_header.head_dim);
        h.key = Matrix<float>(m_header.seq_len, m_header.head_dim);
    }
}

void AttentionTrace::set_labels(std::vector<std::uint32_t> labels) {
    require(labels.size() == m_header.seq_len, ErrorCode::DimensionMismatch,
            "label count " + std::to_string(labels.size()) + " does not match seq_len " +
                std::to_string(m_header.seq_len));
    m_labels = std::move(labels);
}

void AttentionTrace::validate() const {
    validate_header(m_header);
    require(m_heads.size() == static_cast<std::size_t>(m_header.num_layers) * m_header.num_heads,
            ErrorCode::DimensionMismatch, "head tensor count does not match header");
    for (std::size_t l = 0; l < m_header.num_layers; ++l) {
        for (std::size_t h = 0; h < m_header.num_heads; ++h) {
            const auto& t = head(l, h);
            for (const Matrix<float>* m : {&t.query, &t.key}) {
                require(m->rows() == m_header.seq_len && m->cols() == m_header.head_dim,
                        ErrorCode::DimensionMismatch, "tensor shape mismatch at " + where(l, h, 0));
                auto data = m->data();
                for (std::size_t i = 0; i < data.size(); ++i) {
                    require(std::isfinite(data[i]), ErrorCode::NonFiniteValue,
                            std::string(m == &t.query ? "Q" : "K") + " value at " + where(l, h, i));
                }
            }
        }
    }
    if (m_labels) {
        require(m_labels->size() == m_header.seq_len, ErrorCode::DimensionMismatch,
                "label count does not match seq_len");
    }
}

void validate_spec(const SyntheticSpec& spec) {
    require(spec.seq_len >= 1 && spec.num_layers >= 1 && spec.num_heads >= 1 && spec.head_dim >= 1,
            ErrorCode::InvalidSpec, "synthetic dimensions must be at least 1");
    require(spec.num_clusters >= 1 && spec.num_clusters <= spec.seq_len, ErrorCode::InvalidSpec,
            "num_clusters must lie in [1, seq_len]");
    require(std::isfinite(spec.cluster_spread) && spec.cluster_spread >= 0.0, ErrorCode::InvalidSpec,
            "cluster_spread must be a nonnegative real");
    require(spec.sink_fraction >= 0.0 && spec.sink_fraction <= 1.0, ErrorCode::InvalidSpec,
            "sink_fraction must lie in [0, 1]");
    require(spec.recency_bias >= 0.0 && spec.recency_bias <= 1.0, ErrorCode::InvalidSpec,
            "recency_bias must lie in [0, 1]");
    require(std::isfinite(spec.focus) && spec.focus >= 0.0, ErrorCode::InvalidSpec, "focus must be nonnegative");
    require(spec.precision == 2 || spec.precision == 4, ErrorCode::InvalidSpec, "precision must be 2 or 4");
}

AttentionTrace generate_synthetic(const SyntheticSpec& spec) {
    validate_spec(spec);

    TraceHeader header;
    header.model_name = spec.model_name;
    header.num_layers = spec.num_layers;
    header.num_heads = spec.num_heads;
    header.head_dim = spec.head_dim;
    header.seq_len = spec.seq_len;
    header.precision = spec.precision;
    AttentionTrace trace(header);

    const std::size_t S = spec.seq_len;
    const std::size_t C = spec.num_clusters;
    const std::size_t D = spec.head_dim;
    std::mt19937_64 rng(spec.rng_seed);
    std::normal_distribution<double> gauss(0.0, 1.0);

    // Balanced labels in shuffled order, so every cluster is populated.
    std::vector<std::uint32_t> labels(S);
    for (std::size_t t = 0; t < S; ++t) {
        labels[t] = static_cast<std::uint32_t>(t % C);
    }
    std::shuffle(labels.begin(), labels.end(), rng);

    const auto sink_heads = static_cast<std::size_t>(std::lround(spec.sink_fraction * spec.num_heads));
    const auto recency_heads = std::min<std::size_t>(
        spec.num_heads - std::min<std::size_t>(sink_heads, spec.num_heads),
        static_cast<std::size_t>(std::lround(spec.recency_bias * spec.num_heads)));
    const std::size_t decode_begin = S - std::min<std::size_t>(spec.decode_rows, S);
    const std::size_t sink_tokens = std::max<std::size_t>(1, std::min<std::size_t>(4, S / 16));

    // Center radius r gives a matching logit of r^2 / sqrt(D) = focus.
    const double radius = std::sqrt(spec.focus * std::sqrt(static_cast<double>(D)));
    const double noise_sd = spec.cluster_spread * radius * std::numbers::sqrt2 / std::sqrt(static_cast<double>(D));

    std::uniform_int_distribution<std::size_t> pick_cluster(0, C - 1);

    for (std::size_t l = 0; l < spec.num_layers; ++l) {
        for (std::size_t h = 0; h < spec.num_heads; ++h) {
            // Unit-norm center directions scaled to the target radius.
            Matrix<double> centers(C, D);
            for (std::size_t c = 0; c < C; ++c) {
                double norm = 0.0;
                for (std::size_t d = 0; d < D; ++d) {
                    centers(c, d) = gauss(rng);
                    norm += centers(c, d) * centers(c, d);
                }
                norm = std::sqrt(norm);
                for (std::size_t d = 0; d < D; ++d) {
                    centers(c, d) = norm > 0.0 ? radius * centers(c, d) / norm : (d == 0 ? radius : 0.0);
                }
            }
            std::vector<std::size_t> route(C);
            for (auto& r : route) {
                r = pick_cluster(rng);
            }

            auto& tensors = trace.head(l, h);
            for (std::size_t t = 0; t < S; ++t) {
                const std::size_t own = labels[t];
                const std::size_t target = t >= decode_begin ? pick_cluster(rng) : route[own];
                for (std::size_t d = 0; d < D; ++d) {
                    tensors.key(t, d) = static_cast<float>(centers(own, d) + noise_sd * gauss(rng));
                    tensors.query(t, d) = static_cast<float>(centers(target, d) + noise_sd * gauss(rng));
                }
            }

            if (h < sink_heads) {
                // Every query carries a shared direction that the first tokens'
                // keys align with, adding a `focus`-sized logit on the sinks.
                const std::size_t axis = h % D;
                const double q_boost = radius;
                const double k_boost = spec.focus * std::sqrt(static_cast<double>(D)) / radius;
                for (std::size_t t = 0; t < S; ++t) {
                    tensors.query(t, axis) += static_cast<float>(q_boost);
                    if (t < sink_tokens) {
                        tensors.key(t, axis) += static_cast<float>(k_boost);
                    }
                }
            } else if (h < sink_heads + recency_heads && D >= 2) {
                // Rotary pair: the logit term focus * cos(pi (j - t) / S)
                // peaks on the diagonal and decays with distance.
                const double amp = radius;
                const double step = std::numbers::pi / static_cast<double>(S);
                for (std::size_t t = 0; t < S; ++t) {
                    const double angle = step * static_cast<double>(t);
                    tensors.query(t, 0) += static_cast<float>(amp * std::cos(angle));
                    tensors.query(t, 1) += static_cast<float>(amp * std::sin(angle));
                    tensors.key(t, 0) += static_cast<float>(amp * std::cos(angle));
                    tensors.key(t, 1) += static_cast<float>(amp * std::sin(angle));
                }
            }
        }
    }

    trace.set_labels(std::move(labels));
    return trace;
}

std::vector<std::uint8_t> encode_trace(const AttentionTrace& trace) {
    trace.validate();
    const auto& hd = trace.header();
    ByteWriter out;
    out.raw(kMagic);
    out.u32(kFormatVersion);
    out.u32(hd.num_layers);
    out.u32(hd.num_heads);
    out.u32(hd.head_dim);
    out.u32(hd.seq_len);
    out.u32(hd.precision);
    out.u32(static_cast<std::uint32_t>(hd.model_name.size()));
    out.raw({reinterpret_cast<const std::uint8_t*>(hd.model_name.data()), hd.model_name.size()});
    for (std::size_t l = 0; l < hd.num_layers; ++l) {
        for (std::size_t h = 0; h < hd.num_heads; ++h) {
            const auto& t = trace.head(l, h);
            for (float v : t.query.data()) {
                out.f32(v);
            }
            for (float v : t.key.data()) {
                out.f32(v);
            }
        }
    }
    if (const auto& labels = trace.labels()) {
        out.raw(kLabelsTag);
        for (auto v : *labels) {
            out.u32(v);
        }
    }
    return out.take();
}

AttentionTrace decode_trace(std::span<const std::uint8_t> bytes) {
    ByteReader in(bytes);
    require(in.has(8) && std::equal(std::begin(kMagic), std::end(kMagic), bytes.begin()), ErrorCode::MalformedHeader,
            "missing KVCR magic");
    in.raw(4);
    const auto version = in.u32();
    require(version == kFormatVersion, ErrorCode::MalformedHeader,
            "unsupported trace format version " + std::to_string(version));
    require(in.has(6 * 4), ErrorCode::MalformedHeader, "truncated header");

    TraceHeader header;
    header.num_layers = in.u32();
    header.num_heads = in.u32();
    header.head_dim = in.u32();
    header.seq_len = in.u32();
    header.precision = in.u32();
    const auto name_len = in.u32();
    require(in.has(name_len), ErrorCode::MalformedHeader, "truncated model name");
    auto name = in.raw(name_len);
    header.model_name.assign(name.begin(), name.end());
    validate_header(header);

    const std::uint64_t per_matrix = std::uint64_t{header.seq_len} * header.head_dim;
    const std::uint64_t scalars = 2 * per_matrix * header.num_layers * header.num_heads;
    require(scalars / 2 / header.num_layers / header.num_heads == per_matrix && in.remaining() / 4 >= scalars,
            ErrorCode::DimensionMismatch,
            "file holds " + std::to_string(in.remaining()) + " tensor bytes, header requires " +
                std::to_string(scalars * 4));

    AttentionTrace trace(header);
    for (std::size_t l = 0; l < header.num_layers; ++l) {
        for (std::size_t h = 0; h < header.num_heads; ++h) {
            auto& t = trace.head(l, h);
            for (Matrix<float>* m : {&t.query, &t.key}) {
                auto data = m->data();
                for (std::size_t i = 0; i < data.size(); ++i) {
                    data[i] = in.f32();
                    require(std::isfinite(data[i]), ErrorCode::NonFiniteValue,
                            std::string(m == &t.query ? "Q" : "K") + " value at " + where(l, h, i));
                }
            }
        }
    }

    if (in.remaining() > 0) {
        require(in.has(4), ErrorCode::DimensionMismatch, "trailing bytes after tensors");
        auto tag = in.raw(4);
        require(std::equal(tag.begin(), tag.end(), std::begin(kLabelsTag)), ErrorCode::MalformedHeader,
                "unknown section after tensors");
        require(in.remaining() == std::size_t{header.seq_len} * 4, ErrorCode::DimensionMismatch,
                "label section must hold exactly seq_len entries");
        std::vector<std::uint32_t> labels(header.seq_len);
        for (auto& v : labels) {
            v = in.u32();
        }
        trace.set_labels(std::move(labels));
    }
    return trace;
}

AttentionTrace read_trace(const std::filesystem::path& path) {
    std::ifstream file(path, std::ios::binary);
    require(static_cast<bool>(file), ErrorCode::IoFailure, "cannot open trace file '" + path.string() + "'");
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(file)), std::istreambuf_iterator<char>());
    require(!file.bad(), ErrorCode::IoFailure, "failed reading '" + path.string() + "'");
    return decode_trace(bytes);
}

void write_trace(const AttentionTrace& trace, const std::filesystem::path& path) {
    require(!path.empty(), ErrorCode::IoFailure, "empty output path");
    const auto bytes = encode_trace(trace);
    std::ofstream file(path, std::ios::binary | std::ios::trunc);
    require(static_cast<bool>(file), ErrorCode::IoFailure, "cannot open '" + path.string() + "' for writing");
    file.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    require(static_cast<bool>(file), ErrorCode::IoFailure, "failed writing '" + path.string() + "'");
}

std::uint64_t kv_memory_bytes(const TraceHeader& header, std::uint64_t batch) {
    require(batch >= 1, ErrorCode::InvalidArgument, "batch must be at least 1");
    std::uint64_t bytes = 2;
    for (std::uint64_t factor : {batch, std::uint64_t{header.num_layers}, std::uint64_t{header.num_heads},
                                 std::uint64_t{header.seq_len}, std::uint64_t{header.head_dim},
                                 std::uint64_t{header.precision}}) {
        bytes = checked_mul(bytes, factor);
    }
    return bytes;
}

}  // namespace kvcrush
