// Copyright (C) 2026 The KVCrush Toolkit Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace kvcrush {

inline constexpr std::size_t kWordBits = 64;

constexpr std::size_t words_for_bits(std::size_t bits) noexcept {
    return (bits + kWordBits - 1) / kWordBits;
}

/// Fixed-width bit vector. Bits past size() in the last word are always zero,
/// which the word-wise distance routines rely on.
class BitVector {
public:
    BitVector() = default;
    explicit BitVector(std::size_t size) : m_size(size), m_words(words_for_bits(size), 0) {}

    /// Parses a string of '0'/'1' characters, bit 0 first.
    static BitVector from_string(std::string_view bits);

    std::size_t size() const noexcept { return m_size; }
    bool get(std::size_t i) const noexcept { return (m_words[i / kWordBits] >> (i % kWordBits)) & 1U; }
    void set(std::size_t i, bool value = true) noexcept {
        const std::uint64_t mask = std::uint64_t{1} << (i % kWordBits);
        if (value) {
            m_words[i / kWordBits] |= mask;
        } else {
            m_words[i / kWordBits] &= ~mask;
        }
    }
    std::size_t popcount() const noexcept;

    std::span<const std::uint64_t> words() const noexcept { return m_words; }
    std::span<std::uint64_t> words() noexcept { return m_words; }

    std::string to_string() const;

    bool operator==(const BitVector&) const = default;

private:
    std::size_t m_size = 0;
    std::vector<std::uint64_t> m_words;
};

/// A set of equal-width fingerprints stored contiguously, one padded row of
/// 64-bit words per token.
class FingerprintMatrix {
public:
    FingerprintMatrix() = default;
    FingerprintMatrix(std::size_t rows, std::size_t width)
        : m_rows(rows), m_width(width), m_stride(words_for_bits(width)), m_words(rows * m_stride, 0) {}

    static FingerprintMatrix from_strings(const std::vector<std::string>& rows);

    std::size_t rows() const noexcept { return m_rows; }
    std::size_t width() const noexcept { return m_width; }
    std::size_t stride() const noexcept { return m_stride; }

    std::span<const std::uint64_t> row(std::size_t r) const noexcept {
        return {m_words.data() + r * m_stride, m_stride};
    }
    std::span<std::uint64_t> row(std::size_t r) noexcept { return {m_words.data() + r * m_stride, m_stride}; }

    bool get(std::size_t r, std::size_t bit) const noexcept {
        return (m_words[r * m_stride + bit / kWordBits] >> (bit % kWordBits)) & 1U;
    }
    void set(std::size_t r, std::size_t bit, bool value = true) noexcept {
        auto& word = m_words[r * m_stride + bit / kWordBits];
        const std::uint64_t mask = std::uint64_t{1} << (bit % kWordBits);
        word = value ? (word | mask) : (word & ~mask);
    }

    BitVector row_vector(std::size_t r) const;

    /// Copies the listed rows, in order, into a new matrix.
    FingerprintMatrix gather(std::span<const std::size_t> rows) const;

    bool operator==(const FingerprintMatrix&) const = default;

private:
    std::size_t m_rows = 0;
    std::size_t m_width = 0;
    std::size_t m_stride = 0;
    std::vector<std::uint64_t> m_words;
};

/// XOR + popcount over equally sized word spans.
std::size_t hamming(std::span<const std::uint64_t> a, std::span<const std::uint64_t> b) noexcept;

/// Throws LengthMismatch when the widths differ.
std::size_t hamming(const BitVector& a, const BitVector& b);

}  // namespace kvcrush
