// Copyright (C) 2026 The KVCrush Toolkit Authors
// SPDX-License-Identifier: Apache-2.0

#include "kvcrush/bits.hpp"

#include <algorithm>
#include <bit>

#include "kvcrush/error.hpp"

namespace kvcrush {

BitVector BitVector::from_string(std::string_view bits) {
    BitVector v(bits.size());
    for (std::size_t i = 0; i < bits.size(); ++i) {
        require(bits[i] == '0' || bits[i] == '1', ErrorCode::InvalidArgument,
                "bit string may only contain '0' and '1'");
        v.set(i, bits[i] == '1');
    }
    return v;
}

std::size_t BitVector::popcount() const noexcept {
    std::size_t n = 0;
    for (auto w : m_words) {
        n += static_cast<std::size_t>(std::popcount(w));
    }
    return n;
}

std::string BitVector::to_string() const {
    std::string s(m_size, '0');
    for (std::size_t i = 0; i < m_size; ++i) {
        if (get(i)) {
            s[i] = '1';
        }
    }
    return s;
}

FingerprintMatrix FingerprintMatrix::from_strings(const std::vector<std::string>& rows) {
    const std::size_t width = rows.empty() ? 0 : rows.front().size();
    FingerprintMatrix m(rows.size(), width);
    for (std::size_t r = 0; r < rows.size(); ++r) {
        require(rows[r].size() == width, ErrorCode::LengthMismatch, "fingerprints must share one width");
        auto v = BitVector::from_string(rows[r]);
        std::copy(v.words().begin(), v.words().end(), m.row(r).begin());
    }
    return m;
}

BitVector FingerprintMatrix::row_vector(std::size_t r) const {
    BitVector v(m_width);
    auto src = row(r);
    std::copy(src.begin(), src.end(), v.words().begin());
    return v;
}

FingerprintMatrix FingerprintMatrix::gather(std::span<const std::size_t> rows) const {
    FingerprintMatrix out(rows.size(), m_width);
    for (std::size_t i = 0; i < rows.size(); ++i) {
        auto src = row(rows[i]);
        std::copy(src.begin(), src.end(), out.row(i).begin());
    }
    return out;
}

std::size_t hamming(std::span<const std::uint64_t> a, std::span<const std::uint64_t> b) noexcept {
    std::size_t d = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        d += static_cast<std::size_t>(std::popcount(a[i] ^ b[i]));
    }
    return d;
}

std::size_t hamming(const BitVector& a, const BitVector& b) {
    require(a.size() == b.size(), ErrorCode::LengthMismatch,
            "hamming distance needs equal widths (" + std::to_string(a.size()) + " vs " +
                std::to_string(b.size()) + ")");
    return hamming(a.words(), b.words());
}

}  // namespace kvcrush
