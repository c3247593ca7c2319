// Copyright 2026 The emph Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//    http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <vector>

#include "emph/common.hpp"

// Bit streams are packed least-significant-bit first within each byte,
// little-endian across bytes. Bit i of a width-w field written at stream
// position p lands at stream bit p + i. The convention is load-bearing:
// serialized structures must be bit-exact across runs and platforms.

namespace emph {

inline std::uint64_t bit_field_mask(unsigned width) {
    return width >= 64 ? ~0ULL : (1ULL << width) - 1;
}

inline void set_bits(std::uint8_t* base, std::uint64_t pos, std::uint64_t value, unsigned width) {
    value &= bit_field_mask(width);
    while (width > 0) {
        std::uint64_t byte = pos >> 3;
        unsigned off = pos & 7;
        unsigned take = 8 - off;
        if (take > width) take = width;
        std::uint8_t mask = static_cast<std::uint8_t>(bit_field_mask(take)) << off;
        base[byte] = static_cast<std::uint8_t>((base[byte] & ~mask) | ((value << off) & mask));
        value >>= take;
        pos += take;
        width -= take;
    }
}

inline std::uint64_t get_bits(const std::uint8_t* base, std::uint64_t pos, unsigned width) {
    std::uint64_t out = 0;
    unsigned got = 0;
    while (got < width) {
        std::uint64_t byte = pos >> 3;
        unsigned off = pos & 7;
        unsigned take = 8 - off;
        if (take > width - got) take = width - got;
        std::uint64_t piece = (static_cast<std::uint64_t>(base[byte]) >> off) & bit_field_mask(take);
        out |= piece << got;
        got += take;
        pos += take;
    }
    return out;
}

// Length of the Elias gamma code of j >= 1: 2*floor(log2 j) + 1 bits.
inline unsigned gamma_bit_length(std::uint64_t j) {
    return 2 * (63 - std::countl_zero(j)) + 1;
}

inline unsigned unary_bit_length(std::uint64_t d) {
    return static_cast<unsigned>(d);
}

// Append-only bit sink over a growable byte window. Fully written bytes can
// be taken out incrementally, which is what lets the incidence rewriter trail
// a reader inside one file.
class BitWriter {
  public:
    void put_bits(std::uint64_t value, unsigned width) {
        reserve_bits(width);
        set_bits(buf_.data(), rel_pos(), value, width);
        bit_len_ += width;
    }

    // Elias gamma: floor(log2 j) zero bits, a one bit marking the MSB of j,
    // then the low floor(log2 j) bits of j. Rejects 0.
    void put_gamma(std::uint64_t j) {
        if (j == 0) throw ContractError("gamma code undefined for 0");
        unsigned l = 63 - std::countl_zero(j);
        put_bits(0, l);
        put_bits(1, 1);
        put_bits(j & bit_field_mask(l), l);
    }

    // Unary: d-1 one bits then a zero bit; exactly d bits. Rejects 0.
    void put_unary(std::uint64_t d) {
        if (d == 0) throw ContractError("unary code undefined for 0");
        while (d > 1) {
            unsigned chunk = d - 1 > 32 ? 32 : static_cast<unsigned>(d - 1);
            put_bits(bit_field_mask(chunk), chunk);
            d -= chunk;
        }
        put_bits(0, 1);
    }

    void align_to_byte() {
        if (bit_len_ & 7) put_bits(0, 8 - (bit_len_ & 7));
    }

    std::uint64_t bits_written() const { return bit_len_; }

    // Bytes whose every bit is final.
    std::uint64_t takeable_bytes() const { return bit_len_ / 8 - taken_bytes_; }

    std::uint64_t taken_bytes() const { return taken_bytes_; }

    const std::uint8_t* take_ptr() const { return buf_.data() + (taken_bytes_ - compact_base_); }

    void advance_taken(std::uint64_t n) {
        taken_bytes_ += n;
        // Reclaim window space once the consumed prefix gets large.
        std::uint64_t off = taken_bytes_ - compact_base_;
        if (off >= (1u << 16)) {
            buf_.erase(buf_.begin(), buf_.begin() + static_cast<std::ptrdiff_t>(off));
            compact_base_ = taken_bytes_;
        }
    }

    std::uint64_t pending_bytes() const { return (bit_len_ + 7) / 8 - taken_bytes_; }

  private:
    std::uint64_t rel_pos() const { return bit_len_ - compact_base_ * 8; }

    void reserve_bits(unsigned width) {
        std::uint64_t need = (rel_pos() + width + 7) / 8;
        if (buf_.size() < need) buf_.resize(need + 4096, 0);
    }

    std::vector<std::uint8_t> buf_;
    std::uint64_t bit_len_ = 0;
    std::uint64_t taken_bytes_ = 0;
    std::uint64_t compact_base_ = 0;
};

class BitReader {
  public:
    BitReader(const std::uint8_t* data, std::uint64_t size_bits, std::uint64_t pos = 0)
        : data_(data), size_bits_(size_bits), pos_(pos) {}

    std::uint64_t get_bits(unsigned width) {
        require(width);
        std::uint64_t v = emph::get_bits(data_, pos_, width);
        pos_ += width;
        return v;
    }

    std::uint64_t get_gamma() {
        unsigned l = 0;
        while (get_bits(1) == 0) {
            if (++l > 63) throw FormatError("gamma code overlong");
        }
        std::uint64_t low = l ? get_bits(l) : 0;
        return (1ULL << l) | low;
    }

    std::uint64_t get_unary() {
        std::uint64_t d = 1;
        while (get_bits(1) == 1) ++d;
        return d;
    }

    std::uint64_t position() const { return pos_; }
    std::uint64_t size_bits() const { return size_bits_; }
    std::uint64_t remaining_bits() const { return size_bits_ - pos_; }

  private:
    void require(unsigned width) {
        if (pos_ + width > size_bits_) throw FormatError("bit stream truncated");
    }

    const std::uint8_t* data_;
    std::uint64_t size_bits_;
    std::uint64_t pos_;
};

}  // namespace emph
