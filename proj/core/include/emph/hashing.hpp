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

#include <cstddef>
#include <cstdint>
#include <string_view>

#include "emph/common.hpp"
#include "emph/hypergraph.hpp"

namespace emph {

struct Seed {
    std::uint64_t value = 0;
    bool operator==(const Seed&) const = default;
};

// Deterministic seed derivation for retry sequences and per-bucket seeds.
// splitmix64 finalizer.
inline std::uint64_t remix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline Seed mix_seed(Seed base, std::uint64_t salt) {
    return Seed{remix64(base.value ^ remix64(salt))};
}

struct HashTriple {
    std::uint64_t h0, h1, h2;
};

namespace detail {

inline std::uint64_t load_le64(const std::uint8_t* p) {
    std::uint64_t v = 0;
    for (unsigned i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(p[i]) << (8 * i);
    return v;
}

inline void jenkins_mix(std::uint64_t& a, std::uint64_t& b, std::uint64_t& c) {
    a -= b; a -= c; a ^= c >> 43;
    b -= c; b -= a; b ^= a << 9;
    c -= a; c -= b; c ^= b >> 8;
    a -= b; a -= c; a ^= c >> 38;
    b -= c; b -= a; b ^= a << 23;
    c -= a; c -= b; c ^= b >> 5;
    a -= b; a -= c; a ^= c >> 35;
    b -= c; b -= a; b ^= a << 49;
    c -= a; c -= b; c ^= b >> 11;
    a -= b; a -= c; a ^= c >> 12;
    b -= c; b -= a; b ^= a << 18;
    c -= a; c -= b; c ^= b >> 22;
}

}  // namespace detail

// Jenkins 64-bit hash with a seeded (a, b, c) state; all three mixed words
// are returned, giving three independent lanes per key in one computation.
inline HashTriple jenkins_triple(Seed seed, const void* data, std::size_t len) {
    const auto* p = static_cast<const std::uint8_t*>(data);
    std::uint64_t a = seed.value;
    std::uint64_t b = seed.value;
    std::uint64_t c = 0x9e3779b97f4a7c13ULL;
    std::size_t remaining = len;
    while (remaining >= 24) {
        a += detail::load_le64(p);
        b += detail::load_le64(p + 8);
        c += detail::load_le64(p + 16);
        detail::jenkins_mix(a, b, c);
        p += 24;
        remaining -= 24;
    }
    c += len;
    std::uint8_t tail[24] = {0};
    for (std::size_t i = 0; i < remaining; ++i) tail[i] = p[i];
    a += detail::load_le64(tail);
    b += detail::load_le64(tail + 8);
    // The low byte of c is reserved for the length; tail[23] is always zero,
    // so the shift drops nothing.
    c += detail::load_le64(tail + 16) << 8;
    // Two finalizing rounds: one leaves measurable bias on low-entropy keys
    // (uniformity fails chi-square at the 0.001 level), two do not.
    detail::jenkins_mix(a, b, c);
    detail::jenkins_mix(a, b, c);
    return {a, b, c};
}

inline HashTriple jenkins_triple(Seed seed, std::string_view key) {
    return jenkins_triple(seed, key.data(), key.size());
}

// 96-bit signature used by the HEM pipeline. Ordered as the integer
// hi * 2^32 + lo; the bucket index is taken from the most significant bits.
struct Signature96 {
    std::uint64_t hi = 0;
    std::uint32_t lo = 0;

    bool operator==(const Signature96&) const = default;
    bool operator<(const Signature96& o) const {
        return hi != o.hi ? hi < o.hi : lo < o.lo;
    }

    std::uint64_t top_bits(unsigned b) const {
        return b == 0 ? 0 : hi >> (64 - b);
    }

    // Signature with the top b bits cleared; the per-bucket key material.
    Signature96 residual(unsigned b) const {
        if (b == 0) return *this;
        return {hi & (~0ULL >> b), lo};
    }

    void to_bytes(std::uint8_t out[12]) const {
        for (unsigned i = 0; i < 4; ++i) out[i] = static_cast<std::uint8_t>(lo >> (8 * i));
        for (unsigned i = 0; i < 8; ++i) out[4 + i] = static_cast<std::uint8_t>(hi >> (8 * i));
    }

    static Signature96 from_bytes(const std::uint8_t in[12]) {
        Signature96 s;
        for (unsigned i = 0; i < 4; ++i) s.lo |= static_cast<std::uint32_t>(in[i]) << (8 * i);
        for (unsigned i = 0; i < 8; ++i) s.hi |= static_cast<std::uint64_t>(in[4 + i]) << (8 * i);
        return s;
    }
};

inline Signature96 hash_signature(Seed seed, const void* data, std::size_t len) {
    HashTriple t = jenkins_triple(seed, data, len);
    return {t.h0, static_cast<std::uint32_t>(t.h1)};
}

inline Signature96 hash_signature(Seed seed, std::string_view key) {
    return hash_signature(seed, key.data(), key.size());
}

// Maps keys to tripartite 3-edges: lane i is range-reduced into the i-th
// third of [0, m), so the three vertices always land in pairwise disjoint
// parts and no degenerate edge can occur. Multiply-shift reduction keeps the
// mapping branch-free and nearly bias-free.
class TripartiteEdgeHasher {
  public:
    TripartiteEdgeHasher(Seed seed, vertex_t m) : seed_(seed), m_(m), part_(m / 3) {
        if (m < 3 || m % 3 != 0) throw ContractError("vertex count must be a positive multiple of 3");
        if (bits_for_value(m - 1) > kMaxVertexBits) throw ContractError("vertex count too large");
    }

    OrientedEdge edge_of(const void* data, std::size_t len, std::uint64_t label = 0) const {
        HashTriple t = jenkins_triple(seed_, data, len);
        return {reduce(t.h0, 0), reduce(t.h1, 1), reduce(t.h2, 2), label};
    }

    OrientedEdge edge_of(std::string_view key, std::uint64_t label = 0) const {
        return edge_of(key.data(), key.size(), label);
    }

    Seed seed() const { return seed_; }
    vertex_t vertex_count() const { return m_; }
    vertex_t part_size() const { return part_; }

    unsigned part_of(vertex_t v) const { return static_cast<unsigned>(v / part_); }

  private:
    vertex_t reduce(std::uint64_t lane, unsigned part_index) const {
        auto scaled = static_cast<vertex_t>(
            (static_cast<unsigned __int128>(lane) * part_) >> 64);
        return part_index * part_ + scaled;
    }

    Seed seed_;
    vertex_t m_;
    vertex_t part_;
};

inline OrientedEdge hash_edge(const TripartiteEdgeHasher& h, std::string_view key,
                              std::uint64_t label = 0) {
    return h.edge_of(key, label);
}

}  // namespace emph
