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

#include <optional>
#include <span>
#include <vector>

#include "emph/bitcodec.hpp"
#include "emph/common.hpp"
#include "emph/hypergraph.hpp"
#include "emph/stream.hpp"

namespace emph {

// Fixed-width packed layout of an oriented edge: three vertex fields of
// ceil(log2 m) bits, then an optional label field, padded to whole bytes.
// Edge lists (the initial edge file and the D/P/U lists) all use it.
struct EdgeLayout {
    unsigned vertex_bits = 1;
    unsigned label_bits = 0;
    std::uint32_t record_bytes = 1;

    static EdgeLayout for_graph(vertex_t m, unsigned label_bits) {
        EdgeLayout l;
        l.vertex_bits = bits_for_value(m - 1);
        if (l.vertex_bits > kMaxVertexBits) throw ContractError("vertex id width unsupported");
        l.label_bits = label_bits;
        l.record_bytes = (3 * l.vertex_bits + label_bits + 7) / 8;
        return l;
    }

    void encode(const OrientedEdge& e, std::uint8_t* out) const {
        for (std::uint32_t i = 0; i < record_bytes; ++i) out[i] = 0;
        set_bits(out, 0, e.v0, vertex_bits);
        set_bits(out, vertex_bits, e.v1, vertex_bits);
        set_bits(out, 2 * vertex_bits, e.v2, vertex_bits);
        if (label_bits) set_bits(out, 3 * vertex_bits, e.label, label_bits);
    }

    OrientedEdge decode(const std::uint8_t* in) const {
        OrientedEdge e;
        e.v0 = get_bits(in, 0, vertex_bits);
        e.v1 = get_bits(in, vertex_bits, vertex_bits);
        e.v2 = get_bits(in, 2 * vertex_bits, vertex_bits);
        e.label = label_bits ? get_bits(in, 3 * vertex_bits, label_bits) : 0;
        return e;
    }

    vertex_t v0_of(const std::uint8_t* in) const { return get_bits(in, 0, vertex_bits); }
};

// 32-byte header of a compressed packed-incidence-list stream.
// magic "CPLS", version u16, flags u16 (bit 0: labeled), m u64, count u64,
// label-bits u16, reserved. Little-endian throughout.
struct IncidenceHeader {
    static constexpr std::size_t kBytes = 32;
    static constexpr std::uint16_t kVersion = 1;

    vertex_t m = 0;
    std::uint64_t count = 0;
    unsigned label_bits = 0;

    void write(std::uint8_t out[kBytes]) const;
    static IncidenceHeader read(const std::uint8_t* in, std::uint64_t avail);
};

struct FieldBits {
    std::uint64_t gamma_v0 = 0;
    std::uint64_t unary_degree = 0;
    std::uint64_t fixed = 0;

    std::uint64_t total() const { return gamma_v0 + unary_degree + fixed; }
};

// Sequential encoder of incidence lists sorted by strictly increasing v0.
// Body layout per record: Elias-gamma v0 gap (the first record stores v0+1),
// unary degree, then fixed-width xv1, xv2 and, when labeled, xlabel.
//
// Two placements share the code path: a fresh stream appended at the end of
// a file, and an in-place rewrite where the encoder's output overwrites the
// very stream a reader is still consuming. In the second mode encoded bytes
// wait in an elastic window and materialize only once the reader has moved
// past them; records can only shrink or vanish round over round, so the
// window stays small (its high-water mark is reported, and growth past the
// soft cap is counted as a spill).
class IncidenceStreamWriter {
  public:
    static IncidenceStreamWriter fresh(SequentialStream& s, vertex_t m, unsigned label_bits);
    static IncidenceStreamWriter inplace(SequentialStream& s, vertex_t m, unsigned label_bits,
                                         std::uint64_t window_soft_cap);

    void append(const PackedIncidenceList& list);

    // In-place mode: materialize window bytes the reader no longer needs.
    void pump(std::uint64_t reader_byte);

    // Align, flush, patch the header count; in-place mode truncates the
    // stream to the rewritten length. Returns the stream byte size.
    std::uint64_t finish();

    std::uint64_t count() const { return count_; }
    const FieldBits& bits() const { return bits_; }
    std::uint64_t window_high_water() const { return window_high_water_; }
    std::uint64_t spills() const { return spills_; }

  private:
    IncidenceStreamWriter(SequentialStream& s, vertex_t m, unsigned label_bits, bool inplace,
                          std::uint64_t soft_cap);

    void drain(std::uint64_t limit_byte);

    SequentialStream& s_;
    BitWriter w_;
    vertex_t m_;
    unsigned vertex_bits_;
    unsigned label_bits_;
    bool inplace_;
    std::uint64_t soft_cap_;
    vertex_t prev_v0_ = 0;
    bool first_ = true;
    std::uint64_t count_ = 0;
    std::uint64_t flushed_bytes_ = 0;
    std::uint64_t base_byte_ = 0;
    FieldBits bits_;
    std::uint64_t window_high_water_ = 0;
    std::uint64_t spills_ = 0;
    bool spilled_this_round_ = false;
};

class IncidenceStreamReader {
  public:
    // The caller owns pass accounting (begin_read_pass) since a reader may be
    // part of a larger fused pass.
    explicit IncidenceStreamReader(SequentialStream& s, std::uint64_t base_byte = 0);

    const IncidenceHeader& header() const { return header_; }

    std::optional<PackedIncidenceList> next();

    // Byte offset just past the last consumed bit, relative to stream start.
    std::uint64_t byte_pos() const { return base_byte_ + (reader_.position() + 7) / 8; }

    // Report consumed bytes into the stream counters.
    void finish();

  private:
    SequentialStream& s_;
    IncidenceHeader header_;
    std::uint64_t base_byte_;
    BitReader reader_;
    vertex_t prev_v0_ = 0;
    bool first_ = true;
    std::uint64_t remaining_ = 0;
    unsigned vertex_bits_ = 1;
    bool finished_ = false;
};

// Whole-stream conveniences (tests, oracles, small inputs).
FieldBits write_incidence_stream(SequentialStream& s, std::span<const PackedIncidenceList> lists,
                                 vertex_t m, unsigned label_bits);
std::vector<PackedIncidenceList> read_incidence_stream(SequentialStream& s);

}  // namespace emph
