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

#include "emph/incidence.hpp"

#include <cstring>

namespace emph {

namespace {

void put_le(std::uint8_t* out, std::uint64_t v, unsigned bytes) {
    for (unsigned i = 0; i < bytes; ++i) out[i] = static_cast<std::uint8_t>(v >> (8 * i));
}

std::uint64_t get_le(const std::uint8_t* in, unsigned bytes) {
    std::uint64_t v = 0;
    for (unsigned i = 0; i < bytes; ++i) v |= static_cast<std::uint64_t>(in[i]) << (8 * i);
    return v;
}

constexpr char kMagic[4] = {'C', 'P', 'L', 'S'};

}  // namespace

void IncidenceHeader::write(std::uint8_t out[kBytes]) const {
    std::memset(out, 0, kBytes);
    std::memcpy(out, kMagic, 4);
    put_le(out + 4, kVersion, 2);
    put_le(out + 6, label_bits > 0 ? 1 : 0, 2);
    put_le(out + 8, m, 8);
    put_le(out + 16, count, 8);
    put_le(out + 24, label_bits, 2);
    return;
}

IncidenceHeader IncidenceHeader::read(const std::uint8_t* in, std::uint64_t avail) {
    if (avail < kBytes) throw FormatError("incidence stream shorter than its header");
    if (std::memcmp(in, kMagic, 4) != 0) throw FormatError("incidence stream magic mismatch");
    if (get_le(in + 4, 2) != kVersion) throw FormatError("incidence stream version mismatch");
    IncidenceHeader h;
    bool labeled = (get_le(in + 6, 2) & 1) != 0;
    h.m = get_le(in + 8, 8);
    h.count = get_le(in + 16, 8);
    h.label_bits = static_cast<unsigned>(get_le(in + 24, 2));
    if (labeled != (h.label_bits > 0)) throw FormatError("incidence stream label flags inconsistent");
    if (h.m == 0) throw FormatError("incidence stream with zero vertex space");
    return h;
}

IncidenceStreamWriter::IncidenceStreamWriter(SequentialStream& s, vertex_t m, unsigned label_bits,
                                             bool inplace, std::uint64_t soft_cap)
    : s_(s),
      m_(m),
      vertex_bits_(bits_for_value(m - 1)),
      label_bits_(label_bits),
      inplace_(inplace),
      soft_cap_(soft_cap) {
    std::uint8_t header[IncidenceHeader::kBytes];
    IncidenceHeader{m_, 0, label_bits_}.write(header);
    if (inplace_) {
        base_byte_ = 0;
        for (std::uint8_t b : header) w_.put_bits(b, 8);
    } else {
        base_byte_ = s_.size();
        s_.append(header, sizeof header);
        flushed_bytes_ = IncidenceHeader::kBytes;
        // The window then holds body bits only.
        for (std::uint8_t b : header) w_.put_bits(b, 8);
        w_.advance_taken(IncidenceHeader::kBytes);
    }
}

IncidenceStreamWriter IncidenceStreamWriter::fresh(SequentialStream& s, vertex_t m,
                                                   unsigned label_bits) {
    return IncidenceStreamWriter(s, m, label_bits, false, 0);
}

IncidenceStreamWriter IncidenceStreamWriter::inplace(SequentialStream& s, vertex_t m,
                                                     unsigned label_bits,
                                                     std::uint64_t window_soft_cap) {
    return IncidenceStreamWriter(s, m, label_bits, true, window_soft_cap);
}

void IncidenceStreamWriter::append(const PackedIncidenceList& list) {
    if (list.v0 >= m_) throw ContractError("incidence list vertex outside the graph");
    if (list.degree == 0) throw ContractError("empty incidence lists are never serialized");
    if (!first_ && list.v0 <= prev_v0_) throw ContractError("incidence lists must be sorted by v0");
    std::uint64_t gap = first_ ? list.v0 + 1 : list.v0 - prev_v0_;
    w_.put_gamma(gap);
    bits_.gamma_v0 += gamma_bit_length(gap);
    w_.put_unary(list.degree);
    bits_.unary_degree += list.degree;
    w_.put_bits(list.xv1, vertex_bits_);
    w_.put_bits(list.xv2, vertex_bits_);
    bits_.fixed += 2 * vertex_bits_;
    if (label_bits_) {
        w_.put_bits(list.xlabel, label_bits_);
        bits_.fixed += label_bits_;
    }
    prev_v0_ = list.v0;
    first_ = false;
    ++count_;
    if (!inplace_) {
        drain(~std::uint64_t{0});
    } else {
        std::uint64_t pending = w_.pending_bytes();
        if (pending > window_high_water_) window_high_water_ = pending;
        if (soft_cap_ && pending > soft_cap_ && !spilled_this_round_) {
            ++spills_;
            spilled_this_round_ = true;
        }
    }
}

void IncidenceStreamWriter::drain(std::uint64_t limit_byte) {
    while (true) {
        std::uint64_t takeable = w_.takeable_bytes();
        if (takeable == 0) break;
        std::uint64_t dst = base_byte_ + w_.taken_bytes();
        if (dst >= limit_byte) break;
        std::uint64_t n = std::min(takeable, limit_byte - dst);
        if (inplace_) {
            s_.write_at(dst, w_.take_ptr(), n);
        } else {
            s_.append(w_.take_ptr(), n);
            flushed_bytes_ += n;
        }
        w_.advance_taken(n);
    }
}

void IncidenceStreamWriter::pump(std::uint64_t reader_byte) {
    if (!inplace_) return;
    drain(reader_byte);
}

std::uint64_t IncidenceStreamWriter::finish() {
    w_.align_to_byte();
    std::uint64_t total = base_byte_ + (w_.bits_written() + 7) / 8;
    if (inplace_) {
        if (total > s_.size())
            throw FormatError("in-place rewrite grew past its source stream");
        drain(total);
        s_.truncate(total);
    } else {
        drain(~std::uint64_t{0});
    }
    // Patch the record count into the header.
    std::uint8_t header[IncidenceHeader::kBytes];
    IncidenceHeader{m_, count_, label_bits_}.write(header);
    s_.write_at(base_byte_, header, sizeof header);
    return total - base_byte_;
}

IncidenceStreamReader::IncidenceStreamReader(SequentialStream& s, std::uint64_t base_byte)
    : s_(s),
      header_(IncidenceHeader::read(s.bytes().data() + base_byte, s.size() - base_byte)),
      base_byte_(base_byte),
      reader_(s.bytes().data() + base_byte + IncidenceHeader::kBytes,
              (s.size() - base_byte - IncidenceHeader::kBytes) * 8) {
    remaining_ = header_.count;
    vertex_bits_ = bits_for_value(header_.m - 1);
}

std::optional<PackedIncidenceList> IncidenceStreamReader::next() {
    if (remaining_ == 0) return std::nullopt;
    --remaining_;
    PackedIncidenceList l;
    std::uint64_t gap = reader_.get_gamma();
    l.v0 = first_ ? gap - 1 : prev_v0_ + gap;
    first_ = false;
    prev_v0_ = l.v0;
    if (l.v0 >= header_.m) throw FormatError("incidence stream vertex out of range");
    l.degree = static_cast<std::uint32_t>(reader_.get_unary());
    l.xv1 = reader_.get_bits(vertex_bits_);
    l.xv2 = reader_.get_bits(vertex_bits_);
    l.xlabel = header_.label_bits ? reader_.get_bits(header_.label_bits) : 0;
    return l;
}

void IncidenceStreamReader::finish() {
    if (finished_) return;
    finished_ = true;
    s_.count_read(IncidenceHeader::kBytes + (reader_.position() + 7) / 8);
}

FieldBits write_incidence_stream(SequentialStream& s, std::span<const PackedIncidenceList> lists,
                                 vertex_t m, unsigned label_bits) {
    auto w = IncidenceStreamWriter::fresh(s, m, label_bits);
    for (const auto& l : lists) w.append(l);
    w.finish();
    return w.bits();
}

std::vector<PackedIncidenceList> read_incidence_stream(SequentialStream& s) {
    s.begin_read_pass();
    IncidenceStreamReader r(s);
    std::vector<PackedIncidenceList> out;
    out.reserve(r.header().count);
    while (auto l = r.next()) out.push_back(*l);
    r.finish();
    return out;
}

}  // namespace emph
