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

#include "emph/hem.hpp"

#include <cstring>
#include <random>

#include "emph/extsort.hpp"
#include "emph/inmem_peel.hpp"

namespace emph {

namespace {

constexpr char kHemMagic[4] = {'E', 'H', 'E', 'M'};
constexpr std::uint16_t kHemVersion = 1;
constexpr std::size_t kHemHeaderBytes = 32;
constexpr std::uint32_t kSigBytes = 12;

void put_le(std::vector<std::uint8_t>& out, std::uint64_t v, unsigned bytes) {
    for (unsigned i = 0; i < bytes; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

std::uint64_t get_le(const std::uint8_t* in, unsigned bytes) {
    std::uint64_t v = 0;
    for (unsigned i = 0; i < bytes; ++i) v |= static_cast<std::uint64_t>(in[i]) << (8 * i);
    return v;
}

unsigned bucket_bits_for(std::uint64_t n, std::uint64_t target) {
    unsigned b = 0;
    while ((n >> b) > target) ++b;  // smallest b with n/2^b <= target
    return b;
}

// One bucket's MPHF over residual signatures, retrying seeds until the
// bucket's hypergraph peels.
Mphf build_bucket(std::span<const Signature96> sigs, unsigned b, Seed global, std::uint64_t bucket,
                  const HemOptions& opts, std::uint64_t* retries) {
    std::uint64_t n_b = sigs.size();
    vertex_t m_b = vertex_count_for(n_b, opts.gamma);
    std::vector<std::uint8_t> keys(n_b * kSigBytes);
    for (std::uint64_t i = 0; i < n_b; ++i)
        sigs[i].residual(b).to_bytes(keys.data() + i * kSigBytes);

    std::vector<OrientedEdge> edges(n_b);
    for (unsigned attempt = 0; attempt < opts.max_bucket_retries; ++attempt) {
        Seed seed = mix_seed(mix_seed(global, bucket), attempt);
        TripartiteEdgeHasher hasher(seed, m_b);
        for (std::uint64_t i = 0; i < n_b; ++i)
            edges[i] = hasher.edge_of(keys.data() + i * kSigBytes, kSigBytes);
        PeelResult peel = peel_in_memory(edges, m_b);
        if (peel.status != PeelStatus::kPeeled) {
            if (retries) ++*retries;
            continue;
        }
        ValueArray values = assign_mphf_from_order(peel.order, m_b);
        return Mphf::from_parts(seed, n_b, m_b, std::move(values), opts.rank_period);
    }
    throw BuildError("bucket " + std::to_string(bucket) + " never peeled after " +
                     std::to_string(opts.max_bucket_retries) +
                     " seeds; signatures are likely corrupt");
}

}  // namespace

Hem build_hem(KeySource& keys, Workspace& ws, const HemOptions& opts, Hem::BuildStats* stats) {
    std::uint64_t n = keys.count();
    unsigned b = bucket_bits_for(n, opts.bucket_target);
    std::uint64_t buckets = 1ULL << b;

    std::uint64_t sig_base = opts.seed ? *opts.seed : remix64(std::random_device{}());
    for (unsigned sig_attempt = 0;; ++sig_attempt) {
        if (sig_attempt >= opts.max_signature_retries)
            throw BuildError("persistent signature collisions after " +
                             std::to_string(opts.max_signature_retries) +
                             " seeds; the key set contains duplicate keys");
        Seed seed = sig_attempt == 0 ? Seed{sig_base} : mix_seed(Seed{sig_base}, sig_attempt);

        auto sig_stream = ws.create_stream("signatures.bin");
        keys.reset();
        std::uint64_t written = 0;
        MicroHistogram hist(1ULL << 48);
        while (auto k = keys.next()) {
            Signature96 s = hash_signature(seed, *k);
            std::uint8_t rec[kSigBytes];
            s.to_bytes(rec);
            sig_stream.append(rec, kSigBytes);
            hist.add(s.hi >> 16);
            ++written;
        }
        if (written != n) throw ContractError("key source changed length between passes");

        // Sort signatures; the top bits double as the bucket split.
        auto key_of = [](const std::uint8_t* r) {
            return Signature96::from_bytes(r).hi >> 16;
        };
        auto less = [](const std::uint8_t* a, const std::uint8_t* c) {
            return Signature96::from_bytes(a) < Signature96::from_bytes(c);
        };
        SortConfig scfg;
        scfg.buffer_bytes = opts.buffer_bytes;
        scfg.bucket_count = plan_buckets(n * kSigBytes, opts.memory_budget, opts.buffer_bytes);
        RecordSorter<decltype(key_of), decltype(less)> sorter(
            sig_stream, 0, n, kSigBytes, 1ULL << 48, key_of, less, scfg, opts.memory_budget);
        sorter.sort_with(hist);

        // Collision check and bucket split on one scan.
        sig_stream.begin_read_pass();
        const std::uint8_t* base = sig_stream.bytes().data();
        bool collision = false;
        std::vector<std::uint64_t> bucket_sizes(buckets, 0);
        Signature96 prev{};
        for (std::uint64_t i = 0; i < n && !collision; ++i) {
            Signature96 s = Signature96::from_bytes(base + i * kSigBytes);
            if (i > 0 && s == prev) collision = true;
            prev = s;
            bucket_sizes[s.top_bits(b)] += 1;
        }
        sig_stream.count_read(n * kSigBytes);
        if (collision) {
            if (stats) ++stats->signature_retries;
            continue;
        }

        Hem h;
        h.seed_ = seed;
        h.n_ = n;
        h.b_ = b;
        h.offsets_.assign(buckets + 1, {});
        std::vector<Signature96> bucket_sigs;
        std::uint64_t consumed = 0;
        for (std::uint64_t q = 0; q < buckets; ++q) {
            h.offsets_[q] = {consumed, 8 * h.blob_.size()};
            std::uint64_t n_b = bucket_sizes[q];
            if (n_b == 0) continue;
            bucket_sigs.resize(n_b);
            for (std::uint64_t i = 0; i < n_b; ++i)
                bucket_sigs[i] = Signature96::from_bytes(base + (consumed + i) * kSigBytes);
            std::uint64_t retries = 0;
            Mphf f = build_bucket(bucket_sigs, b, seed, q, opts, &retries);
            f.serialize(h.blob_);
            consumed += n_b;
            if (stats) {
                stats->bucket_retries += retries;
                if (n_b > stats->max_bucket) stats->max_bucket = n_b;
            }
        }
        h.offsets_[buckets] = {consumed, 8 * h.blob_.size()};
        h.load_buckets();
        return h;
    }
}

void Hem::load_buckets() {
    buckets_.clear();
    buckets_.resize(bucket_count());
    for (std::uint64_t q = 0; q < bucket_count(); ++q) {
        std::uint64_t lo = offsets_[q].bits / 8;
        std::uint64_t hi = offsets_[q + 1].bits / 8;
        if (lo > hi || hi > blob_.size()) throw FormatError("hem bucket offsets out of range");
        if (hi > lo)
            buckets_[q] = Mphf::deserialize({blob_.data() + lo, hi - lo});
    }
}

std::uint64_t Hem::lookup(const void* data, std::size_t len) const {
    Signature96 s = hash_signature(seed_, data, len);
    std::uint64_t q = s.top_bits(b_);
    if (offsets_[q + 1].keys == offsets_[q].keys) return offsets_[q].keys % (n_ ? n_ : 1);
    std::uint8_t rec[kSigBytes];
    s.residual(b_).to_bytes(rec);
    return offsets_[q].keys + buckets_[q].lookup(rec, kSigBytes);
}

std::uint64_t Hem::bit_size() const {
    return 8 * (kHemHeaderBytes + 16 * offsets_.size() + blob_.size());
}

void Hem::serialize(std::vector<std::uint8_t>& out) const {
    out.reserve(out.size() + bit_size() / 8);
    out.insert(out.end(), kHemMagic, kHemMagic + 4);
    put_le(out, kHemVersion, 2);
    put_le(out, 0, 2);
    put_le(out, seed_.value, 8);
    put_le(out, n_, 8);
    put_le(out, b_, 4);
    put_le(out, 0, 4);
    for (const auto& o : offsets_) {
        put_le(out, o.keys, 8);
        put_le(out, o.bits, 8);
    }
    out.insert(out.end(), blob_.begin(), blob_.end());
}

Hem Hem::deserialize(std::span<const std::uint8_t> in) {
    if (in.size() < kHemHeaderBytes) throw FormatError("hem blob shorter than its header");
    if (std::memcmp(in.data(), kHemMagic, 4) != 0) throw FormatError("hem magic mismatch");
    if (get_le(in.data() + 4, 2) != kHemVersion) throw FormatError("hem version mismatch");
    Hem h;
    h.seed_.value = get_le(in.data() + 8, 8);
    h.n_ = get_le(in.data() + 16, 8);
    h.b_ = static_cast<unsigned>(get_le(in.data() + 24, 4));
    if (h.b_ > 56) throw FormatError("hem bucket bits corrupt");
    std::uint64_t entries = (1ULL << h.b_) + 1;
    std::uint64_t need = kHemHeaderBytes + 16 * entries;
    if (in.size() < need) throw FormatError("hem offset index truncated");
    h.offsets_.resize(entries);
    for (std::uint64_t i = 0; i < entries; ++i) {
        h.offsets_[i].keys = get_le(in.data() + kHemHeaderBytes + 16 * i, 8);
        h.offsets_[i].bits = get_le(in.data() + kHemHeaderBytes + 16 * i + 8, 8);
    }
    for (std::uint64_t i = 0; i + 1 < entries; ++i) {
        if (h.offsets_[i].keys > h.offsets_[i + 1].keys ||
            h.offsets_[i].bits > h.offsets_[i + 1].bits)
            throw FormatError("hem offset index not monotone");
    }
    if (h.offsets_.back().keys != h.n_ || h.offsets_.back().bits % 8 != 0)
        throw FormatError("hem offset index inconsistent with the key count");
    std::uint64_t blob_bytes = h.offsets_.back().bits / 8;
    if (in.size() < need + blob_bytes) throw FormatError("hem bucket blob truncated");
    h.blob_.assign(in.begin() + need, in.begin() + need + blob_bytes);
    h.load_buckets();
    return h;
}

}  // namespace emph
