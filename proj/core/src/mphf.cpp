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

#include "emph/mphf.hpp"

#include <chrono>
#include <cstring>
#include <random>

namespace emph {

namespace {

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

void put_le(std::vector<std::uint8_t>& out, std::uint64_t v, unsigned bytes) {
    for (unsigned i = 0; i < bytes; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

std::uint64_t get_le(const std::uint8_t* in, unsigned bytes) {
    std::uint64_t v = 0;
    for (unsigned i = 0; i < bytes; ++i) v |= static_cast<std::uint64_t>(in[i]) << (8 * i);
    return v;
}

constexpr char kMphfMagic[4] = {'E', 'M', 'P', 'H'};
constexpr std::uint16_t kMphfVersion = 1;
constexpr std::size_t kMphfHeaderBytes = 40;

std::uint64_t fresh_random_seed() {
    std::random_device rd;
    return (static_cast<std::uint64_t>(rd()) << 32) ^ rd() ^
           static_cast<std::uint64_t>(
               std::chrono::steady_clock::now().time_since_epoch().count());
}

// MPHF entries: 0 unused, {1,2,3} assigned, 3 standing for residue 0. Since
// 3 = 0 (mod 3), plain sums of stored values keep the defining equation.
class MphfAssigner {
  public:
    explicit MphfAssigner(vertex_t m) : values_(m, 2) {}

    void assign(const OrientedEdge& e) {
        unsigned i = orientation_index_of(e);
        if (values_.get(e.v0) != 0)
            throw FormatError("free vertex assigned twice; layer streams corrupt");
        std::uint64_t sum = values_.get(e.v1) + values_.get(e.v2);
        std::uint64_t r = (i + 6 - (sum % 3)) % 3;
        values_.set(e.v0, r == 0 ? 3 : r);
        ++assigned_;
    }

    std::uint64_t assigned() const { return assigned_; }
    ValueArray take() { return std::move(values_); }

  private:
    ValueArray values_;
    std::uint64_t assigned_ = 0;
};

class FunctionAssigner {
  public:
    FunctionAssigner(vertex_t m, std::uint64_t sigma, std::span<const std::uint64_t> f_values)
        : sigma_(sigma),
          values_(m, sigma <= 1 ? 0 : bits_for_value(sigma - 1)),
          taken_(m, false),
          f_(f_values) {
        if (sigma == 0) throw ContractError("sigma must be positive");
    }

    void assign(const OrientedEdge& e) {
        if (e.label >= f_.size()) throw FormatError("edge label has no function value");
        std::uint64_t f = f_[e.label];
        if (f >= sigma_) throw ContractError("function value not below sigma");
        if (taken_[e.v0]) throw FormatError("free vertex assigned twice; layer streams corrupt");
        taken_[e.v0] = true;
        std::uint64_t rest = (values_.get(e.v1) + values_.get(e.v2)) % sigma_;
        values_.set(e.v0, (f + sigma_ - rest) % sigma_);
    }

    ValueArray take() { return std::move(values_); }

  private:
    std::uint64_t sigma_;
    ValueArray values_;
    std::vector<bool> taken_;
    std::span<const std::uint64_t> f_;
};

// Walks the peeled layers of an outcome in reverse round order, each layer
// scanned forward, handing every edge to the sink.
template <class Sink>
void scan_layers_reverse(PeelOutcome& outcome, Sink&& sink) {
    if (outcome.manifest.status != PeelStatus::kPeeled)
        throw ContractError("assignment requires a fully peeled manifest");
    const EdgeLayout& layout = outcome.layout;
    SequentialStream& stream = outcome.edges;
    for (auto layer = outcome.manifest.layers.rbegin(); layer != outcome.manifest.layers.rend();
         ++layer) {
        stream.begin_region_pass();
        const std::uint8_t* base = stream.bytes().data() + layer->offset_records * layout.record_bytes;
        for (std::uint64_t i = 0; i < layer->count; ++i)
            sink(layout.decode(base + i * layout.record_bytes));
        stream.count_read(layer->count * layout.record_bytes);
    }
}

}  // namespace

void ValueArray::append_bytes(std::vector<std::uint8_t>& out) const {
    std::uint64_t bytes = byte_size();
    for (std::uint64_t i = 0; i < bytes; ++i) {
        std::uint64_t w = i >> 3;
        out.push_back(static_cast<std::uint8_t>(words_[w] >> (8 * (i & 7))));
    }
}

ValueArray ValueArray::from_bytes(std::span<const std::uint8_t> in, std::uint64_t length,
                                  unsigned width_bits) {
    ValueArray a(length, width_bits);
    if (in.size() < a.byte_size()) throw FormatError("value array truncated");
    for (std::uint64_t i = 0; i < a.byte_size(); ++i)
        a.words_[i >> 3] |= static_cast<std::uint64_t>(in[i]) << (8 * (i & 7));
    return a;
}

RankDirectory::RankDirectory(const ValueArray& values, std::uint32_t period_entries)
    : period_(period_entries) {
    if (values.width() != 2) throw ContractError("rank directory requires 2-bit entries");
    if (period_ == 0 || period_ % 32 != 0)
        throw ContractError("rank period must be a positive multiple of 32 entries");
    std::uint64_t blocks = (values.length() + period_ - 1) / period_;
    samples_.reserve(blocks);
    std::uint64_t running = 0;
    std::uint64_t words_per_block = period_ / 32;
    auto words = values.words();
    for (std::uint64_t b = 0; b < blocks; ++b) {
        samples_.push_back(running);
        std::uint64_t first = b * words_per_block;
        std::uint64_t last = std::min<std::uint64_t>(first + words_per_block, words.size());
        for (std::uint64_t w = first; w < last; ++w) running += rank_nonzero_pairs(words[w]);
    }
}

RankDirectory RankDirectory::from_samples(std::vector<std::uint64_t> samples,
                                          std::uint32_t period) {
    RankDirectory d;
    d.period_ = period;
    d.samples_ = std::move(samples);
    return d;
}

std::uint64_t RankDirectory::rank_nonzero(const ValueArray& values, std::uint64_t pos) const {
    std::uint64_t block = pos / period_;
    std::uint64_t count = samples_[block];
    auto words = values.words();
    std::uint64_t w = block * (period_ / 32);
    std::uint64_t full = pos / 32;
    for (; w < full; ++w) count += rank_nonzero_pairs(words[w]);
    unsigned rem = pos % 32;
    if (rem) count += rank_nonzero_pairs(words[full] & ((1ULL << (2 * rem)) - 1));
    return count;
}

Mphf Mphf::from_parts(Seed seed, std::uint64_t n, vertex_t m, ValueArray values,
                      std::uint32_t rank_period) {
    Mphf f;
    f.seed_ = seed;
    f.n_ = n;
    f.m_ = m;
    f.period_ = rank_period;
    f.values_ = std::move(values);
    f.rank_ = RankDirectory(f.values_, rank_period);
    f.hasher_.emplace(seed, m);
    return f;
}

std::uint64_t Mphf::lookup(const void* data, std::size_t len) const {
    if (!hasher_) throw ContractError("lookup on an empty structure");
    OrientedEdge e = hasher_->edge_of(data, len);
    std::uint64_t i = (values_.get(e.v0) + values_.get(e.v1) + values_.get(e.v2)) % 3;
    vertex_t v = i == 0 ? e.v0 : (i == 1 ? e.v1 : e.v2);
    std::uint64_t r = rank_.rank_nonzero(values_, v);
    // Construction keys land on their free vertex, whose own entry is not
    // counted, so r < n. A foreign key can select an unused vertex past all
    // n assigned entries; clamp so the contract (some index in [0, n)) holds.
    return r < n_ ? r : (n_ ? n_ - 1 : 0);
}

std::uint64_t Mphf::bit_size() const {
    std::uint64_t samples = (m_ + period_ - 1) / period_;
    return 8 * (kMphfHeaderBytes + values_.byte_size() + 8 * samples);
}

void Mphf::serialize(std::vector<std::uint8_t>& out) const {
    out.reserve(out.size() + bit_size() / 8);
    out.insert(out.end(), kMphfMagic, kMphfMagic + 4);
    put_le(out, kMphfVersion, 2);
    put_le(out, 0, 2);  // flags
    put_le(out, seed_.value, 8);
    put_le(out, n_, 8);
    put_le(out, m_, 8);
    put_le(out, period_, 4);
    put_le(out, 0, 4);  // reserved
    values_.append_bytes(out);
    for (std::uint64_t s : rank_.samples()) put_le(out, s, 8);
}

Mphf Mphf::deserialize(std::span<const std::uint8_t> in, std::size_t* consumed) {
    if (in.size() < kMphfHeaderBytes) throw FormatError("mphf blob shorter than its header");
    if (std::memcmp(in.data(), kMphfMagic, 4) != 0) throw FormatError("mphf magic mismatch");
    if (get_le(in.data() + 4, 2) != kMphfVersion) throw FormatError("mphf version mismatch");
    Mphf f;
    f.seed_.value = get_le(in.data() + 8, 8);
    f.n_ = get_le(in.data() + 16, 8);
    f.m_ = get_le(in.data() + 24, 8);
    f.period_ = static_cast<std::uint32_t>(get_le(in.data() + 32, 4));
    if (f.m_ < 3 || f.m_ % 3 != 0) throw FormatError("mphf vertex count corrupt");
    if (f.period_ == 0 || f.period_ % 32 != 0) throw FormatError("mphf rank period corrupt");
    std::uint64_t value_bytes = (2 * f.m_ + 7) / 8;
    std::uint64_t sample_count = (f.m_ + f.period_ - 1) / f.period_;
    std::uint64_t need = kMphfHeaderBytes + value_bytes + 8 * sample_count;
    if (in.size() < need) throw FormatError("mphf blob truncated");
    f.values_ = ValueArray::from_bytes(in.subspan(kMphfHeaderBytes, value_bytes), f.m_, 2);
    std::vector<std::uint64_t> samples(sample_count);
    for (std::uint64_t i = 0; i < sample_count; ++i)
        samples[i] = get_le(in.data() + kMphfHeaderBytes + value_bytes + 8 * i, 8);
    f.rank_ = RankDirectory::from_samples(std::move(samples), f.period_);
    f.hasher_.emplace(f.seed_, f.m_);
    if (consumed) *consumed = need;
    return f;
}

StoredFunction::StoredFunction(Seed seed, std::uint64_t n, vertex_t m, std::uint64_t sigma,
                               ValueArray values)
    : seed_(seed), n_(n), m_(m), sigma_(sigma), values_(std::move(values)) {
    hasher_.emplace(seed_, m_);
}

std::uint64_t StoredFunction::evaluate(std::string_view key) const {
    if (sigma_ <= 1) return 0;
    OrientedEdge e = hasher_->edge_of(key);
    return (values_.get(e.v0) + values_.get(e.v1) + values_.get(e.v2)) % sigma_;
}

ValueArray assign_mphf(PeelOutcome& outcome) {
    MphfAssigner a(outcome.manifest.m);
    scan_layers_reverse(outcome, [&](const OrientedEdge& e) { a.assign(e); });
    if (a.assigned() != outcome.manifest.n)
        throw FormatError("layer streams do not cover every edge");
    return a.take();
}

ValueArray assign_mphf(const LayeredPeelResult& peel, vertex_t m) {
    if (peel.status != PeelStatus::kPeeled)
        throw ContractError("assignment requires a fully peeled graph");
    MphfAssigner a(m);
    for (auto layer = peel.layers.rbegin(); layer != peel.layers.rend(); ++layer)
        for (const auto& e : *layer) a.assign(e);
    return a.take();
}

ValueArray assign_mphf_from_order(std::span<const OrientedEdge> order, vertex_t m) {
    MphfAssigner a(m);
    for (auto it = order.rbegin(); it != order.rend(); ++it) a.assign(*it);
    return a.take();
}

ValueArray assign_function(PeelOutcome& outcome, std::span<const std::uint64_t> f_values,
                           std::uint64_t sigma) {
    FunctionAssigner a(outcome.manifest.m, sigma, f_values);
    scan_layers_reverse(outcome, [&](const OrientedEdge& e) { a.assign(e); });
    return a.take();
}

ValueArray assign_function_from_order(std::span<const OrientedEdge> order, vertex_t m,
                                      std::span<const std::uint64_t> f_values,
                                      std::uint64_t sigma) {
    FunctionAssigner a(m, sigma, f_values);
    for (auto it = order.rbegin(); it != order.rend(); ++it) a.assign(*it);
    return a.take();
}

namespace {

Seed attempt_seed(const BuildOptions& opts, unsigned attempt, std::uint64_t random_base) {
    if (opts.seed) return attempt == 0 ? Seed{*opts.seed} : mix_seed(Seed{*opts.seed}, attempt);
    return attempt == 0 ? Seed{random_base} : mix_seed(Seed{random_base}, attempt);
}

[[noreturn]] void unpeelable(unsigned retries) {
    throw BuildError(
        "no peelable hypergraph after " + std::to_string(retries) +
        " seeds; the key set likely contains duplicate keys (identical edges under every seed) "
        "or gamma is at or below the peelability threshold 1.221");
}

}  // namespace

Mphf build_mphf_external(KeySource& keys, Workspace& ws, const BuildOptions& opts,
                         BuildReport* report) {
    std::uint64_t n = keys.count();
    vertex_t m = vertex_count_for(n, opts.gamma);
    std::uint64_t random_base = fresh_random_seed();

    PeelConfig cfg;
    cfg.memory_budget = opts.memory_budget;
    cfg.buffer_bytes = opts.buffer_bytes;
    cfg.tripartite = true;
    cfg.label_bits = 0;
    cfg.write_manifest_json = opts.write_manifest;

    for (unsigned attempt = 0; attempt < opts.max_retries; ++attempt) {
        Seed seed = attempt_seed(opts, attempt, random_base);
        TripartiteEdgeHasher hasher(seed, m);

        auto t0 = std::chrono::steady_clock::now();
        ExternalPeeler peeler(ws, m, cfg);
        keys.reset();
        while (auto k = keys.next()) peeler.add_edge(hasher.edge_of(*k));
        if (peeler.edge_count() != n) throw ContractError("key source changed length between passes");
        double hash_s = seconds_since(t0);

        t0 = std::chrono::steady_clock::now();
        PeelOutcome outcome = peeler.peel();
        double peel_s = seconds_since(t0);

        if (outcome.manifest.status != PeelStatus::kPeeled) continue;

        t0 = std::chrono::steady_clock::now();
        ValueArray values = assign_mphf(outcome);
        double assign_s = seconds_since(t0);

        t0 = std::chrono::steady_clock::now();
        Mphf f = Mphf::from_parts(seed, n, m, std::move(values), opts.rank_period);
        double rank_s = seconds_since(t0);

        if (report) {
            report->n = n;
            report->m = m;
            report->seed = seed;
            report->retries = attempt;
            report->rounds = outcome.manifest.rounds();
            report->layer_sizes.clear();
            for (const auto& l : outcome.manifest.layers) report->layer_sizes.push_back(l.count);
            report->peak_temp_bytes = ws.peak_bytes();
            report->io = ws.io_totals();
            report->hash_seconds = hash_s;
            report->peel_seconds = peel_s;
            report->assign_seconds = assign_s;
            report->rank_seconds = rank_s;
            report->serialized_bits = f.bit_size();
            report->rewrite_spills = 0;
            for (const auto& u : outcome.manifest.updates)
                report->rewrite_spills += u.rewrite_spills;
            report->manifest = std::move(outcome.manifest);
        }
        return f;
    }
    unpeelable(opts.max_retries);
}

Mphf build_mphf_inmemory(KeySource& keys, const BuildOptions& opts, BuildReport* report) {
    std::uint64_t n = keys.count();
    vertex_t m = vertex_count_for(n, opts.gamma);
    if (opts.inmem_cap_bytes) {
        std::uint64_t need = inmem_working_bytes(n, m) + n * sizeof(OrientedEdge);
        if (need > opts.inmem_cap_bytes)
            throw BuildError("in-memory build needs " + std::to_string(need) +
                             " bytes, over the enforced cap of " +
                             std::to_string(opts.inmem_cap_bytes));
    }
    std::uint64_t random_base = fresh_random_seed();

    for (unsigned attempt = 0; attempt < opts.max_retries; ++attempt) {
        Seed seed = attempt_seed(opts, attempt, random_base);
        TripartiteEdgeHasher hasher(seed, m);

        auto t0 = std::chrono::steady_clock::now();
        std::vector<OrientedEdge> edges;
        edges.reserve(n);
        keys.reset();
        while (auto k = keys.next()) edges.push_back(hasher.edge_of(*k));
        double hash_s = seconds_since(t0);

        t0 = std::chrono::steady_clock::now();
        LayeredPeelResult peel = peel_layers_in_memory(edges, m);
        double peel_s = seconds_since(t0);
        if (peel.status != PeelStatus::kPeeled) continue;

        t0 = std::chrono::steady_clock::now();
        ValueArray values = assign_mphf(peel, m);
        double assign_s = seconds_since(t0);

        t0 = std::chrono::steady_clock::now();
        Mphf f = Mphf::from_parts(seed, n, m, std::move(values), opts.rank_period);
        double rank_s = seconds_since(t0);

        if (report) {
            *report = BuildReport{};
            report->n = n;
            report->m = m;
            report->seed = seed;
            report->retries = attempt;
            report->rounds = peel.layers.size();
            for (const auto& l : peel.layers) report->layer_sizes.push_back(l.size());
            report->hash_seconds = hash_s;
            report->peel_seconds = peel_s;
            report->assign_seconds = assign_s;
            report->rank_seconds = rank_s;
            report->serialized_bits = f.bit_size();
        }
        return f;
    }
    unpeelable(opts.max_retries);
}

StoredFunction build_function_external(KeySource& keys, std::span<const std::uint64_t> f_values,
                                       std::uint64_t sigma, Workspace& ws,
                                       const BuildOptions& opts, BuildReport* report) {
    std::uint64_t n = keys.count();
    if (f_values.size() != n) throw ContractError("one function value per key required");
    vertex_t m = vertex_count_for(n, opts.gamma);
    std::uint64_t random_base = fresh_random_seed();

    PeelConfig cfg;
    cfg.memory_budget = opts.memory_budget;
    cfg.buffer_bytes = opts.buffer_bytes;
    cfg.tripartite = true;
    cfg.label_bits = bits_for_value(n > 1 ? n - 1 : 1);
    cfg.write_manifest_json = opts.write_manifest;

    for (unsigned attempt = 0; attempt < opts.max_retries; ++attempt) {
        Seed seed = attempt_seed(opts, attempt, random_base);
        TripartiteEdgeHasher hasher(seed, m);
        ExternalPeeler peeler(ws, m, cfg);
        keys.reset();
        std::uint64_t ordinal = 0;
        while (auto k = keys.next()) peeler.add_edge(hasher.edge_of(*k, ordinal++));
        PeelOutcome outcome = peeler.peel();
        if (outcome.manifest.status != PeelStatus::kPeeled) continue;

        ValueArray values = assign_function(outcome, f_values, sigma);
        if (report) {
            report->n = n;
            report->m = m;
            report->seed = seed;
            report->retries = attempt;
            report->rounds = outcome.manifest.rounds();
            report->peak_temp_bytes = ws.peak_bytes();
            report->io = ws.io_totals();
            report->manifest = std::move(outcome.manifest);
        }
        return StoredFunction(seed, n, m, sigma, std::move(values));
    }
    unpeelable(opts.max_retries);
}

}  // namespace emph
