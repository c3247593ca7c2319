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
#include <optional>
#include <span>
#include <vector>

#include "emph/common.hpp"
#include "emph/ext_peel.hpp"
#include "emph/hashing.hpp"
#include "emph/inmem_peel.hpp"
#include "emph/keys.hpp"

namespace emph {

// Packed array of fixed-width entries, least significant bit first within
// 64-bit little-endian words. Width 0 is legal and stores nothing (every
// entry reads 0), which is the natural representation for sigma = 1.
class ValueArray {
  public:
    ValueArray() = default;
    ValueArray(std::uint64_t length, unsigned width_bits) : length_(length), width_(width_bits) {
        if (width_ > 64) throw ContractError("entry width above 64 bits");
        words_.assign(width_ == 0 ? 0 : (length_ * width_ + 63) / 64, 0);
    }

    std::uint64_t get(std::uint64_t i) const {
        if (width_ == 0) return 0;
        std::uint64_t bit = i * width_;
        std::uint64_t w = bit >> 6;
        unsigned off = bit & 63;
        std::uint64_t v = words_[w] >> off;
        if (off + width_ > 64) v |= words_[w + 1] << (64 - off);
        return v & mask();
    }

    void set(std::uint64_t i, std::uint64_t value) {
        if (width_ == 0) return;
        value &= mask();
        std::uint64_t bit = i * width_;
        std::uint64_t w = bit >> 6;
        unsigned off = bit & 63;
        words_[w] = (words_[w] & ~(mask() << off)) | ((value & mask()) << off);
        if (off + width_ > 64) {
            unsigned hi = off + width_ - 64;
            words_[w + 1] = (words_[w + 1] & ~(mask() >> (width_ - hi))) | (value >> (width_ - hi));
        }
    }

    std::uint64_t length() const { return length_; }
    unsigned width() const { return width_; }
    std::span<const std::uint64_t> words() const { return words_; }
    std::uint64_t byte_size() const { return (length_ * width_ + 7) / 8; }

    void append_bytes(std::vector<std::uint8_t>& out) const;
    static ValueArray from_bytes(std::span<const std::uint8_t> in, std::uint64_t length,
                                 unsigned width_bits);

  private:
    std::uint64_t mask() const { return width_ >= 64 ? ~0ULL : (1ULL << width_) - 1; }

    std::uint64_t length_ = 0;
    unsigned width_ = 0;
    std::vector<std::uint64_t> words_;
};

// Number of non-zero 2-bit fields in a word, branch-free.
inline std::uint32_t rank_nonzero_pairs(std::uint64_t word) {
    std::uint64_t t = (word | (word >> 1)) & 0x5555555555555555ULL;
    return static_cast<std::uint32_t>(std::popcount(t));
}

// Sampled cumulative counts of non-zero 2-bit entries; resolves a rank with
// one sample plus at most period/32 broadword counts.
class RankDirectory {
  public:
    static constexpr std::uint32_t kDefaultPeriod = 512;  // entries per sample

    RankDirectory() = default;
    RankDirectory(const ValueArray& values, std::uint32_t period_entries);

    std::uint64_t rank_nonzero(const ValueArray& values, std::uint64_t pos) const;

    std::uint32_t period() const { return period_; }
    std::span<const std::uint64_t> samples() const { return samples_; }

    static RankDirectory from_samples(std::vector<std::uint64_t> samples, std::uint32_t period);

  private:
    std::uint32_t period_ = kDefaultPeriod;
    std::vector<std::uint64_t> samples_;
};

// Minimal perfect hash function: seed, 2-bit value array over gamma*n
// vertices, sampled rank directory. Immutable and safe for concurrent
// lookups once built.
class Mphf {
  public:
    Mphf() = default;

    static Mphf from_parts(Seed seed, std::uint64_t n, vertex_t m, ValueArray values,
                           std::uint32_t rank_period);

    std::uint64_t lookup(const void* data, std::size_t len) const;
    std::uint64_t lookup(std::string_view key) const { return lookup(key.data(), key.size()); }

    std::uint64_t size() const { return n_; }
    vertex_t vertex_count() const { return m_; }
    Seed seed() const { return seed_; }
    std::uint64_t bit_size() const;

    void serialize(std::vector<std::uint8_t>& out) const;
    static Mphf deserialize(std::span<const std::uint8_t> in, std::size_t* consumed = nullptr);

  private:
    Seed seed_;
    std::uint64_t n_ = 0;
    vertex_t m_ = 3;
    std::uint32_t period_ = RankDirectory::kDefaultPeriod;
    ValueArray values_;
    RankDirectory rank_;
    std::optional<TripartiteEdgeHasher> hasher_;
};

// Generic MWHC function storage: f(x) = (u[h0] + u[h1] + u[h2]) mod sigma.
class StoredFunction {
  public:
    StoredFunction() = default;
    StoredFunction(Seed seed, std::uint64_t n, vertex_t m, std::uint64_t sigma, ValueArray values);

    std::uint64_t evaluate(std::string_view key) const;
    std::uint64_t sigma() const { return sigma_; }
    std::uint64_t size() const { return n_; }
    const ValueArray& values() const { return values_; }

  private:
    Seed seed_;
    std::uint64_t n_ = 0;
    vertex_t m_ = 3;
    std::uint64_t sigma_ = 1;
    ValueArray values_;
    std::optional<TripartiteEdgeHasher> hasher_;
};

// --- assignment -----------------------------------------------------------
//
// All assignment walks edges in reverse substitution order (reverse layer
// order scanning each layer forward, or a reversed peel order) and sets the
// free vertex of each edge. MPHF entries live in {1,2,3} with 3 standing for
// residue 0, so unused vertices stay 0 and the non-zero rank is exactly the
// minimality rank.

ValueArray assign_mphf(PeelOutcome& outcome);
ValueArray assign_mphf(const LayeredPeelResult& peel, vertex_t m);
ValueArray assign_mphf_from_order(std::span<const OrientedEdge> order, vertex_t m);

ValueArray assign_function(PeelOutcome& outcome, std::span<const std::uint64_t> f_values,
                           std::uint64_t sigma);
ValueArray assign_function_from_order(std::span<const OrientedEdge> order, vertex_t m,
                                      std::span<const std::uint64_t> f_values, std::uint64_t sigma);

// --- builders --------------------------------------------------------------

struct BuildOptions {
    double gamma = kDefaultGamma;
    std::optional<std::uint64_t> seed;  // reproducible builds
    std::uint32_t rank_period = RankDirectory::kDefaultPeriod;
    unsigned max_retries = 100;
    std::uint64_t memory_budget = 1ULL << 30;
    std::uint64_t buffer_bytes = 1ULL << 20;
    bool write_manifest = true;
    std::uint64_t inmem_cap_bytes = 0;  // in-memory builds: 0 = uncapped
};

struct BuildReport {
    std::uint64_t n = 0;
    vertex_t m = 3;
    Seed seed;
    unsigned retries = 0;
    std::uint64_t rounds = 0;
    std::vector<std::uint64_t> layer_sizes;
    std::uint64_t peak_temp_bytes = 0;
    IoCounters io;
    double hash_seconds = 0;
    double peel_seconds = 0;
    double assign_seconds = 0;
    double rank_seconds = 0;
    std::uint64_t serialized_bits = 0;
    std::uint64_t rewrite_spills = 0;
    LayerManifest manifest;
};

Mphf build_mphf_external(KeySource& keys, Workspace& ws, const BuildOptions& opts,
                         BuildReport* report = nullptr);
Mphf build_mphf_inmemory(KeySource& keys, const BuildOptions& opts, BuildReport* report = nullptr);

StoredFunction build_function_external(KeySource& keys, std::span<const std::uint64_t> f_values,
                                       std::uint64_t sigma, Workspace& ws,
                                       const BuildOptions& opts, BuildReport* report = nullptr);

}  // namespace emph
