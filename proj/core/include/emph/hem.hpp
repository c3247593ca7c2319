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

#include "emph/hashing.hpp"
#include "emph/keys.hpp"
#include "emph/mphf.hpp"
#include "emph/stream.hpp"

namespace emph {

struct HemOptions {
    double gamma = kDefaultGamma;           // per-bucket sparsity
    std::uint64_t bucket_target = 1024;     // average keys per bucket
    std::optional<std::uint64_t> seed;
    unsigned max_signature_retries = 8;     // reseeds on signature collision
    unsigned max_bucket_retries = 100;
    std::uint32_t rank_period = RankDirectory::kDefaultPeriod;
    std::uint64_t memory_budget = 1ULL << 30;
    std::uint64_t buffer_bytes = 1ULL << 20;
};

// Bucketed external-memory MPHF: 96-bit signatures are sorted and split by
// their top b bits; every bucket gets an independent in-memory MPHF over the
// residual signature bits, and a first-level offset index routes lookups.
// The bucket blob concatenates the buckets' full serialized forms, so the
// offset index and per-bucket headers are exactly the structure's overhead
// against a monolithic function.
class Hem {
  public:
    Hem() = default;

    std::uint64_t lookup(const void* data, std::size_t len) const;
    std::uint64_t lookup(std::string_view key) const { return lookup(key.data(), key.size()); }

    std::uint64_t size() const { return n_; }
    unsigned bucket_bits() const { return b_; }
    std::uint64_t bucket_count() const { return 1ULL << b_; }
    Seed seed() const { return seed_; }

    // Serialized size: header, offset index (2^b + 1 pairs of cumulative key
    // count and cumulative blob bit offset), bucket blob.
    std::uint64_t bit_size() const;
    std::uint64_t index_bits() const { return 128 * (bucket_count() + 1); }

    void serialize(std::vector<std::uint8_t>& out) const;
    static Hem deserialize(std::span<const std::uint8_t> in);

    struct BuildStats {
        unsigned signature_retries = 0;
        std::uint64_t bucket_retries = 0;
        std::uint64_t max_bucket = 0;
    };

    friend Hem build_hem(KeySource& keys, Workspace& ws, const HemOptions& opts,
                         BuildStats* stats);

  private:
    struct OffsetEntry {
        std::uint64_t keys = 0;  // cumulative key count
        std::uint64_t bits = 0;  // cumulative blob offset in bits
    };

    void load_buckets();

    Seed seed_;
    std::uint64_t n_ = 0;
    unsigned b_ = 0;
    std::vector<OffsetEntry> offsets_;  // 2^b + 1 entries
    std::vector<std::uint8_t> blob_;
    std::vector<Mphf> buckets_;  // decoded views of the blob
};

Hem build_hem(KeySource& keys, Workspace& ws, const HemOptions& opts,
              Hem::BuildStats* stats = nullptr);

}  // namespace emph
