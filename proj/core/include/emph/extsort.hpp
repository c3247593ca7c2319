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

#include <algorithm>
#include <cstring>
#include <numeric>
#include <span>
#include <vector>

#include "emph/common.hpp"
#include "emph/stream.hpp"

namespace emph {

struct SortConfig {
    std::uint64_t bucket_count = 1;           // k
    std::uint64_t buffer_bytes = 1ULL << 20;  // T
};

// Evenly spaced bucket index of a key in [0, domain).
inline std::uint64_t bucket_of(std::uint64_t key, std::uint64_t domain, std::uint64_t k) {
    return static_cast<std::uint64_t>(
        (static_cast<unsigned __int128>(key) * k) / domain);
}

// Fixed-resolution histogram over a key domain. 4096 slots fold exactly onto
// any power-of-two bucket count up to 4096, so per-bucket counts can be
// accumulated while records are first written and reused across retries with
// doubled bucket counts, without extra scans.
class MicroHistogram {
  public:
    static constexpr std::uint64_t kSlots = 4096;

    explicit MicroHistogram(std::uint64_t domain)
        : domain_(domain < 1 ? 1 : domain), counts_(kSlots, 0) {}

    std::uint64_t domain() const { return domain_; }

    void add(std::uint64_t key) {
        if (key >= domain_) throw ContractError("sort key outside declared domain");
        ++counts_[bucket_of(key, domain_, kSlots)];
    }

    std::vector<std::uint64_t> fold(std::uint64_t k) const {
        std::vector<std::uint64_t> out(k, 0);
        std::uint64_t per = kSlots / k;
        for (std::uint64_t s = 0; s < kSlots; ++s) out[s / per] += counts_[s];
        return out;
    }

    std::uint64_t total() const {
        return std::accumulate(counts_.begin(), counts_.end(), std::uint64_t{0});
    }

  private:
    std::uint64_t domain_;
    std::vector<std::uint64_t> counts_;
};

// Chooses the bucket count for a data size S under memory budget M with
// per-bucket buffers of T bytes: the smallest power of two >= 4S/M (expected
// bucket <= M/4), clamped to the buffer feasibility bound M/T. When the clamp
// binds, configurations remain acceptable as long as the expected bucket
// still fits in memory.
std::uint64_t plan_buckets(std::uint64_t data_bytes, std::uint64_t memory_budget,
                           std::uint64_t buffer_bytes);

struct SortStats {
    std::uint64_t bucket_count = 1;
    std::uint64_t records = 0;
    unsigned passes = 0;   // full scans of the region
    unsigned retries = 0;  // bucket-count doublings
    std::uint64_t max_bucket_records = 0;
};

enum class BucketDisposition { kDiscard, kWriteBack };

// Two-step bucketed sort over a fixed-width record region of one stream.
//
// Step one distributes records into k evenly spaced key buckets, in place:
// exact bucket extents are known from the histogram, every region keeps one
// sequential read cursor and one trailing write cursor, and per-bucket
// buffers of T bytes are flushed only into file space already vacated (a
// block about to be overwritten is read into the in-flight pool first, so
// memory in flight never exceeds one buffer per bucket plus slack). Step two
// loads each bucket, sorts it in memory, and hands it to the caller in key
// order. No auxiliary file is ever used.
//
// Ties under the caller's comparator are broken by whole-record bytes, making
// the result a pure function of the record multiset.
template <class KeyFn, class LessFn>
class RecordSorter {
  public:
    RecordSorter(SequentialStream& stream, std::uint64_t base_bytes, std::uint64_t count,
                 std::uint32_t rec_bytes, std::uint64_t key_domain, KeyFn key_of, LessFn less,
                 SortConfig cfg, std::uint64_t memory_budget)
        : stream_(stream),
          base_(base_bytes),
          count_(count),
          rec_(rec_bytes),
          domain_(key_domain),
          key_of_(key_of),
          less_(less),
          cfg_(cfg),
          budget_(memory_budget) {
        if (cfg_.bucket_count == 0 || cfg_.buffer_bytes == 0)
            throw ContractError("invalid sort configuration");
        if (cfg_.bucket_count * cfg_.buffer_bytes > budget_)
            throw ContractError("bucket buffers exceed memory budget");
        dst_ = base_;
    }

    // Distribute into a different region of the same stream instead of in
    // place. The destination must not overlap the source; the source region
    // is left consumed. Costs no extra pass, so callers use it to migrate a
    // list into reclaimed space while sorting it.
    void relocate_output(std::uint64_t dst_base_bytes) {
        std::uint64_t len = count_ * rec_;
        bool overlap = dst_base_bytes < base_ + len && base_ < dst_base_bytes + len;
        if (overlap && dst_base_bytes != base_)
            throw ContractError("relocated sort output overlaps its input");
        dst_ = dst_base_bytes;
    }

    // Full three-pass sort, result written back in place.
    SortStats sort() {
        MicroHistogram micro = scan_histogram();
        return sort_with(micro, [](std::span<std::uint8_t>, std::uint64_t) {
            return BucketDisposition::kWriteBack;
        });
    }

    // Histogram supplied by the producer of the data: two passes.
    template <class BucketFn>
    SortStats sort_with(const MicroHistogram& micro, BucketFn&& per_bucket) {
        if (micro.total() != count_) throw ContractError("histogram does not match record count");
        stats_ = SortStats{};
        std::uint64_t k = cfg_.bucket_count;
        if (k > MicroHistogram::kSlots || MicroHistogram::kSlots % k != 0)
            throw ContractError("bucket count must be a power of two dividing the histogram resolution");
        std::vector<std::uint64_t> counts;
        for (;;) {
            counts = micro.fold(k);
            std::uint64_t worst = counts.empty() ? 0 : *std::max_element(counts.begin(), counts.end());
            if (worst * rec_ <= budget_ || count_ == 0) break;
            if (stats_.retries >= 3 || 2 * k > MicroHistogram::kSlots ||
                2 * k * cfg_.buffer_bytes > budget_)
                throw PlanError("bucket exceeds memory budget and bucket count cannot grow further");
            k *= 2;
            ++stats_.retries;
        }
        stats_.bucket_count = k;
        stats_.records = count_;
        stats_.max_bucket_records =
            counts.empty() ? 0 : *std::max_element(counts.begin(), counts.end());

        std::vector<std::uint64_t> offsets(k + 1, 0);
        for (std::uint64_t b = 0; b < k; ++b) offsets[b + 1] = offsets[b] + counts[b];

        if (count_ > 0) {
            if (dst_ != base_)
                distribute_move(offsets);
            else if (k > 1)
                distribute_inplace(offsets);
        }
        bucket_pass(offsets, per_bucket);
        return stats_;
    }

    SortStats sort_with(const MicroHistogram& micro) {
        return sort_with(micro, [](std::span<std::uint8_t>, std::uint64_t) {
            return BucketDisposition::kWriteBack;
        });
    }

    MicroHistogram scan_histogram() {
        MicroHistogram micro(domain_);
        stream_.begin_read_pass();
        const std::uint8_t* p = stream_.bytes().data() + base_;
        for (std::uint64_t i = 0; i < count_; ++i, p += rec_) micro.add(key_of_(p));
        stream_.count_read(count_ * rec_);
        ++stats_histogram_passes_;
        return micro;
    }

  private:
    std::uint8_t* rec_ptr(std::uint64_t index) {
        return stream_.mutable_bytes().data() + base_ + index * rec_;
    }
    std::uint8_t* dst_ptr(std::uint64_t index) {
        return stream_.mutable_bytes().data() + dst_ + index * rec_;
    }

    // Source and destination regions are disjoint: one sequential read
    // frontier, k buffered sequential region cursors on the destination.
    void distribute_move(const std::vector<std::uint64_t>& offsets) {
        std::uint64_t k = offsets.size() - 1;
        std::uint64_t block_recs = cfg_.buffer_bytes / rec_;
        if (block_recs == 0) block_recs = 1;

        std::vector<std::uint64_t> w(offsets.begin(), offsets.end() - 1);
        std::vector<std::vector<std::uint8_t>> buf(k);
        stream_.begin_region_pass();
        auto flush = [&](std::uint64_t b) {
            stream_.write_at(dst_ + w[b] * rec_, buf[b].data(), buf[b].size());
            w[b] += buf[b].size() / rec_;
            buf[b].clear();
        };
        for (std::uint64_t i = 0; i < count_; ++i) {
            const std::uint8_t* p = rec_ptr(i);
            std::uint64_t b = k == 1 ? 0 : bucket_of(key_of_(p), domain_, k);
            auto& dst = buf[b];
            dst.insert(dst.end(), p, p + rec_);
            if (dst.size() >= block_recs * rec_) flush(b);
        }
        stream_.count_read(count_ * rec_);
        for (std::uint64_t b = 0; b < k; ++b)
            if (!buf[b].empty()) flush(b);
        ++stats_.passes;
    }

    // In-place distribution. Regions are the final bucket extents; each has a
    // read frontier rr and a write cursor w with w <= rr. Records removed from
    // the file ahead of a write live in the pool until classified.
    void distribute_inplace(const std::vector<std::uint64_t>& offsets) {
        std::uint64_t k = offsets.size() - 1;
        std::uint64_t block_recs = cfg_.buffer_bytes / rec_;
        if (block_recs == 0) block_recs = 1;

        std::vector<std::uint64_t> rr(offsets.begin(), offsets.end() - 1);
        std::vector<std::uint64_t> w(offsets.begin(), offsets.end() - 1);
        std::vector<std::vector<std::uint8_t>> buf(k);
        std::vector<std::uint8_t> pool;  // LIFO of displaced records
        pool.reserve((block_recs + 1) * rec_);

        stream_.begin_region_pass();

        auto read_block = [&](std::uint64_t b) {
            std::uint64_t take = std::min<std::uint64_t>(block_recs, offsets[b + 1] - rr[b]);
            std::size_t old = pool.size();
            pool.resize(old + take * rec_);
            std::memcpy(pool.data() + old, rec_ptr(rr[b]), take * rec_);
            stream_.count_read(take * rec_);
            rr[b] += take;
        };

        auto flush = [&](std::uint64_t b) {
            std::uint64_t need = buf[b].size() / rec_;
            while (w[b] + need > rr[b] && rr[b] < offsets[b + 1]) read_block(b);
            stream_.write_at(base_ + w[b] * rec_, buf[b].data(), buf[b].size());
            w[b] += need;
            buf[b].clear();
        };

        auto classify_pool = [&] {
            while (!pool.empty()) {
                std::size_t off = pool.size() - rec_;
                std::uint64_t b = bucket_of(key_of_(pool.data() + off), domain_, k);
                auto& dst = buf[b];
                dst.insert(dst.end(), pool.begin() + static_cast<std::ptrdiff_t>(off), pool.end());
                pool.resize(off);
                if (dst.size() >= block_recs * rec_) flush(b);
            }
        };

        for (;;) {
            classify_pool();
            // Force progress from the region with the most unread content.
            std::uint64_t best = k, best_left = 0;
            for (std::uint64_t b = 0; b < k; ++b) {
                std::uint64_t left = offsets[b + 1] - rr[b];
                if (left > best_left) {
                    best_left = left;
                    best = b;
                }
            }
            if (best == k) break;
            read_block(best);
        }
        for (std::uint64_t b = 0; b < k; ++b)
            if (!buf[b].empty()) flush(b);
        ++stats_.passes;
    }

    template <class BucketFn>
    void bucket_pass(const std::vector<std::uint64_t>& offsets, BucketFn&& per_bucket) {
        std::uint64_t k = offsets.size() - 1;
        stream_.begin_region_pass();
        std::vector<std::uint8_t> mem;
        std::vector<std::uint64_t> order;
        for (std::uint64_t b = 0; b < k; ++b) {
            std::uint64_t n = offsets[b + 1] - offsets[b];
            if (n == 0) continue;
            mem.assign(dst_ptr(offsets[b]), dst_ptr(offsets[b]) + n * rec_);
            stream_.count_read(n * rec_);
            order.resize(n);
            std::iota(order.begin(), order.end(), 0);
            const std::uint8_t* m = mem.data();
            std::uint32_t r = rec_;
            auto full_less = [&](std::uint64_t a, std::uint64_t c) {
                const std::uint8_t* pa = m + a * r;
                const std::uint8_t* pc = m + c * r;
                if (less_(pa, pc)) return true;
                if (less_(pc, pa)) return false;
                return std::memcmp(pa, pc, r) < 0;
            };
            std::sort(order.begin(), order.end(), full_less);
            std::vector<std::uint8_t> sorted(n * rec_);
            for (std::uint64_t i = 0; i < n; ++i)
                std::memcpy(sorted.data() + i * rec_, m + order[i] * r, r);
            auto disp = per_bucket(std::span<std::uint8_t>(sorted.data(), sorted.size()), b);
            if (disp == BucketDisposition::kWriteBack)
                stream_.write_at(dst_ + offsets[b] * rec_, sorted.data(), sorted.size());
        }
        ++stats_.passes;
        stats_.passes += stats_histogram_passes_;
        stats_histogram_passes_ = 0;
    }

    SequentialStream& stream_;
    std::uint64_t base_;
    std::uint64_t dst_ = 0;
    std::uint64_t count_;
    std::uint32_t rec_;
    std::uint64_t domain_;
    KeyFn key_of_;
    LessFn less_;
    SortConfig cfg_;
    std::uint64_t budget_;
    SortStats stats_{};
    unsigned stats_histogram_passes_ = 0;
};

// Plain bucket sort of a whole stream of fixed-width records.
template <class KeyFn, class LessFn>
SortStats bucket_sort(SequentialStream& stream, std::uint64_t count, std::uint32_t rec_bytes,
                      std::uint64_t key_domain, KeyFn key_of, LessFn less, SortConfig cfg,
                      std::uint64_t memory_budget) {
    RecordSorter<KeyFn, LessFn> sorter(stream, 0, count, rec_bytes, key_domain, key_of, less, cfg,
                                       memory_budget);
    return sorter.sort();
}

}  // namespace emph
