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

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cstring>
#include <random>

#include "emph/extsort.hpp"
#include "emph/stream.hpp"
#include "test_util.hpp"

using namespace emph;

namespace {

std::uint64_t key8(const std::uint8_t* r) {
    std::uint64_t v = 0;
    for (unsigned i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(r[i]) << (8 * i);
    return v;
}

bool less8(const std::uint8_t* a, const std::uint8_t* b) { return key8(a) < key8(b); }

SequentialStream fill_random(Workspace& ws, const std::string& name, std::mt19937_64& rng,
                             std::uint64_t count, std::uint64_t domain) {
    auto s = ws.create_stream(name);
    for (std::uint64_t i = 0; i < count; ++i) {
        std::uint64_t v = rng() % domain;
        std::uint8_t rec[8];
        for (unsigned b = 0; b < 8; ++b) rec[b] = static_cast<std::uint8_t>(v >> (8 * b));
        s.append(rec, 8);
    }
    return s;
}

std::vector<std::uint64_t> stream_values(const SequentialStream& s, std::uint64_t count,
                                         std::uint64_t base = 0) {
    std::vector<std::uint64_t> out(count);
    for (std::uint64_t i = 0; i < count; ++i) out[i] = key8(s.bytes().data() + base + 8 * i);
    return out;
}

}  // namespace

TEST_CASE("plan_buckets smallest cases") {
    CHECK(plan_buckets(0, 1 << 22, 1 << 20) == 1);
    // S == M: 4S/M = 4
    CHECK(plan_buckets(64 << 20, 64 << 20, 1 << 20) == 4);
}

TEST_CASE("plan_buckets accepts the paper-scale clamped configuration") {
    // 1 TiB of data, 1 GiB budget, 1 MiB buffers: the clamp binds at 1024
    // and the expected bucket exactly fills memory.
    std::uint64_t k = plan_buckets(1ULL << 40, 1ULL << 30, 1ULL << 20);
    CHECK(k == 1024);
}

TEST_CASE("plan_buckets reports infeasible configurations") {
    CHECK_THROWS_AS(plan_buckets(10ULL << 40, 64ULL << 20, 1ULL << 20), PlanError);
    CHECK_THROWS_AS(plan_buckets(100, 1 << 20, 1 << 20), ContractError);  // M < 2T
}

TEST_CASE("sorted input stays identical") {
    test::ScratchGuard guard("sort-idem");
    Workspace ws(guard.dir);
    auto s = ws.create_stream("data");
    for (std::uint64_t i = 0; i < 5000; ++i) {
        std::uint64_t v = i * 3;
        std::uint8_t rec[8];
        for (unsigned b = 0; b < 8; ++b) rec[b] = static_cast<std::uint8_t>(v >> (8 * b));
        s.append(rec, 8);
    }
    auto before = stream_values(s, 5000);
    SortConfig cfg{16, 1 << 12};
    bucket_sort(s, 5000, 8, 15000, key8, less8, cfg, 1 << 20);
    CHECK(stream_values(s, 5000) == before);
}

TEST_CASE("random records match a comparison-sort oracle byte for byte") {
    test::ScratchGuard guard("sort-oracle");
    Workspace ws(guard.dir);
    std::mt19937_64 rng(5);
    const std::uint64_t n = 1000000;
    const std::uint64_t domain = 1ULL << 40;
    auto s = fill_random(ws, "data", rng, n, domain);
    auto oracle = stream_values(s, n);
    std::sort(oracle.begin(), oracle.end());

    SortConfig cfg{64, 1 << 14};
    SortStats st = bucket_sort(s, n, 8, domain, key8, less8, cfg, 16ULL << 20);
    CHECK(st.passes == 3);
    CHECK(st.records == n);
    CHECK(stream_values(s, n) == oracle);
    CHECK(s.io().random_seeks == 0);
    CHECK(s.io().rewinds == 3);
}

TEST_CASE("uniform keys keep buckets balanced") {
    test::ScratchGuard guard("sort-balance");
    Workspace ws(guard.dir);
    std::mt19937_64 rng(6);
    const std::uint64_t n = 200000;
    const std::uint64_t domain = 1ULL << 32;
    auto s = fill_random(ws, "data", rng, n, domain);
    SortConfig cfg{64, 1 << 14};
    SortStats st = bucket_sort(s, n, 8, domain, key8, less8, cfg, 16ULL << 20);
    CHECK(st.bucket_count == 64);
    CHECK(st.max_bucket_records <= 2 * (n / 64));  // max load <= 2x mean load
}

TEST_CASE("no auxiliary file appears during an in-place sort") {
    test::ScratchGuard guard("sort-inplace");
    Workspace ws(guard.dir);
    std::mt19937_64 rng(7);
    auto s = fill_random(ws, "data", rng, 50000, 1ULL << 32);
    std::uint64_t files_before = 0, files_after = 0;
    for ([[maybe_unused]] auto& p : std::filesystem::directory_iterator(guard.dir)) ++files_before;
    std::uint64_t size_before = std::filesystem::file_size(s.path());
    SortConfig cfg{32, 1 << 13};
    bucket_sort(s, 50000, 8, 1ULL << 32, key8, less8, cfg, 8ULL << 20);
    for ([[maybe_unused]] auto& p : std::filesystem::directory_iterator(guard.dir)) ++files_after;
    CHECK(files_before == files_after);
    CHECK(std::filesystem::file_size(s.path()) == size_before);
}

TEST_CASE("histogram supplied by the producer saves the counting scan") {
    test::ScratchGuard guard("sort-hist");
    Workspace ws(guard.dir);
    std::mt19937_64 rng(8);
    const std::uint64_t n = 100000;
    const std::uint64_t domain = 1ULL << 30;
    auto s = ws.create_stream("data");
    MicroHistogram hist(domain);
    for (std::uint64_t i = 0; i < n; ++i) {
        std::uint64_t v = rng() % domain;
        hist.add(v);
        std::uint8_t rec[8];
        for (unsigned b = 0; b < 8; ++b) rec[b] = static_cast<std::uint8_t>(v >> (8 * b));
        s.append(rec, 8);
    }
    auto oracle = stream_values(s, n);
    std::sort(oracle.begin(), oracle.end());
    SortConfig cfg{32, 1 << 13};
    RecordSorter<decltype(&key8), decltype(&less8)> sorter(s, 0, n, 8, domain, key8, less8, cfg,
                                                           8ULL << 20);
    SortStats st = sorter.sort_with(hist);
    CHECK(st.passes == 2);
    CHECK(stream_values(s, n) == oracle);
}

TEST_CASE("relocated output migrates the data while sorting") {
    test::ScratchGuard guard("sort-move");
    Workspace ws(guard.dir);
    std::mt19937_64 rng(9);
    const std::uint64_t n = 20000;
    const std::uint64_t domain = 1ULL << 24;
    auto s = fill_random(ws, "data", rng, n, domain);
    auto oracle = stream_values(s, n);
    std::sort(oracle.begin(), oracle.end());
    // destination region after the source
    s.extend(8 * n);
    SortConfig cfg{16, 1 << 12};
    RecordSorter<decltype(&key8), decltype(&less8)> sorter(s, 0, n, 8, domain, key8, less8, cfg,
                                                           8ULL << 20);
    sorter.relocate_output(8 * n);
    sorter.sort();
    CHECK(stream_values(s, n, 8 * n) == oracle);
}

TEST_CASE("an over-budget bucket retries with doubled bucket count") {
    test::ScratchGuard guard("sort-retry");
    Workspace ws(guard.dir);
    std::mt19937_64 rng(10);
    const std::uint64_t n = 4096;
    const std::uint64_t domain = 1ULL << 20;
    // all keys in the lower half of the domain: k = 2 puts everything in one bucket
    auto s = ws.create_stream("data");
    for (std::uint64_t i = 0; i < n; ++i) {
        std::uint64_t v = rng() % (domain / 2);
        std::uint8_t rec[8];
        for (unsigned b = 0; b < 8; ++b) rec[b] = static_cast<std::uint8_t>(v >> (8 * b));
        s.append(rec, 8);
    }
    auto oracle = stream_values(s, n);
    std::sort(oracle.begin(), oracle.end());
    SortConfig cfg{2, 256};
    // budget below n*8 so the single full bucket cannot be loaded
    RecordSorter<decltype(&key8), decltype(&less8)> sorter(s, 0, n, 8, domain, key8, less8, cfg,
                                                           6 * n);
    SortStats st = sorter.sort();
    CHECK(st.retries >= 1);
    CHECK(st.bucket_count >= 4);
    CHECK(stream_values(s, n) == oracle);
}

TEST_CASE("keys outside the declared domain are rejected") {
    test::ScratchGuard guard("sort-domain");
    Workspace ws(guard.dir);
    std::mt19937_64 rng(11);
    auto s = fill_random(ws, "data", rng, 100, 1000);
    SortConfig cfg{4, 256};
    CHECK_THROWS_AS(bucket_sort(s, 100, 8, 10, key8, less8, cfg, 1 << 20), ContractError);
}

TEST_CASE("random seek instrumentation stays untouched by scan workloads") {
    test::ScratchGuard guard("seek");
    Workspace ws(guard.dir);
    auto s = ws.create_stream("x");
    std::uint8_t rec[8] = {};
    s.append(rec, 8);
    CHECK(ws.io_totals().random_seeks == 0);
    s.note_random_seek();
    CHECK(ws.io_totals().random_seeks == 1);
}
