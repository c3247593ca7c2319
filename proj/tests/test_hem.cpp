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

#include <set>
#include <vector>

#include "emph/hem.hpp"
#include "test_util.hpp"

using namespace emph;

namespace {

HemOptions fast_hem(std::uint64_t seed) {
    HemOptions o;
    o.seed = seed;
    o.memory_budget = 8ULL << 20;
    o.buffer_bytes = 1ULL << 14;
    return o;
}

BuildOptions fast_mwhc(std::uint64_t seed) {
    BuildOptions o;
    o.seed = seed;
    o.memory_budget = 8ULL << 20;
    o.buffer_bytes = 1ULL << 14;
    o.write_manifest = false;
    return o;
}

}  // namespace

TEST_CASE("small key sets degenerate to a single bucket and stay bijective") {
    test::ScratchGuard guard("hem-one");
    Workspace ws(guard.dir);
    SyntheticKeys keys(500, 12);
    Hem h = build_hem(keys, ws, fast_hem(7));
    CHECK(h.bucket_bits() == 0);
    CHECK(h.bucket_count() == 1);
    std::set<std::uint64_t> seen;
    keys.reset();
    while (auto k = keys.next()) seen.insert(h.lookup(*k));
    CHECK(seen.size() == 500);
    CHECK(*seen.rbegin() == 499);
}

TEST_CASE("global lookup is a permutation over many buckets") {
    test::ScratchGuard guard("hem-big");
    Workspace ws(guard.dir);
    const std::uint64_t n = 50000;
    SyntheticKeys keys(n, 13);
    Hem h = build_hem(keys, ws, fast_hem(8));
    CHECK(h.bucket_count() >= 32);
    std::vector<bool> hit(n, false);
    keys.reset();
    while (auto k = keys.next()) {
        std::uint64_t idx = h.lookup(*k);
        REQUIRE(idx < n);
        CHECK(!hit[idx]);
        hit[idx] = true;
    }
    CHECK(h.lookup("a foreign key") < n);  // no trap on foreign keys
}

TEST_CASE("serialization round-trips and preserves lookups") {
    test::ScratchGuard guard("hem-ser");
    Workspace ws(guard.dir);
    SyntheticKeys keys(20000, 17);
    Hem h = build_hem(keys, ws, fast_hem(9));
    std::vector<std::uint8_t> blob;
    h.serialize(blob);
    CHECK(blob.size() * 8 == h.bit_size());
    Hem g = Hem::deserialize(blob);
    keys.reset();
    while (auto k = keys.next()) CHECK(h.lookup(*k) == g.lookup(*k));
    blob[1] = 'X';
    CHECK_THROWS_AS(Hem::deserialize(blob), FormatError);
}

TEST_CASE("offset index overhead is an arithmetic identity") {
    test::ScratchGuard guard("hem-idx");
    Workspace ws(guard.dir);
    SyntheticKeys keys(30000, 21);
    Hem h = build_hem(keys, ws, fast_hem(10));
    CHECK(h.index_bits() == 128 * (h.bucket_count() + 1));
    // header + index + blob accounts for the whole serialized size
    std::vector<std::uint8_t> blob;
    h.serialize(blob);
    CHECK(8 * blob.size() == h.bit_size());
}

TEST_CASE("hem costs measurably more space than the monolithic function") {
    test::ScratchGuard guard("hem-space");
    Workspace ws(guard.dir);
    const std::uint64_t n = 100000;
    SyntheticKeys keys(n, 23);
    Hem h = build_hem(keys, ws, fast_hem(11));
    Mphf f = build_mphf_external(keys, ws, fast_mwhc(11));
    double hem_bpk = static_cast<double>(h.bit_size()) / n;
    double mwhc_bpk = static_cast<double>(f.bit_size()) / n;
    CHECK(hem_bpk > mwhc_bpk);
    double overhead = (hem_bpk - mwhc_bpk) / mwhc_bpk;
    CHECK(overhead > 0.05);
    CHECK(overhead < 0.50);
}

TEST_CASE("duplicate keys surface as persistent signature collisions") {
    test::ScratchGuard guard("hem-dup");
    Workspace ws(guard.dir);
    auto path = guard.dir / "dup.txt";
    {
        std::string all;
        for (int i = 0; i < 2000; ++i) all += "key-" + std::to_string(i) + "\n";
        all += "key-55\n";
        MappedFile f = MappedFile::create(path, all.size());
        std::copy(all.begin(), all.end(), f.data());
    }
    LinesKeyFile keys(path);
    HemOptions o = fast_hem(3);
    o.max_signature_retries = 4;
    CHECK_THROWS_WITH_AS(build_hem(keys, ws, o), doctest::Contains("duplicate"), BuildError);
}

TEST_CASE("corrupt blobs never escape the format guards") {
    test::ScratchGuard guard("hem-fuzz");
    Workspace ws(guard.dir);
    SyntheticKeys keys(4000, 37);
    Hem h = build_hem(keys, ws, fast_hem(14));
    std::vector<std::uint8_t> blob;
    h.serialize(blob);
    std::mt19937_64 rng(4096);
    for (int trial = 0; trial < 400; ++trial) {
        std::vector<std::uint8_t> bad = blob;
        if (trial % 2 == 0) {
            bad.resize(rng() % bad.size());  // truncation
        } else {
            bad[rng() % bad.size()] ^= static_cast<std::uint8_t>(1 + rng() % 255);
        }
        try {
            Hem g = Hem::deserialize(bad);
            // A mutation may survive the guards; lookups must still be safe
            // to call, though their results mean nothing.
            keys.reset();
            auto k = keys.next();
            volatile std::uint64_t sink = g.lookup(*k);
            (void)sink;
        } catch (const Error&) {
            // rejected, fine
        }
    }
}

TEST_CASE("hem lookups are pure") {
    test::ScratchGuard guard("hem-pure");
    Workspace ws(guard.dir);
    SyntheticKeys keys(3000, 29);
    Hem h = build_hem(keys, ws, fast_hem(12));
    keys.reset();
    auto k = keys.next();
    std::uint64_t first = h.lookup(*k);
    for (int i = 0; i < 100; ++i) CHECK(h.lookup(*k) == first);
}
