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

// Acceptance suite: one pass/fail line per criterion, non-zero exit if any
// criterion fails. Heavyweight artifacts (the million-key structures) are
// built once and shared by the criteria that inspect them.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <random>
#include <set>
#include <vector>

#include "emph/hem.hpp"
#include "emph/mphf.hpp"
#include "emph/sweep.hpp"
#include "test_util.hpp"

using namespace emph;

namespace {

int g_failures = 0;

void report(int criterion, bool ok, const std::string& what) {
    std::printf("%s criterion %2d: %s\n", ok ? "PASS" : "FAIL", criterion, what.c_str());
    std::fflush(stdout);
    if (!ok) ++g_failures;
}

std::vector<OrientedEdge> hash_keys(KeySource& keys, Seed seed, vertex_t m) {
    TripartiteEdgeHasher hasher(seed, m);
    std::vector<OrientedEdge> edges;
    edges.reserve(keys.count());
    keys.reset();
    while (auto k = keys.next()) edges.push_back(hasher.edge_of(*k));
    return edges;
}

// 1. Peelability above the threshold: at gamma = 1.23, at least 95 of 100
//    key sets peel on their first seed, in under five minutes.
void criterion_1() {
    auto t0 = std::chrono::steady_clock::now();
    std::mt19937_64 seed_rng(20260808);
    int succeeded = 0;
    for (int trial = 0; trial < 100; ++trial) {
        SyntheticKeys keys(100000, 1000 + trial);
        vertex_t m = vertex_count_for(keys.count(), 1.23);
        auto edges = hash_keys(keys, Seed{seed_rng()}, m);
        if (peel_in_memory(edges, m).status == PeelStatus::kPeeled) ++succeeded;
    }
    double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    report(1, succeeded >= 95 && secs < 300,
           "first-seed peel success " + std::to_string(succeeded) + "/100 at n=1e5, gamma=1.23, " +
               std::to_string(secs) + "s");
}

// 2. Below the threshold nothing peels.
void criterion_2() {
    std::mt19937_64 seed_rng(777);
    int succeeded = 0;
    for (int trial = 0; trial < 20; ++trial) {
        SyntheticKeys keys(100000, 5000 + trial);
        vertex_t m = vertex_count_for(keys.count(), 1.10);
        auto edges = hash_keys(keys, Seed{seed_rng()}, m);
        if (peel_in_memory(edges, m).status == PeelStatus::kPeeled) ++succeeded;
    }
    report(2, succeeded == 0,
           "gamma=1.10 peeled " + std::to_string(succeeded) + "/20 instances (expected 0)");
}

struct BigBuild {
    Mphf mphf;
    BuildReport report;
    std::uint64_t key_seed = 314159;
    std::uint64_t n = 1000000;
};

// One million-key external build, shared by criteria 3, 5, 7 and 8.
BigBuild build_big(const std::filesystem::path& dir) {
    BigBuild big;
    SyntheticKeys keys(big.n, big.key_seed);
    Workspace ws(dir);
    BuildOptions opts;
    opts.seed = 1;  // fixed for reproducibility; criterion 1 covers seed luck
    opts.write_manifest = true;
    big.mphf = build_mphf_external(keys, ws, opts, &big.report);
    return big;
}

bool bijective(const Mphf& f, KeySource& keys) {
    std::vector<bool> hit(f.size(), false);
    keys.reset();
    while (auto k = keys.next()) {
        std::uint64_t idx = f.lookup(*k);
        if (idx >= f.size() || hit[idx]) return false;
        hit[idx] = true;
    }
    return true;
}

// 3. Exhaustive bijectivity at n in {1, 2, 1e3, 1e6}.
void criterion_3(const BigBuild& big) {
    bool ok = true;
    std::string detail;
    for (std::uint64_t n : {1ULL, 2ULL, 1000ULL}) {
        test::ScratchGuard guard("acc3");
        Workspace ws(guard.dir);
        SyntheticKeys keys(n, 42 + n);
        BuildOptions opts;
        opts.seed = 7;
        opts.write_manifest = false;
        Mphf f = build_mphf_external(keys, ws, opts);
        if (!bijective(f, keys)) {
            ok = false;
            detail += " n=" + std::to_string(n) + " not bijective;";
        }
    }
    SyntheticKeys keys(big.n, big.key_seed);
    if (!bijective(big.mphf, keys)) {
        ok = false;
        detail += " n=1e6 not bijective;";
    }
    report(3, ok, "mphf lookups are permutations at n in {1, 2, 1e3, 1e6}" + detail);
}

// 4. External and in-memory peeling agree on 50 random instances.
void criterion_4() {
    std::mt19937_64 rng(4242);
    bool ok = true;
    std::string detail;
    for (int trial = 0; trial < 50 && ok; ++trial) {
        auto [edges, m] = test::random_instance(rng, 10000, 1.23);
        test::ScratchGuard guard("acc4");
        Workspace ws(guard.dir);
        PeelConfig cfg;
        cfg.memory_budget = 32ULL << 20;
        cfg.buffer_bytes = 1 << 15;
        cfg.write_manifest_json = false;
        PeelOutcome out = peel_external(ws, edges, m, cfg);
        PeelResult ref = peel_in_memory(edges, m);
        if (out.manifest.status != ref.status) {
            ok = false;
            detail = "status mismatch at trial " + std::to_string(trial);
            break;
        }
        std::vector<std::vector<OrientedEdge>> layers;
        std::vector<OrientedEdge> flat;
        for (const auto& l : out.manifest.layers) {
            auto& layer = layers.emplace_back();
            const auto* base =
                out.edges.bytes().data() + l.offset_records * out.layout.record_bytes;
            for (std::uint64_t i = 0; i < l.count; ++i) {
                layer.push_back(out.layout.decode(base + i * out.layout.record_bytes));
                flat.push_back(layer.back());
            }
        }
        std::vector<OrientedEdge> ref_peeled = ref.order;
        if (test::canonical_multiset(flat) != test::canonical_multiset(ref_peeled)) {
            ok = false;
            detail = "peeled edge sets differ at trial " + std::to_string(trial);
            break;
        }
        if (!test::triangular_layers(layers)) {
            ok = false;
            detail = "layers not triangular at trial " + std::to_string(trial);
            break;
        }
    }
    report(4, ok, "external and in-memory peeling agree on 50 instances at n=1e4 " + detail);
}

// 5. Serialized space at one million keys.
void criterion_5(const BigBuild& big) {
    std::vector<std::uint8_t> blob;
    big.mphf.serialize(blob);
    double bpk = 8.0 * static_cast<double>(blob.size()) / static_cast<double>(big.n);
    report(5, bpk >= 2.46 && bpk <= 2.80,
           "serialized mphf is " + std::to_string(bpk) + " bits/key (bounds [2.46, 2.80])");
}

// 6. HEM overhead direction and size on the same keys.
void criterion_6(const BigBuild& big) {
    test::ScratchGuard guard("acc6");
    Workspace ws(guard.dir);
    SyntheticKeys keys(big.n, big.key_seed);
    HemOptions opts;
    opts.seed = 5;
    Hem hem = build_hem(keys, ws, opts);
    double hem_bpk = static_cast<double>(hem.bit_size()) / static_cast<double>(big.n);
    double mwhc_bpk =
        static_cast<double>(big.mphf.bit_size()) / static_cast<double>(big.n);
    double overhead = (hem_bpk - mwhc_bpk) / mwhc_bpk;
    report(6, overhead >= 0.10 && overhead <= 0.35,
           "hem " + std::to_string(hem_bpk) + " vs mwhc " + std::to_string(mwhc_bpk) +
               " bits/key: +" + std::to_string(100 * overhead) + "% (bounds [10%, 35%])");
}

// 7. Per-round compression bounds and the peak temp-disk envelope.
void criterion_7(const BigBuild& big) {
    const auto& manifest = big.report.manifest;
    bool ok = true;
    std::string detail;
    double gamma_n = 1.23 * static_cast<double>(big.n);
    for (std::size_t i = 0; i < manifest.e_streams.size(); ++i) {
        const auto& s = manifest.e_streams[i];
        // m rounds gamma*n up to a multiple of three, so 2m is the realized
        // form of the 2*gamma*n gap-bit bound.
        if (static_cast<double>(s.bits.gamma_v0) > 2.0 * static_cast<double>(manifest.m)) {
            ok = false;
            detail += " round " + std::to_string(i) + " gamma bits over 2*gamma*n;";
        }
        if (s.bits.unary_degree != 3 * s.live_edges ||
            s.bits.unary_degree > 3 * big.n) {
            ok = false;
            detail += " round " + std::to_string(i) + " unary bits off;";
        }
    }
    double bound_bits =
        1.2 * (5.46 + 11.46 * std::ceil(std::log2(gamma_n))) * static_cast<double>(big.n);
    double peak_bits = 8.0 * static_cast<double>(big.report.peak_temp_bytes);
    if (peak_bits > bound_bits) {
        ok = false;
        detail += " peak " + std::to_string(peak_bits) + " bits over bound " +
                  std::to_string(bound_bits) + ";";
    }
    report(7, ok,
           "per-round gamma <= 2*gamma*n, unary = 3*n_i, peak temp " +
               std::to_string(peak_bits / static_cast<double>(big.n)) + " bits/key within 1.2x(5.46 + 11.46 ceil(log gamma n))" +
               detail);
}

// 8. I/O discipline of the instrumented million-key build.
void criterion_8(const BigBuild& big) {
    const auto& io = big.report.io;
    std::uint64_t rounds = big.report.rounds;
    bool ok = io.random_seeks == 0 && io.rewinds <= 6 * rounds + 10 && rounds <= 100;
    report(8, ok,
           "random seeks " + std::to_string(io.random_seeks) + ", rewinds " +
               std::to_string(io.rewinds) + " <= " + std::to_string(6 * rounds + 10) +
               ", rounds " + std::to_string(rounds) + " <= 100");
}

// 9. Codec and rank micro-oracles.
void criterion_9() {
    bool ok = true;
    std::string detail;
    BitWriter w;
    for (std::uint64_t j = 1; j <= (1u << 16); ++j) {
        std::uint64_t before = w.bits_written();
        w.put_gamma(j);
        unsigned len = static_cast<unsigned>(w.bits_written() - before);
        unsigned expect =
            2 * static_cast<unsigned>(std::floor(std::log2(static_cast<double>(j)))) + 1;
        if (len != expect) {
            ok = false;
            detail = " gamma length wrong at j=" + std::to_string(j);
            break;
        }
    }
    if (ok) {
        w.align_to_byte();
        std::vector<std::uint8_t> bytes(w.takeable_bytes());
        std::copy(w.take_ptr(), w.take_ptr() + bytes.size(), bytes.begin());
        BitReader r(bytes.data(), 8 * bytes.size());
        for (std::uint64_t j = 1; j <= (1u << 16); ++j) {
            if (r.get_gamma() != j) {
                ok = false;
                detail = " gamma round-trip wrong at j=" + std::to_string(j);
                break;
            }
        }
    }
    std::mt19937_64 rng(99);
    for (int i = 0; i < 1000000 && ok; ++i) {
        std::uint64_t word = rng();
        if (i % 4 == 0) word &= rng();
        std::uint32_t naive = 0;
        for (unsigned p = 0; p < 32; ++p)
            if ((word >> (2 * p)) & 3) ++naive;
        if (rank_nonzero_pairs(word) != naive) {
            ok = false;
            detail = " broadword rank mismatch";
        }
    }
    report(9, ok, "exhaustive gamma round-trip to 2^16 and broadword rank on 1e6 words" + detail);
}

// 10. Generic function storage reproduces f exactly.
void criterion_10() {
    std::mt19937_64 rng(1010);
    const std::uint64_t n = 10000, sigma = 16;
    std::vector<std::uint64_t> f_values(n);
    for (auto& v : f_values) v = rng() % sigma;
    test::ScratchGuard guard("acc10");
    Workspace ws(guard.dir);
    SyntheticKeys keys(n, 161);
    BuildOptions opts;
    opts.seed = 3;
    opts.write_manifest = false;
    StoredFunction f = build_function_external(keys, f_values, sigma, ws, opts);
    keys.reset();
    std::uint64_t i = 0;
    bool ok = true;
    while (auto k = keys.next())
        if (f.evaluate(*k) != f_values[i++]) {
            ok = false;
            break;
        }
    report(10, ok, "stored function reproduces a random f: [1e4] -> [16] exactly");
}

}  // namespace

int main() {
    std::printf("acceptance: external-memory hypergraph peeling and perfect hashing\n");
    auto t0 = std::chrono::steady_clock::now();

    criterion_1();
    criterion_2();

    test::ScratchGuard big_guard("acc-big");
    BigBuild big = build_big(big_guard.dir);

    criterion_3(big);
    criterion_4();
    criterion_5(big);
    criterion_6(big);
    criterion_7(big);
    criterion_8(big);
    criterion_9();
    criterion_10();

    double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::printf("acceptance: %d of 10 criteria failed, %.1fs total\n", g_failures, secs);
    return g_failures == 0 ? 0 : 1;
}
