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

// Command-line front end: build, lookup, verify, bench and stats over key
// files. Exit codes: 0 success, 1 usage, 2 build failure, 3 verification
// failure, 4 I/O failure.

#include <chrono>
#include <cstdlib>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "emph/hem.hpp"
#include "emph/keys.hpp"
#include "emph/mphf.hpp"

namespace {

using namespace emph;
using nlohmann::json;

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitBuild = 2;
constexpr int kExitVerify = 3;
constexpr int kExitIo = 4;

// Either structure kind behind one lookup surface; the file magic decides.
struct Structure {
    std::optional<Mphf> mphf;
    std::optional<Hem> hem;

    std::uint64_t lookup(std::string_view key) const {
        return mphf ? mphf->lookup(key) : hem->lookup(key);
    }
    std::uint64_t size() const { return mphf ? mphf->size() : hem->size(); }
    std::uint64_t bit_size() const { return mphf ? mphf->bit_size() : hem->bit_size(); }
    const char* kind() const { return mphf ? "mwhc" : "hem"; }
};

std::vector<std::uint8_t> read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path + "'");
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

Structure load_structure(const std::string& path) {
    auto bytes = read_file(path);
    Structure s;
    if (bytes.size() >= 2 && bytes[0] == 'E' && bytes[1] == 'M') {
        s.mphf = Mphf::deserialize(bytes);
    } else if (bytes.size() >= 2 && bytes[0] == 'E' && bytes[1] == 'H') {
        s.hem = Hem::deserialize(bytes);
    } else {
        throw FormatError("'" + path + "' is not a recognized structure file");
    }
    return s;
}

void write_file(const std::string& path, const std::vector<std::uint8_t>& bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write '" + path + "'");
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("short write to '" + path + "'");
}

struct BuildCli {
    std::string input;
    std::string format = "lines";
    std::string output;
    std::string algorithm = "mwhc-external";
    double gamma = kDefaultGamma;
    std::uint64_t budget = 1ULL << 30;
    std::uint64_t buffer_bytes = 1ULL << 20;
    std::string workspace;
    std::optional<std::uint64_t> seed;
    std::uint32_t rank_period = RankDirectory::kDefaultPeriod;
    std::string stats_out;
};

json io_json(const IoCounters& io) {
    return {{"read_bytes", io.read_bytes},
            {"write_bytes", io.write_bytes},
            {"rewinds", io.rewinds},
            {"random_seeks", io.random_seeks}};
}

int cmd_build(const BuildCli& cli) {
    if (cli.budget < (16ULL << 20)) {
        std::cerr << "error: memory budget must be at least 16 MiB\n";
        return kExitUsage;
    }
    if (cli.gamma <= kPeelThreshold)
        std::cerr << "warning: gamma " << cli.gamma << " is at or below the peelability threshold "
                  << kPeelThreshold << "; construction is expected to fail\n";

    auto keys = open_key_file(cli.input, cli.format);
    // Precedence: --workspace flag, EMPH_WORKSPACE, then <output>.work.
    // An explicitly chosen workspace is kept after the build (it holds the
    // manifest diagnostics); the implicit default is cleaned up.
    std::filesystem::path ws_dir;
    bool keep_workspace = true;
    if (!cli.workspace.empty()) {
        ws_dir = cli.workspace;
    } else if (const char* env = std::getenv("EMPH_WORKSPACE"); env && *env) {
        ws_dir = env;
    } else {
        ws_dir = cli.output + ".work";
        keep_workspace = false;
    }

    json stats;
    stats["algorithm"] = cli.algorithm;
    std::vector<std::uint8_t> blob;
    auto t0 = std::chrono::steady_clock::now();
    double serialize_s = 0;

    if (cli.algorithm == "hem") {
        Workspace ws(ws_dir, keep_workspace);
        HemOptions opts;
        opts.gamma = cli.gamma;
        opts.seed = cli.seed;
        opts.rank_period = cli.rank_period;
        opts.memory_budget = cli.budget;
        opts.buffer_bytes = cli.buffer_bytes;
        Hem::BuildStats hs;
        Hem h = build_hem(*keys, ws, opts, &hs);
        auto ts = std::chrono::steady_clock::now();
        h.serialize(blob);
        serialize_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - ts).count();
        stats["n"] = h.size();
        stats["bucket_bits"] = h.bucket_bits();
        stats["seed"] = h.seed().value;
        stats["retries"] = hs.signature_retries + hs.bucket_retries;
        stats["peak_temp_bytes"] = ws.peak_bytes();
        stats["io"] = io_json(ws.io_totals());
    } else if (cli.algorithm == "mwhc-external" || cli.algorithm == "mwhc-inmemory") {
        BuildOptions opts;
        opts.gamma = cli.gamma;
        opts.seed = cli.seed;
        opts.rank_period = cli.rank_period;
        opts.memory_budget = cli.budget;
        opts.buffer_bytes = cli.buffer_bytes;
        BuildReport report;
        Mphf f;
        if (cli.algorithm == "mwhc-external") {
            Workspace ws(ws_dir, keep_workspace);
            f = build_mphf_external(*keys, ws, opts, &report);
        } else {
            f = build_mphf_inmemory(*keys, opts, &report);
        }
        auto ts = std::chrono::steady_clock::now();
        f.serialize(blob);
        serialize_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - ts).count();
        stats["n"] = report.n;
        stats["m"] = report.m;
        stats["seed"] = report.seed.value;
        stats["retries"] = report.retries;
        stats["rounds"] = report.rounds;
        stats["layers"] = report.layer_sizes;
        stats["peak_temp_bytes"] = report.peak_temp_bytes;
        stats["io"] = io_json(report.io);
        stats["rewrite_spills"] = report.rewrite_spills;
        stats["phase_seconds"] = {{"hash", report.hash_seconds},
                                  {"peel", report.peel_seconds},
                                  {"assign", report.assign_seconds},
                                  {"rank", report.rank_seconds}};
    } else {
        std::cerr << "error: unknown algorithm '" << cli.algorithm << "'\n";
        return kExitUsage;
    }

    write_file(cli.output, blob);
    double total_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    stats["phase_seconds"]["serialize"] = serialize_s;
    stats["wall_seconds"] = total_s;
    stats["output_bytes"] = blob.size();
    std::uint64_t n = stats["n"];
    stats["bits_per_key"] = n ? 8.0 * static_cast<double>(blob.size()) / static_cast<double>(n) : 0.0;

    std::string line = stats.dump();
    if (cli.stats_out.empty()) {
        std::cout << line << '\n';
    } else {
        std::ofstream out(cli.stats_out, std::ios::app);
        if (!out) throw IoError("cannot write stats to '" + cli.stats_out + "'");
        out << line << '\n';
    }
    return kExitOk;
}

int cmd_lookup(const std::string& structure, const std::string& keys_path,
               const std::string& format) {
    Structure s = load_structure(structure);
    auto keys = open_key_file(keys_path, format);
    std::string out;
    while (auto k = keys->next()) {
        out += std::to_string(s.lookup(*k));
        out += '\n';
        if (out.size() > (1u << 16)) {
            std::fwrite(out.data(), 1, out.size(), stdout);
            out.clear();
        }
    }
    std::fwrite(out.data(), 1, out.size(), stdout);
    return kExitOk;
}

int cmd_verify(const std::string& structure, const std::string& keys_path,
               const std::string& format) {
    Structure s = load_structure(structure);
    auto keys = open_key_file(keys_path, format);
    std::uint64_t n = keys->count();
    if (n != s.size()) {
        std::cerr << "verify: structure covers " << s.size() << " keys, file has " << n << "\n";
        return kExitVerify;
    }
    std::vector<bool> hit(n, false);
    keys->reset();
    std::uint64_t pos = 0;
    while (auto k = keys->next()) {
        std::uint64_t idx = s.lookup(*k);
        if (idx >= n || hit[idx]) {
            std::cerr << "verify: key #" << pos << " maps to " << idx
                      << (idx >= n ? " (out of range)" : " (collision)") << "\n";
            return kExitVerify;
        }
        hit[idx] = true;
        ++pos;
    }
    std::cout << "verify: ok, " << n << " keys map bijectively onto [0, " << n << ")\n";
    return kExitOk;
}

// Latency measured over batches of queries, repeated; per-structure mean and
// relative standard deviation across batch means.
int cmd_bench(const std::vector<std::string>& structures, const std::string& queries,
              const std::string& format, std::uint64_t batch, unsigned reps) {
    auto keys = open_key_file(queries, format);
    std::vector<std::string> qs;
    keys->reset();
    while (auto k = keys->next()) qs.emplace_back(*k);
    if (qs.empty()) {
        std::cout << "bench: empty query file, nothing to measure\n";
        return kExitOk;
    }
    if (batch == 0) batch = 65536;
    for (const auto& path : structures) {
        Structure s = load_structure(path);
        std::uint64_t batches = (qs.size() + batch - 1) / batch;
        std::vector<double> batch_means;
        batch_means.reserve(batches * reps);
        std::uint64_t sink = 0;
        for (unsigned rep = 0; rep < reps; ++rep) {
            for (std::uint64_t bi = 0; bi < batches; ++bi) {
                std::uint64_t lo = bi * batch;
                std::uint64_t hi = std::min<std::uint64_t>(lo + batch, qs.size());
                auto t0 = std::chrono::steady_clock::now();
                for (std::uint64_t i = lo; i < hi; ++i) sink += s.lookup(qs[i]);
                double dt =
                    std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
                batch_means.push_back(dt / static_cast<double>(hi - lo) * 1e9);
            }
        }
        double mean = 0;
        for (double v : batch_means) mean += v;
        mean /= static_cast<double>(batch_means.size());
        double var = 0;
        for (double v : batch_means) var += (v - mean) * (v - mean);
        var /= static_cast<double>(batch_means.size());
        double rsd = mean > 0 ? std::sqrt(var) / mean * 100.0 : 0.0;
        std::cout << "bench: structure=" << path << " kind=" << s.kind() << " keys=" << qs.size()
                  << " batches=" << batch_means.size() << " mean_ns=" << mean << " rsd_pct=" << rsd
                  << " sink=" << (sink & 0xff) << "\n";
    }
    return kExitOk;
}

int cmd_stats(const std::string& path) {
    Structure s = load_structure(path);
    json j;
    j["kind"] = s.kind();
    j["n"] = s.size();
    j["bits"] = s.bit_size();
    j["bits_per_key"] =
        s.size() ? static_cast<double>(s.bit_size()) / static_cast<double>(s.size()) : 0.0;
    if (s.mphf) {
        j["m"] = s.mphf->vertex_count();
        j["seed"] = s.mphf->seed().value;
    } else {
        j["bucket_bits"] = s.hem->bucket_bits();
        j["seed"] = s.hem->seed().value;
    }
    std::cout << j.dump() << '\n';
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"external-memory minimal perfect hashing"};
    app.require_subcommand(1);

    BuildCli b;
    auto* build = app.add_subcommand("build", "build a structure from a key file");
    build->add_option("--input", b.input, "key file")->required();
    build->add_option("--format", b.format, "key file format: lines or rec32")
        ->check(CLI::IsMember({"lines", "rec32"}));
    build->add_option("--output", b.output, "structure file to write")->required();
    build->add_option("--algorithm", b.algorithm, "mwhc-external, mwhc-inmemory or hem")
        ->check(CLI::IsMember({"mwhc-external", "mwhc-inmemory", "hem"}));
    build->add_option("--gamma", b.gamma, "sparsity (vertices per key)");
    build->add_option("--budget", b.budget, "memory budget in bytes");
    build->add_option("--buffer", b.buffer_bytes, "sort buffer T in bytes");
    build->add_option("--workspace", b.workspace, "workspace directory (default <output>.work)");
    std::uint64_t seed_value = 0;
    auto* seed_opt = build->add_option("--seed", seed_value, "fixed seed for reproducible builds");
    build->add_option("--rank-period", b.rank_period, "rank sample period in entries");
    build->add_option("--stats-out", b.stats_out, "append the stats record to this file");

    std::string structure, keys_path, format = "lines";
    auto* lookup = app.add_subcommand("lookup", "map keys to indices");
    lookup->add_option("--structure", structure, "structure file")->required();
    lookup->add_option("--keys", keys_path, "key file")->required();
    lookup->add_option("--format", format, "key file format")
        ->check(CLI::IsMember({"lines", "rec32"}));

    auto* verify = app.add_subcommand("verify", "check that lookups are a bijection");
    verify->add_option("--structure", structure, "structure file")->required();
    verify->add_option("--keys", keys_path, "construction key file")->required();
    verify->add_option("--format", format, "key file format")
        ->check(CLI::IsMember({"lines", "rec32"}));

    std::vector<std::string> bench_structures;
    std::uint64_t batch = 65536;
    unsigned reps = 10;
    auto* bench = app.add_subcommand("bench", "measure batched lookup latency");
    bench->add_option("--structure", bench_structures, "structure file(s)")->required();
    bench->add_option("--queries", keys_path, "query key file")->required();
    bench->add_option("--format", format, "key file format")
        ->check(CLI::IsMember({"lines", "rec32"}));
    bench->add_option("--batch", batch, "keys per batch");
    bench->add_option("--reps", reps, "repetitions over the query set");

    auto* stats = app.add_subcommand("stats", "print a structure file's parameters");
    stats->add_option("--structure", structure, "structure file")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (build->parsed()) {
            if (seed_opt->count()) b.seed = seed_value;
            return cmd_build(b);
        }
        if (lookup->parsed()) return cmd_lookup(structure, keys_path, format);
        if (verify->parsed()) return cmd_verify(structure, keys_path, format);
        if (bench->parsed()) return cmd_bench(bench_structures, keys_path, format, batch, reps);
        if (stats->parsed()) return cmd_stats(structure);
    } catch (const BuildError& e) {
        std::cerr << "build failed: " << e.what() << "\n";
        return kExitBuild;
    } catch (const IoError& e) {
        std::cerr << "i/o error: " << e.what() << "\n";
        return kExitIo;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    }
    return kExitUsage;
}
