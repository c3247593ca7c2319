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

#include "emph/sweep.hpp"

#include <algorithm>
#include <chrono>

#include "emph/hem.hpp"
#include "emph/keys.hpp"
#include "emph/mphf.hpp"

namespace emph {

namespace {

SweepRow run_cell(const SweepSpec& spec, const std::string& algo, std::uint64_t n, unsigned rep) {
    SweepRow row;
    row.algorithm = algo;
    row.n = n;
    row.repetition = rep;
    row.status = "ok";

    SyntheticKeys keys(n, spec.generator_seed);
    auto dir = spec.workspace_dir / (algo + "-" + std::to_string(n) + "-" + std::to_string(rep));
    auto t0 = std::chrono::steady_clock::now();
    try {
        if (algo == "mwhc-external") {
            Workspace ws(dir);
            BuildOptions opts;
            opts.memory_budget = spec.memory_budget;
            opts.seed = remix64(spec.generator_seed ^ (n * 1315423911ULL) ^ rep);
            opts.write_manifest = false;
            BuildReport report;
            Mphf f = build_mphf_external(keys, ws, opts, &report);
            row.bits_per_key = n ? static_cast<double>(f.bit_size()) / n : 0;
            row.rounds = report.rounds;
            row.retries = report.retries;
            row.peak_temp_bytes = report.peak_temp_bytes;
        } else if (algo == "mwhc-inmemory") {
            BuildOptions opts;
            opts.memory_budget = spec.memory_budget;
            opts.inmem_cap_bytes = spec.inmem_cap_bytes;
            opts.seed = remix64(spec.generator_seed ^ (n * 1315423911ULL) ^ rep);
            BuildReport report;
            Mphf f = build_mphf_inmemory(keys, opts, &report);
            row.bits_per_key = n ? static_cast<double>(f.bit_size()) / n : 0;
            row.rounds = report.rounds;
            row.retries = report.retries;
        } else if (algo == "hem") {
            Workspace ws(dir);
            HemOptions opts;
            opts.memory_budget = spec.memory_budget;
            opts.seed = remix64(spec.generator_seed ^ (n * 2654435761ULL) ^ rep);
            Hem::BuildStats stats;
            Hem h = build_hem(keys, ws, opts, &stats);
            row.bits_per_key = n ? static_cast<double>(h.bit_size()) / n : 0;
            row.retries = stats.signature_retries + stats.bucket_retries;
            row.peak_temp_bytes = ws.peak_bytes();
        } else {
            row.status = "unknown algorithm";
        }
    } catch (const Error& e) {
        row.status = std::string("failed: ") + e.what();
    }
    row.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return row;
}

}  // namespace

std::vector<SweepRow> run_sweep(const SweepSpec& spec) {
    if (!std::is_sorted(spec.key_counts.begin(), spec.key_counts.end()))
        throw ContractError("sweep key counts must be ascending");
    std::vector<SweepRow> rows;
    for (std::uint64_t n : spec.key_counts)
        for (const auto& algo : spec.algorithms)
            for (unsigned rep = 0; rep < spec.repetitions; ++rep)
                rows.push_back(run_cell(spec, algo, n, rep));
    return rows;
}

void write_sweep_csv(std::ostream& out, const std::vector<SweepRow>& rows) {
    out << kSweepCsvHeader << '\n';
    for (const auto& r : rows) {
        std::string status = r.status;
        for (auto& c : status)
            if (c == ',' || c == '\n') c = ';';
        out << r.algorithm << ',' << r.n << ',' << r.repetition << ',' << status << ','
            << r.wall_seconds << ',' << r.peak_temp_bytes << ',' << r.bits_per_key << ','
            << r.rounds << ',' << r.retries << '\n';
    }
}

}  // namespace emph
