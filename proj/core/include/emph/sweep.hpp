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

#include <filesystem>
#include <ostream>
#include <string>
#include <vector>

#include "emph/common.hpp"

namespace emph {

// Construction-cost sweep across key counts and algorithms over synthetic
// keys. Cells run sequentially for timing isolation; per-cell failures are
// recorded as rows and the sweep continues.
struct SweepSpec {
    std::vector<std::uint64_t> key_counts;  // ascending
    std::vector<std::string> algorithms;    // mwhc-external, mwhc-inmemory, hem
    unsigned repetitions = 1;
    std::uint64_t memory_budget = 1ULL << 30;
    std::uint64_t inmem_cap_bytes = 0;  // enforced cap for in-memory builds; 0 = off
    std::uint64_t generator_seed = 1;
    std::filesystem::path workspace_dir;
};

struct SweepRow {
    std::string algorithm;
    std::uint64_t n = 0;
    unsigned repetition = 0;
    std::string status;  // "ok" or an error summary
    double wall_seconds = 0;
    std::uint64_t peak_temp_bytes = 0;
    double bits_per_key = 0;
    std::uint64_t rounds = 0;
    std::uint64_t retries = 0;
};

std::vector<SweepRow> run_sweep(const SweepSpec& spec);

inline constexpr const char* kSweepCsvHeader =
    "algorithm,n,repetition,status,wall_seconds,peak_temp_bytes,bits_per_key,rounds,retries";

void write_sweep_csv(std::ostream& out, const std::vector<SweepRow>& rows);

}  // namespace emph
