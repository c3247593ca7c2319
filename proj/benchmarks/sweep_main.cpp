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

// Construction sweep over synthetic key sets: one CSV row per
// (algorithm, key count, repetition) cell. Cells run sequentially so wall
// times are comparable; failed cells become rows and the sweep continues.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "emph/sweep.hpp"

int main(int argc, char** argv) {
    CLI::App app{"construction sweep over synthetic keys"};

    std::string counts_arg = "10000,100000";
    std::string algos_arg = "mwhc-external,mwhc-inmemory,hem";
    std::string out_path;
    emph::SweepSpec spec;
    spec.workspace_dir = std::filesystem::temp_directory_path() / "emph-sweep";

    app.add_option("--counts", counts_arg, "comma-separated ascending key counts");
    app.add_option("--algorithms", algos_arg, "comma-separated algorithms");
    app.add_option("--reps", spec.repetitions, "repetitions per cell");
    app.add_option("--budget", spec.memory_budget, "memory budget in bytes");
    app.add_option("--inmem-cap", spec.inmem_cap_bytes,
                   "enforced allocation cap for in-memory builds (0 = off)");
    app.add_option("--gen-seed", spec.generator_seed, "synthetic key generator seed");
    app.add_option("--workspace", spec.workspace_dir, "workspace directory");
    app.add_option("--out", out_path, "CSV output file (default stdout)");

    CLI11_PARSE(app, argc, argv);

    auto split = [](const std::string& s) {
        std::vector<std::string> parts;
        std::stringstream ss(s);
        std::string item;
        while (std::getline(ss, item, ','))
            if (!item.empty()) parts.push_back(item);
        return parts;
    };
    for (const auto& c : split(counts_arg)) spec.key_counts.push_back(std::stoull(c));
    spec.algorithms = split(algos_arg);

    try {
        auto rows = emph::run_sweep(spec);
        if (out_path.empty()) {
            emph::write_sweep_csv(std::cout, rows);
        } else {
            std::ofstream out(out_path);
            emph::write_sweep_csv(out, rows);
        }
    } catch (const emph::Error& e) {
        std::cerr << "sweep failed: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
