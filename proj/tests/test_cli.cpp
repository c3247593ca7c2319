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

#include <sys/wait.h>

#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "test_util.hpp"

namespace {

using nlohmann::json;

struct RunResult {
    int exit_code;
    std::string out;
    std::string err;
};

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

RunResult run_cli(const std::string& args, const std::filesystem::path& dir) {
    auto out = dir / "stdout.txt";
    auto err = dir / "stderr.txt";
    std::string cmd = std::string(EMPH_CLI_PATH) + " " + args + " >" + out.string() + " 2>" +
                      err.string();
    int rc = std::system(cmd.c_str());
    int code = WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
    return {code, slurp(out), slurp(err)};
}

void write_lines(const std::filesystem::path& p, std::uint64_t n, const std::string& prefix,
                 bool with_duplicate = false) {
    std::ofstream out(p);
    for (std::uint64_t i = 0; i < n; ++i) out << prefix << i << "\n";
    if (with_duplicate) out << prefix << 3 << "\n";
}

}  // namespace

TEST_CASE("build then verify then lookup round-trips a key file") {
    emph::test::ScratchGuard guard("cli-roundtrip");
    auto keys = guard.dir / "keys.txt";
    auto structure = guard.dir / "out.mph";
    write_lines(keys, 20000, "item-");

    auto build = run_cli("build --input " + keys.string() + " --output " + structure.string() +
                             " --seed 11 --workspace " + (guard.dir / "ws").string(),
                         guard.dir);
    REQUIRE(build.exit_code == 0);
    json stats = json::parse(build.out);
    CHECK(stats["n"] == 20000);
    CHECK(stats["bits_per_key"].get<double>() <= 2.8);
    CHECK(stats["io"]["random_seeks"] == 0);
    CHECK(stats["retries"] == 0);

    auto verify = run_cli("verify --structure " + structure.string() + " --keys " + keys.string(),
                          guard.dir);
    CHECK(verify.exit_code == 0);

    auto lookup = run_cli("lookup --structure " + structure.string() + " --keys " + keys.string(),
                          guard.dir);
    REQUIRE(lookup.exit_code == 0);
    std::istringstream in(lookup.out);
    std::set<std::uint64_t> seen;
    std::string line;
    while (std::getline(in, line)) seen.insert(std::stoull(line));
    CHECK(seen.size() == 20000);
    CHECK(*seen.rbegin() == 19999);
}

TEST_CASE("duplicate keys fail the build with a diagnostic") {
    emph::test::ScratchGuard guard("cli-dup");
    auto keys = guard.dir / "keys.txt";
    write_lines(keys, 500, "k", true);
    auto build = run_cli("build --input " + keys.string() + " --output " +
                             (guard.dir / "out.mph").string() + " --seed 1 --workspace " +
                             (guard.dir / "ws").string(),
                         guard.dir);
    CHECK(build.exit_code == 2);
    CHECK(build.err.find("duplicate") != std::string::npos);
}

TEST_CASE("single-key structures look up zero") {
    emph::test::ScratchGuard guard("cli-one");
    auto keys = guard.dir / "keys.txt";
    write_lines(keys, 1, "only-");
    auto structure = guard.dir / "one.mph";
    REQUIRE(run_cli("build --input " + keys.string() + " --output " + structure.string() +
                        " --seed 2 --workspace " + (guard.dir / "ws").string(),
                    guard.dir)
                .exit_code == 0);
    auto lookup = run_cli("lookup --structure " + structure.string() + " --keys " + keys.string(),
                          guard.dir);
    CHECK(lookup.out == "0\n");
}

TEST_CASE("external and in-memory algorithms agree on lookups given one seed") {
    emph::test::ScratchGuard guard("cli-agree");
    auto keys = guard.dir / "keys.txt";
    write_lines(keys, 5000, "agree-");
    auto ext = guard.dir / "ext.mph";
    auto mem = guard.dir / "mem.mph";
    REQUIRE(run_cli("build --input " + keys.string() + " --output " + ext.string() +
                        " --algorithm mwhc-external --seed 33 --workspace " +
                        (guard.dir / "ws").string(),
                    guard.dir)
                .exit_code == 0);
    REQUIRE(run_cli("build --input " + keys.string() + " --output " + mem.string() +
                        " --algorithm mwhc-inmemory --seed 33",
                    guard.dir)
                .exit_code == 0);
    auto a = run_cli("lookup --structure " + ext.string() + " --keys " + keys.string(), guard.dir);
    auto b = run_cli("lookup --structure " + mem.string() + " --keys " + keys.string(), guard.dir);
    CHECK(a.out == b.out);
}

TEST_CASE("deserialized structures answer like freshly built ones") {
    emph::test::ScratchGuard guard("cli-reload");
    auto keys = guard.dir / "keys.txt";
    write_lines(keys, 3000, "x");
    auto s1 = guard.dir / "a.mph";
    REQUIRE(run_cli("build --input " + keys.string() + " --output " + s1.string() +
                        " --seed 9 --workspace " + (guard.dir / "ws").string(),
                    guard.dir)
                .exit_code == 0);
    // The structure file is the serialized form; lookup twice and compare.
    auto first = run_cli("lookup --structure " + s1.string() + " --keys " + keys.string(),
                         guard.dir);
    auto second = run_cli("lookup --structure " + s1.string() + " --keys " + keys.string(),
                          guard.dir);
    CHECK(first.out == second.out);
}

TEST_CASE("hem builds verify and report stats") {
    emph::test::ScratchGuard guard("cli-hem");
    auto keys = guard.dir / "keys.txt";
    write_lines(keys, 30000, "hem-");
    auto structure = guard.dir / "h.hem";
    auto build = run_cli("build --input " + keys.string() + " --output " + structure.string() +
                             " --algorithm hem --seed 4 --workspace " +
                             (guard.dir / "ws").string(),
                         guard.dir);
    REQUIRE(build.exit_code == 0);
    CHECK(run_cli("verify --structure " + structure.string() + " --keys " + keys.string(),
                  guard.dir)
              .exit_code == 0);
    auto stats = run_cli("stats --structure " + structure.string(), guard.dir);
    json j = json::parse(stats.out);
    CHECK(j["kind"] == "hem");
    CHECK(j["n"] == 30000);
}

TEST_CASE("rec32 key files work end to end") {
    emph::test::ScratchGuard guard("cli-rec32");
    auto keys = guard.dir / "keys.bin";
    {
        std::ofstream out(keys, std::ios::binary);
        for (std::uint32_t i = 0; i < 4000; ++i) {
            std::string k("bin\0key-", 9);  // embedded NUL is legal in rec32 keys
            k += std::to_string(i);
            std::uint32_t len = static_cast<std::uint32_t>(k.size());
            out.write(reinterpret_cast<const char*>(&len), 4);
            out.write(k.data(), len);
        }
    }
    auto structure = guard.dir / "r.mph";
    REQUIRE(run_cli("build --input " + keys.string() + " --format rec32 --output " +
                        structure.string() + " --seed 21 --workspace " +
                        (guard.dir / "ws").string(),
                    guard.dir)
                .exit_code == 0);
    CHECK(run_cli("verify --structure " + structure.string() + " --keys " + keys.string() +
                      " --format rec32",
                  guard.dir)
              .exit_code == 0);
}

TEST_CASE("the workspace directory can come from the environment") {
    emph::test::ScratchGuard guard("cli-env");
    auto keys = guard.dir / "keys.txt";
    write_lines(keys, 1000, "env-");
    auto ws = guard.dir / "env-ws";
    ::setenv("EMPH_WORKSPACE", ws.c_str(), 1);
    auto r = run_cli("build --input " + keys.string() + " --output " +
                         (guard.dir / "e.mph").string() + " --seed 14",
                     guard.dir);
    ::unsetenv("EMPH_WORKSPACE");
    REQUIRE(r.exit_code == 0);
    CHECK(std::filesystem::exists(ws));
    CHECK(!std::filesystem::exists(guard.dir / "e.mph.work"));
}

TEST_CASE("usage errors exit with code one") {
    emph::test::ScratchGuard guard("cli-usage");
    CHECK(run_cli("build --output missing-input.mph", guard.dir).exit_code == 1);
    CHECK(run_cli("no-such-command", guard.dir).exit_code == 1);
}

TEST_CASE("missing files exit with the i/o code") {
    emph::test::ScratchGuard guard("cli-io");
    auto r = run_cli("stats --structure /nonexistent/path.mph", guard.dir);
    CHECK(r.exit_code == 4);
}

TEST_CASE("verification failure exits with code three") {
    emph::test::ScratchGuard guard("cli-vfail");
    auto keys = guard.dir / "keys.txt";
    auto others = guard.dir / "others.txt";
    write_lines(keys, 2000, "good-");
    write_lines(others, 2000, "evil-");
    auto structure = guard.dir / "v.mph";
    REQUIRE(run_cli("build --input " + keys.string() + " --output " + structure.string() +
                        " --seed 6 --workspace " + (guard.dir / "ws").string(),
                    guard.dir)
                .exit_code == 0);
    CHECK(run_cli("verify --structure " + structure.string() + " --keys " + others.string(),
                  guard.dir)
              .exit_code == 3);
}

TEST_CASE("bench reports batched means and tolerates empty query files") {
    emph::test::ScratchGuard guard("cli-bench");
    auto keys = guard.dir / "keys.txt";
    write_lines(keys, 20000, "b");
    auto structure = guard.dir / "b.mph";
    REQUIRE(run_cli("build --input " + keys.string() + " --output " + structure.string() +
                        " --seed 8 --workspace " + (guard.dir / "ws").string(),
                    guard.dir)
                .exit_code == 0);

    auto empty = guard.dir / "empty.txt";
    std::ofstream(empty).close();
    auto none = run_cli("bench --structure " + structure.string() + " --queries " + empty.string(),
                        guard.dir);
    CHECK(none.exit_code == 0);
    CHECK(none.out.find("empty") != std::string::npos);

    // two structures in one invocation produce one report each
    auto hemf = guard.dir / "b.hem";
    REQUIRE(run_cli("build --input " + keys.string() + " --output " + hemf.string() +
                        " --algorithm hem --seed 8 --workspace " + (guard.dir / "wsh").string(),
                    guard.dir)
                .exit_code == 0);
    auto both = run_cli("bench --structure " + structure.string() + " --structure " +
                            hemf.string() + " --queries " + keys.string() + " --batch 4096 --reps 2",
                        guard.dir);
    REQUIRE(both.exit_code == 0);
    CHECK(both.out.find("kind=mwhc") != std::string::npos);
    CHECK(both.out.find("kind=hem") != std::string::npos);

    auto r1 = run_cli("bench --structure " + structure.string() + " --queries " + keys.string() +
                          " --batch 4096 --reps 4",
                      guard.dir);
    auto r2 = run_cli("bench --structure " + structure.string() + " --queries " + keys.string() +
                          " --batch 4096 --reps 4",
                      guard.dir);
    REQUIRE(r1.exit_code == 0);
    REQUIRE(r2.exit_code == 0);
    // Self-consistency: the two runs' means agree within three standard
    // deviations of the batch means.
    auto parse = [](const std::string& s, const char* field) {
        auto p = s.find(field);
        REQUIRE(p != std::string::npos);
        return std::stod(s.substr(p + std::strlen(field)));
    };
    double m1 = parse(r1.out, "mean_ns=");
    double m2 = parse(r2.out, "mean_ns=");
    double sd1 = parse(r1.out, "rsd_pct=") / 100.0 * m1;
    double sd2 = parse(r2.out, "rsd_pct=") / 100.0 * m2;
    CHECK(std::abs(m1 - m2) <= 3.0 * (sd1 + sd2) + 0.25 * std::max(m1, m2));
}

TEST_CASE("gamma at or below the threshold warns and then fails") {
    emph::test::ScratchGuard guard("cli-gamma");
    auto keys = guard.dir / "keys.txt";
    write_lines(keys, 3000, "g");
    auto r = run_cli("build --input " + keys.string() + " --output " +
                         (guard.dir / "g.mph").string() + " --gamma 1.10 --seed 3 --workspace " +
                         (guard.dir / "ws").string(),
                     guard.dir);
    CHECK(r.exit_code == 2);
    CHECK(r.err.find("warning") != std::string::npos);
    CHECK(r.err.find("threshold") != std::string::npos);
}

TEST_CASE("undersized memory budgets are a usage error") {
    emph::test::ScratchGuard guard("cli-budget");
    auto keys = guard.dir / "keys.txt";
    write_lines(keys, 100, "m");
    auto r = run_cli("build --input " + keys.string() + " --output " +
                         (guard.dir / "m.mph").string() + " --budget 1048576",
                     guard.dir);
    CHECK(r.exit_code == 1);
}
