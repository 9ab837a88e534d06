// SPDX-License-Identifier: Apache-2.0
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <sys/wait.h>

#include <cstdio>
#include <cstdlib>
#include <string>
#include <vector>

#include <doctest.h>

#include "helpers.hpp"

namespace {

struct RunResult {
    int code = -1;
    std::string out;
    std::string err;
};

// Runs the installed CLI binary with the given arguments, capturing exit
// code, stdout, and stderr.
RunResult run(const std::string& args) {
    static int counter = 0;
    std::string stem = std::filesystem::temp_directory_path() /
                       ("htte_cli_run." + std::to_string(::getpid()) + "." +
                        std::to_string(counter++));
    std::string out_path = stem + ".out";
    std::string err_path = stem + ".err";
    std::string cmd = std::string(HTTE_CLI_PATH) + " " + args + " > " + out_path +
                      " 2> " + err_path;
    int status = std::system(cmd.c_str());
    RunResult r;
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    r.out = htte::test::slurp(out_path);
    r.err = htte::test::slurp(err_path);
    std::remove(out_path.c_str());
    std::remove(err_path.c_str());
    return r;
}

// Returns the full "key: value" line for a report key, or "" if absent.
std::string report_line(const std::string& text, const std::string& key) {
    std::size_t pos = 0;
    while (pos < text.size()) {
        std::size_t end = text.find('\n', pos);
        if (end == std::string::npos) end = text.size();
        std::string line = text.substr(pos, end - pos);
        if (line.rfind(key + ":", 0) == 0) return line;
        pos = end + 1;
    }
    return "";
}

std::string synth_args(const std::string& out_dir, unsigned seed) {
    return "synth --out " + out_dir +
           " --rows 2 --cols 2 --days 1 --vehicles 8 --held_out_vehicles 2"
           " --trips_per_day 2 --trip_len 6 --seed " +
           std::to_string(seed);
}

}  // namespace

using htte::test::TempDir;
using htte::test::slurp;

TEST_CASE("synth output is reproducible and responds to the seed") {
    TempDir a("cli_synth_a"), b("cli_synth_b"), c("cli_synth_c");
    CHECK(run(synth_args(a.path(), 9)).code == 0);
    CHECK(run(synth_args(b.path(), 9)).code == 0);
    CHECK(run(synth_args(c.path(), 10)).code == 0);
    for (const char* name :
         {"network.csv", "trajectories.csv", "reports.csv", "queries.csv"}) {
        CAPTURE(name);
        CHECK(slurp(a.file(name)) == slurp(b.file(name)));
    }
    CHECK(slurp(a.file("reports.csv")) != slurp(c.file("reports.csv")));
}

TEST_CASE("train, replay, and evaluate agree on metrics") {
    TempDir dir("cli_round_trip");
    std::string city = dir.file("city");
    std::string model = dir.file("model");
    std::string est = dir.file("estimates.csv");
    REQUIRE(run(synth_args(city, 9)).code == 0);

    auto train = run("train --network " + city + "/network.csv --reports " + city +
                     "/reports.csv --out " + model);
    CAPTURE(train.err);
    REQUIRE(train.code == 0);
    CHECK(train.out.find("models") != std::string::npos);

    auto replay = run("replay --network " + city + "/network.csv --artifacts " +
                      model + " --queries " + city + "/queries.csv --historical " +
                      city + "/reports.csv --out " + est);
    CAPTURE(replay.err);
    REQUIRE(replay.code == 0);
    CHECK(report_line(replay.out, "queries") == "queries: 4");
    CHECK(report_line(replay.out, "mean_latency_ms") != "");

    auto eval = run("evaluate --estimates " + est + " --method htte");
    CAPTURE(eval.err);
    REQUIRE(eval.code == 0);
    // The metrics recomputed from the written estimates file must match the
    // replay report character for character.
    for (const char* key : {"method", "queries", "with_actual", "mae_s",
                            "rmse_s", "mape_pct"}) {
        CAPTURE(key);
        CHECK(report_line(eval.out, key) == report_line(replay.out, key));
        CHECK(report_line(eval.out, key) != "");
    }
}

TEST_CASE("baseline subcommand reports metrics and validates its name") {
    TempDir dir("cli_baseline");
    std::string city = dir.file("city");
    REQUIRE(run(synth_args(city, 9)).code == 0);

    std::string common = " --network " + city + "/network.csv --queries " + city +
                         "/queries.csv --historical " + city + "/reports.csv";
    std::string out = dir.file("base.csv");
    auto avg = run("baseline --name historical-avg" + common + " --out " + out);
    CAPTURE(avg.err);
    REQUIRE(avg.code == 0);
    CHECK(report_line(avg.out, "method") == "method: historical-avg");
    CHECK(report_line(avg.out, "mae_s") != "");
    CHECK(slurp(out).rfind("query_id,", 0) == 0);

    auto last = run("baseline --name last-value" + common);
    REQUIRE(last.code == 0);
    CHECK(report_line(last.out, "method") == "method: last-value");

    auto bad = run("baseline --name nope" + common);
    CHECK(bad.code == 1);
    CHECK(bad.err.find("nope") != std::string::npos);
}

TEST_CASE("exit codes distinguish help, usage errors, and bad inputs") {
    CHECK(run("--help").code == 0);
    CHECK(run("synth --help").code == 0);
    // Missing subcommand and missing required options are usage errors.
    CHECK(run("").code == 1);
    CHECK(run("synth").code == 1);
    CHECK(run("frobnicate").code == 1);

    TempDir dir("cli_errors");
    auto missing = run("evaluate --estimates " + dir.file("absent.csv"));
    CHECK(missing.code == 1);
    CHECK(missing.err.find("error:") != std::string::npos);

    auto bad_synth = run("synth --out " + dir.file("x") + " --rows 1");
    CHECK(bad_synth.code == 1);
    CHECK(bad_synth.err.find("2x2") != std::string::npos);
}

TEST_CASE("command line flags override config file values") {
    TempDir dir("cli_config");
    std::string cfg = dir.file("run.cfg");
    {
        FILE* f = std::fopen(cfg.c_str(), "w");
        REQUIRE(f);
        std::fputs("# synth settings\nrows = 2\ncols = 2\ndays = 1\n"
                   "vehicles = 8\nheld_out_vehicles = 2\ntrips_per_day = 2\n"
                   "trip_len = 4\nseed = 9\n",
                   f);
        std::fclose(f);
    }
    std::string from_cfg = dir.file("from_cfg");
    std::string from_flags = dir.file("from_flags");
    std::string overridden = dir.file("overridden");
    REQUIRE(run("synth --config " + cfg + " --out " + from_cfg).code == 0);
    REQUIRE(run("synth --out " + from_flags +
                " --rows 2 --cols 2 --days 1 --vehicles 8 --held_out_vehicles 2"
                " --trips_per_day 2 --trip_len 4 --seed 9")
                .code == 0);
    REQUIRE(run("synth --config " + cfg + " --out " + overridden + " --trip_len 6")
                .code == 0);
    CHECK(slurp(from_cfg + "/reports.csv") == slurp(from_flags + "/reports.csv"));
    CHECK(slurp(overridden + "/reports.csv") != slurp(from_cfg + "/reports.csv"));

    std::string bad_cfg = dir.file("bad.cfg");
    {
        FILE* f = std::fopen(bad_cfg.c_str(), "w");
        REQUIRE(f);
        std::fputs("no_such_key = 1\n", f);
        std::fclose(f);
    }
    auto bad = run("synth --config " + bad_cfg + " --out " + dir.file("x"));
    CHECK(bad.code == 1);
    CHECK(bad.err.find("no_such_key") != std::string::npos);
}

TEST_CASE("pathlet dictionaries plug into train, replay, and baseline") {
    TempDir dir("cli_pathlets");
    std::string city = dir.file("city");
    REQUIRE(run("synth --out " + city +
                " --rows 3 --cols 3 --days 2 --vehicles 12 --held_out_vehicles 2"
                " --trips_per_day 3 --trip_len 8 --seed 11")
                .code == 0);

    std::string dict = dir.file("dict.csv");
    auto built = run("pathlets --network " + city + "/network.csv --trajectories " +
                     city + "/trajectories.csv --out " + dict + " --min_support 3");
    CAPTURE(built.err);
    REQUIRE(built.code == 0);
    CHECK(built.out.find("pathlets") != std::string::npos);
    CHECK(slurp(dict).rfind("pathlet_id,", 0) == 0);

    std::string model = dir.file("pmodel");
    std::string flags = " --window_min 120 --temporal_overlap_min 10";
    auto train = run("train --pathlets " + dict + " --network " + city +
                     "/network.csv --trajectories " + city + "/trajectories.csv"
                     " --out " + model + flags);
    CAPTURE(train.err);
    REQUIRE(train.code == 0);

    std::string est = dir.file("pest.csv");
    auto replay = run("replay --pathlets " + dict + " --network " + city +
                      "/network.csv --artifacts " + model + " --queries " + city +
                      "/queries.csv --historical " + city + "/trajectories.csv"
                      " --out " + est + flags);
    CAPTURE(replay.err);
    REQUIRE(replay.code == 0);
    CHECK(report_line(replay.out, "queries") == "queries: 12");

    auto base = run("baseline --pathlets " + dict +
                    " --name historical-avg --network " + city +
                    "/network.csv --queries " + city + "/queries.csv --historical " +
                    city + "/trajectories.csv");
    CAPTURE(base.err);
    REQUIRE(base.code == 0);
    CHECK(report_line(base.out, "queries") == "queries: 12");

    // Training in pathlet mode needs trajectories to rebuild pathlet traversals.
    auto wrong = run("train --pathlets " + dict + " --network " + city +
                     "/network.csv --reports " + city + "/reports.csv --out " +
                     dir.file("x") + flags);
    CHECK(wrong.code == 1);
}
