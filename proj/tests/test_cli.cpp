#include <catch2/catch.hpp>

#include <cstdlib>
#include <fstream>
#include <sstream>

#include <sys/wait.h>

#include <json.hpp>

#include <editkit/codec.hpp>

#include "oracles.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct RunResult {
    int exit_code = -1;
    std::string output; // stdout + stderr
};

RunResult run_cli(const std::string& args, const fs::path& workdir) {
    const fs::path log = workdir / "cli.log";
    const std::string command = "cd '" + workdir.string() + "' && '" + EDITKIT_CLI_BIN + "' " +
                                args + " > '" + log.string() + "' 2>&1";
    const int status = std::system(command.c_str());
    RunResult result;
    result.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    std::ifstream in(log);
    std::ostringstream ss;
    ss << in.rdbuf();
    result.output = ss.str();
    return result;
}

std::string read_bytes(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

} // namespace

TEST_CASE("synth runs are deterministic trees", "[cli]") {
    oracles::TempDir dir("cli");
    const std::string flags =
        "--count 3 --width 128 --height 128 --region rect:32,32,48,40 --noise 4 --speckle 2 "
        "--seed 7";
    REQUIRE(run_cli("synth " + flags + " --outdir a", dir.path()).exit_code == 0);
    REQUIRE(run_cli("synth " + flags + " --outdir b", dir.path()).exit_code == 0);

    int files = 0;
    for (const auto& entry : fs::directory_iterator(dir.path() / "a")) {
        const fs::path other = dir.path() / "b" / entry.path().filename();
        REQUIRE(fs::exists(other));
        REQUIRE(read_bytes(entry.path()) == read_bytes(other));
        ++files;
    }
    REQUIRE(files == 3 * 3 + 1); // ref, tgt, truth per pair plus the manifest
}

TEST_CASE("synth count zero writes only an empty manifest", "[cli]") {
    oracles::TempDir dir("cli");
    REQUIRE(run_cli("synth --count 0 --outdir empty", dir.path()).exit_code == 0);
    REQUIRE(fs::exists(dir.path() / "empty" / "manifest.jsonl"));
    REQUIRE(read_bytes(dir.path() / "empty" / "manifest.jsonl").empty());
}

TEST_CASE("synth rejects an out-of-bounds region as a usage error", "[cli]") {
    oracles::TempDir dir("cli");
    const RunResult result = run_cli(
        "synth --count 1 --width 64 --height 64 --region rect:40,40,40,40 --outdir oob",
        dir.path());
    REQUIRE(result.exit_code == 2);
    REQUIRE(result.output.find("--region") != std::string::npos);
    REQUIRE_FALSE(fs::exists(dir.path() / "oob")); // no partial outputs
}

TEST_CASE("unknown flags and missing subcommands are usage errors", "[cli]") {
    oracles::TempDir dir("cli");
    REQUIRE(run_cli("synth --frobnicate 1 --outdir x", dir.path()).exit_code == 2);
    REQUIRE(run_cli("", dir.path()).exit_code == 2);
    REQUIRE(run_cli("--help", dir.path()).exit_code == 0);
}

TEST_CASE("maskgen dumps every step and the stats json", "[cli]") {
    oracles::TempDir dir("cli");
    REQUIRE(run_cli("synth --count 1 --width 256 --height 256 --region rect:64,67,80,70 "
                    "--noise 5 --speckle 3 --seed 3 --outdir pairs",
                    dir.path())
                .exit_code == 0);
    const RunResult result = run_cli(
        "maskgen --reference pairs/pair-0000.ref.png --target pairs/pair-0000.tgt.png "
        "--out-prefix dbg",
        dir.path());
    REQUIRE(result.exit_code == 0);

    // Speckles survive steps 1-2 and disappear in step 3.
    const editkit::ImageBuffer step2 = editkit::load_image(dir.path() / "dbg.step2.png");
    const editkit::ImageBuffer step3 = editkit::load_image(dir.path() / "dbg.step3.png");
    std::size_t on2 = 0;
    std::size_t on3 = 0;
    for (std::uint8_t v : step2.data()) {
        on2 += v != 0;
    }
    for (std::uint8_t v : step3.data()) {
        on3 += v != 0;
    }
    REQUIRE(on3 < on2);
    REQUIRE(fs::exists(dir.path() / "dbg.step1.png"));
    REQUIRE(fs::exists(dir.path() / "dbg.step4.png"));

    const json stats = json::parse(read_bytes(dir.path() / "dbg.stats.json"));
    REQUIRE(stats.at("a_total").get<std::uint64_t>() == 256u * 256u);
    REQUIRE(stats.at("w").contains("log"));
    REQUIRE(stats.at("config").at("pool_kernel").get<int>() == 16);
}

TEST_CASE("maskgen on an identical pair reports degenerate stats", "[cli]") {
    oracles::TempDir dir("cli");
    REQUIRE(run_cli("synth --count 1 --width 64 --height 64 --region rect:0,0,0,0 --seed 1 "
                    "--outdir pairs",
                    dir.path())
                .exit_code == 0);
    const RunResult result = run_cli(
        "maskgen --reference pairs/pair-0000.ref.png --target pairs/pair-0000.ref.png "
        "--out-prefix same",
        dir.path());
    REQUIRE(result.exit_code == 0);
    for (int step = 1; step <= 4; ++step) {
        const editkit::ImageBuffer mask =
            editkit::load_image(dir.path() / ("same.step" + std::to_string(step) + ".png"));
        for (std::uint8_t v : mask.data()) {
            REQUIRE(v == 0);
        }
    }
    const json stats = json::parse(read_bytes(dir.path() / "same.stats.json"));
    REQUIRE(stats.at("degenerate_no_edit").get<bool>());
    REQUIRE(stats.at("x").is_null());
}

TEST_CASE("maskgen on a full-image edit pins every weight to one", "[cli]") {
    oracles::TempDir dir("cli");
    REQUIRE(run_cli("synth --count 1 --width 64 --height 64 --region rect:0,0,64,64 --seed 2 "
                    "--outdir pairs",
                    dir.path())
                .exit_code == 0);
    REQUIRE(run_cli("maskgen --reference pairs/pair-0000.ref.png "
                    "--target pairs/pair-0000.tgt.png --out-prefix full",
                    dir.path())
                .exit_code == 0);
    const json stats = json::parse(read_bytes(dir.path() / "full.stats.json"));
    REQUIRE(stats.at("x").get<double>() == 1.0);
    for (const char* kind : {"linear", "exp-root", "log", "quad-root"}) {
        REQUIRE(stats.at("w").at(kind).get<double>() == 1.0);
    }
    REQUIRE(stats.at("degenerate_full_edit").get<bool>());
}

TEST_CASE("batch propagates data errors through the exit code", "[cli]") {
    oracles::TempDir dir("cli");
    REQUIRE(run_cli("synth --count 2 --width 96 --height 96 --region rect:16,16,40,40 --seed 5 "
                    "--outdir corpus",
                    dir.path())
                .exit_code == 0);

    SECTION("clean manifest exits zero") {
        const RunResult result =
            run_cli("batch --manifest corpus/manifest.jsonl --outdir out", dir.path());
        REQUIRE(result.exit_code == 0);
    }
    SECTION("a bad path exits one without --allow-errors") {
        std::ofstream append(dir.path() / "corpus" / "manifest.jsonl", std::ios::app);
        append << R"({"id":"bad","reference_path":"missing.png","target_path":"missing.png"})"
               << "\n";
        append.close();
        REQUIRE(run_cli("batch --manifest corpus/manifest.jsonl --outdir out2", dir.path())
                    .exit_code == 1);
        REQUIRE(run_cli("batch --manifest corpus/manifest.jsonl --outdir out3 --allow-errors",
                        dir.path())
                    .exit_code == 0);
    }
}

TEST_CASE("batch parallelism does not change the bytes", "[cli]") {
    oracles::TempDir dir("cli");
    REQUIRE(run_cli("synth --count 8 --width 128 --height 128 --region ellipse:24,30,60,48 "
                    "--noise 5 --seed 11 --outdir corpus",
                    dir.path())
                .exit_code == 0);
    REQUIRE(run_cli("batch --manifest corpus/manifest.jsonl --outdir o1 --parallelism 1",
                    dir.path())
                .exit_code == 0);
    REQUIRE(run_cli("batch --manifest corpus/manifest.jsonl --outdir o8 --parallelism 8",
                    dir.path())
                .exit_code == 0);
    REQUIRE(read_bytes(dir.path() / "o1" / "output.jsonl") ==
            read_bytes(dir.path() / "o8" / "output.jsonl"));
    for (const auto& entry : fs::directory_iterator(dir.path() / "o1")) {
        REQUIRE(read_bytes(entry.path()) ==
                read_bytes(dir.path() / "o8" / entry.path().filename()));
    }
}

TEST_CASE("report renders the table and writes json", "[cli]") {
    oracles::TempDir dir("cli");
    REQUIRE(run_cli("synth --count 3 --width 96 --height 96 --region rect:16,16,48,48 --seed 13 "
                    "--outdir corpus",
                    dir.path())
                .exit_code == 0);
    REQUIRE(run_cli("batch --manifest corpus/manifest.jsonl --outdir out", dir.path()).exit_code ==
            0);
    const RunResult result =
        run_cli("report --manifest out/output.jsonl --out report.json", dir.path());
    REQUIRE(result.exit_code == 0);
    REQUIRE(result.output.find("records: 3") != std::string::npos);
    const json j = json::parse(read_bytes(dir.path() / "report.json"));
    REQUIRE(j.at("total").get<int>() == 3);
    REQUIRE(j.at("by_task_tag").contains("rect"));
}

TEST_CASE("ema-sim verifies equality across a worker sweep", "[cli]") {
    oracles::TempDir dir("cli");
    const RunResult result = run_cli(
        "ema-sim --params 10007 --workers 1,2,8 --decay 0.999 --steps 60 --seed 4 --out ema.json",
        dir.path());
    REQUIRE(result.exit_code == 0);
    const json j = json::parse(read_bytes(dir.path() / "ema.json"));
    REQUIRE(j.at("results").size() == 3);
    for (const auto& entry : j.at("results")) {
        REQUIRE(entry.at("bitwise_equal").get<bool>());
    }
}

TEST_CASE("ema-sim accounting mode reproduces the 20B sizing line", "[cli]") {
    oracles::TempDir dir("cli");
    const RunResult result = run_cli(
        "ema-sim --params 20e9 --workers 8 --accounting-only --out acct.json", dir.path());
    REQUIRE(result.exit_code == 0);
    REQUIRE(result.output.find("10.0") != std::string::npos);
    const json j = json::parse(read_bytes(dir.path() / "acct.json"));
    const auto& entry = j.at("results").at(0);
    REQUIRE(entry.at("per_worker_bytes").get<std::uint64_t>() == 10000000000ull);
    REQUIRE(entry.at("gib_per_worker").get<double>() == Approx(10.0));
    REQUIRE(entry.at("formula_check").get<bool>());
    REQUIRE(entry.at("bitwise_equal").is_null());
}

TEST_CASE("ema-sim constant mode stays within the closed-form budget", "[cli]") {
    oracles::TempDir dir("cli");
    const RunResult result = run_cli(
        "ema-sim --params 4096 --workers 1,4 --decay 0.5 --steps 20 --constant-trajectory "
        "--out c.json",
        dir.path());
    REQUIRE(result.exit_code == 0);
    const json j = json::parse(read_bytes(dir.path() / "c.json"));
    for (const auto& entry : j.at("results")) {
        REQUIRE(entry.at("closed_form_max_rel_dev").get<double>() < 1e-6);
    }
}

TEST_CASE("ema-sim flags nonsense as usage errors", "[cli]") {
    oracles::TempDir dir("cli");
    REQUIRE(run_cli("ema-sim --params nonsense", dir.path()).exit_code == 2);
    REQUIRE(run_cli("ema-sim --params 100 --workers 0", dir.path()).exit_code == 2);
    REQUIRE(run_cli("ema-sim --params 100 --workers 101", dir.path()).exit_code == 2);
    REQUIRE(run_cli("ema-sim --params 100 --decay 1.5", dir.path()).exit_code == 2);
}
