// SPDX-License-Identifier: Apache-2.0
// Copyright (c) 2026 the emtrace authors

// End-to-end checks of the command line tool. Each case shells out to the
// real binary (path injected as EMTRACE_CLI at compile time), captures
// stdout/stderr, and inspects exit codes and written artifacts.

#include <catch2/catch_amalgamated.hpp>

#include <sys/wait.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include <emtrace/units.hpp>

#include "fixtures.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

fs::path work_dir(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / "emtrace-cli-tests" / name;
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::string shellq(const fs::path& p) { return "\"" + p.string() + "\""; }

struct CliResult {
    int code = -1;
    std::string out;
    std::string err;
};

// Runs the binary through /bin/sh; `env_prefix` may carry VAR=value pairs.
CliResult run_cli(const std::string& args, const fs::path& dir,
                  const std::string& env_prefix = "") {
    const fs::path out_file = dir / "stdout.txt";
    const fs::path err_file = dir / "stderr.txt";
    const std::string cmd = env_prefix + shellq(fs::path(EMTRACE_CLI)) + " " + args + " >" +
                            shellq(out_file) + " 2>" + shellq(err_file);
    CliResult r;
    const int status = std::system(cmd.c_str());
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    r.out = slurp(out_file);
    r.err = slurp(err_file);
    return r;
}

std::string freespace_scene_path() {
    return (fs::path(fixtures::scene_dir()) / "freespace.json").string();
}

std::size_t data_rows(const std::string& csv) {
    std::size_t rows = 0;
    std::istringstream ss(csv);
    std::string line;
    std::getline(ss, line);  // header
    while (std::getline(ss, line))
        if (!line.empty()) ++rows;
    return rows;
}

}  // namespace

TEST_CASE("dump-config prints the resolved configuration", "[cli]") {
    const auto dir = work_dir("dump");

    auto r = run_cli("--dump-config", dir);
    REQUIRE(r.code == 0);
    const json cfg = json::parse(r.out);
    CHECK(cfg.at("seed").get<std::uint64_t>() == 1);
    CHECK(cfg.at("carrier").at("f0").get<double>() == 3.5e9);
    CHECK(cfg.at("network").at("rho_cov").get<double>() == 0.99);
    CHECK(cfg.at("launch").at("allow_mixed").get<bool>() == false);
    CHECK(cfg.at("antenna").at("m_ant").get<int>() == 8);

    r = run_cli("--dump-config --seed 77 --set network.rho_cov=0.9", dir);
    REQUIRE(r.code == 0);
    const json over = json::parse(r.out);
    CHECK(over.at("seed").get<std::uint64_t>() == 77);
    CHECK(over.at("network").at("rho_cov").get<double>() == 0.9);
}

TEST_CASE("config precedence is defaults, file, env, set, flags", "[cli]") {
    const auto dir = work_dir("precedence");

    const fs::path cfg_file = dir / "cfg.json";
    {
        std::ofstream f(cfg_file);
        f << R"({"seed": 123, "out_dir": "from_file"})";
    }
    const std::string dump = "--dump-config -c " + shellq(cfg_file);
    const std::string env = "EMTRACE_OUT_DIR=from_env ";

    auto r = run_cli(dump, dir);
    REQUIRE(r.code == 0);
    CHECK(json::parse(r.out).at("seed").get<std::uint64_t>() == 123);
    CHECK(json::parse(r.out).at("out_dir").get<std::string>() == "from_file");

    r = run_cli(dump, dir, env);
    REQUIRE(r.code == 0);
    CHECK(json::parse(r.out).at("out_dir").get<std::string>() == "from_env");

    r = run_cli(dump + " --set out_dir=from_set", dir, env);
    REQUIRE(r.code == 0);
    CHECK(json::parse(r.out).at("out_dir").get<std::string>() == "from_set");

    r = run_cli(dump + " --set out_dir=from_set --out-dir from_flag", dir, env);
    REQUIRE(r.code == 0);
    CHECK(json::parse(r.out).at("out_dir").get<std::string>() == "from_flag");

    r = run_cli(dump + " --seed 9", dir);
    REQUIRE(r.code == 0);
    CHECK(json::parse(r.out).at("seed").get<std::uint64_t>() == 9);
}

TEST_CASE("unknown configuration keys are rejected", "[cli]") {
    const auto dir = work_dir("badkeys");

    auto r = run_cli("--dump-config --set nope.x=1", dir);
    CHECK(r.code == 2);
    CHECK(r.err.find("unknown config key") != std::string::npos);

    const fs::path cfg_file = dir / "cfg.json";
    {
        std::ofstream f(cfg_file);
        f << R"({"launch": {"m_dim": 1000, "typo_key": 4}})";
    }
    r = run_cli("--dump-config -c " + shellq(cfg_file), dir);
    CHECK(r.code == 2);
    CHECK(r.err.find("launch.typo_key") != std::string::npos);
}

TEST_CASE("validate-scene writes a summary and a manifest", "[cli]") {
    const auto dir = work_dir("validate");
    const auto out = dir / "run";

    auto r = run_cli("validate-scene --scene " + shellq(freespace_scene_path()) + " --out-dir " +
                         shellq(out),
                     dir);
    REQUIRE(r.code == 0);

    const json man = json::parse(slurp(out / "manifest.json"));
    CHECK(man.at("status").get<std::string>() == "ok");
    CHECK(man.at("subcommand").get<std::string>() == "validate-scene");
    CHECK(man.at("outputs").contains("scene_summary.json"));
    CHECK(man.at("timings_s").contains("total"));

    const json s = json::parse(slurp(out / "scene_summary.json"));
    CHECK(s.at("c2").at("lx").get<double>() == 40.0);
    CHECK(s.at("c2").at("ly").get<double>() == 40.0);
    CHECK(s.at("c1_area_m2").get<double>() > 0.0);
    CHECK(s.at("c3_area_m2").get<double>() >= s.at("c1_area_m2").get<double>());
}

TEST_CASE("trace in free space lands on the Friis line", "[cli]") {
    const auto dir = work_dir("trace");
    const auto out = dir / "run";

    auto r = run_cli("trace --scene " + shellq(freespace_scene_path()) + " --out-dir " +
                         shellq(out) + " --set launch.m_dim=100000",
                     dir);
    REQUIRE(r.code == 0);

    const std::string paths_csv = slurp(out / "paths.csv");
    CHECK(data_rows(paths_csv) == 1);
    CHECK(paths_csv.find("los") != std::string::npos);

    // Default endpoints: (0,0,30) to (10,0,1.5), isotropic ends, G_R = 0 dB.
    const json man = json::parse(slurp(out / "manifest.json"));
    const double p_db = man.at("trace").at("p_r_dbw_per_eirp").get<double>();
    const double lambda0 = emtrace::c0 / 3.5e9;
    const double d = std::sqrt(10.0 * 10.0 + 28.5 * 28.5);
    const double friis_db = 20.0 * std::log10(lambda0 / (4.0 * emtrace::pi * d));
    CHECK(p_db == Catch::Approx(friis_db).margin(1e-6));
}

TEST_CASE("map reruns with one seed are byte-identical", "[cli]") {
    const auto dir = work_dir("mapdet");
    const std::string common = "map --scene " + shellq(freespace_scene_path()) +
                               " --seed 5 --workers 1 --set launch.m_dim=100000"
                               " --set map.uniform_spacing=7.5 --out-dir ";

    auto ra = run_cli(common + shellq(dir / "a"), dir);
    REQUIRE(ra.code == 0);
    auto rb = run_cli(common + shellq(dir / "b"), dir);
    REQUIRE(rb.code == 0);

    const std::string cells_a = slurp(dir / "a" / "map_cells.csv");
    const std::string cells_b = slurp(dir / "b" / "map_cells.csv");
    REQUIRE(!cells_a.empty());
    CHECK(cells_a == cells_b);
    CHECK(slurp(dir / "a" / "samples.csv") == slurp(dir / "b" / "samples.csv"));

    const json meta = json::parse(slurp(dir / "a" / "map_meta.json"));
    CHECK(meta.at("simulated").get<int>() > 0);
    CHECK(meta.at("grid").at("nx").get<int>() == 32);

    // The manifest records one hash per artifact; equal files, equal hashes.
    const json man_a = json::parse(slurp(dir / "a" / "manifest.json"));
    const json man_b = json::parse(slurp(dir / "b" / "manifest.json"));
    CHECK(man_a.at("outputs").at("map_cells.csv") == man_b.at("outputs").at("map_cells.csv"));
}

TEST_CASE("errors map to distinct exit codes", "[cli]") {
    const auto dir = work_dir("errors");

    // Missing subcommand: usage text, exit 2.
    auto r = run_cli("", dir);
    CHECK(r.code == 2);

    // Scene path unset.
    r = run_cli("trace --out-dir " + shellq(dir / "r1"), dir);
    CHECK(r.code == 2);
    CHECK(json::parse(slurp(dir / "r1" / "manifest.json")).at("status").get<std::string>() ==
          "config-error");

    // Scene file absent.
    r = run_cli("validate-scene --scene /no/such/scene.json --out-dir " + shellq(dir / "r2"),
                dir);
    CHECK(r.code == 2);
    CHECK(r.err.find("scene") != std::string::npos);
}
