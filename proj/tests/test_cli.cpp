// Copyright (c) 2026 The tmoe authors.
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "tmoe/cli.hpp"

using namespace tmoe;
namespace fs = std::filesystem;

namespace {

int run_cli(const std::vector<std::string>& args) {
    std::vector<const char*> argv;
    argv.push_back("tmoe");
    for (const auto& a : args) argv.push_back(a.c_str());
    return dispatch(static_cast<int>(argv.size()), argv.data());
}

std::string sandbox_dir() {
    const auto dir = fs::temp_directory_path() / "tmoe_cli_test";
    fs::create_directories(dir);
    return dir.string();
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_config(const std::string& path, const std::string& data_csv,
                  const std::string& out_dir) {
    json cfg = {
        {"version", 1},
        {"seed", 11},
        {"out_dir", out_dir},
        {"data", {{"path", data_csv}}},
        {"split", {{"protocol", "general"}}},
        {"model",
         {{"variant", "timeexpert"},
          {"lookback", 48},
          {"patch_len", 8},
          {"stride", 4},
          {"d_model", 16},
          {"num_heads", 2},
          {"top_k", 4},
          {"share_global", true},
          {"attention", "tmoe"},
          {"num_layers", 1},
          {"horizon", 24},
          {"dropout", 0.1}}},
        {"train", {{"epochs", 2}, {"batch", 16}, {"lr", 2e-3}, {"patience", 2}, {"stride", 2}}}};
    std::ofstream out(path);
    out << cfg.dump(2);
}

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("usage errors exit with code 1") {
    CHECK(run_cli({"no-such-command"}) == 1);
    CHECK(run_cli({"train"}) == 1);                       // missing required --config
    CHECK(run_cli({"train", "--bogus-flag", "x"}) == 1);  // unknown flag
    CHECK(run_cli({}) == 1);                              // no subcommand
}

TEST_CASE("missing config file exits 1 and names the path") {
    std::ostringstream captured;
    auto* old = std::cerr.rdbuf(captured.rdbuf());
    const int rc = run_cli({"train", "--config", "/definitely/not/here.json"});
    std::cerr.rdbuf(old);
    CHECK(rc == 1);
    CHECK(captured.str().find("/definitely/not/here.json") != std::string::npos);
}

TEST_CASE("config with unknown keys is rejected") {
    const std::string dir = sandbox_dir();
    const std::string path = dir + "/bad_cfg.json";
    std::ofstream out(path);
    out << R"({"version":1, "sneaky": true})";
    out.close();
    CHECK(run_cli({"train", "--config", path}) == 1);
}

TEST_CASE("synth -> train -> eval -> predict round trip") {
    const std::string dir = sandbox_dir();
    const std::string csv = dir + "/series.csv";
    CHECK(run_cli({"synth", "--periods", "24", "--T", "600", "--C", "1", "--noise", "0.1",
                   "--seed", "7", "--out", csv}) == 0);
    CHECK(fs::exists(csv));

    const std::string cfg = dir + "/cfg.json";
    write_config(cfg, csv, dir + "/run");
    CHECK(run_cli({"train", "--config", cfg}) == 0);
    CHECK(fs::exists(dir + "/run/checkpoint.tmoe"));
    CHECK(fs::exists(dir + "/run/history.json"));
    CHECK(fs::exists(dir + "/run/run.json"));

    // Manifest carries the digest and resolved config needed for replay.
    const json manifest = json::parse(read_file(dir + "/run/run.json"));
    CHECK(manifest.at("command") == "train");
    CHECK(manifest.at("config_digest").get<std::string>().size() == 16);
    CHECK(manifest.at("config").at("model").at("top_k") == 4);

    CHECK(run_cli({"eval", "--checkpoint", dir + "/run/checkpoint.tmoe", "--data", csv,
                   "--protocol", "general", "--out-dir", dir + "/eval"}) == 0);
    const json report = json::parse(read_file(dir + "/eval/report.json"));
    CHECK(report.at("per_horizon").size() == 1);
    CHECK(report.contains("baselines"));
    CHECK(report.at("paper_reference").contains("etth1_avg"));

    const std::string fc = dir + "/forecast.csv";
    CHECK(run_cli({"predict", "--checkpoint", dir + "/run/checkpoint.tmoe", "--data", csv,
                   "--out", fc, "--stride", "24"}) == 0);
    const std::string fc_text = read_file(fc);
    CHECK(fc_text.rfind("window_id,channel,step,prediction,truth\n", 0) == 0);
}

TEST_CASE("training replays bit-identically from the manifest seed") {
    const std::string dir = sandbox_dir();
    const std::string csv = dir + "/replay.csv";
    CHECK(run_cli({"synth", "--periods", "24", "--T", "400", "--C", "1", "--noise", "0.05",
                   "--seed", "3", "--out", csv}) == 0);
    const std::string cfg = dir + "/replay_cfg.json";
    write_config(cfg, csv, dir + "/replay_a");
    CHECK(run_cli({"train", "--config", cfg}) == 0);
    CHECK(run_cli({"train", "--config", cfg, "--out-dir", dir + "/replay_b"}) == 0);
    CHECK(read_file(dir + "/replay_a/checkpoint.tmoe") ==
          read_file(dir + "/replay_b/checkpoint.tmoe"));
    CHECK(read_file(dir + "/replay_a/history.json") == read_file(dir + "/replay_b/history.json"));
}

TEST_CASE("gradcheck subcommand passes the 1e-4 bar") {
    CHECK(run_cli({"gradcheck", "--tiny"}) == 0);
}

TEST_CASE("TMOE_SEED is the default-seed fallback") {
    const std::string dir = sandbox_dir();
    const std::string a = dir + "/env_a.csv";
    const std::string b = dir + "/env_b.csv";
    setenv("TMOE_SEED", "7", 1);
    CHECK(run_cli({"synth", "--periods", "24", "--T", "100", "--noise", "0.2", "--out", a}) == 0);
    unsetenv("TMOE_SEED");
    CHECK(run_cli({"synth", "--periods", "24", "--T", "100", "--noise", "0.2", "--seed", "7",
                   "--out", b}) == 0);
    CHECK(read_file(a) == read_file(b));

    setenv("TMOE_SEED", "not-a-number", 1);
    const int rc =
        run_cli({"synth", "--periods", "24", "--T", "100", "--noise", "0.2", "--out", a});
    unsetenv("TMOE_SEED");
    CHECK(rc == 1);
}

TEST_CASE("lagmap writes a plot-ready csv") {
    const std::string dir = sandbox_dir();
    const std::string csv = dir + "/lag_series.csv";
    CHECK(run_cli({"synth", "--periods", "24", "--T", "500", "--C", "1", "--seed", "5", "--out",
                   csv}) == 0);
    const std::string out = dir + "/map.csv";
    CHECK(run_cli({"lagmap", "--data", csv, "--L", "96", "--H", "96", "--patch", "24",
                   "--stride", "4", "--out", out}) == 0);
    const std::string text = read_file(out);
    CHECK(text.rfind("input_patch,output_patch,corr\n", 0) == 0);
    // 4x4 patch pairs + header.
    CHECK(std::count(text.begin(), text.end(), '\n') == 17);

    // Patch length must tile the window: validation error, exit 1.
    CHECK(run_cli({"lagmap", "--data", csv, "--L", "96", "--H", "96", "--patch", "17", "--out",
                   out}) == 1);
}

TEST_CASE("sweep-topk rejects duplicate k values with exit 1") {
    const std::string dir = sandbox_dir();
    const std::string csv = dir + "/sweep_series.csv";
    CHECK(run_cli({"synth", "--periods", "24", "--T", "400", "--C", "1", "--noise", "0.1",
                   "--seed", "9", "--out", csv}) == 0);
    const std::string cfg = dir + "/sweep_cfg.json";
    write_config(cfg, csv, dir + "/sweep");
    CHECK(run_cli({"sweep-topk", "--config", cfg, "--k", "2,3,2"}) == 1);
    CHECK(run_cli({"sweep-topk", "--config", cfg, "--k", "2,4"}) == 0);
    const json table = json::parse(read_file(dir + "/sweep/ablation_topk.json"));
    CHECK(table.at("cells").size() == 2);
}

}  // TEST_SUITE
