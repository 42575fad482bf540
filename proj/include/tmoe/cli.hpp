// Copyright (c) 2026 The tmoe authors.
// SPDX-License-Identifier: Apache-2.0
//
// Batch CLI over a declarative JSON config. Flags override file values;
// every run writes a run.json manifest (resolved config + digest + seed)
// sufficient to replay the run bit-identically.
//
// Exit codes: 0 success, 1 validation error, 2 runtime failure.

#pragma once

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "tmoe/checkpoint.hpp"
#include "tmoe/config_json.hpp"
#include "tmoe/data.hpp"
#include "tmoe/evalbench.hpp"
#include "tmoe/gradcheck_suite.hpp"
#include "tmoe/model.hpp"
#include "tmoe/train.hpp"

namespace tmoe {

struct RunConfig {
    std::uint64_t seed = 0;
    std::string out_dir = "runs/last";
    int workers = 1;
    std::string data_path;
    std::optional<SynthSpec> synth;
    SplitSpec split;
    ModelConfig model;
    TrainConfig train_cfg;
    int train_stride = 1;
    std::vector<int> horizons;

    json to_json() const {
        json data = data_path.empty() ? json{{"synth", synth_spec_to_json(
                                                           synth.value_or(SynthSpec{}))}}
                                      : json{{"path", data_path}};
        return json{{"version", 1},
                    {"seed", seed},
                    {"out_dir", out_dir},
                    {"workers", workers},
                    {"data", data},
                    {"split", json{{"protocol", to_string(split.protocol)}}},
                    {"model", model_config_to_json(model)},
                    {"train",
                     json{{"epochs", train_cfg.epochs},
                          {"batch", train_cfg.batch},
                          {"lr", train_cfg.lr},
                          {"patience", train_cfg.patience},
                          {"stride", train_stride}}},
                    {"horizons", horizons}};
    }
};

inline json load_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw MissingFile("config file not found: " + path);
    try {
        return json::parse(in);
    } catch (const json::exception& e) {
        throw ParseError("config file " + path + ": " + e.what(), 0, 0);
    }
}

inline RunConfig parse_run_config(const json& j) {
    require_keys(j, {"version", "seed", "out_dir", "workers", "data", "split", "model", "train",
                     "horizons"},
                 "config");
    if (j.contains("version") && j.at("version") != 1)
        throw InvalidArgument("config: unsupported version");
    RunConfig cfg;
    if (j.contains("seed")) cfg.seed = j.at("seed");
    if (j.contains("out_dir")) cfg.out_dir = j.at("out_dir");
    if (j.contains("workers")) cfg.workers = j.at("workers");
    if (j.contains("data")) {
        const json& d = j.at("data");
        require_keys(d, {"path", "synth"}, "data");
        if (d.contains("path") == d.contains("synth"))
            throw InvalidArgument("data: exactly one of `path` or `synth` required");
        if (d.contains("path"))
            cfg.data_path = d.at("path");
        else
            cfg.synth = synth_spec_from_json(d.at("synth"));
    }
    if (j.contains("split")) {
        require_keys(j.at("split"), {"protocol"}, "split");
        if (j.at("split").contains("protocol"))
            cfg.split.protocol = split_protocol_from_string(j.at("split").at("protocol"));
    }
    if (j.contains("model")) cfg.model = model_config_from_json(j.at("model"));
    if (j.contains("train")) {
        const json& t = j.at("train");
        require_keys(t, {"epochs", "batch", "lr", "patience", "stride"}, "train");
        if (t.contains("epochs")) cfg.train_cfg.epochs = t.at("epochs");
        if (t.contains("batch")) cfg.train_cfg.batch = t.at("batch");
        if (t.contains("lr")) cfg.train_cfg.lr = t.at("lr");
        if (t.contains("patience")) cfg.train_cfg.patience = t.at("patience");
        if (t.contains("stride")) cfg.train_stride = t.at("stride");
    }
    if (j.contains("horizons")) cfg.horizons = j.at("horizons").get<std::vector<int>>();
    if (cfg.horizons.empty()) cfg.horizons = {cfg.model.horizon};
    return cfg;
}

namespace detail_cli {

inline std::uint64_t env_seed_fallback() {
    if (const char* env = std::getenv("TMOE_SEED")) {
        try {
            return std::stoull(env);
        } catch (...) {
            throw InvalidArgument("TMOE_SEED must be an unsigned integer");
        }
    }
    return 0;
}

inline Series load_series(const RunConfig& cfg) {
    if (!cfg.data_path.empty()) return load_csv(cfg.data_path);
    if (cfg.synth.has_value()) return synth_series(*cfg.synth);
    throw InvalidArgument("config has no data source (data.path or data.synth)");
}

inline void write_manifest(const std::string& out_dir, const std::string& command,
                           const RunConfig& cfg) {
    std::filesystem::create_directories(out_dir);
    const json resolved = cfg.to_json();
    const json manifest{{"schema_version", kReportSchemaVersion},
                        {"command", command},
                        {"seed", cfg.seed},
                        {"config", resolved},
                        {"config_digest", config_digest(resolved)},
                        {"toolkit_version", kToolkitVersion}};
    write_text_file(out_dir + "/run.json", manifest.dump(2) + "\n");
}

inline HarnessConfig to_harness(const RunConfig& cfg) {
    HarnessConfig hc;
    hc.model = cfg.model;
    hc.split = cfg.split;
    hc.train = cfg.train_cfg;
    hc.train.seed = cfg.seed;
    hc.horizons = cfg.horizons;
    hc.train_stride = cfg.train_stride;
    hc.workers = cfg.workers;
    hc.seed = cfg.seed;
    return hc;
}

struct CommonFlags {
    std::string config_path;
    std::string out_dir;
    std::int64_t seed = -1;  // -1: not given on the command line
    int workers = 0;

    RunConfig resolve() const {
        RunConfig cfg;
        if (!config_path.empty()) cfg = parse_run_config(load_json_file(config_path));
        if (seed >= 0)
            cfg.seed = static_cast<std::uint64_t>(seed);
        else if (cfg.seed == 0)
            cfg.seed = env_seed_fallback();
        if (!out_dir.empty()) cfg.out_dir = out_dir;
        if (workers > 0) cfg.workers = workers;
        cfg.train_cfg.seed = cfg.seed;
        return cfg;
    }
};

inline int cmd_train(const CommonFlags& flags) {
    RunConfig cfg = flags.resolve();
    Series raw = load_series(cfg);
    const auto b = cfg.split.boundaries(raw.length());
    auto [series, stats] = standardize(raw, b.train_end);
    WindowSet train_w = make_windows(series, cfg.split, SplitPart::train,
                                     cfg.model.patch.lookback, cfg.model.horizon,
                                     cfg.train_stride);
    WindowSet val_w = make_windows(series, cfg.split, SplitPart::val, cfg.model.patch.lookback,
                                   cfg.model.horizon);
    TimeExpert<float> model(cfg.model, cfg.seed);
    TrainHistory history = train(model, train_w, val_w, cfg.train_cfg);

    write_manifest(cfg.out_dir, "train", cfg);
    save_checkpoint(cfg.out_dir + "/checkpoint.tmoe", model.params(), cfg.model);
    json jhist = json::array();
    for (const auto& e : history.epochs)
        jhist.push_back(json{{"train_loss", e.train_loss}, {"val_mse", e.val_mse}});
    write_text_file(cfg.out_dir + "/history.json",
                    json{{"schema_version", kReportSchemaVersion},
                         {"epochs", jhist},
                         {"best_epoch", history.best_epoch},
                         {"best_val_mse", history.best_val}}
                            .dump(2) +
                        "\n");
    std::cout << "trained " << history.epochs.size() << " epochs, best val MSE "
              << history.best_val << " (epoch " << history.best_epoch << ")\n"
              << "checkpoint: " << cfg.out_dir << "/checkpoint.tmoe\n";
    return 0;
}

inline int cmd_eval(const std::string& checkpoint, const std::string& data_path,
                    const std::string& protocol, CommonFlags flags, int stride) {
    TimeExpert<float> model = load_model(checkpoint);
    RunConfig cfg = flags.resolve();
    cfg.model = model.config();
    cfg.data_path = data_path;
    if (!protocol.empty()) cfg.split.protocol = split_protocol_from_string(protocol);

    Series raw = load_series(cfg);
    const auto b = cfg.split.boundaries(raw.length());
    auto [series, stats] = standardize(raw, b.train_end);
    WindowSet test_w = make_windows(series, cfg.split, SplitPart::test,
                                    cfg.model.patch.lookback, cfg.model.horizon, stride);

    const auto t0 = std::chrono::steady_clock::now();
    Metrics m = evaluate_model(model, test_w, cfg.seed, cfg.workers);
    Metrics naive = evaluate_baseline(BaselineKind::repeat_last_value, test_w);
    Metrics seasonal = evaluate_baseline(BaselineKind::repeat_lookback_tail, test_w);

    EvalReport report;
    report.dataset = raw.name;
    report.config_digest = config_digest(model_config_to_json(cfg.model));
    report.seed = cfg.seed;
    report.variant = to_string(cfg.model.tmoe.variant);
    report.rows = {{cfg.model.horizon, m.mse, m.mae}};
    report.wall_clock_s =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    report.paper_reference =
        json{{"note", "reference-only anchor, not asserted"},
             {"etth1_avg", json{{"mse", 0.428}, {"mae", 0.432}}}};

    write_manifest(cfg.out_dir, "eval", cfg);
    json out = report.to_json();
    out["baselines"] = json{
        {"repeat_last_value", json{{"mse", naive.mse}, {"mae", naive.mae}}},
        {"repeat_lookback_tail", json{{"mse", seasonal.mse}, {"mae", seasonal.mae}}}};
    write_text_file(cfg.out_dir + "/report.json", out.dump(2) + "\n");
    write_text_file(cfg.out_dir + "/report.csv",
                    "horizon,mse,mae\n" + std::to_string(cfg.model.horizon) + "," +
                        std::to_string(m.mse) + "," + std::to_string(m.mae) + "\n");
    std::cout << "test MSE " << m.mse << "  MAE " << m.mae << "  (windows " << test_w.size()
              << ")\n"
              << "baseline repeat_last_value MSE " << naive.mse << ", repeat_lookback_tail MSE "
              << seasonal.mse << "\n"
              << "report: " << cfg.out_dir << "/report.json\n";
    return 0;
}

inline int cmd_predict(const std::string& checkpoint, const std::string& data_path,
                       const std::string& out_file, const std::string& part_name,
                       CommonFlags flags, int stride) {
    TimeExpert<float> model = load_model(checkpoint);
    RunConfig cfg = flags.resolve();
    cfg.model = model.config();
    cfg.data_path = data_path;

    Series raw = load_series(cfg);
    const auto b = cfg.split.boundaries(raw.length());
    auto [series, stats] = standardize(raw, b.train_end);
    SplitPart part = SplitPart::test;
    if (part_name == "train")
        part = SplitPart::train;
    else if (part_name == "val")
        part = SplitPart::val;
    else if (part_name != "test")
        throw InvalidArgument("predict: unknown split `" + part_name + "`");
    WindowSet ws = make_windows(series, cfg.split, part, cfg.model.patch.lookback,
                                cfg.model.horizon, stride);

    std::string csv = "window_id,channel,step,prediction,truth\n";
    for (std::size_t i = 0; i < ws.size(); ++i) {
        auto [lb, tg] = ws.materialize(i);
        Rng rng = Rng(cfg.seed).fork(i);
        ForwardCtx ctx;
        ctx.rng = &rng;
        Tensor<float> pred = model_forecast(model, lb, ctx);
        for (std::size_t c = 0; c < pred.cols(); ++c)
            for (std::size_t step = 0; step < pred.rows(); ++step)
                csv += std::to_string(i) + "," + std::to_string(c) + "," +
                       std::to_string(step) + "," + std::to_string(pred(step, c)) + "," +
                       std::to_string(tg(step, c)) + "\n";
    }
    write_text_file(out_file, csv);
    if (!cfg.out_dir.empty()) write_manifest(cfg.out_dir, "predict", cfg);
    std::cout << "wrote " << ws.size() << " windows to " << out_file << "\n";
    return 0;
}

inline int cmd_ablate(const std::string& which, const CommonFlags& flags,
                      const std::vector<int>& k_values) {
    RunConfig cfg = flags.resolve();
    Series raw = load_series(cfg);
    HarnessConfig hc = to_harness(cfg);
    AblationTable table;
    if (which == "attention")
        table = ablate_attention(raw, hc);
    else if (which == "share")
        table = ablate_share(raw, hc);
    else
        table = sweep_topk(raw, hc, k_values);
    write_manifest(cfg.out_dir, "ablate-" + which, cfg);
    write_text_file(cfg.out_dir + "/ablation_" + which + ".json", table.to_json().dump(2) + "\n");
    write_text_file(cfg.out_dir + "/ablation_" + which + ".csv", table.to_csv());
    std::cout << table.to_csv();
    std::cout << "wrote " << cfg.out_dir << "/ablation_" << which << ".{json,csv}\n";
    return 0;
}

inline int cmd_anomaly_bench(const CommonFlags& flags, const std::string& kinds_arg,
                             std::vector<std::uint64_t> seeds, std::size_t position,
                             std::size_t length, double magnitude) {
    RunConfig cfg = flags.resolve();
    Series raw = load_series(cfg);
    const auto b = cfg.split.boundaries(raw.length());

    std::vector<AnomalyKind> kinds;
    if (kinds_arg == "all") {
        kinds = {AnomalyKind::abrupt_outlier, AnomalyKind::periodicity_deviation,
                 AnomalyKind::zero_imputation};
    } else {
        kinds.push_back(anomaly_kind_from_string(kinds_arg));
    }
    if (seeds.empty()) seeds = {cfg.seed};
    if (position == 0)
        position = b.val_end + static_cast<std::size_t>(cfg.model.patch.lookback) / 2;
    if (length == 0) length = 12;

    std::vector<AnomalySpec> specs;
    for (const AnomalyKind kind : kinds) {
        AnomalySpec spec;
        spec.kind = kind;
        spec.position = position;
        spec.length = length;
        spec.magnitude = magnitude;
        spec.seed = cfg.seed + 1;
        specs.push_back(spec);
    }
    auto reports =
        anomaly_harness(raw, to_harness(cfg),
                        {AttentionVariant::full, AttentionVariant::random, AttentionVariant::tmoe},
                        specs, seeds);
    write_manifest(cfg.out_dir, "anomaly-bench", cfg);
    json jarr = json::array();
    for (const auto& r : reports) jarr.push_back(r.to_json());
    write_text_file(cfg.out_dir + "/robustness.json", jarr.dump(2) + "\n");
    write_text_file(cfg.out_dir + "/robustness.csv", robustness_csv(reports));
    std::cout << robustness_csv(reports) << "wrote " << cfg.out_dir
              << "/robustness.{json,csv}\n";
    return 0;
}

inline int cmd_synth(const std::vector<double>& periods, const std::vector<double>& amplitudes,
                     double noise, std::size_t length, std::size_t channels, std::int64_t seed,
                     const std::string& out_file) {
    SynthSpec spec;
    spec.periods = periods;
    spec.amplitudes = amplitudes.empty() ? std::vector<double>(periods.size(), 1.0) : amplitudes;
    spec.noise_sigma = noise;
    spec.length = length;
    spec.channels = channels;
    spec.seed = seed >= 0 ? static_cast<std::uint64_t>(seed) : env_seed_fallback();
    Series s = synth_series(spec, std::filesystem::path(out_file).stem().string());
    save_csv(s, out_file);
    std::cout << "wrote " << out_file << " (T=" << s.length() << ", C=" << s.channels()
              << ")\n";
    return 0;
}

inline int cmd_gradcheck(double h) {
    GradCheckSuiteResult r = run_gradcheck_suite(h);
    std::cout << "tmoe head        max rel err " << r.head_err << "\n"
              << "encoder block    max rel err " << r.block_err << "\n"
              << "tiny timeexpert  max rel err " << r.model_err << "\n"
              << "tiny timeexpert-g max rel err " << r.g_model_err << "\n"
              << "max rel err " << r.max_err() << (r.max_err() <= 1e-4 ? "  (pass)" : "  (FAIL)")
              << "\n";
    return r.max_err() <= 1e-4 ? 0 : 1;
}

inline int cmd_lagmap(const std::string& data_path, int lookback, int horizon, int patch,
                      int stride, std::size_t max_windows, const std::string& out_file) {
    Series s = load_csv(data_path);
    LagMap map = lag_correlation_map(s, lookback, horizon, patch, stride, max_windows);
    write_text_file(out_file, map.to_csv());
    std::cout << "wrote " << out_file << " (" << map.input_patches << " x "
              << map.output_patches << " patch pairs)\n";
    return 0;
}

}  // namespace detail_cli

inline int dispatch(int argc, const char* const* argv) {
    using namespace detail_cli;

    CLI::App app{"TMOE forecasting toolkit"};
    app.require_subcommand(1);
    int exit_code = 0;

    // train
    CommonFlags train_flags;
    auto* train_cmd = app.add_subcommand("train", "train a model and write a checkpoint");
    train_cmd->add_option("--config", train_flags.config_path, "JSON run config")->required();
    train_cmd->add_option("--seed", train_flags.seed, "seed override");
    train_cmd->add_option("--out-dir", train_flags.out_dir, "output directory override");
    train_cmd->callback([&] { exit_code = cmd_train(train_flags); });

    // eval
    CommonFlags eval_flags;
    std::string eval_ck, eval_data, eval_protocol;
    int eval_stride = 1;
    auto* eval_cmd = app.add_subcommand("eval", "evaluate a checkpoint on the test split");
    eval_cmd->add_option("--checkpoint", eval_ck, "checkpoint path")->required();
    eval_cmd->add_option("--data", eval_data, "dataset CSV")->required();
    eval_cmd->add_option("--protocol", eval_protocol, "split protocol: ett | general");
    eval_cmd->add_option("--out-dir", eval_flags.out_dir, "output directory");
    eval_cmd->add_option("--seed", eval_flags.seed, "seed override");
    eval_cmd->add_option("--workers", eval_flags.workers, "parallel eval workers");
    eval_cmd->add_option("--stride", eval_stride, "test window stride");
    eval_cmd->callback(
        [&] { exit_code = cmd_eval(eval_ck, eval_data, eval_protocol, eval_flags, eval_stride); });

    // predict
    CommonFlags pred_flags;
    std::string pred_ck, pred_data, pred_out, pred_split = "test";
    int pred_stride = 1;
    auto* pred_cmd = app.add_subcommand("predict", "write forecasts for a split to CSV");
    pred_cmd->add_option("--checkpoint", pred_ck, "checkpoint path")->required();
    pred_cmd->add_option("--data", pred_data, "dataset CSV")->required();
    pred_cmd->add_option("--out", pred_out, "forecast CSV path")->required();
    pred_cmd->add_option("--split", pred_split, "train | val | test");
    pred_cmd->add_option("--stride", pred_stride, "window stride");
    pred_cmd->add_option("--out-dir", pred_flags.out_dir, "manifest directory");
    pred_cmd->add_option("--seed", pred_flags.seed, "seed override");
    pred_cmd->callback([&] {
        exit_code = cmd_predict(pred_ck, pred_data, pred_out, pred_split, pred_flags, pred_stride);
    });

    // ablations
    CommonFlags abl_attn_flags;
    auto* abl_attn = app.add_subcommand("ablate-attention",
                                        "train/eval full vs random vs tmoe attention");
    abl_attn->add_option("--config", abl_attn_flags.config_path, "JSON run config")->required();
    abl_attn->add_option("--seed", abl_attn_flags.seed, "seed override");
    abl_attn->add_option("--out-dir", abl_attn_flags.out_dir, "output directory");
    abl_attn->callback([&] { exit_code = cmd_ablate("attention", abl_attn_flags, {}); });

    CommonFlags abl_share_flags;
    auto* abl_share = app.add_subcommand("ablate-share",
                                         "train/eval with and without the shared global expert");
    abl_share->add_option("--config", abl_share_flags.config_path, "JSON run config")->required();
    abl_share->add_option("--seed", abl_share_flags.seed, "seed override");
    abl_share->add_option("--out-dir", abl_share_flags.out_dir, "output directory");
    abl_share->callback([&] { exit_code = cmd_ablate("share", abl_share_flags, {}); });

    CommonFlags sweep_flags;
    std::vector<int> sweep_ks;
    auto* sweep = app.add_subcommand("sweep-topk", "train/eval across top-k values");
    sweep->add_option("--config", sweep_flags.config_path, "JSON run config")->required();
    sweep->add_option("--k", sweep_ks, "top-k values")->required()->delimiter(',');
    sweep->add_option("--seed", sweep_flags.seed, "seed override");
    sweep->add_option("--out-dir", sweep_flags.out_dir, "output directory");
    sweep->callback([&] { exit_code = cmd_ablate("topk", sweep_flags, sweep_ks); });

    // anomaly bench
    CommonFlags anom_flags;
    std::string anom_kinds = "all";
    std::vector<std::uint64_t> anom_seeds;
    std::size_t anom_pos = 0, anom_len = 0;
    double anom_mag = 4.0;
    auto* anom = app.add_subcommand("anomaly-bench",
                                    "clean vs corrupted forecasts per attention variant");
    anom->add_option("--config", anom_flags.config_path, "JSON run config")->required();
    anom->add_option("--kinds", anom_kinds,
                     "all | abrupt_outlier | periodicity_deviation | zero_imputation");
    anom->add_option("--seeds", anom_seeds, "training seeds")->delimiter(',');
    anom->add_option("--position", anom_pos, "anomaly start index (default: inside test split)");
    anom->add_option("--length", anom_len, "anomaly length (default 12)");
    anom->add_option("--magnitude", anom_mag, "outlier magnitude in sigma units");
    anom->add_option("--out-dir", anom_flags.out_dir, "output directory");
    anom->add_option("--seed", anom_flags.seed, "seed override");
    anom->callback([&] {
        exit_code = cmd_anomaly_bench(anom_flags, anom_kinds, anom_seeds, anom_pos, anom_len,
                                      anom_mag);
    });

    // synth
    std::vector<double> synth_periods, synth_amps;
    double synth_noise = 0.0;
    std::size_t synth_T = 0, synth_C = 1;
    std::int64_t synth_seed = -1;
    std::string synth_out;
    auto* synth = app.add_subcommand("synth", "generate a synthetic series CSV");
    synth->add_option("--periods", synth_periods, "sinusoid periods")->required()->delimiter(',');
    synth->add_option("--amplitudes", synth_amps, "per-period amplitudes (default 1)")
        ->delimiter(',');
    synth->add_option("--noise", synth_noise, "gaussian noise sigma");
    synth->add_option("--T", synth_T, "series length")->required();
    synth->add_option("--C", synth_C, "channel count");
    synth->add_option("--seed", synth_seed, "seed");
    synth->add_option("--out", synth_out, "output CSV path")->required();
    synth->callback([&] {
        exit_code = cmd_synth(synth_periods, synth_amps, synth_noise, synth_T, synth_C,
                              synth_seed, synth_out);
    });

    // gradcheck
    bool tiny = false;
    double gc_h = 0.0;
    auto* gc = app.add_subcommand("gradcheck", "run the 64-bit gradient verification suite");
    gc->add_flag("--tiny", tiny, "run the tiny-model suite (the default and only suite)");
    gc->add_option("--step", gc_h, "finite-difference step (0 = per-check default)");
    gc->callback([&] { exit_code = cmd_gradcheck(gc_h); });

    // lagmap
    std::string lag_data, lag_out = "lagmap.csv";
    int lag_L = 96, lag_H = 96, lag_patch = 24, lag_stride = 1;
    std::size_t lag_max = 100000;
    auto* lag = app.add_subcommand("lagmap", "patch-lag Pearson correlation map");
    lag->add_option("--data", lag_data, "dataset CSV")->required();
    lag->add_option("--L", lag_L, "lookback length");
    lag->add_option("--H", lag_H, "horizon length");
    lag->add_option("--patch", lag_patch, "patch length (must tile L and H)");
    lag->add_option("--stride", lag_stride, "window stride");
    lag->add_option("--max-windows", lag_max, "window cap");
    lag->add_option("--out", lag_out, "output CSV path");
    lag->callback([&] {
        exit_code = cmd_lagmap(lag_data, lag_L, lag_H, lag_patch, lag_stride, lag_max, lag_out);
    });

    try {
        app.parse(argc, argv);
        return exit_code;
    } catch (const CLI::CallForHelp& e) {
        std::cout << app.help();
        return 0;
    } catch (const CLI::ParseError& e) {
        std::cerr << "error: " << e.what() << "\n" << app.help();
        return 1;
    } catch (const InvalidArgument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const InvalidShape& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const MissingFile& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const ParseError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const EmptySplit& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const UnsupportedVersion& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const CorruptCheckpoint& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "runtime failure: " << e.what() << "\n";
        return 2;
    }
}

}  // namespace tmoe
