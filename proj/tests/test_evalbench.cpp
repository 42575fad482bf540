// Copyright (c) 2026 The tmoe authors.
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <cmath>
#include <vector>

#include "tmoe/data.hpp"
#include "tmoe/evalbench.hpp"
#include "tmoe/model.hpp"
#include "tmoe/train.hpp"

using namespace tmoe;

namespace {

// 24-value pattern tiled exactly: seasonal copies are bit-equal floats.
Series tiled_series(std::size_t reps) {
    Rng rng(6);
    std::vector<float> pattern(24);
    for (auto& v : pattern) v = static_cast<float>(rng.uniform(-1.0, 1.0));
    std::vector<float> data;
    data.reserve(reps * 24);
    for (std::size_t r = 0; r < reps; ++r)
        data.insert(data.end(), pattern.begin(), pattern.end());
    Series s;
    s.name = "tiled";
    s.values = Tensor<float>::from_data({reps * 24, 1}, std::move(data));
    s.channel_names = {"x"};
    return s;
}

HarnessConfig tiny_harness(std::uint64_t seed = 3) {
    HarnessConfig hc;
    hc.model.patch = {24, 8, 4};
    hc.model.tmoe.d_model = 8;
    hc.model.tmoe.num_heads = 2;
    hc.model.tmoe.top_k = 3;
    hc.model.tmoe.share_global = true;
    hc.model.num_layers = 1;
    hc.model.horizon = 8;
    hc.model.dropout = 0.1;
    hc.split.protocol = SplitProtocol::general;
    hc.train.epochs = 2;
    hc.train.batch = 16;
    hc.train.lr = 2e-3;
    hc.train.patience = 0;
    hc.horizons = {8};
    hc.train_stride = 2;
    hc.seed = seed;
    return hc;
}

Series bench_series(std::size_t length = 400) {
    SynthSpec spec;
    spec.periods = {24.0, 60.0};
    spec.amplitudes = {1.0, 0.4};
    spec.noise_sigma = 0.15;
    spec.length = length;
    spec.channels = 1;
    spec.seed = 12;
    return synth_series(spec, "bench");
}

}  // namespace

TEST_SUITE("evalbench") {

TEST_CASE("evaluate: perfect predictor scores zero, metrics accumulate") {
    Series s = tiled_series(20);  // 480 points, bit-exact period 24
    auto ws = make_windows(s, 48, 24);
    // Seasonal copy of the lookback tail is bit-identical to the target here.
    Metrics perfect = evaluate_forecaster(
        [&](std::size_t, const Tensor<float>& lb) {
            return baseline_forecast(BaselineKind::repeat_lookback_tail, lb, 24);
        },
        ws);
    CHECK(perfect.mse == 0.0);
    CHECK(perfect.mae == 0.0);
}

TEST_CASE("evaluate: constant-zero predictor on standardized data has MSE ~ 1") {
    SynthSpec spec;
    spec.periods = {24.0};
    spec.amplitudes = {1.0};
    spec.noise_sigma = 0.3;
    spec.length = 10000;
    spec.channels = 1;
    spec.seed = 44;
    Series raw = synth_series(spec);
    auto [std_series, stats] = standardize(raw, raw.length());
    auto ws = make_windows(std_series, 24, 24, 7);
    Metrics zeros = evaluate_forecaster(
        [&](std::size_t, const Tensor<float>&) {
            return Tensor<float>::zeros({24, 1});
        },
        ws);
    CHECK(zeros.mse == doctest::Approx(1.0).epsilon(0.05));
}

TEST_CASE("evaluate: worker count does not change the result") {
    Series s = bench_series();
    auto [std_series, stats] = standardize(s, 280);
    auto ws = make_windows(std_series, 24, 8, 3);
    ModelConfig mc = tiny_harness().model;
    TimeExpert<float> model(mc, 5);
    Metrics a = evaluate_model(model, ws, 9, 1);
    Metrics b = evaluate_model(model, ws, 9, 4);
    CHECK(a.mse == b.mse);
    CHECK(a.mae == b.mae);
}

TEST_CASE("evaluate: worker exceptions surface on the calling thread") {
    Series s = bench_series();
    auto ws = make_windows(s, 24, 8, 3);
    CHECK_THROWS_AS(evaluate_forecaster(
                        [](std::size_t, const Tensor<float>&) -> Tensor<float> {
                            throw NonFinite("poisoned forecaster");
                        },
                        ws, 4),
                    NonFinite);
}

TEST_CASE("report: averaged metrics equal the mean of per-horizon entries") {
    EvalReport rep;
    rep.rows = {{96, 0.40, 0.42}, {192, 0.44, 0.45}, {336, 0.50, 0.48}, {720, 0.52, 0.50}};
    const Metrics avg = rep.average();
    CHECK(std::abs(avg.mse - (0.40 + 0.44 + 0.50 + 0.52) / 4.0) <= 1e-9);
    CHECK(std::abs(avg.mae - (0.42 + 0.45 + 0.48 + 0.50) / 4.0) <= 1e-9);
    const json j = rep.to_json();
    CHECK(j.at("schema_version") == kReportSchemaVersion);
    CHECK(j.at("per_horizon").size() == 4);
}

TEST_CASE("baselines: repeat-last-value is flat, seasonal tail copies") {
    std::vector<float> v(48);
    for (std::size_t i = 0; i < 48; ++i) v[i] = static_cast<float>(i);
    auto lb = Tensor<float>::from_data({48, 1}, std::move(v));
    auto flat = baseline_forecast(BaselineKind::repeat_last_value, lb, 8);
    for (std::size_t i = 0; i < 8; ++i) CHECK(flat(i, 0) == 47.0f);
    auto tail = baseline_forecast(BaselineKind::repeat_lookback_tail, lb, 8);
    for (std::size_t i = 0; i < 8; ++i) CHECK(tail(i, 0) == 40.0f + static_cast<float>(i));
}

TEST_CASE("ablate-attention: emits all three variants, replays bit-identically") {
    Series s = bench_series();
    HarnessConfig hc = tiny_harness();
    AblationTable t1 = ablate_attention(s, hc);
    REQUIRE(t1.cells.size() == 3);
    CHECK(t1.cells[0].label == "full");
    CHECK(t1.cells[1].label == "random");
    CHECK(t1.cells[2].label == "tmoe");
    for (const auto& c : t1.cells) CHECK(std::isfinite(c.mse));
    CHECK(!t1.paper_reference.is_null());

    AblationTable t2 = ablate_attention(s, hc);
    for (std::size_t i = 0; i < 3; ++i) {
        CHECK(t1.cells[i].mse == t2.cells[i].mse);
        CHECK(t1.cells[i].mae == t2.cells[i].mae);
    }
    // CSV emission: header + one line per cell.
    const std::string csv = t1.to_csv();
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 4);
}

TEST_CASE("ablate-share: both arms plus averages; off-arm equals a direct run") {
    Series s = bench_series();
    HarnessConfig hc = tiny_harness(7);
    AblationTable table = ablate_share(s, hc);
    // horizons + 1 rows per arm.
    REQUIRE(table.cells.size() == 2 * (hc.horizons.size() + 1));
    CHECK(table.cells[0].label == "share");
    CHECK(table.cells[1].label == "share_avg");
    CHECK(table.cells[2].label == "wo_share");

    ModelConfig mc = hc.model;
    mc.tmoe.share_global = false;
    mc.horizon = hc.horizons[0];
    auto [model, direct] = train_and_eval(s, hc, mc);
    CHECK(table.cells[2].mse == direct.mse);
    CHECK(table.cells[2].mae == direct.mae);
}

TEST_CASE("sweep-topk: one row per k, duplicates rejected") {
    Series s = bench_series();
    HarnessConfig hc = tiny_harness(9);
    AblationTable single = sweep_topk(s, hc, {2});
    CHECK(single.cells.size() == 1);
    CHECK(single.cells[0].label == "k=2");

    CHECK_THROWS_AS(sweep_topk(s, hc, {2, 3, 2}), InvalidArgument);
    CHECK_THROWS_AS(sweep_topk(s, hc, {}), InvalidArgument);
    CHECK_THROWS_AS(sweep_topk(s, hc, {0}), InvalidArgument);
}

TEST_CASE("sweep-topk: k=N with frozen unit decay matches full attention") {
    // With lambda pinned far negative, softplus ~ 0 and its gradient is 0, so
    // psi stays identically 1. Then top-(k=N) gating over all experts is the
    // same softmax as vanilla attention and the two variants must agree.
    Series s = bench_series();
    auto [std_series, stats] = standardize(s, 280);
    auto ws = make_windows(std_series, 24, 8, 3);

    ModelConfig mc = tiny_harness().model;
    mc.tmoe.share_global = false;
    mc.tmoe.top_k = mc.patch.token_count();  // k = N
    mc.tmoe.variant = AttentionVariant::tmoe;
    TimeExpert<float> tmoe_model(mc, 21);
    for (int l = 0; l < mc.num_layers; ++l)
        for (int h = 0; h < mc.tmoe.num_heads; ++h)
            tmoe_model.params()
                .get("enc." + std::to_string(l) + ".attn.h" + std::to_string(h) + ".lambda")
                .mutable_data()[0] = -1e6f;

    ModelConfig full_cfg = mc;
    full_cfg.tmoe.variant = AttentionVariant::full;
    TimeExpert<float> full_model(full_cfg, tmoe_model.params());

    Metrics m_tmoe = evaluate_model(tmoe_model, ws);
    Metrics m_full = evaluate_model(full_model, ws);
    CHECK(m_tmoe.mse == doctest::Approx(m_full.mse).epsilon(1e-4));
    CHECK(m_tmoe.mae == doctest::Approx(m_full.mae).epsilon(1e-4));
}

TEST_CASE("anomaly harness: paired rows, N/A selection stat for full attention") {
    Series s = bench_series(400);
    HarnessConfig hc = tiny_harness(13);
    hc.train.epochs = 1;

    const auto b = hc.split.boundaries(s.length());
    AnomalySpec zero_len;
    zero_len.kind = AnomalyKind::zero_imputation;
    zero_len.position = b.val_end + 30;
    zero_len.length = 0;
    AnomalySpec zeros;
    zeros.kind = AnomalyKind::zero_imputation;
    zeros.position = b.val_end + 30;
    zeros.length = 8;

    auto reports = anomaly_harness(s, hc, {AttentionVariant::full, AttentionVariant::tmoe},
                                   {zero_len, zeros}, {1});
    REQUIRE(reports.size() == 4);

    for (const auto& r : reports) {
        if (r.anomaly == "zero_imputation" && r.affected_windows == 0) {
            CHECK(r.deviation == 0.0);  // zero-length anomaly touches nothing
        }
        if (r.variant == "full") CHECK(r.selection_fraction == -1.0);
        if (r.variant == "tmoe") CHECK(r.selection_fraction >= 0.0);
    }
    // The real anomaly must affect at least one window and move forecasts.
    bool some_deviation = false;
    for (const auto& r : reports)
        if (r.affected_windows > 0 && r.deviation > 0.0) some_deviation = true;
    CHECK(some_deviation);

    const std::string csv = robustness_csv(reports);
    CHECK(csv.find("NA") != std::string::npos);
}

TEST_CASE("lag map: periodic series lights up aligned lags, noise stays flat") {
    // Pure period-24 sinusoid, patch 24: every (input, output) patch pair is
    // phase-aligned, so correlations are ~1 everywhere (and symmetric).
    SynthSpec sine;
    sine.periods = {24.0};
    sine.amplitudes = {1.0};
    sine.noise_sigma = 0.0;
    sine.length = 400;
    sine.channels = 1;
    sine.seed = 3;
    Series s = synth_series(sine);
    LagMap map = lag_correlation_map(s, 96, 96, 24, 5);
    CHECK(map.input_patches == 4);
    CHECK(map.output_patches == 4);
    for (std::size_t i = 0; i < map.input_patches; ++i)
        for (std::size_t j = 0; j < map.output_patches; ++j) {
            CHECK(map.at(i, j) == doctest::Approx(1.0).epsilon(0.05));
            CHECK(map.at(i, j) == doctest::Approx(map.at(j, i)).epsilon(1e-9));
        }

    // White noise with 10^3 windows: every entry within +-0.1 of zero.
    SynthSpec wn;
    wn.periods = {24.0};
    wn.amplitudes = {0.0};
    wn.noise_sigma = 1.0;
    wn.length = 1040 + 39;
    wn.channels = 1;
    wn.seed = 15;
    Series noise = synth_series(wn);
    LagMap nmap = lag_correlation_map(noise, 24, 16, 8, 1, 1000);
    for (const double v : nmap.values) {
        CHECK(v >= -1.0);
        CHECK(v <= 1.0);
        CHECK(std::abs(v) <= 0.1);
    }

    CHECK_THROWS_AS(lag_correlation_map(s, 96, 96, 17), InvalidArgument);
}

}  // TEST_SUITE
