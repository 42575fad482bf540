// Copyright (c) 2026 The tmoe authors.
// SPDX-License-Identifier: Apache-2.0
//
// Metrics, naive baselines, the three ablation runners, the anomaly
// robustness harness, and the patch-lag correlation diagnostic. Reports are
// emitted as JSON (full) and CSV (plot-ready); every harness replays
// deterministically from (seed, config digest).

#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <exception>
#include <functional>
#include <set>
#include <string>
#include <thread>
#include <type_traits>
#include <vector>

#include "tmoe/checkpoint.hpp"
#include "tmoe/config_json.hpp"
#include "tmoe/data.hpp"
#include "tmoe/model.hpp"
#include "tmoe/train.hpp"

namespace tmoe {

inline constexpr int kReportSchemaVersion = 1;

struct Metrics {
    double mse = 0.0;
    double mae = 0.0;
};

namespace detail {

// Static chunking over window indices; per-window outputs land in index
// order, so the reduction is identical for any worker count. The first
// worker exception is rethrown on the calling thread after the join.
inline void parallel_windows(std::size_t n, int workers, const std::function<void(std::size_t)>& fn) {
    if (workers <= 1 || n < 2) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    const std::size_t w = std::min<std::size_t>(static_cast<std::size_t>(workers), n);
    std::vector<std::thread> threads;
    threads.reserve(w);
    std::vector<std::exception_ptr> errors(w);
    for (std::size_t t = 0; t < w; ++t) {
        threads.emplace_back([t, w, n, &fn, &errors] {
            try {
                for (std::size_t i = t; i < n; i += w) fn(i);
            } catch (...) {
                errors[t] = std::current_exception();
            }
        });
    }
    for (auto& th : threads) th.join();
    for (const auto& err : errors)
        if (err) std::rethrow_exception(err);
}

}  // namespace detail

// Evaluates any forecaster fn(window index, lookback) -> prediction over the
// full window enumeration. Per-window sums land in index order, so the final
// reduction is identical for every worker count.
template <typename Forecaster>
Metrics evaluate_forecaster(const Forecaster& fn, const WindowSet& windows, int workers = 1) {
    const std::size_t n = windows.size();
    std::vector<double> se(n, 0.0), ae(n, 0.0);
    std::vector<std::size_t> counts(n, 0);
    detail::parallel_windows(n, workers, [&](std::size_t i) {
        auto [lb, tg] = windows.materialize(i);
        Tensor<float> pred = fn(i, lb);
        if (pred.shape() != tg.shape())
            throw InvalidShape("evaluate_forecaster: prediction shape mismatch");
        double s = 0.0, a = 0.0;
        for (std::size_t j = 0; j < pred.size(); ++j) {
            const double d = static_cast<double>(pred.data()[j]) - tg.data()[j];
            s += d * d;
            a += std::abs(d);
        }
        se[i] = s;
        ae[i] = a;
        counts[i] = pred.size();
    });
    double s = 0.0, a = 0.0;
    std::size_t c = 0;
    for (std::size_t i = 0; i < n; ++i) {
        s += se[i];
        a += ae[i];
        c += counts[i];
    }
    return {c ? s / static_cast<double>(c) : 0.0, c ? a / static_cast<double>(c) : 0.0};
}

template <typename T>
Metrics evaluate_model(const TimeExpert<T>& model, const WindowSet& windows,
                       std::uint64_t seed = 0, int workers = 1) {
    return evaluate_forecaster(
        [&](std::size_t i, const Tensor<float>& lb) {
            Rng rng = Rng(seed).fork(i);
            ForwardCtx ctx;
            ctx.rng = &rng;
            Tensor<T> pred = model_forecast(model, to_precision<T>(lb), ctx);
            if constexpr (std::is_same_v<T, float>) {
                return pred;
            } else {
                std::vector<float> v(pred.size());
                for (std::size_t j = 0; j < v.size(); ++j)
                    v[j] = static_cast<float>(pred.data()[j]);
                return Tensor<float>::from_data(pred.shape(), std::move(v));
            }
        },
        windows, workers);
}

enum class BaselineKind { repeat_last_value, repeat_lookback_tail };

inline std::string to_string(BaselineKind k) {
    return k == BaselineKind::repeat_last_value ? "repeat_last_value" : "repeat_lookback_tail";
}

// repeat_last_value holds the final observed value flat across the horizon;
// repeat_lookback_tail copies the last H lookback steps (seasonal naive).
inline Tensor<float> baseline_forecast(BaselineKind kind, const Tensor<float>& lookback,
                                       int horizon) {
    const std::size_t L = lookback.rows(), C = lookback.cols();
    const auto H = static_cast<std::size_t>(horizon);
    Tensor<float> out = Tensor<float>::zeros(Shape{H, C});
    for (std::size_t i = 0; i < H; ++i) {
        for (std::size_t c = 0; c < C; ++c) {
            if (kind == BaselineKind::repeat_last_value) {
                out.at(i, c) = lookback(L - 1, c);
            } else {
                // Tile the lookback backwards when H exceeds L.
                const std::size_t src = (L - H % L + i) % L;
                out.at(i, c) = lookback(src, c);
            }
        }
    }
    return out;
}

inline Metrics evaluate_baseline(BaselineKind kind, const WindowSet& windows) {
    double s = 0.0, a = 0.0;
    std::size_t c = 0;
    for (std::size_t i = 0; i < windows.size(); ++i) {
        auto [lb, tg] = windows.materialize(i);
        Tensor<float> pred = baseline_forecast(kind, lb, windows.horizon());
        for (std::size_t j = 0; j < pred.size(); ++j) {
            const double d = static_cast<double>(pred.data()[j]) - tg.data()[j];
            s += d * d;
            a += std::abs(d);
        }
        c += pred.size();
    }
    return {c ? s / static_cast<double>(c) : 0.0, c ? a / static_cast<double>(c) : 0.0};
}

// ---------------------------------------------------------------------------
// Reports
// ---------------------------------------------------------------------------

struct HorizonRow {
    int horizon = 0;
    double mse = 0.0;
    double mae = 0.0;
};

struct EvalReport {
    std::string dataset;
    std::string config_digest;
    std::uint64_t seed = 0;
    double wall_clock_s = 0.0;
    std::string variant;
    std::vector<HorizonRow> rows;
    json paper_reference;  // documentation anchors only, never asserted

    Metrics average() const {
        Metrics avg;
        if (rows.empty()) return avg;
        for (const auto& r : rows) {
            avg.mse += r.mse;
            avg.mae += r.mae;
        }
        avg.mse /= static_cast<double>(rows.size());
        avg.mae /= static_cast<double>(rows.size());
        return avg;
    }

    json to_json() const {
        json jrows = json::array();
        for (const auto& r : rows)
            jrows.push_back(json{{"horizon", r.horizon}, {"mse", r.mse}, {"mae", r.mae}});
        const Metrics avg = average();
        json out{{"schema_version", kReportSchemaVersion},
                 {"dataset", dataset},
                 {"config_digest", config_digest},
                 {"seed", seed},
                 {"wall_clock_s", wall_clock_s},
                 {"variant", variant},
                 {"per_horizon", jrows},
                 {"average", json{{"mse", avg.mse}, {"mae", avg.mae}}}};
        if (!paper_reference.is_null()) out["paper_reference"] = paper_reference;
        return out;
    }
};

struct AblationCell {
    std::string label;  // arm: attention variant, share on/off, or k value
    int horizon = 0;
    double mse = 0.0;
    double mae = 0.0;
};

struct AblationTable {
    std::string name;  // "attention" | "share" | "topk"
    std::string dataset;
    std::string config_digest;
    std::uint64_t seed = 0;
    double wall_clock_s = 0.0;
    std::vector<AblationCell> cells;
    json paper_reference;

    json to_json() const {
        json jcells = json::array();
        for (const auto& c : cells)
            jcells.push_back(json{{"label", c.label},
                                  {"horizon", c.horizon},
                                  {"mse", c.mse},
                                  {"mae", c.mae}});
        json out{{"schema_version", kReportSchemaVersion},
                 {"ablation", name},
                 {"dataset", dataset},
                 {"config_digest", config_digest},
                 {"seed", seed},
                 {"wall_clock_s", wall_clock_s},
                 {"cells", jcells}};
        if (!paper_reference.is_null()) out["paper_reference"] = paper_reference;
        return out;
    }

    std::string to_csv() const {
        std::string s = "label,horizon,mse,mae\n";
        for (const auto& c : cells) {
            s += c.label + "," + std::to_string(c.horizon) + "," + std::to_string(c.mse) + "," +
                 std::to_string(c.mae) + "\n";
        }
        return s;
    }
};

// ---------------------------------------------------------------------------
// Harness plumbing
// ---------------------------------------------------------------------------

struct HarnessConfig {
    ModelConfig model;
    SplitSpec split;
    TrainConfig train;
    std::vector<int> horizons;  // one trained model per horizon
    int train_stride = 1;       // training window stride (budget knob)
    int workers = 1;
    std::uint64_t seed = 0;
};

// Standardize with train-split stats, train, return test metrics.
inline std::pair<TimeExpert<float>, Metrics> train_and_eval(const Series& raw,
                                                            const HarnessConfig& hc,
                                                            const ModelConfig& mc) {
    const auto b = hc.split.boundaries(raw.length());
    auto [series, stats] = standardize(raw, b.train_end);
    TrainConfig tc = hc.train;
    tc.seed = hc.seed;
    WindowSet train_w = make_windows(series, hc.split, SplitPart::train, mc.patch.lookback,
                                     mc.horizon, hc.train_stride);
    WindowSet val_w =
        make_windows(series, hc.split, SplitPart::val, mc.patch.lookback, mc.horizon);
    WindowSet test_w =
        make_windows(series, hc.split, SplitPart::test, mc.patch.lookback, mc.horizon);
    TimeExpert<float> model(mc, hc.seed);
    train(model, train_w, val_w, tc);
    Metrics m = evaluate_model(model, test_w, hc.seed, hc.workers);
    return {std::move(model), m};
}

// Table 3 companion: identical seed and budget across the three variants.
inline AblationTable ablate_attention(const Series& raw, const HarnessConfig& hc) {
    const auto t0 = std::chrono::steady_clock::now();
    AblationTable table;
    table.name = "attention";
    table.dataset = raw.name;
    table.seed = hc.seed;
    table.config_digest = config_digest(model_config_to_json(hc.model));
    table.paper_reference =
        json{{"note", "reference results on ETTh1 for this ablation"},
             {"etth1", json{{"full", json{{"mse", 0.438}, {"mae", 0.435}}},
                            {"random", json{{"mse", 0.433}, {"mae", 0.433}}},
                            {"tmoe", json{{"mse", 0.428}, {"mae", 0.432}}}}}};
    for (const AttentionVariant variant :
         {AttentionVariant::full, AttentionVariant::random, AttentionVariant::tmoe}) {
        for (const int horizon : hc.horizons) {
            ModelConfig mc = hc.model;
            mc.tmoe.variant = variant;
            mc.horizon = horizon;
            auto [model, metrics] = train_and_eval(raw, hc, mc);
            table.cells.push_back({to_string(variant), horizon, metrics.mse, metrics.mae});
        }
    }
    table.wall_clock_s =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return table;
}

// Table 4 companion: share on vs off, per-horizon rows plus an average row.
inline AblationTable ablate_share(const Series& raw, const HarnessConfig& hc) {
    const auto t0 = std::chrono::steady_clock::now();
    AblationTable table;
    table.name = "share";
    table.dataset = raw.name;
    table.seed = hc.seed;
    table.config_digest = config_digest(model_config_to_json(hc.model));
    table.paper_reference =
        json{{"note", "reference averaged results for the share ablation"},
             {"solar_energy", json{{"share", json{{"mse", 0.229}, {"mae", 0.263}}},
                                   {"wo_share", json{{"mse", 0.232}, {"mae", 0.265}}}}},
             {"ettm2", json{{"share", json{{"mse", 0.283}, {"mae", 0.330}}},
                            {"wo_share", json{{"mse", 0.282}, {"mae", 0.326}}}}}};
    for (const bool share : {true, false}) {
        double mse_sum = 0.0, mae_sum = 0.0;
        for (const int horizon : hc.horizons) {
            ModelConfig mc = hc.model;
            mc.tmoe.share_global = share;
            mc.horizon = horizon;
            auto [model, metrics] = train_and_eval(raw, hc, mc);
            table.cells.push_back(
                {share ? "share" : "wo_share", horizon, metrics.mse, metrics.mae});
            mse_sum += metrics.mse;
            mae_sum += metrics.mae;
        }
        const auto n = static_cast<double>(hc.horizons.size());
        table.cells.push_back({share ? "share_avg" : "wo_share_avg", 0, mse_sum / n, mae_sum / n});
    }
    table.wall_clock_s =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return table;
}

// Top-k sweep; emits one row per (k, horizon). Values are observations, not
// contracts - the curve shape is reported, never asserted.
inline AblationTable sweep_topk(const Series& raw, const HarnessConfig& hc,
                                const std::vector<int>& k_values) {
    if (k_values.empty()) throw InvalidArgument("sweep_topk: empty k list");
    std::set<int> seen;
    for (const int k : k_values) {
        if (k < 1) throw InvalidArgument("sweep_topk: k must be >= 1");
        if (!seen.insert(k).second)
            throw InvalidArgument("sweep_topk: duplicate k value " + std::to_string(k));
    }
    const auto t0 = std::chrono::steady_clock::now();
    AblationTable table;
    table.name = "topk";
    table.dataset = raw.name;
    table.seed = hc.seed;
    table.config_digest = config_digest(model_config_to_json(hc.model));
    for (const int k : k_values) {
        for (const int horizon : hc.horizons) {
            ModelConfig mc = hc.model;
            mc.tmoe.top_k = k;
            mc.horizon = horizon;
            auto [model, metrics] = train_and_eval(raw, hc, mc);
            table.cells.push_back({"k=" + std::to_string(k), horizon, metrics.mse, metrics.mae});
        }
    }
    table.wall_clock_s =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return table;
}

// ---------------------------------------------------------------------------
// Anomaly robustness harness
// ---------------------------------------------------------------------------

struct RobustnessReport {
    std::string variant;
    std::string anomaly;
    std::uint64_t seed = 0;
    double clean_mse = 0.0;
    double corrupted_mse = 0.0;
    double deviation = 0.0;           // mean ||f(corrupt)-f(clean)||^2 / (H*C)
    double selection_fraction = -1.0;  // top-k slots inside the mask; -1 = N/A
    std::size_t affected_windows = 0;

    json to_json() const {
        json out{{"schema_version", kReportSchemaVersion},
                 {"variant", variant},
                 {"anomaly", anomaly},
                 {"seed", seed},
                 {"clean_mse", clean_mse},
                 {"corrupted_mse", corrupted_mse},
                 {"deviation", deviation},
                 {"affected_windows", affected_windows}};
        if (selection_fraction >= 0.0)
            out["selection_fraction"] = selection_fraction;
        else
            out["selection_fraction"] = nullptr;
        return out;
    }
};

inline std::string robustness_csv(const std::vector<RobustnessReport>& reports) {
    std::string s =
        "variant,anomaly,seed,clean_mse,corrupted_mse,deviation,selection_fraction,affected_"
        "windows\n";
    for (const auto& r : reports) {
        s += r.variant + "," + r.anomaly + "," + std::to_string(r.seed) + "," +
             std::to_string(r.clean_mse) + "," + std::to_string(r.corrupted_mse) + "," +
             std::to_string(r.deviation) + ",";
        s += r.selection_fraction >= 0.0 ? std::to_string(r.selection_fraction) : "NA";
        s += "," + std::to_string(r.affected_windows) + "\n";
    }
    return s;
}

// Fraction of local top-k selections pointing at tokens whose patch span
// overlaps the anomaly mask within the lookback. Global-expert slots are not
// top-k slots and are excluded.
inline double selection_mask_fraction(const std::vector<SelectionTrace>& traces,
                                      const std::vector<std::uint8_t>& lookback_mask,
                                      int patch_len, int stride) {
    std::size_t inside = 0, total = 0;
    for (const auto& trace : traces) {
        for (const auto& head : trace.heads) {
            for (const auto& q : head.queries) {
                for (const int sel : q.selected) {
                    if (sel < 0) continue;  // global expert sentinel
                    ++total;
                    const std::size_t start = static_cast<std::size_t>(sel) *
                                              static_cast<std::size_t>(stride);
                    bool overlap = false;
                    for (int j = 0; j < patch_len; ++j) {
                        const std::size_t t = start + static_cast<std::size_t>(j);
                        if (t < lookback_mask.size() && lookback_mask[t]) {
                            overlap = true;
                            break;
                        }
                    }
                    if (overlap) ++inside;
                }
            }
        }
    }
    return total ? static_cast<double>(inside) / static_cast<double>(total) : 0.0;
}

// For each (variant, anomaly, seed) cell: train on the clean series, inject
// the anomaly into the test region, and compare forecasts on every test
// window whose lookback crosses the mask (targets stay clean).
inline std::vector<RobustnessReport> anomaly_harness(const Series& raw, const HarnessConfig& hc,
                                                     const std::vector<AttentionVariant>& variants,
                                                     const std::vector<AnomalySpec>& anomalies,
                                                     const std::vector<std::uint64_t>& seeds) {
    std::vector<RobustnessReport> reports;
    const auto b = hc.split.boundaries(raw.length());
    for (const std::uint64_t seed : seeds) {
        for (const AttentionVariant variant : variants) {
            ModelConfig mc = hc.model;
            mc.tmoe.variant = variant;
            mc.horizon = hc.horizons.empty() ? hc.model.horizon : hc.horizons[0];
            HarnessConfig cell = hc;
            cell.seed = seed;
            auto [model, clean_metrics] = train_and_eval(raw, cell, mc);

            for (const AnomalySpec& spec : anomalies) {
                InjectedSeries injected = inject_anomaly(raw, spec);
                auto [clean_std, stats] = standardize(raw, b.train_end);
                auto [corrupt_std, stats2] = standardize(injected.series, b.train_end);
                WindowSet clean_w = make_windows(clean_std, hc.split, SplitPart::test,
                                                 mc.patch.lookback, mc.horizon);
                WindowSet corrupt_w = make_windows(corrupt_std, hc.split, SplitPart::test,
                                                   mc.patch.lookback, mc.horizon);

                RobustnessReport rep;
                rep.variant = to_string(variant);
                rep.anomaly = to_string(spec.kind);
                rep.seed = seed;
                rep.clean_mse = clean_metrics.mse;

                double corrupt_se = 0.0, dev = 0.0;
                std::size_t corrupt_count = 0;
                double sel_num = 0.0;
                std::size_t sel_den = 0;
                const auto L = static_cast<std::size_t>(mc.patch.lookback);
                for (std::size_t i = 0; i < clean_w.anchors().size(); ++i) {
                    const std::size_t anchor = clean_w.anchors()[i];
                    // Affected: mask hits the lookback but leaves the target clean.
                    bool lb_hit = false, tg_hit = false;
                    for (std::size_t t = anchor - L; t < anchor; ++t)
                        if (injected.mask[t]) lb_hit = true;
                    for (std::size_t t = anchor;
                         t < anchor + static_cast<std::size_t>(mc.horizon); ++t)
                        if (injected.mask[t]) tg_hit = true;
                    if (!lb_hit || tg_hit) continue;

                    auto [clean_lb, tg] = clean_w.materialize(i);
                    auto [corrupt_lb, tg2] = corrupt_w.materialize(i);
                    Rng rng_a = Rng(seed).fork(i);
                    Rng rng_b = Rng(seed).fork(i);
                    ForwardCtx ctx_clean, ctx_corrupt;
                    ctx_clean.rng = &rng_a;
                    ctx_corrupt.rng = &rng_b;
                    std::vector<SelectionTrace> traces;
                    if (variant == AttentionVariant::tmoe) ctx_corrupt.traces = &traces;

                    Tensor<float> f_clean = model_forecast(model, clean_lb, ctx_clean);
                    Tensor<float> f_corrupt = model_forecast(model, corrupt_lb, ctx_corrupt);

                    for (std::size_t j = 0; j < f_corrupt.size(); ++j) {
                        const double d =
                            static_cast<double>(f_corrupt.data()[j]) - tg.data()[j];
                        corrupt_se += d * d;
                        const double dd = static_cast<double>(f_corrupt.data()[j]) -
                                          static_cast<double>(f_clean.data()[j]);
                        dev += dd * dd;
                    }
                    corrupt_count += f_corrupt.size();

                    if (variant == AttentionVariant::tmoe) {
                        std::vector<std::uint8_t> lb_mask(L, 0);
                        for (std::size_t t = 0; t < L; ++t)
                            lb_mask[t] = injected.mask[anchor - L + t];
                        sel_num += selection_mask_fraction(traces, lb_mask, mc.patch.patch_len,
                                                           mc.patch.stride);
                        ++sel_den;
                    }
                    ++rep.affected_windows;
                }
                rep.corrupted_mse =
                    corrupt_count ? corrupt_se / static_cast<double>(corrupt_count) : 0.0;
                rep.deviation =
                    corrupt_count ? dev / static_cast<double>(corrupt_count) : 0.0;
                if (variant == AttentionVariant::tmoe && sel_den > 0)
                    rep.selection_fraction = sel_num / static_cast<double>(sel_den);
                else if (variant == AttentionVariant::tmoe)
                    rep.selection_fraction = 0.0;
                reports.push_back(std::move(rep));
            }
        }
    }
    return reports;
}

// ---------------------------------------------------------------------------
// Lag-correlation diagnostic
// ---------------------------------------------------------------------------

struct LagMap {
    std::size_t input_patches = 0;
    std::size_t output_patches = 0;
    std::vector<double> values;  // row-major [input x output]

    double at(std::size_t i, std::size_t j) const { return values[i * output_patches + j]; }

    std::string to_csv() const {
        std::string s = "input_patch,output_patch,corr\n";
        for (std::size_t i = 0; i < input_patches; ++i)
            for (std::size_t j = 0; j < output_patches; ++j)
                s += std::to_string(i) + "," + std::to_string(j) + "," +
                     std::to_string(at(i, j)) + "\n";
        return s;
    }
};

// Mean Pearson correlation between input patch i and output patch j over
// windows and channels. Entries live in [-1, 1] by construction.
inline LagMap lag_correlation_map(const Series& series, int lookback, int horizon, int patch_len,
                                  int window_stride = 1, std::size_t max_windows = 100000) {
    if (patch_len < 1 || lookback % patch_len != 0 || horizon % patch_len != 0)
        throw InvalidArgument("lag_correlation_map: patch must tile lookback and horizon");
    WindowSet windows = make_windows(series, lookback, horizon, window_stride);
    LagMap map;
    map.input_patches = static_cast<std::size_t>(lookback / patch_len);
    map.output_patches = static_cast<std::size_t>(horizon / patch_len);
    map.values.assign(map.input_patches * map.output_patches, 0.0);
    std::vector<std::size_t> counts(map.values.size(), 0);

    const std::size_t n_win = std::min(windows.size(), max_windows);
    const auto P = static_cast<std::size_t>(patch_len);
    std::vector<double> xi(P), yj(P);
    for (std::size_t w = 0; w < n_win; ++w) {
        auto [lb, tg] = windows.materialize(w);
        for (std::size_t c = 0; c < lb.cols(); ++c) {
            for (std::size_t i = 0; i < map.input_patches; ++i) {
                for (std::size_t k = 0; k < P; ++k) xi[k] = lb(i * P + k, c);
                double mx = 0.0;
                for (const double v : xi) mx += v;
                mx /= static_cast<double>(P);
                double vx = 0.0;
                for (const double v : xi) vx += (v - mx) * (v - mx);
                for (std::size_t j = 0; j < map.output_patches; ++j) {
                    for (std::size_t k = 0; k < P; ++k) yj[k] = tg(j * P + k, c);
                    double my = 0.0;
                    for (const double v : yj) my += v;
                    my /= static_cast<double>(P);
                    double vy = 0.0, cov = 0.0;
                    for (std::size_t k = 0; k < P; ++k) {
                        vy += (yj[k] - my) * (yj[k] - my);
                        cov += (xi[k] - mx) * (yj[k] - my);
                    }
                    if (vx < 1e-24 || vy < 1e-24) continue;  // degenerate patch
                    const double corr = cov / std::sqrt(vx * vy);
                    map.values[i * map.output_patches + j] += corr;
                    ++counts[i * map.output_patches + j];
                }
            }
        }
    }
    for (std::size_t i = 0; i < map.values.size(); ++i)
        if (counts[i]) map.values[i] /= static_cast<double>(counts[i]);
    return map;
}

// ---------------------------------------------------------------------------
// File helpers
// ---------------------------------------------------------------------------

inline void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw MissingFile("write_text_file: cannot open " + path + " for writing");
    out << content;
}

}  // namespace tmoe
