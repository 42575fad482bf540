// Copyright (c) 2026 The tmoe authors.
// SPDX-License-Identifier: Apache-2.0
//
// Generates the committed fixtures under data/:
//   etth1_excerpt.csv - 2,880 hourly rows x 7 channels in ETT column layout
//                       (seeded reconstruction with daily/weekly structure,
//                       trend, and AR(1) noise; value scales follow the ETT
//                       electricity-transformer convention)
//   sine_t2000.csv    - period-24 unit sinusoid, sigma=0.1 noise, T=2000
//
// Run from the repo root: ./build/tools/make_etth1_excerpt [out_dir]

#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

#include "tmoe/data.hpp"
#include "tmoe/rng.hpp"

namespace {

std::string hour_timestamp(int hours_since_start) {
    // 2016-07-01 00:00:00 plus N hours; spans Jul-Oct 2016.
    static const int month_days[] = {31, 31, 30, 31, 30, 31};  // Jul..Dec
    int day = hours_since_start / 24;
    const int hour = hours_since_start % 24;
    int month_ix = 0;
    while (day >= month_days[month_ix]) {
        day -= month_days[month_ix];
        ++month_ix;
    }
    char buf[32];
    std::snprintf(buf, sizeof(buf), "2016-%02d-%02d %02d:00:00", 7 + month_ix, day + 1, hour);
    return buf;
}

struct ChannelTemplate {
    const char* name;
    double mean;
    double daily_amp;
    double weekly_amp;
    double trend_per_hour;
    double noise_sigma;
    double ar1;
    double phase;
};

}  // namespace

int main(int argc, char** argv) {
    const std::string out_dir = argc > 1 ? argv[1] : "data";
    constexpr int kHours = 2880;

    const ChannelTemplate channels[] = {
        {"HUFL", 8.0, 3.2, 1.1, -4.0e-4, 0.80, 0.55, 0.00},
        {"HULL", 2.0, 1.0, 0.40, -1.0e-4, 0.30, 0.50, 0.45},
        {"MUFL", 6.2, 2.6, 0.90, -3.0e-4, 0.65, 0.55, 0.20},
        {"MULL", 1.4, 0.8, 0.30, -8.0e-5, 0.24, 0.50, 0.65},
        {"LUFL", 3.9, 1.5, 0.55, -2.0e-4, 0.42, 0.45, 0.35},
        {"LULL", 1.0, 0.5, 0.20, -5.0e-5, 0.16, 0.45, 0.80},
        {"OT", 30.0, 6.5, 2.2, -2.1e-3, 0.90, 0.80, 1.10},
    };

    tmoe::Series series;
    series.name = "etth1_excerpt";
    std::vector<float> values(kHours * 7);
    series.channel_names = {"HUFL", "HULL", "MUFL", "MULL", "LUFL", "LULL", "OT"};
    series.timestamps.reserve(kHours);
    for (int t = 0; t < kHours; ++t) series.timestamps.push_back(hour_timestamp(t));

    tmoe::Rng rng(20160701);
    const double two_pi = 2.0 * 3.14159265358979323846;
    for (int c = 0; c < 7; ++c) {
        const auto& ch = channels[c];
        double ar_state = 0.0;
        for (int t = 0; t < kHours; ++t) {
            const double daily = ch.daily_amp * std::sin(two_pi * t / 24.0 + ch.phase);
            // Mild harmonic sharpens the daily shape the way load curves look.
            const double sharp = 0.35 * ch.daily_amp * std::sin(two_pi * t / 12.0 + 2.1 * ch.phase);
            const double weekly = ch.weekly_amp * std::sin(two_pi * t / 168.0 + 0.7 * ch.phase);
            ar_state = ch.ar1 * ar_state + rng.normal(0.0, ch.noise_sigma);
            const double v =
                ch.mean + daily + sharp + weekly + ch.trend_per_hour * t + ar_state;
            values[static_cast<std::size_t>(t) * 7 + static_cast<std::size_t>(c)] =
                static_cast<float>(v);
        }
    }
    series.values = tmoe::Tensor<float>::from_data({kHours, 7}, std::move(values));
    tmoe::save_csv(series, out_dir + "/etth1_excerpt.csv");
    std::printf("wrote %s/etth1_excerpt.csv (%d rows x 7 channels)\n", out_dir.c_str(), kHours);

    tmoe::SynthSpec sine;
    sine.periods = {24.0};
    sine.amplitudes = {1.0};
    sine.noise_sigma = 0.1;
    sine.length = 2000;
    sine.channels = 1;
    sine.seed = 2024;
    tmoe::Series s = tmoe::synth_series(sine, "sine_t2000");
    tmoe::save_csv(s, out_dir + "/sine_t2000.csv");
    std::printf("wrote %s/sine_t2000.csv (T=2000, period 24, sigma 0.1)\n", out_dir.c_str());
    return 0;
}
