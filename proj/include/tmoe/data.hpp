// Copyright (c) 2026 The tmoe authors.
// SPDX-License-Identifier: Apache-2.0
//
// ETT-style CSV ingestion, benchmark splits, sliding-window sampling,
// synthetic series generation, and the three anomaly injectors.

#pragma once

#include <array>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "tmoe/common.hpp"
#include "tmoe/rng.hpp"
#include "tmoe/tensor.hpp"

namespace tmoe {

struct SynthSpec {
    std::vector<double> periods;
    std::vector<double> amplitudes;
    double noise_sigma = 0.0;
    std::size_t length = 0;
    std::size_t channels = 1;
    std::uint64_t seed = 0;
};

struct Series {
    std::string name;
    Tensor<float> values;  // [T x C], plain storage
    std::vector<std::string> timestamps;  // optional, empty when absent
    std::vector<std::string> channel_names;
    std::optional<SynthSpec> generator;  // set by synth_series

    std::size_t length() const { return values.rows(); }
    std::size_t channels() const { return values.cols(); }
};

enum class SplitProtocol { ett, general };

inline SplitProtocol split_protocol_from_string(const std::string& s) {
    if (s == "ett") return SplitProtocol::ett;
    if (s == "general") return SplitProtocol::general;
    throw InvalidArgument("unknown split protocol: " + s);
}

inline std::string to_string(SplitProtocol p) {
    return p == SplitProtocol::ett ? "ett" : "general";
}

struct SplitSpec {
    SplitProtocol protocol = SplitProtocol::ett;

    // (train, val, test) fractions; 6:2:2 for ETT, 7:1:2 otherwise.
    std::array<double, 3> ratios() const {
        return protocol == SplitProtocol::ett ? std::array<double, 3>{0.6, 0.2, 0.2}
                                              : std::array<double, 3>{0.7, 0.1, 0.2};
    }

    struct Boundaries {
        std::size_t train_end;
        std::size_t val_end;
        std::size_t total;
    };

    Boundaries boundaries(std::size_t total) const {
        const auto r = ratios();
        const auto train_end = static_cast<std::size_t>(static_cast<double>(total) * r[0]);
        const auto val_end =
            train_end + static_cast<std::size_t>(static_cast<double>(total) * r[1]);
        return {train_end, val_end, total};
    }
};

enum class SplitPart { train, val, test };

// ---------------------------------------------------------------------------
// CSV loading (UTF-8, comma-separated, header row, first column `date`)
// ---------------------------------------------------------------------------

inline Series load_csv(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw MissingFile("load_csv: cannot open " + path);
    std::string line;
    if (!std::getline(in, line)) throw ParseError("load_csv: empty file " + path, 1, 1);
    if (line.size() >= 3 && static_cast<unsigned char>(line[0]) == 0xEF) line.erase(0, 3);
    if (!line.empty() && line.back() == '\r') line.pop_back();

    auto split_fields = [](const std::string& s) {
        std::vector<std::string> fields;
        std::size_t start = 0;
        for (std::size_t i = 0; i <= s.size(); ++i) {
            if (i == s.size() || s[i] == ',') {
                fields.push_back(s.substr(start, i - start));
                start = i + 1;
            }
        }
        return fields;
    };

    const auto header = split_fields(line);
    if (header.size() < 2 || header[0] != "date")
        throw ParseError("load_csv: header must start with `date`: " + path, 1, 1);
    Series series;
    series.name = path;
    series.channel_names.assign(header.begin() + 1, header.end());
    const std::size_t channels = series.channel_names.size();

    std::vector<float> data;
    std::size_t row = 1;
    while (std::getline(in, line)) {
        ++row;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const auto fields = split_fields(line);
        if (fields.size() != channels + 1)
            throw ParseError("load_csv: row " + std::to_string(row) + " has " +
                                 std::to_string(fields.size()) + " fields, expected " +
                                 std::to_string(channels + 1),
                             row, fields.size());
        series.timestamps.push_back(fields[0]);
        for (std::size_t c = 0; c < channels; ++c) {
            const std::string& cell = fields[c + 1];
            double v = 0.0;
            const char* first = cell.data();
            const char* last = cell.data() + cell.size();
            auto [ptr, ec] = std::from_chars(first, last, v);
            if (ec != std::errc{} || ptr != last)
                throw NonNumericCell("load_csv: non-numeric cell `" + cell + "` at row " +
                                         std::to_string(row) + ", column " +
                                         std::to_string(c + 2),
                                     row, c + 2);
            if (!std::isfinite(v))
                throw ParseError("load_csv: non-finite cell at row " + std::to_string(row) +
                                     ", column " + std::to_string(c + 2),
                                 row, c + 2);
            data.push_back(static_cast<float>(v));
        }
    }
    const std::size_t rows = data.size() / channels;
    if (rows == 0) throw ParseError("load_csv: no data rows in " + path, row, 1);
    series.values = Tensor<float>::from_data(Shape{rows, channels}, std::move(data));
    return series;
}

inline void save_csv(const Series& series, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw MissingFile("save_csv: cannot open " + path + " for writing");
    out << "date";
    for (const auto& c : series.channel_names) out << ',' << c;
    out << '\n';
    char buf[64];
    for (std::size_t t = 0; t < series.length(); ++t) {
        if (t < series.timestamps.size())
            out << series.timestamps[t];
        else
            out << t;
        for (std::size_t c = 0; c < series.channels(); ++c) {
            const auto [ptr, ec] =
                std::to_chars(buf, buf + sizeof(buf), series.values(t, c),
                              std::chars_format::general);
            out << ',';
            out.write(buf, ptr - buf);
        }
        out << '\n';
    }
}

// ---------------------------------------------------------------------------
// Standardization (train-split statistics only)
// ---------------------------------------------------------------------------

struct ChannelStats {
    std::vector<double> mu;
    std::vector<double> sigma;
};

inline std::pair<Series, ChannelStats> standardize(const Series& series,
                                                   std::size_t train_boundary) {
    if (train_boundary == 0 || train_boundary > series.length())
        throw InvalidArgument("standardize: train boundary out of range");
    constexpr double eps = 1e-5;
    const std::size_t channels = series.channels();
    ChannelStats stats;
    stats.mu.assign(channels, 0.0);
    stats.sigma.assign(channels, 0.0);
    for (std::size_t c = 0; c < channels; ++c) {
        double mean = 0.0;
        for (std::size_t t = 0; t < train_boundary; ++t) mean += series.values(t, c);
        mean /= static_cast<double>(train_boundary);
        double var = 0.0;
        for (std::size_t t = 0; t < train_boundary; ++t) {
            const double d = series.values(t, c) - mean;
            var += d * d;
        }
        var /= static_cast<double>(train_boundary);
        stats.mu[c] = mean;
        stats.sigma[c] = std::sqrt(var);
    }
    Series out = series;
    out.values = series.values.detach();
    for (std::size_t t = 0; t < series.length(); ++t)
        for (std::size_t c = 0; c < channels; ++c)
            out.values.at(t, c) = static_cast<float>(
                (series.values(t, c) - stats.mu[c]) / (stats.sigma[c] + eps));
    return {std::move(out), std::move(stats)};
}

// ---------------------------------------------------------------------------
// Sliding windows
// ---------------------------------------------------------------------------

// A window is identified by its anchor: the index of the first target step.
// Lookback occupies [anchor-L, anchor), target [anchor, anchor+H). Lookbacks
// may reach back across the split boundary; targets may not.
class WindowSet {
public:
    WindowSet() = default;
    WindowSet(const Series* series, std::vector<std::size_t> anchors, int lookback, int horizon)
        : series_(series), anchors_(std::move(anchors)), lookback_(lookback), horizon_(horizon) {}

    std::size_t size() const { return anchors_.size(); }
    int lookback() const { return lookback_; }
    int horizon() const { return horizon_; }
    const std::vector<std::size_t>& anchors() const { return anchors_; }
    const Series& series() const { return *series_; }

    std::pair<Tensor<float>, Tensor<float>> materialize(std::size_t i) const {
        const std::size_t anchor = anchors_[i];
        const std::size_t channels = series_->channels();
        const auto L = static_cast<std::size_t>(lookback_);
        const auto H = static_cast<std::size_t>(horizon_);
        std::vector<float> lb(L * channels), tg(H * channels);
        for (std::size_t r = 0; r < L; ++r)
            for (std::size_t c = 0; c < channels; ++c)
                lb[r * channels + c] = series_->values(anchor - L + r, c);
        for (std::size_t r = 0; r < H; ++r)
            for (std::size_t c = 0; c < channels; ++c)
                tg[r * channels + c] = series_->values(anchor + r, c);
        return {Tensor<float>::from_data(Shape{L, channels}, std::move(lb)),
                Tensor<float>::from_data(Shape{H, channels}, std::move(tg))};
    }

private:
    const Series* series_ = nullptr;
    std::vector<std::size_t> anchors_;
    int lookback_ = 0;
    int horizon_ = 0;
};

inline WindowSet make_windows(const Series& series, const SplitSpec& split, SplitPart part,
                              int lookback, int horizon, int stride = 1) {
    if (lookback < 1 || horizon < 1 || stride < 1)
        throw InvalidArgument("make_windows: bad geometry");
    const auto b = split.boundaries(series.length());
    std::size_t begin = 0, end = 0;
    switch (part) {
        case SplitPart::train: begin = 0; end = b.train_end; break;
        case SplitPart::val: begin = b.train_end; end = b.val_end; break;
        case SplitPart::test: begin = b.val_end; end = b.total; break;
    }
    const std::size_t L = static_cast<std::size_t>(lookback);
    const std::size_t H = static_cast<std::size_t>(horizon);
    const std::size_t first = std::max(begin, L);
    std::vector<std::size_t> anchors;
    if (end >= H && first <= end - H) {
        for (std::size_t a = first; a + H <= end; a += static_cast<std::size_t>(stride))
            anchors.push_back(a);
    }
    if (anchors.empty())
        throw EmptySplit("make_windows: split " + std::to_string(static_cast<int>(part)) +
                         " has no usable windows");
    return WindowSet(&series, std::move(anchors), lookback, horizon);
}

// Single-split convenience (whole series as one split).
inline WindowSet make_windows(const Series& series, int lookback, int horizon, int stride = 1) {
    const std::size_t L = static_cast<std::size_t>(lookback);
    const std::size_t H = static_cast<std::size_t>(horizon);
    std::vector<std::size_t> anchors;
    if (series.length() >= H && L + H <= series.length()) {
        for (std::size_t a = L; a + H <= series.length(); a += static_cast<std::size_t>(stride))
            anchors.push_back(a);
    }
    if (anchors.empty()) throw EmptySplit("make_windows: series too short");
    return WindowSet(&series, std::move(anchors), lookback, horizon);
}

// ---------------------------------------------------------------------------
// Synthetic series and anomaly injection
// ---------------------------------------------------------------------------

// channel c = sum_j A_j sin(2 pi t / P_j + phase_{c,j}) + N(0, sigma^2)
inline Series synth_series(const SynthSpec& spec, const std::string& name = "synth") {
    if (spec.periods.size() != spec.amplitudes.size())
        throw InvalidArgument("synth_series: periods/amplitudes size mismatch");
    if (spec.length == 0 || spec.channels == 0)
        throw InvalidArgument("synth_series: empty series");
    for (double p : spec.periods)
        if (p <= 0.0) throw InvalidArgument("synth_series: periods must be positive");
    Rng rng(spec.seed);
    const std::size_t J = spec.periods.size();
    std::vector<double> phases(spec.channels * J);
    for (auto& p : phases) p = rng.uniform(0.0, 2.0 * 3.14159265358979323846);
    std::vector<float> data(spec.length * spec.channels);
    for (std::size_t c = 0; c < spec.channels; ++c) {
        for (std::size_t t = 0; t < spec.length; ++t) {
            double v = 0.0;
            for (std::size_t j = 0; j < J; ++j) {
                v += spec.amplitudes[j] *
                     std::sin(2.0 * 3.14159265358979323846 * static_cast<double>(t) /
                                  spec.periods[j] +
                              phases[c * J + j]);
            }
            if (spec.noise_sigma > 0.0) v += rng.normal(0.0, spec.noise_sigma);
            data[t * spec.channels + c] = static_cast<float>(v);
        }
    }
    Series series;
    series.name = name;
    series.values = Tensor<float>::from_data(Shape{spec.length, spec.channels}, std::move(data));
    series.channel_names.resize(spec.channels);
    for (std::size_t c = 0; c < spec.channels; ++c)
        series.channel_names[c] = "ch" + std::to_string(c);
    series.generator = spec;
    return series;
}

enum class AnomalyKind { abrupt_outlier, periodicity_deviation, zero_imputation };

inline std::string to_string(AnomalyKind k) {
    switch (k) {
        case AnomalyKind::abrupt_outlier: return "abrupt_outlier";
        case AnomalyKind::periodicity_deviation: return "periodicity_deviation";
        case AnomalyKind::zero_imputation: return "zero_imputation";
    }
    return "?";
}

inline AnomalyKind anomaly_kind_from_string(const std::string& s) {
    if (s == "abrupt_outlier") return AnomalyKind::abrupt_outlier;
    if (s == "periodicity_deviation") return AnomalyKind::periodicity_deviation;
    if (s == "zero_imputation") return AnomalyKind::zero_imputation;
    throw InvalidArgument("unknown anomaly kind: " + s);
}

struct AnomalySpec {
    AnomalyKind kind = AnomalyKind::abrupt_outlier;
    std::size_t position = 0;
    std::size_t length = 0;
    double magnitude = 3.0;  // sigma units for outliers
    std::uint64_t seed = 0;
};

struct InjectedSeries {
    Series series;
    std::vector<std::uint8_t> mask;  // [T], 1 inside the anomalous region
};

inline InjectedSeries inject_anomaly(const Series& input, const AnomalySpec& spec) {
    if (spec.position + spec.length > input.length())
        throw InvalidArgument("inject_anomaly: region outside series");
    InjectedSeries out;
    out.series = input;
    out.series.values = input.values.detach();
    out.mask.assign(input.length(), 0);
    for (std::size_t t = spec.position; t < spec.position + spec.length; ++t) out.mask[t] = 1;
    if (spec.length == 0) return out;

    const std::size_t channels = input.channels();
    switch (spec.kind) {
        case AnomalyKind::zero_imputation: {
            for (std::size_t t = spec.position; t < spec.position + spec.length; ++t)
                for (std::size_t c = 0; c < channels; ++c) out.series.values.at(t, c) = 0.0f;
            break;
        }
        case AnomalyKind::abrupt_outlier: {
            // Constant spike of magnitude * channel std over the region.
            for (std::size_t c = 0; c < channels; ++c) {
                double mean = 0.0;
                for (std::size_t t = 0; t < input.length(); ++t) mean += input.values(t, c);
                mean /= static_cast<double>(input.length());
                double var = 0.0;
                for (std::size_t t = 0; t < input.length(); ++t) {
                    const double d = input.values(t, c) - mean;
                    var += d * d;
                }
                var /= static_cast<double>(input.length());
                const double spike = spec.magnitude * std::sqrt(var);
                for (std::size_t t = spec.position; t < spec.position + spec.length; ++t)
                    out.series.values.at(t, c) =
                        static_cast<float>(input.values(t, c) + spike);
            }
            break;
        }
        case AnomalyKind::periodicity_deviation: {
            // Re-synthesize the region with phase shifted by pi/2 and
            // frequency scaled by 1.5x; needs the generator parameters.
            if (!input.generator.has_value())
                throw InvalidArgument(
                    "inject_anomaly: periodicity_deviation requires a synthetic series");
            const SynthSpec& gen = *input.generator;
            Rng phase_rng(gen.seed);
            const std::size_t J = gen.periods.size();
            std::vector<double> phases(gen.channels * J);
            for (auto& p : phases) p = phase_rng.uniform(0.0, 2.0 * 3.14159265358979323846);
            Rng noise_rng(spec.seed);
            for (std::size_t t = spec.position; t < spec.position + spec.length; ++t) {
                for (std::size_t c = 0; c < channels; ++c) {
                    double v = 0.0;
                    for (std::size_t j = 0; j < J; ++j) {
                        v += gen.amplitudes[j] *
                             std::sin(2.0 * 3.14159265358979323846 * 1.5 *
                                          static_cast<double>(t) / gen.periods[j] +
                                      phases[c * J + j] + 3.14159265358979323846 / 2.0);
                    }
                    if (gen.noise_sigma > 0.0) v += noise_rng.normal(0.0, gen.noise_sigma);
                    out.series.values.at(t, c) = static_cast<float>(v);
                }
            }
            break;
        }
    }
    return out;
}

}  // namespace tmoe
