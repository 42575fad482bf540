// Copyright (c) 2026 The tmoe authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "tmoe/common.hpp"
#include "tmoe/data.hpp"
#include "tmoe/model.hpp"

namespace tmoe {

using json = nlohmann::json;

// Strict key checking: config files reject anything they do not understand.
inline void require_keys(const json& obj, const std::vector<std::string>& allowed,
                         const std::string& where) {
    if (!obj.is_object()) throw InvalidArgument(where + ": expected a JSON object");
    for (const auto& [key, _] : obj.items()) {
        bool ok = false;
        for (const auto& a : allowed)
            if (key == a) ok = true;
        if (!ok) throw InvalidArgument(where + ": unknown key `" + key + "`");
    }
}

inline json model_config_to_json(const ModelConfig& cfg) {
    return json{
        {"variant", to_string(cfg.variant)},
        {"lookback", cfg.patch.lookback},
        {"patch_len", cfg.patch.patch_len},
        {"stride", cfg.patch.stride},
        {"d_model", cfg.tmoe.d_model},
        {"num_heads", cfg.tmoe.num_heads},
        {"top_k", cfg.tmoe.top_k},
        {"share_global", cfg.tmoe.share_global},
        {"causal", cfg.tmoe.causal},
        {"attention", to_string(cfg.tmoe.variant)},
        {"num_layers", cfg.num_layers},
        {"d_ff", cfg.d_ff},
        {"horizon", cfg.horizon},
        {"dropout", cfg.dropout},
        {"max_tokens", cfg.max_tokens},
    };
}

inline ModelConfig model_config_from_json(const json& j) {
    require_keys(j,
                 {"variant", "lookback", "patch_len", "stride", "d_model", "num_heads", "top_k",
                  "share_global", "causal", "attention", "num_layers", "d_ff", "horizon",
                  "dropout", "max_tokens"},
                 "model");
    ModelConfig cfg;
    if (j.contains("variant")) cfg.variant = model_variant_from_string(j.at("variant"));
    if (cfg.variant == ModelVariant::timeexpert_g) {
        // Causal variant defaults: segment tokens of length 96, no overlap.
        cfg.patch.patch_len = 96;
        cfg.patch.stride = 96;
    }
    if (j.contains("lookback")) cfg.patch.lookback = j.at("lookback");
    if (j.contains("patch_len")) cfg.patch.patch_len = j.at("patch_len");
    if (j.contains("stride")) cfg.patch.stride = j.at("stride");
    if (j.contains("d_model")) cfg.tmoe.d_model = j.at("d_model");
    if (j.contains("num_heads")) cfg.tmoe.num_heads = j.at("num_heads");
    if (j.contains("top_k")) cfg.tmoe.top_k = j.at("top_k");
    if (j.contains("share_global")) cfg.tmoe.share_global = j.at("share_global");
    if (j.contains("causal")) cfg.tmoe.causal = j.at("causal");
    if (j.contains("attention"))
        cfg.tmoe.variant = attention_variant_from_string(j.at("attention"));
    if (j.contains("num_layers")) cfg.num_layers = j.at("num_layers");
    if (j.contains("d_ff")) cfg.d_ff = j.at("d_ff");
    if (j.contains("horizon")) cfg.horizon = j.at("horizon");
    if (j.contains("dropout")) cfg.dropout = j.at("dropout");
    if (j.contains("max_tokens")) cfg.max_tokens = j.at("max_tokens");
    if (cfg.variant == ModelVariant::timeexpert_g) cfg.tmoe.causal = true;
    cfg.validate();
    return cfg;
}

inline json synth_spec_to_json(const SynthSpec& s) {
    return json{{"periods", s.periods},       {"amplitudes", s.amplitudes},
                {"noise_sigma", s.noise_sigma}, {"length", s.length},
                {"channels", s.channels},     {"seed", s.seed}};
}

inline SynthSpec synth_spec_from_json(const json& j) {
    require_keys(j, {"periods", "amplitudes", "noise_sigma", "length", "channels", "seed"},
                 "synth");
    SynthSpec s;
    if (j.contains("periods")) s.periods = j.at("periods").get<std::vector<double>>();
    if (j.contains("amplitudes")) s.amplitudes = j.at("amplitudes").get<std::vector<double>>();
    if (s.amplitudes.empty()) s.amplitudes.assign(s.periods.size(), 1.0);
    if (j.contains("noise_sigma")) s.noise_sigma = j.at("noise_sigma");
    if (j.contains("length")) s.length = j.at("length");
    if (j.contains("channels")) s.channels = j.at("channels");
    if (j.contains("seed")) s.seed = j.at("seed");
    return s;
}

// FNV-1a over the canonical (sorted-key) JSON dump; stable digest for replay.
inline std::string config_digest(const json& j) {
    const std::string dump = j.dump();
    std::uint64_t h = 1469598103934665603ULL;
    for (const unsigned char c : dump) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    char buf[17];
    static const char* hex = "0123456789abcdef";
    for (int i = 15; i >= 0; --i) {
        buf[i] = hex[h & 0xF];
        h >>= 4;
    }
    buf[16] = '\0';
    return std::string(buf);
}

}  // namespace tmoe
