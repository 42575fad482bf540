// Copyright (c) 2026 The tmoe authors.
// SPDX-License-Identifier: Apache-2.0
//
// Checkpoint layout (all little-endian):
//   "TMOE" | u32 version (=1) | u64 json_len | JSON | f32 payload
// The JSON holds the full model config and a tensor directory of
// (name, shape, byte offset into the payload) in parameter order.
// Save -> load -> save is byte-identical.

#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include "tmoe/config_json.hpp"
#include "tmoe/model.hpp"
#include "tmoe/param_store.hpp"

namespace tmoe {

inline constexpr std::uint32_t kCheckpointVersion = 1;

namespace detail {

inline void put_u32le(std::string& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

inline void put_u64le(std::string& out, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

inline std::uint32_t get_u32le(const unsigned char* p) {
    return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
           (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

inline std::uint64_t get_u64le(const unsigned char* p) {
    std::uint64_t v = 0;
    for (int i = 7; i >= 0; --i) v = (v << 8) | p[i];
    return v;
}

}  // namespace detail

struct Checkpoint {
    std::uint32_t version = kCheckpointVersion;
    ModelConfig config;
    ParamStore<float> params;
};

inline std::string checkpoint_bytes(const ParamStore<float>& params, const ModelConfig& config) {
    json dir = json::array();
    std::uint64_t offset = 0;
    for (const auto& e : params.entries()) {
        dir.push_back(json{{"name", e.name}, {"shape", e.tensor.shape()}, {"offset", offset}});
        offset += e.tensor.size() * 4;
    }
    const json meta = json{{"config", model_config_to_json(config)}, {"tensors", dir}};
    const std::string meta_str = meta.dump();

    std::string out;
    out.reserve(16 + meta_str.size() + offset);
    out += "TMOE";
    detail::put_u32le(out, kCheckpointVersion);
    detail::put_u64le(out, meta_str.size());
    out += meta_str;
    for (const auto& e : params.entries()) {
        for (const float f : e.tensor.data()) {
            const auto bits = std::bit_cast<std::uint32_t>(f);
            detail::put_u32le(out, bits);
        }
    }
    return out;
}

inline void save_checkpoint(const std::string& path, const ParamStore<float>& params,
                            const ModelConfig& config) {
    const std::string bytes = checkpoint_bytes(params, config);
    std::ofstream out(path, std::ios::binary);
    if (!out) throw MissingFile("save_checkpoint: cannot open " + path + " for writing");
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw Error("save_checkpoint: short write to " + path);
}

inline Checkpoint load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw MissingFile("load_checkpoint: cannot open " + path);
    std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    const auto* p = reinterpret_cast<const unsigned char*>(bytes.data());

    if (bytes.size() < 16) throw CorruptCheckpoint("load_checkpoint: truncated header");
    if (std::memcmp(bytes.data(), "TMOE", 4) != 0)
        throw CorruptCheckpoint("load_checkpoint: bad magic bytes");
    const std::uint32_t version = detail::get_u32le(p + 4);
    if (version != kCheckpointVersion)
        throw UnsupportedVersion("load_checkpoint: unsupported version " +
                                 std::to_string(version));
    const std::uint64_t json_len = detail::get_u64le(p + 8);
    if (bytes.size() < 16 + json_len)
        throw CorruptCheckpoint("load_checkpoint: truncated metadata");

    json meta;
    try {
        meta = json::parse(bytes.begin() + 16, bytes.begin() + 16 + static_cast<long>(json_len));
    } catch (const json::exception& e) {
        throw CorruptCheckpoint(std::string("load_checkpoint: bad metadata: ") + e.what());
    }

    Checkpoint ck;
    ck.version = version;
    try {
        ck.config = model_config_from_json(meta.at("config"));
    } catch (const json::exception& e) {
        throw CorruptCheckpoint(std::string("load_checkpoint: bad config: ") + e.what());
    }

    const std::size_t payload_base = 16 + json_len;
    const json& dir = meta.at("tensors");
    for (const auto& entry : dir) {
        const std::string name = entry.at("name");
        Shape shape = entry.at("shape").get<Shape>();
        const std::uint64_t offset = entry.at("offset");
        const std::size_t count = numel(shape);
        if (payload_base + offset + count * 4 > bytes.size())
            throw CorruptCheckpoint("load_checkpoint: truncated payload at tensor " + name);
        std::vector<float> values(count);
        const unsigned char* src = p + payload_base + offset;
        for (std::size_t i = 0; i < count; ++i)
            values[i] = std::bit_cast<float>(detail::get_u32le(src + i * 4));
        ck.params.add(name, Tensor<float>::from_data(std::move(shape), std::move(values)));
    }
    return ck;
}

// Model reconstruction; the store schema check rejects mismatched configs.
inline TimeExpert<float> load_model(const std::string& path) {
    Checkpoint ck = load_checkpoint(path);
    return TimeExpert<float>(ck.config, std::move(ck.params));
}

}  // namespace tmoe
