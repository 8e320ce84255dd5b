#pragma once

// Declarative model configuration. Keys mirror ModelConfig:
//   layers, embed_dim, mlp_dim, heads, channel_segments, order ("cfo"|"sfo"),
//   bottleneck, mixture_components, receptive_h, receptive_w,
//   attention_scale ("inv_sqrt_dk"|"inv_dk"), symbol_bound.
// Missing keys keep their defaults (the toy configuration).

#include <string>

#include <json.hpp>

#include "scc/codec.hpp"
#include "scc/config.hpp"

namespace scc {

inline void apply_config_json(const nlohmann::json& j, ModelConfig& cfg, int* symbol_bound) {
    if (j.contains("layers")) cfg.layers = j["layers"].get<int>();
    if (j.contains("embed_dim")) cfg.embed_dim = j["embed_dim"].get<int>();
    if (j.contains("mlp_dim")) cfg.mlp_dim = j["mlp_dim"].get<int>();
    if (j.contains("heads")) cfg.heads = j["heads"].get<int>();
    if (j.contains("channel_segments")) cfg.channel_segments = j["channel_segments"].get<int>();
    if (j.contains("bottleneck")) cfg.bottleneck = j["bottleneck"].get<int>();
    if (j.contains("mixture_components")) cfg.mixture_components = j["mixture_components"].get<int>();
    if (j.contains("receptive_h")) cfg.receptive_h = j["receptive_h"].get<int>();
    if (j.contains("receptive_w")) cfg.receptive_w = j["receptive_w"].get<int>();
    if (j.contains("order")) {
        const std::string o = j["order"].get<std::string>();
        if (o == "cfo")
            cfg.order = CodingOrder::ChannelFirst;
        else if (o == "sfo")
            cfg.order = CodingOrder::SpatialFirst;
        else
            throw std::invalid_argument("config: order must be \"cfo\" or \"sfo\", got \"" + o + "\"");
    }
    if (j.contains("attention_scale")) {
        const std::string s = j["attention_scale"].get<std::string>();
        if (s == "inv_sqrt_dk")
            cfg.scale_mode = AttentionScale::InvSqrtDk;
        else if (s == "inv_dk")
            cfg.scale_mode = AttentionScale::InvDk;
        else
            throw std::invalid_argument("config: unknown attention_scale \"" + s + "\"");
    }
    if (symbol_bound && j.contains("symbol_bound")) *symbol_bound = j["symbol_bound"].get<int>();
    cfg.validate();
}

inline void load_config_file(const std::string& path, ModelConfig& cfg, int* symbol_bound) {
    const auto bytes = read_file(path);
    const nlohmann::json j = nlohmann::json::parse(bytes.begin(), bytes.end());
    apply_config_json(j, cfg, symbol_bound);
}

}  // namespace scc
