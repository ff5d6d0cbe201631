// SPDX-License-Identifier: Apache-2.0
#include "moescale/model_config.hpp"

#include <fstream>
#include <set>
#include <stdexcept>

namespace moescale {

namespace {

// Keeps every intermediate product inside 128 bits even for absurd configs.
constexpr std::int64_t kDimCap = std::int64_t{1} << 40;

void require(bool cond, const std::string& msg) {
    if (!cond) {
        throw std::invalid_argument("ModelConfig: " + msg);
    }
}

}  // namespace

void ModelConfig::validate() const {
    require(n_layer > 0, "n_layer must be positive");
    require(n_head > 0, "n_head must be positive");
    require(d_hidden > 0, "d_hidden must be positive");
    require(d_expert > 0, "d_expert must be positive");
    require(n_experts > 0, "n_experts must be positive");
    require(top_k > 0, "top_k must be positive");
    require(n_shared_experts >= 0, "n_shared_experts must be nonnegative");
    require(kv_head_ratio > 0, "kv_head_ratio must be positive");
    require(n_ctx > 0, "n_ctx must be positive");
    require(n_vocab > 0, "n_vocab must be positive");
    require(top_k + n_shared_experts <= n_experts,
            "top_k + n_shared_experts must not exceed n_experts");
    for (std::int64_t v : {n_layer, n_head, d_hidden, d_expert, n_experts, top_k,
                           kv_head_ratio, n_ctx, n_vocab}) {
        require(v <= kDimCap, "dimension exceeds supported range");
    }
    if (use_gqa) {
        require(n_head % kv_head_ratio == 0,
                "n_head must be divisible by kv_head_ratio when GQA is enabled");
        // Integral KV width keeps the projection FLOPs an exact integer.
        require(d_hidden % kv_head_ratio == 0,
                "d_hidden must be divisible by kv_head_ratio when GQA is enabled");
    }
}

ModelConfig config_from_json(const nlohmann::json& j) {
    static const std::set<std::string> known = {
        "n_layer",      "n_head",           "d_hidden",      "d_expert",
        "n_experts",    "top_k",            "n_shared_experts", "kv_head_ratio",
        "n_ctx",        "n_vocab",          "use_gqa",       "use_peft",
        "use_grad_checkpoint"};
    if (!j.is_object()) {
        throw std::invalid_argument("ModelConfig JSON must be an object");
    }
    for (const auto& item : j.items()) {
        if (known.count(item.key()) == 0) {
            throw std::invalid_argument("ModelConfig JSON: unknown field '" + item.key() + "'");
        }
    }
    ModelConfig cfg;
    auto get_int = [&](const char* name, std::int64_t def, bool required) {
        if (!j.contains(name)) {
            if (required) {
                throw std::invalid_argument(std::string("ModelConfig JSON: missing field '") +
                                            name + "'");
            }
            return def;
        }
        if (!j.at(name).is_number_integer()) {
            throw std::invalid_argument(std::string("ModelConfig JSON: field '") + name +
                                        "' must be an integer");
        }
        return j.at(name).get<std::int64_t>();
    };
    auto get_bool = [&](const char* name, bool def) {
        if (!j.contains(name)) {
            return def;
        }
        if (!j.at(name).is_boolean()) {
            throw std::invalid_argument(std::string("ModelConfig JSON: field '") + name +
                                        "' must be a boolean");
        }
        return j.at(name).get<bool>();
    };
    cfg.n_layer = get_int("n_layer", 1, true);
    cfg.n_head = get_int("n_head", 1, true);
    cfg.d_hidden = get_int("d_hidden", 1, true);
    cfg.d_expert = get_int("d_expert", 1, true);
    cfg.n_experts = get_int("n_experts", 1, true);
    cfg.top_k = get_int("top_k", 1, true);
    cfg.n_shared_experts = get_int("n_shared_experts", 0, true);
    cfg.kv_head_ratio = get_int("kv_head_ratio", 1, false);
    cfg.n_ctx = get_int("n_ctx", 1, true);
    cfg.n_vocab = get_int("n_vocab", 1, true);
    cfg.use_gqa = get_bool("use_gqa", false);
    cfg.use_peft = get_bool("use_peft", false);
    cfg.use_grad_checkpoint = get_bool("use_grad_checkpoint", false);
    cfg.validate();
    return cfg;
}

nlohmann::ordered_json config_to_json(const ModelConfig& cfg) {
    nlohmann::ordered_json j;
    j["n_layer"] = cfg.n_layer;
    j["n_head"] = cfg.n_head;
    j["d_hidden"] = cfg.d_hidden;
    j["d_expert"] = cfg.d_expert;
    j["n_experts"] = cfg.n_experts;
    j["top_k"] = cfg.top_k;
    j["n_shared_experts"] = cfg.n_shared_experts;
    j["kv_head_ratio"] = cfg.kv_head_ratio;
    j["n_ctx"] = cfg.n_ctx;
    j["n_vocab"] = cfg.n_vocab;
    j["use_gqa"] = cfg.use_gqa;
    j["use_peft"] = cfg.use_peft;
    j["use_grad_checkpoint"] = cfg.use_grad_checkpoint;
    return j;
}

ModelConfig load_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw std::runtime_error("cannot open config file: " + path);
    }
    nlohmann::json j;
    in >> j;
    return config_from_json(j);
}

}  // namespace moescale
