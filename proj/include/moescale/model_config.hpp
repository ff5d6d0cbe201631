// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <string>

#include "json.hpp"

namespace moescale {

// Architectural description of one MoE decoder-only Transformer. The FLOPs
// accounting reads everything from here; n_head is carried for presets and
// reporting but does not enter any FLOPs formula.
struct ModelConfig {
    std::int64_t n_layer = 1;
    std::int64_t n_head = 1;
    std::int64_t d_hidden = 1;
    std::int64_t d_expert = 1;
    std::int64_t n_experts = 1;
    std::int64_t top_k = 1;
    std::int64_t n_shared_experts = 0;
    std::int64_t kv_head_ratio = 1;
    std::int64_t n_ctx = 1;
    std::int64_t n_vocab = 1;
    bool use_gqa = false;
    bool use_peft = false;
    bool use_grad_checkpoint = false;

    // Throws std::invalid_argument on any violated constraint.
    void validate() const;
};

// Strict JSON schema: exactly the field names above, unknown fields rejected.
ModelConfig config_from_json(const nlohmann::json& j);
nlohmann::ordered_json config_to_json(const ModelConfig& cfg);
ModelConfig load_config_file(const std::string& path);

}  // namespace moescale
