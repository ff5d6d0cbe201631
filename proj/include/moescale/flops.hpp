// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>

#include "json.hpp"
#include "moescale/model_config.hpp"
#include "moescale/wide.hpp"

namespace moescale {

// Itemized FLOPs for one pass over n_ctx tokens. All fields are exact
// integers; per_token is an exact rational (forward compute per token,
// checkpointing excluded).
struct FlopsBreakdown {
    u128 q_proj = 0;
    u128 kv_proj = 0;
    u128 attn_weight = 0;
    u128 value = 0;
    u128 out_proj = 0;
    u128 attn_total = 0;
    u128 expert = 0;
    u128 layer_forward = 0;
    u128 logits = 0;
    u128 forward_total = 0;
    u128 backward_total = 0;
    u128 training_total = 0;
    Rational per_token;
};

// Attention components for one decoder layer; only the five projection /
// attention fields and attn_total are populated.
FlopsBreakdown attention_flops(const ModelConfig& cfg);

// Router plus gated expert FFNs for one decoder layer.
u128 expert_flops(const ModelConfig& cfg);

// Output vocabulary projection.
u128 logits_flops(const ModelConfig& cfg);

// Full forward/backward accounting. The training multiplier is 2 with PEFT
// and 3 otherwise: training_total = forward_total * factor and
// backward_total = training_total - forward_total, so the non-PEFT backward
// pass costs twice the forward pass. Gradient checkpointing replaces
// forward_total by n_layer*layer*(factor+1) + logits*factor.
FlopsBreakdown total_flops(const ModelConfig& cfg);

std::int64_t training_factor(const ModelConfig& cfg);

// Expert/attention compute split for one layer, plus the model-level
// per-token cost of those two components (logits excluded).
struct RatioResult {
    double ratio = 0.0;          // expert / attn_total
    Rational per_token_compute;  // n_layer * (attn_total + expert) / n_ctx
};
RatioResult flops_ratio(const ModelConfig& cfg);

// Integer fields as decimal strings so 64-bit JSON consumers cannot truncate.
nlohmann::ordered_json breakdown_to_json(const FlopsBreakdown& b);
// Header line plus one data line.
std::string breakdown_to_csv(const FlopsBreakdown& b);

}  // namespace moescale
