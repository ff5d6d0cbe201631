// SPDX-License-Identifier: Apache-2.0
#include "moescale/flops.hpp"

#include <stdexcept>

namespace moescale {

namespace {

u128 as_u128(std::int64_t v) { return static_cast<u128>(v); }

}  // namespace

FlopsBreakdown attention_flops(const ModelConfig& cfg) {
    cfg.validate();
    const u128 ctx = as_u128(cfg.n_ctx);
    const u128 hidden = as_u128(cfg.d_hidden);
    const u128 hidden_sq = checked_mul(hidden, hidden);
    const u128 ctx_hidden_sq = checked_mul(ctx, hidden_sq);

    FlopsBreakdown b;
    b.q_proj = checked_mul(2, ctx_hidden_sq);
    if (cfg.use_gqa) {
        b.kv_proj = checked_mul(4, ctx_hidden_sq) / as_u128(cfg.kv_head_ratio);
    } else {
        b.kv_proj = checked_mul(2, b.q_proj);
    }
    b.attn_weight = checked_mul(2, checked_mul(checked_mul(ctx, ctx), hidden));
    b.value = checked_mul(2, ctx_hidden_sq);
    b.out_proj = checked_mul(2, ctx_hidden_sq);
    b.attn_total = checked_add(
        checked_add(checked_add(b.q_proj, b.kv_proj), checked_add(b.attn_weight, b.value)),
        b.out_proj);
    return b;
}

u128 expert_flops(const ModelConfig& cfg) {
    cfg.validate();
    const u128 ctx = as_u128(cfg.n_ctx);
    const u128 hidden = as_u128(cfg.d_hidden);
    const u128 router = checked_mul(2, checked_mul(hidden, as_u128(cfg.n_experts)));
    const u128 active = as_u128(cfg.top_k + cfg.n_shared_experts);
    // Three projections per gated FFN (gate, up, down), 2*d_hidden*d_expert each.
    const u128 ffn = checked_mul(6, checked_mul(checked_mul(hidden, as_u128(cfg.d_expert)), active));
    return checked_mul(ctx, checked_add(router, ffn));
}

u128 logits_flops(const ModelConfig& cfg) {
    cfg.validate();
    return checked_mul(2, checked_mul(as_u128(cfg.n_ctx),
                                      checked_mul(as_u128(cfg.d_hidden), as_u128(cfg.n_vocab))));
}

std::int64_t training_factor(const ModelConfig& cfg) { return cfg.use_peft ? 2 : 3; }

FlopsBreakdown total_flops(const ModelConfig& cfg) {
    FlopsBreakdown b = attention_flops(cfg);
    b.expert = expert_flops(cfg);
    b.layer_forward = checked_add(b.attn_total, b.expert);
    b.logits = logits_flops(cfg);

    const u128 layers = as_u128(cfg.n_layer);
    const u128 factor = as_u128(training_factor(cfg));
    const u128 plain_forward =
        checked_add(checked_mul(layers, b.layer_forward), b.logits);

    if (cfg.use_grad_checkpoint) {
        b.forward_total =
            checked_add(checked_mul(checked_mul(layers, b.layer_forward), factor + 1),
                        checked_mul(b.logits, factor));
    } else {
        b.forward_total = plain_forward;
    }
    b.training_total = checked_mul(b.forward_total, factor);
    b.backward_total = b.training_total - b.forward_total;
    b.per_token = make_rational(plain_forward, as_u128(cfg.n_ctx));
    return b;
}

RatioResult flops_ratio(const ModelConfig& cfg) {
    FlopsBreakdown b = attention_flops(cfg);
    if (b.attn_total == 0) {
        throw std::domain_error("flops_ratio: attention compute is zero");
    }
    const u128 expert = expert_flops(cfg);
    RatioResult res;
    const u128 g = gcd128(expert == 0 ? b.attn_total : expert, b.attn_total);
    res.ratio = to_double(expert / g) / to_double(b.attn_total / g);
    res.per_token_compute = make_rational(
        checked_mul(as_u128(cfg.n_layer), checked_add(b.attn_total, expert)),
        as_u128(cfg.n_ctx));
    return res;
}

namespace {

constexpr const char* kColumns[] = {
    "q_proj",      "kv_proj",       "attn_weight",    "value",
    "out_proj",    "attn_total",    "expert",         "layer_forward",
    "logits",      "forward_total", "backward_total", "training_total"};

const u128* field_ptrs(const FlopsBreakdown& b, u128 (&store)[12]) {
    store[0] = b.q_proj;
    store[1] = b.kv_proj;
    store[2] = b.attn_weight;
    store[3] = b.value;
    store[4] = b.out_proj;
    store[5] = b.attn_total;
    store[6] = b.expert;
    store[7] = b.layer_forward;
    store[8] = b.logits;
    store[9] = b.forward_total;
    store[10] = b.backward_total;
    store[11] = b.training_total;
    return store;
}

}  // namespace

nlohmann::ordered_json breakdown_to_json(const FlopsBreakdown& b) {
    nlohmann::ordered_json j;
    j["schema_version"] = 1;
    u128 store[12];
    const u128* fields = field_ptrs(b, store);
    for (int i = 0; i < 12; ++i) {
        j[kColumns[i]] = to_decimal(fields[i]);
    }
    j["per_token_num"] = to_decimal(b.per_token.num);
    j["per_token_den"] = to_decimal(b.per_token.den);
    j["per_token"] = b.per_token.approx();
    return j;
}

std::string breakdown_to_csv(const FlopsBreakdown& b) {
    std::string header;
    std::string line;
    u128 store[12];
    const u128* fields = field_ptrs(b, store);
    for (int i = 0; i < 12; ++i) {
        header += kColumns[i];
        header += ',';
        line += to_decimal(fields[i]);
        line += ',';
    }
    header += "per_token_num,per_token_den";
    line += to_decimal(b.per_token.num) + "," + to_decimal(b.per_token.den);
    return header + "\n" + line + "\n";
}

}  // namespace moescale
