// SPDX-License-Identifier: Apache-2.0
// Architecture planning: recommend the compute-optimal expert/attention FLOPs
// ratio for a budget and find integer layer dimensions realizing it.  Also
// hosts the size presets and the synthetic-record generator.
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"
#include "moescale/law_store.hpp"
#include "moescale/model_config.hpp"
#include "moescale/scaling.hpp"

namespace moescale {

struct PlanRequest {
    double compute_budget = 0.0;  // total training FLOPs
    double tokens = 0.0;          // training tokens

    // Sparsity, either directly or via an explicit total expert count.
    double sparsity = -1.0;          // ignored when total_experts > 0
    std::int64_t total_experts = 0;  // 0 = derive from sparsity
    std::int64_t top_k = 2;
    std::int64_t n_shared_experts = 1;

    // Fixed architecture axes.
    std::int64_t n_layer = 0;
    std::int64_t n_head = 0;
    std::int64_t n_ctx = 4096;
    std::int64_t n_vocab = 128000;
    bool use_gqa = false;
    std::int64_t kv_head_ratio = 1;
    bool use_peft = false;
    bool use_grad_checkpoint = false;

    // Search lattice: dimensions are multiples of granularity; d_hidden is
    // scanned over a window from seed/4 to seed*4.
    std::int64_t d_hidden_seed = 0;
    std::int64_t granularity = 64;

    double ratio_tolerance = 0.05;   // |realized r - r*| / r*
    double budget_tolerance = 0.02;  // |per-token FLOPs - target| / target

    // When set, overrides the law derived from the stored sparsity laws.
    bool has_explicit_law = false;
    AllocationLaw explicit_law;

    void validate() const;
    // Effective activated-expert count and sparsity (from counts if given).
    std::int64_t active_experts() const { return top_k + n_shared_experts; }
    std::int64_t effective_total_experts() const;
    double effective_sparsity() const;
};

struct ParamCounts {
    double total = 0.0;   // all weights
    double active = 0.0;  // weights touched per token
};

// Dense parameter-count estimate: attention projections, expert matrices,
// routers, and tied embeddings.
ParamCounts param_count(const ModelConfig& cfg);

struct PlanResult {
    bool feasible = false;
    double target_ratio = 0.0;    // r* from the allocation law
    double realized_ratio = 0.0;  // expert/attention FLOPs of the chosen config
    double ratio_error = 0.0;     // relative
    double target_per_token = 0.0;
    double realized_per_token = 0.0;  // training FLOPs per token
    double budget_error = 0.0;        // relative
    ModelConfig config;
    ParamCounts params;
    double predicted_loss = 0.0;  // under the stored loss law
};

// Exhaustive scan over the (d_hidden, d_expert) lattice.  Feasible candidates
// are ranked by budget error (ties: smaller d_hidden, then d_expert); when
// none is feasible, the result minimizes the worst tolerance-normalized error
// and is marked infeasible rather than clamped.  plan() may parallelize
// across d_hidden rows; plan_serial is the single-threaded reference, and the
// two always agree.
PlanResult plan(const PlanRequest& req, const LawStore& store);
PlanResult plan_serial(const PlanRequest& req, const LawStore& store);

nlohmann::ordered_json plan_result_to_json(const PlanResult& result);

// Shipped hyperparameter presets keyed by activation-parameter label.
struct SizePreset {
    std::string label;
    std::int64_t n_layer = 0;
    std::int64_t n_head = 0;
    std::int64_t batch_size = 0;
    double learning_rate = 0.0;
};

const std::vector<SizePreset>& size_presets();
SizePreset preset(const std::string& label);  // throws on unknown label

// Synthetic run records over a cartesian (N, D, S, r) grid with optional
// multiplicative log-normal noise.
struct SynthSpec {
    std::vector<double> total_params;  // N values
    std::vector<double> tokens;        // D values
    std::vector<double> sparsities;    // S values
    std::vector<double> ratios;        // r values
    double noise_sigma = 0.0;          // std-dev of log-space noise
    std::uint64_t seed = 0;

    void validate() const;
};

// Grid order: N outermost, then D, S, r.  Deterministic for a given seed.
// N_active = N*(1-S); C = 6*N_active*D; loss = law(record)*e^eps.
std::vector<RunRecord> synth_records(const LossLawCoefficients& coef,
                                     const SynthSpec& spec);

}  // namespace moescale
