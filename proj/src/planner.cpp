// SPDX-License-Identifier: Apache-2.0
#include "moescale/planner.hpp"

#include <cmath>
#include <cstdio>
#include <limits>
#include <random>
#include <stdexcept>

#include "moescale/alloc.hpp"
#include "moescale/flops.hpp"
#include "moescale/sparsity.hpp"
#include "moescale/wide.hpp"

namespace moescale {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kPi = 3.14159265358979323846;

// One evaluated lattice point.
struct Candidate {
    bool valid = false;
    bool feasible = false;
    double budget_error = kInf;
    double ratio_error = kInf;
    double score = kInf;  // worst tolerance-normalized error
    std::int64_t d_hidden = 0;
    std::int64_t d_expert = 0;
    double realized_ratio = 0.0;
    double per_token = 0.0;
};

// Preference order: feasible beats infeasible; then budget error (feasible)
// or normalized worst error (infeasible); ties favor the smaller d_hidden,
// then the smaller d_expert, keeping the scan deterministic.
bool better(const Candidate& a, const Candidate& b) {
    if (!a.valid) return false;
    if (!b.valid) return true;
    if (a.feasible != b.feasible) return a.feasible;
    const double ka = a.feasible ? a.budget_error : a.score;
    const double kb = b.feasible ? b.budget_error : b.score;
    if (ka != kb) return ka < kb;
    if (a.d_hidden != b.d_hidden) return a.d_hidden < b.d_hidden;
    return a.d_expert < b.d_expert;
}

std::int64_t round_down_to(std::int64_t v, std::int64_t g) { return (v / g) * g; }
std::int64_t round_up_to(std::int64_t v, std::int64_t g) {
    return ((v + g - 1) / g) * g;
}

// Deterministic standard-normal stream (Box-Muller over mt19937_64).
class GaussianSampler {
  public:
    explicit GaussianSampler(std::uint64_t seed) : rng_(seed) {}

    double next() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u1 = canonical();
        while (u1 <= 0.0) u1 = canonical();
        const double u2 = canonical();
        const double mag = std::sqrt(-2.0 * std::log(u1));
        spare_ = mag * std::sin(2.0 * kPi * u2);
        has_spare_ = true;
        return mag * std::cos(2.0 * kPi * u2);
    }

  private:
    double canonical() {
        return static_cast<double>(rng_() >> 11) * 0x1.0p-53;  // [0, 1)
    }

    std::mt19937_64 rng_;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

}  // namespace

void PlanRequest::validate() const {
    if (!(compute_budget > 0.0)) {
        throw std::invalid_argument("plan: compute budget must be positive");
    }
    if (!(tokens > 0.0)) throw std::invalid_argument("plan: token count must be positive");
    if (total_experts <= 0 && !(sparsity >= 0.0 && sparsity < 1.0)) {
        throw std::invalid_argument("plan: need sparsity in [0, 1) or an expert count");
    }
    if (top_k < 1 || n_shared_experts < 0) {
        throw std::invalid_argument("plan: invalid expert activation counts");
    }
    if (total_experts > 0 && total_experts < active_experts()) {
        throw std::invalid_argument("plan: total experts below activated count");
    }
    if (n_layer <= 0 || n_head <= 0 || n_ctx <= 0 || n_vocab <= 0) {
        throw std::invalid_argument("plan: fixed architecture axes must be positive");
    }
    if (d_hidden_seed < 1) throw std::invalid_argument("plan: d_hidden seed must be >= 1");
    if (granularity < 1) throw std::invalid_argument("plan: granularity must be >= 1");
    if (!(ratio_tolerance > 0.0) || !(budget_tolerance > 0.0)) {
        throw std::invalid_argument("plan: tolerances must be positive");
    }
    if (kv_head_ratio < 1) throw std::invalid_argument("plan: kv_head_ratio must be >= 1");
    if (use_gqa && (n_head % kv_head_ratio != 0 || granularity % kv_head_ratio != 0)) {
        throw std::invalid_argument(
            "plan: GQA needs kv_head_ratio dividing n_head and the granularity");
    }
    if (has_explicit_law) explicit_law.validate();
}

std::int64_t PlanRequest::effective_total_experts() const {
    if (total_experts > 0) return total_experts;
    return sparsity_from_fraction(sparsity, active_experts()).total_experts;
}

double PlanRequest::effective_sparsity() const {
    if (total_experts > 0) {
        return static_cast<double>(total_experts - active_experts()) /
               static_cast<double>(total_experts);
    }
    return sparsity;
}

ParamCounts param_count(const ModelConfig& cfg) {
    cfg.validate();
    const double d = static_cast<double>(cfg.d_hidden);
    const double de = static_cast<double>(cfg.d_expert);
    const double experts = static_cast<double>(cfg.n_experts);
    const double active = static_cast<double>(cfg.top_k + cfg.n_shared_experts);
    const double layers = static_cast<double>(cfg.n_layer);

    // Query and output projections are square; key/value shrink under GQA.
    const double kv_width =
        cfg.use_gqa ? d / static_cast<double>(cfg.kv_head_ratio) : d;
    const double attn = 2.0 * d * d + 2.0 * d * kv_width;
    // Router plus three matrices (gate, up, down) per expert.
    const double router = d * experts;
    const double expert_all = router + experts * 3.0 * d * de;
    const double expert_active = router + active * 3.0 * d * de;
    // Tied input/output embedding counted once.
    const double embedding = static_cast<double>(cfg.n_vocab) * d;

    ParamCounts out;
    out.total = layers * (attn + expert_all) + embedding;
    out.active = layers * (attn + expert_active) + embedding;
    return out;
}

namespace {

PlanResult solve_plan(const PlanRequest& req, const LawStore& store, bool parallel) {
    req.validate();

    const double sparsity = req.effective_sparsity();
    const AllocationLaw law =
        req.has_explicit_law ? req.explicit_law : store.sparsity_law.at(sparsity);
    const double target_ratio = optimal_ratio(law, req.compute_budget);
    const double target_per_token = req.compute_budget / req.tokens;

    ModelConfig base;
    base.n_layer = req.n_layer;
    base.n_head = req.n_head;
    base.n_experts = req.effective_total_experts();
    base.top_k = req.top_k;
    base.n_shared_experts = req.n_shared_experts;
    base.kv_head_ratio = req.kv_head_ratio;
    base.n_ctx = req.n_ctx;
    base.n_vocab = req.n_vocab;
    base.use_gqa = req.use_gqa;
    base.use_peft = req.use_peft;
    base.use_grad_checkpoint = req.use_grad_checkpoint;

    const std::int64_t g = req.granularity;
    const std::int64_t lo = std::max(g, round_down_to(req.d_hidden_seed / 4, g));
    const std::int64_t hi = std::max(lo, round_up_to(req.d_hidden_seed * 4, g));
    const std::int64_t rows = (hi - lo) / g + 1;
    if (rows > 100000) {
        throw std::invalid_argument("plan: d_hidden search window too large");
    }

    // Scan one d_hidden row; both realized ratio and per-token compute grow
    // monotonically in d_expert, so the row is abandoned once both overshoot.
    const auto scan_row = [&](std::int64_t d_hidden) {
        Candidate best_in_row;
        ModelConfig cfg = base;
        cfg.d_hidden = d_hidden;
        for (std::int64_t d_expert = g;; d_expert += g) {
            cfg.d_expert = d_expert;
            Candidate c;
            try {
                const FlopsBreakdown fb = total_flops(cfg);
                c.realized_ratio = flops_ratio(cfg).ratio;
                c.per_token = to_double(fb.training_total) /
                              static_cast<double>(cfg.n_ctx);
            } catch (const std::overflow_error&) {
                break;  // dimensions past any representable budget
            }
            c.valid = true;
            c.d_hidden = d_hidden;
            c.d_expert = d_expert;
            c.ratio_error = std::abs(c.realized_ratio - target_ratio) / target_ratio;
            c.budget_error =
                std::abs(c.per_token - target_per_token) / target_per_token;
            c.feasible = c.ratio_error <= req.ratio_tolerance &&
                         c.budget_error <= req.budget_tolerance;
            c.score = std::max(c.ratio_error / req.ratio_tolerance,
                               c.budget_error / req.budget_tolerance);
            if (better(c, best_in_row)) best_in_row = c;
            const bool ratio_over =
                c.realized_ratio > target_ratio * (1.0 + req.ratio_tolerance);
            const bool budget_over =
                c.per_token > target_per_token * (1.0 + req.budget_tolerance);
            if (ratio_over && budget_over) break;
        }
        return best_in_row;
    };

    std::vector<Candidate> row_best(static_cast<std::size_t>(rows));
    if (parallel) {
#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic)
#endif
        for (std::int64_t row = 0; row < rows; ++row) {
            row_best[static_cast<std::size_t>(row)] = scan_row(lo + row * g);
        }
    } else {
        for (std::int64_t row = 0; row < rows; ++row) {
            row_best[static_cast<std::size_t>(row)] = scan_row(lo + row * g);
        }
    }

    // Serial reduction in ascending d_hidden order keeps the result identical
    // across thread counts.
    Candidate best;
    for (const Candidate& c : row_best) {
        if (better(c, best)) best = c;
    }
    if (!best.valid) {
        throw std::domain_error("plan: search produced no evaluable candidate");
    }

    PlanResult result;
    result.feasible = best.feasible;
    result.target_ratio = target_ratio;
    result.realized_ratio = best.realized_ratio;
    result.ratio_error = best.ratio_error;
    result.target_per_token = target_per_token;
    result.realized_per_token = best.per_token;
    result.budget_error = best.budget_error;
    result.config = base;
    result.config.d_hidden = best.d_hidden;
    result.config.d_expert = best.d_expert;
    result.params = param_count(result.config);

    RunRecord rec;
    rec.label = "plan";
    rec.total_params = result.params.total;
    rec.active_params = result.params.active;
    rec.tokens = req.tokens;
    rec.sparsity = sparsity;
    rec.ratio = best.realized_ratio;
    rec.compute = best.per_token * req.tokens;
    rec.loss = 1.0;  // placeholder; prediction ignores the observed loss
    result.predicted_loss = predict_loss(store.loss_law, rec);
    return result;
}

}  // namespace

PlanResult plan(const PlanRequest& req, const LawStore& store) {
    return solve_plan(req, store, true);
}

PlanResult plan_serial(const PlanRequest& req, const LawStore& store) {
    return solve_plan(req, store, false);
}

nlohmann::ordered_json plan_result_to_json(const PlanResult& result) {
    nlohmann::ordered_json j;
    j["schema_version"] = 1;
    j["feasible"] = result.feasible;
    j["target_ratio"] = result.target_ratio;
    j["realized_ratio"] = result.realized_ratio;
    j["ratio_error"] = result.ratio_error;
    j["target_per_token_flops"] = result.target_per_token;
    j["realized_per_token_flops"] = result.realized_per_token;
    j["budget_error"] = result.budget_error;
    j["total_params"] = result.params.total;
    j["active_params"] = result.params.active;
    j["predicted_loss"] = result.predicted_loss;
    j["config"] = config_to_json(result.config);
    return j;
}

const std::vector<SizePreset>& size_presets() {
    static const std::vector<SizePreset> presets = {
        {"20M", 8, 8, 96, 0.0015},   {"30M", 8, 8, 160, 0.0013},
        {"55M", 10, 10, 224, 0.0011}, {"100M", 14, 12, 320, 0.0009},
        {"200M", 16, 16, 512, 0.0008},
    };
    return presets;
}

SizePreset preset(const std::string& label) {
    for (const SizePreset& p : size_presets()) {
        if (p.label == label) return p;
    }
    throw std::invalid_argument("unknown preset label '" + label + "'");
}

void SynthSpec::validate() const {
    if (total_params.empty() || tokens.empty() || sparsities.empty() || ratios.empty()) {
        throw std::invalid_argument("synth: every grid axis needs at least one value");
    }
    for (double v : total_params) {
        if (!(v > 0.0)) throw std::invalid_argument("synth: N values must be positive");
    }
    for (double v : tokens) {
        if (!(v > 0.0)) throw std::invalid_argument("synth: D values must be positive");
    }
    for (double v : sparsities) {
        if (!(v >= 0.0) || v >= 1.0) {
            throw std::invalid_argument("synth: S values must lie in [0, 1)");
        }
    }
    for (double v : ratios) {
        if (!(v > 0.0)) throw std::invalid_argument("synth: r values must be positive");
    }
    if (!(noise_sigma >= 0.0) || !std::isfinite(noise_sigma)) {
        throw std::invalid_argument("synth: noise sigma must be nonnegative");
    }
}

std::vector<RunRecord> synth_records(const LossLawCoefficients& coef,
                                     const SynthSpec& spec) {
    coef.validate();
    spec.validate();
    GaussianSampler noise(spec.seed);

    std::vector<RunRecord> records;
    records.reserve(spec.total_params.size() * spec.tokens.size() *
                    spec.sparsities.size() * spec.ratios.size());
    for (double n : spec.total_params) {
        for (double d : spec.tokens) {
            for (double s : spec.sparsities) {
                for (double r : spec.ratios) {
                    RunRecord rec;
                    rec.total_params = n;
                    rec.active_params = n * (1.0 - s);
                    rec.tokens = d;
                    rec.sparsity = s;
                    rec.ratio = r;
                    rec.compute = 6.0 * rec.active_params * d;
                    char label[32];
                    std::snprintf(label, sizeof label, "%.4g", rec.active_params);
                    rec.label = label;
                    rec.loss = 1.0;  // placeholder for prediction
                    double loss = predict_loss(coef, rec);
                    if (spec.noise_sigma > 0.0) {
                        loss *= std::exp(spec.noise_sigma * noise.next());
                    }
                    rec.loss = loss;
                    records.push_back(std::move(rec));
                }
            }
        }
    }
    return records;
}

}  // namespace moescale
