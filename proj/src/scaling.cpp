// SPDX-License-Identifier: Apache-2.0
#include "moescale/scaling.hpp"

#include <cmath>
#include <stdexcept>

namespace moescale {

std::string r_term_mode_name(RTermMode m) {
    return m == RTermMode::ratio ? "r" : "r_over_1plus_r";
}

RTermMode r_term_mode_from_name(const std::string& name) {
    if (name == "r") return RTermMode::ratio;
    if (name == "r_over_1plus_r") return RTermMode::ratio_over_one_plus;
    throw std::invalid_argument("unknown r_term_mode: " + name);
}

void LossLawCoefficients::validate() const {
    for (double w : {a, b, c, d}) {
        if (!(w > 0.0) || !std::isfinite(w)) {
            throw std::invalid_argument("loss law weights a,b,c,d must be positive");
        }
    }
    for (double e : {alpha, beta, lambda, gamma}) {
        if (!(e >= 0.0) || !std::isfinite(e)) {
            throw std::invalid_argument("loss law exponents must be nonnegative");
        }
    }
    if (!(tau >= 0.0) || !std::isfinite(tau)) {
        throw std::invalid_argument("loss law tau must be nonnegative");
    }
}

void RunRecord::validate() const {
    if (!(active_params > 0.0) || !(total_params >= active_params)) {
        throw std::invalid_argument("RunRecord: need N >= N_active > 0 (label '" + label + "')");
    }
    if (!(tokens > 0.0)) {
        throw std::invalid_argument("RunRecord: D must be positive (label '" + label + "')");
    }
    if (!(sparsity >= 0.0) || sparsity >= 1.0) {
        throw std::invalid_argument("RunRecord: S must lie in [0, 1) (label '" + label + "')");
    }
    if (!(ratio > 0.0)) {
        throw std::invalid_argument("RunRecord: r must be positive (label '" + label + "')");
    }
    if (!(loss > 0.0)) {
        throw std::invalid_argument("RunRecord: loss must be positive (label '" + label + "')");
    }
}

LossTerms loss_terms(const LossLawCoefficients& coef, const RunRecord& rec) {
    // Evaluation accepts degenerate (zero) weights so single terms can be
    // probed in isolation; strict positivity is enforced by validate() when
    // laws are parsed or persisted.
    for (double v : {coef.a, coef.b, coef.c, coef.d, coef.alpha, coef.beta,
                     coef.lambda, coef.gamma, coef.tau}) {
        if (!std::isfinite(v)) {
            throw std::invalid_argument("loss law coefficients must be finite");
        }
    }
    rec.validate();
    const double log_params = std::log(rec.total_params);
    const double log_tokens = std::log(rec.tokens);
    const double log_active_frac = std::log1p(-rec.sparsity);
    const double efficiency = rec.ratio / (rec.ratio + 1.0);
    const double r_exponent =
        coef.r_term_mode == RTermMode::ratio ? rec.ratio : efficiency;

    LossTerms t;
    // exp(log ...) keeps extreme exponent trials finite during fitting.
    t.param_term = coef.a * std::exp(-coef.alpha * log_params);
    t.data_term = coef.b * std::exp(-coef.beta * log_tokens);
    t.misalloc_term = coef.c * std::exp(r_exponent + coef.gamma * log_active_frac -
                                        coef.lambda * log_params);
    t.efficiency_term = coef.d * efficiency;
    t.offset = coef.tau;
    return t;
}

double predict_loss(const LossLawCoefficients& coef, const RunRecord& rec) {
    return loss_terms(coef, rec).total();
}

double predict_loss_wang(const WangLawCoefficients& coef, double total_params,
                         double tokens, double total_experts) {
    if (!(total_params > 0.0) || !(tokens > 0.0) || !(total_experts > 0.0)) {
        throw std::domain_error("wang law needs positive N, D, E");
    }
    return coef.a * std::exp(-coef.alpha * std::log(total_params) -
                             coef.gamma * std::log(total_experts)) +
           coef.b * std::exp(-coef.beta * std::log(tokens)) + coef.tau;
}

double predict_loss_wang(const WangLawCoefficients& coef, const RunRecord& rec,
                         double active_experts) {
    rec.validate();
    if (!(active_experts > 0.0)) {
        throw std::domain_error("wang law: active expert count must be positive");
    }
    const double total_experts = active_experts / (1.0 - rec.sparsity);
    return predict_loss_wang(coef, rec.total_params, rec.tokens, total_experts);
}

double predict_loss_abnar(const AbnarLawCoefficients& coef, const RunRecord& rec) {
    rec.validate();
    const double log_params = std::log(rec.total_params);
    const double log_active_frac = std::log1p(-rec.sparsity);
    return coef.a * std::exp(-coef.alpha * log_params) +
           coef.b * std::exp(-coef.beta * log_params) +
           coef.c * std::exp(-coef.gamma * log_active_frac) +
           coef.d * std::exp(-coef.delta * log_active_frac - coef.gamma * log_params) +
           coef.tau;
}

std::vector<std::pair<double, double>> loss_curve(const LossLawCoefficients& coef,
                                                  const RunRecord& rec,
                                                  std::span<const double> token_grid) {
    if (token_grid.empty()) {
        throw std::invalid_argument("loss_curve: empty token grid");
    }
    double prev = 0.0;
    for (std::size_t i = 0; i < token_grid.size(); ++i) {
        if (!(token_grid[i] > 0.0) || (i > 0 && token_grid[i] <= prev)) {
            throw std::invalid_argument("loss_curve: token grid must be positive and ascending");
        }
        prev = token_grid[i];
    }
    std::vector<std::pair<double, double>> out;
    out.reserve(token_grid.size());
    RunRecord point = rec;
    for (double tokens : token_grid) {
        point.tokens = tokens;
        out.emplace_back(tokens, predict_loss(coef, point));
    }
    return out;
}

nlohmann::ordered_json loss_law_to_json(const LossLawCoefficients& coef) {
    nlohmann::ordered_json j;
    j["variant"] = "final";
    j["r_term_mode"] = r_term_mode_name(coef.r_term_mode);
    j["a"] = coef.a;
    j["b"] = coef.b;
    j["c"] = coef.c;
    j["d"] = coef.d;
    j["alpha"] = coef.alpha;
    j["beta"] = coef.beta;
    j["lambda"] = coef.lambda;
    j["gamma"] = coef.gamma;
    j["tau"] = coef.tau;
    return j;
}

LossLawCoefficients loss_law_from_json(const nlohmann::json& j) {
    LossLawCoefficients coef;
    if (j.contains("variant") && j.at("variant").get<std::string>() != "final") {
        throw std::invalid_argument("loss_law_from_json: expected variant 'final'");
    }
    coef.a = j.at("a").get<double>();
    coef.b = j.at("b").get<double>();
    coef.c = j.at("c").get<double>();
    coef.d = j.at("d").get<double>();
    coef.alpha = j.at("alpha").get<double>();
    coef.beta = j.at("beta").get<double>();
    coef.lambda = j.at("lambda").get<double>();
    coef.gamma = j.at("gamma").get<double>();
    coef.tau = j.at("tau").get<double>();
    if (j.contains("r_term_mode")) {
        coef.r_term_mode = r_term_mode_from_name(j.at("r_term_mode").get<std::string>());
    }
    coef.validate();
    return coef;
}

}  // namespace moescale
