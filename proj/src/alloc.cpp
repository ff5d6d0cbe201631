// SPDX-License-Identifier: Apache-2.0
#include "moescale/alloc.hpp"

#include <cmath>
#include <stdexcept>

namespace moescale {

std::string provenance_name(LawProvenance p) {
    switch (p) {
        case LawProvenance::paper_fit: return "paper-fit";
        case LawProvenance::sparsity_law: return "sparsity-law";
        case LawProvenance::elasticity_derived: return "elasticity-derived";
        case LawProvenance::user: return "user";
    }
    throw std::logic_error("unreachable provenance");
}

LawProvenance provenance_from_name(const std::string& name) {
    if (name == "paper-fit") return LawProvenance::paper_fit;
    if (name == "sparsity-law") return LawProvenance::sparsity_law;
    if (name == "elasticity-derived") return LawProvenance::elasticity_derived;
    if (name == "user") return LawProvenance::user;
    throw std::invalid_argument("unknown provenance: " + name);
}

void AllocationLaw::validate() const {
    if (!(alpha_r > 0.0) || !std::isfinite(alpha_r)) {
        throw std::invalid_argument("AllocationLaw: alpha_r must be positive and finite");
    }
    if (!std::isfinite(beta_r)) {
        throw std::invalid_argument("AllocationLaw: beta_r must be finite");
    }
}

AllocationLaw sparsity_coefficients(double sparsity) {
    if (!(sparsity >= 0.0) || sparsity >= 1.0) {
        throw std::domain_error("sparsity must lie in [0, 1)");
    }
    const double active = 1.0 - sparsity;
    AllocationLaw law;
    law.alpha_r = kSparsityAlphaCoef * std::pow(active, kSparsityAlphaExp);
    law.beta_r = kSparsityBetaCoef * std::pow(active, kSparsityBetaExp);
    law.provenance = LawProvenance::sparsity_law;
    return law;
}

double optimal_ratio(const AllocationLaw& law, double total_compute) {
    law.validate();
    if (!(total_compute > 0.0) || !std::isfinite(total_compute)) {
        throw std::domain_error("total compute must be positive");
    }
    return law.alpha_r * std::pow(total_compute, law.beta_r);
}

void ElasticityParams::validate() const {
    auto in_unit = [](double v) { return v > 0.0 && v < 1.0; };
    if (!in_unit(mu_attn) || !in_unit(mu_expert)) {
        throw std::invalid_argument("ElasticityParams: mu exponents must lie in (0, 1)");
    }
    for (double v : {gamma_attn, gamma_expert, alpha_attn, alpha_expert}) {
        if (!(v > 0.0) || !std::isfinite(v)) {
            throw std::invalid_argument("ElasticityParams: gamma and alpha must be positive");
        }
    }
}

AllocationLaw elasticity_closed_form(const ElasticityParams& p) {
    p.validate();
    const double ea = p.gamma_attn * p.mu_attn;
    const double ee = p.gamma_expert * p.mu_expert;
    const double denom = ea + ee + 1.0;
    AllocationLaw law;
    law.alpha_r = std::pow((p.alpha_expert * p.gamma_expert * p.mu_expert) /
                               (p.alpha_attn * p.gamma_attn * p.mu_attn),
                           1.0 / denom);
    law.beta_r = (ee - ea) / denom;
    law.provenance = LawProvenance::elasticity_derived;
    return law;
}

double allocation_loss(const ElasticityParams& p, double total_compute, double ratio) {
    const double attn_compute = total_compute / (1.0 + ratio);
    const double expert_compute = total_compute * ratio / (1.0 + ratio);
    return p.alpha_attn * std::pow(attn_compute, -p.gamma_attn * p.mu_attn) +
           p.alpha_expert * std::pow(expert_compute, -p.gamma_expert * p.mu_expert);
}

namespace {

// log(LHS) - log(RHS) of the marginal-equality condition; strictly increasing
// in log r, so its unique zero is the loss minimizer.
double marginal_log_gap(const ElasticityParams& p, double total_compute, double log_ratio) {
    const double ratio = std::exp(log_ratio);
    const double ea = p.gamma_attn * p.mu_attn;
    const double ee = p.gamma_expert * p.mu_expert;
    const double log_attn = std::log(total_compute) - std::log1p(ratio);
    const double log_expert = std::log(total_compute) + log_ratio - std::log1p(ratio);
    const double lhs = std::log(p.alpha_attn * ea) - (ea + 1.0) * log_attn;
    const double rhs = std::log(p.alpha_expert * ee) - (ee + 1.0) * log_expert;
    return lhs - rhs;
}

double marginal_log_gap_slope(const ElasticityParams& p, double log_ratio) {
    const double ratio = std::exp(log_ratio);
    const double ea = p.gamma_attn * p.mu_attn;
    const double ee = p.gamma_expert * p.mu_expert;
    // d log C_A / d log r = -r/(1+r);  d log C_E / d log r = 1/(1+r)
    return (ea + 1.0) * ratio / (1.0 + ratio) + (ee + 1.0) / (1.0 + ratio);
}

}  // namespace

double marginal_equality_residual(const ElasticityParams& p, double total_compute,
                                  double ratio) {
    p.validate();
    if (!(total_compute > 0.0) || !(ratio > 0.0)) {
        throw std::domain_error("total compute and ratio must be positive");
    }
    const double ea = p.gamma_attn * p.mu_attn;
    const double ee = p.gamma_expert * p.mu_expert;
    const double attn_compute = total_compute / (1.0 + ratio);
    const double expert_compute = total_compute * ratio / (1.0 + ratio);
    const double lhs = p.alpha_attn * ea * std::pow(attn_compute, -(ea + 1.0));
    const double rhs = p.alpha_expert * ee * std::pow(expert_compute, -(ee + 1.0));
    return std::fabs(lhs - rhs) / std::fmax(std::fabs(lhs), std::fabs(rhs));
}

double numeric_optimal_ratio(const ElasticityParams& p, double total_compute) {
    p.validate();
    if (!(total_compute > 0.0) || !std::isfinite(total_compute)) {
        throw std::domain_error("total compute must be positive");
    }

    double lo = std::log(1e-6);
    double hi = std::log(1e6);
    const double gap_lo = marginal_log_gap(p, total_compute, lo);
    const double gap_hi = marginal_log_gap(p, total_compute, hi);
    if (!(gap_lo < 0.0) || !(gap_hi > 0.0)) {
        throw std::domain_error(
            "numeric_optimal_ratio: no interior minimum in r within [1e-6, 1e6]");
    }

    // Golden-section on L(exp(x)) down to 1e-10 width in log space.
    constexpr double kInvPhi = 0.6180339887498949;
    double a = lo;
    double b = hi;
    double c = b - kInvPhi * (b - a);
    double d = a + kInvPhi * (b - a);
    double fc = allocation_loss(p, total_compute, std::exp(c));
    double fd = allocation_loss(p, total_compute, std::exp(d));
    while (b - a > 1e-10) {
        if (fc < fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - kInvPhi * (b - a);
            fc = allocation_loss(p, total_compute, std::exp(c));
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + kInvPhi * (b - a);
            fd = allocation_loss(p, total_compute, std::exp(d));
        }
    }

    // Newton polish on the first-order condition, which is monotone in log r.
    double x = 0.5 * (a + b);
    for (int iter = 0; iter < 8; ++iter) {
        const double gap = marginal_log_gap(p, total_compute, x);
        const double slope = marginal_log_gap_slope(p, x);
        const double step = gap / slope;
        x -= step;
        if (std::fabs(step) < 1e-15) {
            break;
        }
    }
    return std::exp(x);
}

double efficiency_term(double ratio) {
    if (!(ratio >= 0.0)) {
        throw std::domain_error("efficiency_term: ratio must be nonnegative");
    }
    return ratio / (ratio + 1.0);
}

nlohmann::ordered_json allocation_law_to_json(const AllocationLaw& law) {
    nlohmann::ordered_json j;
    j["alpha_r"] = law.alpha_r;
    j["beta_r"] = law.beta_r;
    j["provenance"] = provenance_name(law.provenance);
    return j;
}

AllocationLaw allocation_law_from_json(const nlohmann::json& j) {
    AllocationLaw law;
    law.alpha_r = j.at("alpha_r").get<double>();
    law.beta_r = j.at("beta_r").get<double>();
    if (j.contains("provenance")) {
        law.provenance = provenance_from_name(j.at("provenance").get<std::string>());
    }
    law.validate();
    return law;
}

nlohmann::ordered_json elasticity_to_json(const ElasticityParams& p) {
    nlohmann::ordered_json j;
    j["mu_attn"] = p.mu_attn;
    j["mu_expert"] = p.mu_expert;
    j["gamma_attn"] = p.gamma_attn;
    j["gamma_expert"] = p.gamma_expert;
    j["alpha_attn"] = p.alpha_attn;
    j["alpha_expert"] = p.alpha_expert;
    return j;
}

ElasticityParams elasticity_from_json(const nlohmann::json& j) {
    ElasticityParams p;
    p.mu_attn = j.at("mu_attn").get<double>();
    p.mu_expert = j.at("mu_expert").get<double>();
    p.gamma_attn = j.at("gamma_attn").get<double>();
    p.gamma_expert = j.at("gamma_expert").get<double>();
    p.alpha_attn = j.at("alpha_attn").get<double>();
    p.alpha_expert = j.at("alpha_expert").get<double>();
    p.validate();
    return p;
}

}  // namespace moescale
