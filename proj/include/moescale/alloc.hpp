// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>

#include "json.hpp"

namespace moescale {

enum class LawProvenance { paper_fit, sparsity_law, elasticity_derived, user };

std::string provenance_name(LawProvenance p);
LawProvenance provenance_from_name(const std::string& name);

// Power law r*(C) = alpha_r * C^beta_r. C is total training FLOPs; any
// consistent unit works, but the shipped coefficient laws were calibrated
// against training budgets up to ~1e21 FLOPs.
struct AllocationLaw {
    double alpha_r = 0.0;
    double beta_r = 0.0;
    LawProvenance provenance = LawProvenance::user;

    void validate() const;
};

// Coefficient laws in the fraction of activated experts (1 - S):
//   alpha_r = 6.7e-5 * (1-S)^-1.23,  beta_r = 0.24 * (1-S)^0.21
inline constexpr double kSparsityAlphaCoef = 6.7e-5;
inline constexpr double kSparsityAlphaExp = -1.23;
inline constexpr double kSparsityBetaCoef = 0.24;
inline constexpr double kSparsityBetaExp = 0.21;

AllocationLaw sparsity_coefficients(double sparsity);

double optimal_ratio(const AllocationLaw& law, double total_compute);

// Two-component loss model: L = alpha_A * (C_A^mu_A)^-gamma_A
//                             + alpha_E * (C_E^mu_E)^-gamma_E
// with C_A = C/(1+r) and C_E = C*r/(1+r).
struct ElasticityParams {
    double mu_attn = 0.5;
    double mu_expert = 0.5;
    double gamma_attn = 1.0;
    double gamma_expert = 1.0;
    double alpha_attn = 1.0;
    double alpha_expert = 1.0;

    void validate() const;
};

// Closed-form (alpha_r, beta_r) from the elasticity model:
//   alpha_r = (alpha_E*gamma_E*mu_E / (alpha_A*gamma_A*mu_A))^(1/(gA*mA + gE*mE + 1))
//   beta_r  = (gE*mE - gA*mA) / (gA*mA + gE*mE + 1)
// The derivation drops the (1+r) factors, so this is an approximation of the
// exact first-order condition; numeric_optimal_ratio is the exact oracle.
AllocationLaw elasticity_closed_form(const ElasticityParams& p);

// Loss as a function of the ratio at fixed total compute.
double allocation_loss(const ElasticityParams& p, double total_compute, double ratio);

// Relative residual of the marginal-equality condition
//   alpha_A*gamma_A*mu_A / C_A^(gA*mA+1) = alpha_E*gamma_E*mu_E / C_E^(gE*mE+1)
double marginal_equality_residual(const ElasticityParams& p, double total_compute, double ratio);

// Exact minimizer of allocation_loss over r, found by log-space bracketing on
// [1e-6, 1e6], golden-section refinement, and a Newton polish on the
// first-order condition. Throws std::domain_error if no bracket exists.
double numeric_optimal_ratio(const ElasticityParams& p, double total_compute);

// Bounded efficiency penalty r/(r+1); derivative 1/(r+1)^2.
double efficiency_term(double ratio);

nlohmann::ordered_json allocation_law_to_json(const AllocationLaw& law);
AllocationLaw allocation_law_from_json(const nlohmann::json& j);
nlohmann::ordered_json elasticity_to_json(const ElasticityParams& p);
ElasticityParams elasticity_from_json(const nlohmann::json& j);

}  // namespace moescale
