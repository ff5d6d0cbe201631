// SPDX-License-Identifier: Apache-2.0
// Single-file JSON persistence for fitted coefficients: the allocation power
// law, the sparsity coefficient laws, and the loss law, each with provenance.
#pragma once

#include <string>

#include "json.hpp"
#include "moescale/alloc.hpp"
#include "moescale/scaling.hpp"

namespace moescale {

inline constexpr int kLawStoreSchemaVersion = 1;

// Coefficient laws alpha_r(S) = alpha_coef * (1-S)^alpha_exp and
// beta_r(S) = beta_coef * (1-S)^beta_exp, as a fittable record.
struct SparsityLawParams {
    double alpha_coef = kSparsityAlphaCoef;
    double alpha_exp = kSparsityAlphaExp;
    double beta_coef = kSparsityBetaCoef;
    double beta_exp = kSparsityBetaExp;
    LawProvenance provenance = LawProvenance::paper_fit;

    void validate() const;
    // Evaluate both laws at a sparsity level in [0, 1).
    AllocationLaw at(double sparsity) const;
};

struct LawStore {
    AllocationLaw allocation_law;
    SparsityLawParams sparsity_law;
    LossLawCoefficients loss_law;
    LawProvenance loss_provenance = LawProvenance::paper_fit;
};

// Built-in defaults: the published loss-law fit and sparsity coefficient laws
// (provenance "paper-fit"); the allocation law is those coefficients evaluated
// at the representative sparsity 0.9091 (provenance "sparsity-law").
LawStore default_law_store();

// The published loss-law coefficients alone.
LossLawCoefficients default_loss_law();

nlohmann::ordered_json law_store_to_json(const LawStore& store);
LawStore law_store_from_json(const nlohmann::json& j);

// load falls back to default_law_store() when path is empty or missing is
// tolerated; save writes atomically (temp file + rename).
LawStore load_law_store(const std::string& path, bool allow_missing = false);
void save_law_store(const std::string& path, const LawStore& store);

}  // namespace moescale
