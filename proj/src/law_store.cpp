// SPDX-License-Identifier: Apache-2.0
#include "moescale/law_store.hpp"

#include <cmath>
#include <fstream>
#include <stdexcept>

#include "moescale/records.hpp"

namespace moescale {

void SparsityLawParams::validate() const {
    if (!(alpha_coef > 0.0) || !(beta_coef > 0.0)) {
        throw std::invalid_argument("sparsity law coefficients must be positive");
    }
    if (!std::isfinite(alpha_exp) || !std::isfinite(beta_exp)) {
        throw std::invalid_argument("sparsity law exponents must be finite");
    }
}

AllocationLaw SparsityLawParams::at(double sparsity) const {
    if (!(sparsity >= 0.0) || sparsity >= 1.0) {
        throw std::domain_error("sparsity must lie in [0, 1)");
    }
    const double active_frac = 1.0 - sparsity;
    AllocationLaw law;
    law.alpha_r = alpha_coef * std::pow(active_frac, alpha_exp);
    law.beta_r = beta_coef * std::pow(active_frac, beta_exp);
    law.provenance = LawProvenance::sparsity_law;
    law.validate();
    return law;
}

LossLawCoefficients default_loss_law() {
    LossLawCoefficients coef;
    coef.a = 15.12;
    coef.b = 18.62;
    coef.c = 39.55;
    coef.d = 0.0499;
    coef.alpha = 0.6288;
    coef.beta = 0.0453;
    coef.lambda = 0.4228;
    coef.gamma = 0.0431;
    coef.tau = 13.7354;
    coef.r_term_mode = RTermMode::ratio;
    return coef;
}

LawStore default_law_store() {
    LawStore store;
    store.sparsity_law = SparsityLawParams{};  // published coefficient laws
    store.allocation_law = store.sparsity_law.at(0.9091);
    store.loss_law = default_loss_law();
    store.loss_provenance = LawProvenance::paper_fit;
    return store;
}

nlohmann::ordered_json law_store_to_json(const LawStore& store) {
    nlohmann::ordered_json j;
    j["schema_version"] = kLawStoreSchemaVersion;
    j["allocation_law"] = allocation_law_to_json(store.allocation_law);
    nlohmann::ordered_json sl;
    sl["alpha_coef"] = store.sparsity_law.alpha_coef;
    sl["alpha_exp"] = store.sparsity_law.alpha_exp;
    sl["beta_coef"] = store.sparsity_law.beta_coef;
    sl["beta_exp"] = store.sparsity_law.beta_exp;
    sl["provenance"] = provenance_name(store.sparsity_law.provenance);
    j["sparsity_law"] = std::move(sl);
    nlohmann::ordered_json ll = loss_law_to_json(store.loss_law);
    ll["provenance"] = provenance_name(store.loss_provenance);
    j["loss_law"] = std::move(ll);
    return j;
}

LawStore law_store_from_json(const nlohmann::json& j) {
    const int version = j.at("schema_version").get<int>();
    if (version != kLawStoreSchemaVersion) {
        throw std::runtime_error("unsupported law store schema_version " +
                                 std::to_string(version));
    }
    LawStore store;
    store.allocation_law = allocation_law_from_json(j.at("allocation_law"));
    const nlohmann::json& sl = j.at("sparsity_law");
    store.sparsity_law.alpha_coef = sl.at("alpha_coef").get<double>();
    store.sparsity_law.alpha_exp = sl.at("alpha_exp").get<double>();
    store.sparsity_law.beta_coef = sl.at("beta_coef").get<double>();
    store.sparsity_law.beta_exp = sl.at("beta_exp").get<double>();
    if (sl.contains("provenance")) {
        store.sparsity_law.provenance =
            provenance_from_name(sl.at("provenance").get<std::string>());
    }
    store.sparsity_law.validate();
    const nlohmann::json& ll = j.at("loss_law");
    store.loss_law = loss_law_from_json(ll);
    if (ll.contains("provenance")) {
        store.loss_provenance = provenance_from_name(ll.at("provenance").get<std::string>());
    }
    return store;
}

LawStore load_law_store(const std::string& path, bool allow_missing) {
    if (path.empty()) return default_law_store();
    std::ifstream probe(path);
    if (!probe.good()) {
        if (allow_missing) return default_law_store();
        throw std::runtime_error("law store '" + path + "' not found");
    }
    probe.close();
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(read_file(path));
    } catch (const nlohmann::json::parse_error& e) {
        throw std::runtime_error("law store '" + path + "' is not valid JSON: " + e.what());
    }
    return law_store_from_json(j);
}

void save_law_store(const std::string& path, const LawStore& store) {
    write_file_atomic(path, law_store_to_json(store).dump(2) + "\n");
}

}  // namespace moescale
