// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>

namespace moescale {

// Expert-activation sparsity held as exact counts so S*E == E - e_act holds
// without rounding. fraction() is the lossy view.
struct SparsityLevel {
    std::int64_t total_experts = 1;
    std::int64_t active_experts = 1;

    double fraction() const {
        return static_cast<double>(total_experts - active_experts) /
               static_cast<double>(total_experts);
    }
    std::int64_t inactive_experts() const { return total_experts - active_experts; }
};

inline SparsityLevel sparsity_from_counts(std::int64_t total, std::int64_t active) {
    if (total <= 0 || active <= 0 || active > total) {
        throw std::invalid_argument("sparsity requires 0 < active_experts <= total_experts");
    }
    return SparsityLevel{total, active};
}

// Inverts S = (E - e_act)/E to the nearest integer expert count. Sparsity
// values quoted to a few decimals (0.9538 for 62/65, ...) round-trip exactly.
inline SparsityLevel sparsity_from_fraction(double s, std::int64_t active_experts) {
    if (!(s >= 0.0) || s >= 1.0) {
        throw std::domain_error("sparsity fraction must lie in [0, 1)");
    }
    if (active_experts <= 0) {
        throw std::invalid_argument("active_experts must be positive");
    }
    const double total = static_cast<double>(active_experts) / (1.0 - s);
    return sparsity_from_counts(static_cast<std::int64_t>(std::llround(total)), active_experts);
}

}  // namespace moescale
