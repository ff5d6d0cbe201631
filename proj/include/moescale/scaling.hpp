// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <span>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

namespace moescale {

// How the exponent R in the misallocation term e^R is derived from the
// record's FLOPs ratio r.
enum class RTermMode { ratio, ratio_over_one_plus };

std::string r_term_mode_name(RTermMode m);
RTermMode r_term_mode_from_name(const std::string& name);

// Five-term loss law:
//   L = a/N^alpha + b/D^beta + c * e^R * (1-S)^gamma / N^lambda
//     + d * r/(r+1) + tau
// N is total parameters; activated parameters are carried on the record so
// the alternative convention stays evaluable.
struct LossLawCoefficients {
    double a = 1.0;
    double b = 1.0;
    double c = 1.0;
    double d = 1.0;
    double alpha = 0.5;
    double beta = 0.5;
    double lambda = 0.5;
    double gamma = 0.5;
    double tau = 0.0;
    RTermMode r_term_mode = RTermMode::ratio;

    void validate() const;
};

// One training-run observation; the ingestion unit for fitting.
struct RunRecord {
    std::string label;
    double total_params = 0.0;    // N
    double active_params = 0.0;   // N_active
    double tokens = 0.0;          // D
    double sparsity = 0.0;        // S
    double ratio = 0.0;           // r
    double compute = 0.0;         // C, total training FLOPs
    double loss = 0.0;

    void validate() const;
};

struct LossTerms {
    double param_term = 0.0;       // a / N^alpha
    double data_term = 0.0;        // b / D^beta
    double misalloc_term = 0.0;    // c * e^R * (1-S)^gamma / N^lambda
    double efficiency_term = 0.0;  // d * r/(r+1)
    double offset = 0.0;           // tau

    double total() const {
        return param_term + data_term + misalloc_term + efficiency_term + offset;
    }
};

LossTerms loss_terms(const LossLawCoefficients& coef, const RunRecord& rec);
double predict_loss(const LossLawCoefficients& coef, const RunRecord& rec);

// L = a / (N^alpha * E^gamma) + b / D^beta + tau
struct WangLawCoefficients {
    double a = 1.0;
    double b = 1.0;
    double alpha = 0.5;
    double beta = 0.5;
    double gamma = 0.5;
    double tau = 0.0;
};

// L = a/N^alpha + b/N^beta + c/(1-S)^gamma + d/((1-S)^delta * N^gamma) + tau
// (gamma reappears on N in the cross term, as published).
struct AbnarLawCoefficients {
    double a = 1.0;
    double b = 1.0;
    double c = 1.0;
    double d = 1.0;
    double alpha = 0.5;
    double beta = 0.5;
    double gamma = 0.5;
    double delta = 0.5;
    double tau = 0.0;
};

double predict_loss_wang(const WangLawCoefficients& coef, double total_params,
                         double tokens, double total_experts);
// Recovers E from the record's sparsity and the activated expert count.
double predict_loss_wang(const WangLawCoefficients& coef, const RunRecord& rec,
                         double active_experts = 3.0);
double predict_loss_abnar(const AbnarLawCoefficients& coef, const RunRecord& rec);

// Loss along a token grid with every other field held fixed.
std::vector<std::pair<double, double>> loss_curve(const LossLawCoefficients& coef,
                                                  const RunRecord& rec,
                                                  std::span<const double> token_grid);

nlohmann::ordered_json loss_law_to_json(const LossLawCoefficients& coef);
LossLawCoefficients loss_law_from_json(const nlohmann::json& j);

}  // namespace moescale
