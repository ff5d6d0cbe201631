// SPDX-License-Identifier: Apache-2.0
// Estimation pipeline: ratio-minimum extraction from loss sweeps, log-log
// power-law regression, and multi-start quasi-Newton fitting of the loss law.
#pragma once

#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "moescale/law_store.hpp"
#include "moescale/records.hpp"
#include "moescale/scaling.hpp"

namespace moescale {

// One controlled sweep: loss sampled over the FLOPs ratio at fixed total
// compute and sparsity.
struct SweepGroup {
    double compute = 0.0;
    double sparsity = 0.0;
    std::vector<std::pair<double, double>> points;  // (r, loss), r ascending

    void validate() const;
};

enum class RStarSelection { argmin, suboptimal_monotonic };

std::string selection_name(RStarSelection s);
RStarSelection selection_from_name(const std::string& name);

struct RStarObservation {
    double compute = 0.0;
    double sparsity = 0.0;
    double r_star = 0.0;
    double loss_at_star = 0.0;
    RStarSelection selection = RStarSelection::argmin;
};

// Group flat sweep rows by (sparsity, compute), ordering groups by sparsity
// then compute and points by ratio.  Throws on duplicate ratios in a group or
// groups with fewer than two points.
std::vector<SweepGroup> group_sweep_points(const std::vector<SweepPoint>& points);

// Pick r* per group: the sampled argmin (ties -> smallest r), except that when
// the argmin at a larger compute falls below the previous selection for the
// same sparsity, the smallest candidate r >= that previous selection whose
// loss is within `tolerance` of the minimum is preferred and marked
// suboptimal-monotonic.  Groups must arrive in ascending compute order within
// each sparsity level.
std::vector<RStarObservation> extract_rstar(const std::vector<SweepGroup>& groups,
                                            double tolerance = 1e-3);

// CSV with header `C,S,r_star,loss_at_star,selection`.
std::string emit_rstar_csv(const std::vector<RStarObservation>& observations);
std::vector<RStarObservation> parse_rstar_csv(const std::string& text);

struct PowerLawFit {
    double coefficient = 0.0;  // multiplier alpha in y = alpha * x^beta
    double exponent = 0.0;     // beta
    double r_squared = 0.0;    // of the log-log regression
};

// Ordinary least squares on (ln x, ln y).  Needs >= 2 points, all positive,
// and at least two distinct x values.
PowerLawFit fit_power_law(std::span<const double> xs, std::span<const double> ys);

// Allocation power law fitted at one sparsity level.
struct RatioLawRow {
    double sparsity = 0.0;
    double alpha_r = 0.0;
    double beta_r = 0.0;
    double r_squared = 0.0;
};

// Per-sparsity r*(C) = alpha_r * C^beta_r fits; observations grouped by
// sparsity, each level needing >= 2 compute points.  Rows ascend in sparsity.
std::vector<RatioLawRow> fit_ratio_laws(const std::vector<RStarObservation>& observations);

// CSV with header `S,alpha_r,beta_r,r_squared` (last column optional on read).
std::string emit_ratio_law_csv(const std::vector<RatioLawRow>& rows);
std::vector<RatioLawRow> parse_ratio_law_csv(const std::string& text);

struct SparsityLawFit {
    SparsityLawParams params;
    double alpha_r_squared = 0.0;
    double beta_r_squared = 0.0;
};

// Fit alpha_r and beta_r against the activated fraction (1 - S).  Each
// observation is (sparsity, value); >= 2 distinct sparsity levels required.
SparsityLawFit fit_sparsity_laws(
    const std::vector<std::pair<double, double>>& alpha_observations,
    const std::vector<std::pair<double, double>>& beta_observations);

// ---------------------------------------------------------------------------
// Loss-law fitting

enum class LawVariant { final_law, wang, abnar };

std::string variant_name(LawVariant v);
LawVariant variant_from_name(const std::string& name);

struct FitOptions {
    LawVariant variant = LawVariant::final_law;
    RTermMode r_term_mode = RTermMode::ratio;
    double huber_delta = 1e-3;
    // Start-point budget: the full initialization grid, or a seeded uniform
    // subsample of max_starts grid points when full_grid is false.
    bool full_grid = false;
    std::size_t max_starts = 1024;
    std::uint64_t seed = 0;
    // Records whose sparsity matches holdout_sparsity (within 1e-9) are
    // excluded from fitting and scored separately.  Negative disables.
    double holdout_sparsity = -1.0;
    // Activated expert count used to recover E from sparsity (wang variant).
    double wang_active_experts = 3.0;
    bool use_parallel = true;  // serial reference path when false
};

struct FitReport {
    LawVariant variant = LawVariant::final_law;
    LossLawCoefficients coefficients;            // final variant
    WangLawCoefficients wang_coefficients;       // wang variant
    AbnarLawCoefficients abnar_coefficients;     // abnar variant
    std::vector<double> theta;                   // optimizer-space solution
    double objective = 0.0;
    std::uint64_t seed = 0;
    double huber_delta = 1e-3;
    std::size_t starts_attempted = 0;
    std::size_t starts_converged = 0;
    std::size_t best_start_index = 0;            // index into the full grid
    std::vector<double> residuals;               // predicted - observed, fit set
    double fit_rmse = 0.0;
    double fit_r_squared = 0.0;
    double holdout_sparsity = -1.0;
    std::size_t holdout_count = 0;
    double holdout_rmse = std::numeric_limits<double>::quiet_NaN();
    double wang_active_experts = 3.0;

    // Predicted loss for one record under the fitted variant.
    double predict(const RunRecord& rec) const;
};

// Multi-start projected L-BFGS fit of the selected law variant; the best
// converged start wins (ties -> lowest grid index).  Deterministic for a
// given seed, independent of thread count.
FitReport fit_loss_law(const std::vector<RunRecord>& records, const FitOptions& options);

nlohmann::ordered_json fit_report_to_json(const FitReport& report);

nlohmann::ordered_json wang_law_to_json(const WangLawCoefficients& coef);
WangLawCoefficients wang_law_from_json(const nlohmann::json& j);
nlohmann::ordered_json abnar_law_to_json(const AbnarLawCoefficients& coef);
AbnarLawCoefficients abnar_law_from_json(const nlohmann::json& j);

struct PredictionRow {
    double observed = 0.0;
    double predicted = 0.0;
    double residual = 0.0;  // predicted - observed
};

struct PredictionTable {
    std::vector<PredictionRow> rows;
    double rmse = 0.0;
    double r_squared = 0.0;
};

PredictionTable predict_vs_observed(const LossLawCoefficients& coef,
                                    const std::vector<RunRecord>& records);
PredictionTable predict_vs_observed(const FitReport& report,
                                    const std::vector<RunRecord>& records);

// CSV with header `observed,predicted,residual` and a trailing summary
// comment line `# rmse=... r_squared=...`.
std::string emit_prediction_csv(const PredictionTable& table);

// ---------------------------------------------------------------------------
// Fitting internals, exposed for validation and benchmarking.

// Per-record features precomputed for objective/gradient evaluation.
struct FitProblem {
    LawVariant variant = LawVariant::final_law;
    double huber_delta = 1e-3;
    std::vector<double> log_params;       // ln N
    std::vector<double> log_tokens;       // ln D
    std::vector<double> log_active_frac;  // ln (1-S)
    std::vector<double> log_experts;      // ln E (wang)
    std::vector<double> efficiency;       // r/(1+r)
    std::vector<double> r_exponent;       // R in the misallocation term
    std::vector<double> log_loss;         // ln observed loss

    std::size_t size() const { return log_loss.size(); }
    std::size_t dimension() const;
};

FitProblem prepare_fit_problem(const std::vector<RunRecord>& records,
                               const FitOptions& options);

// Mean Huber penalty on log-space residuals; gradient written when nonempty.
double fit_objective(const FitProblem& problem, std::span<const double> theta,
                     std::span<double> grad);

// Initialization grid: every combination of weight and exponent start values.
std::size_t grid_start_count(LawVariant variant);
std::vector<double> grid_start(LawVariant variant, std::size_t index);
std::vector<double> theta_lower_bounds(LawVariant variant);

// Decode an optimizer-space vector into coefficient structs on the report.
void theta_to_coefficients(LawVariant variant, RTermMode mode,
                           std::span<const double> theta, FitReport& report);

}  // namespace moescale
