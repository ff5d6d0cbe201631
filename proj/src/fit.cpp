// SPDX-License-Identifier: Apache-2.0
#include "moescale/fit.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <random>
#include <set>
#include <stdexcept>

#include "moescale/lbfgs.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace moescale {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Initialization grid values (weight logs, exponents, offset log).
constexpr double kWeightStarts[] = {0.0, 10.0, 20.0};
constexpr double kExponentStarts[] = {0.0, 0.25, 0.5, 0.75, 1.0, 1.25};
constexpr double kOffsetLogStart = 1.5;
constexpr std::size_t kWeightCount = 3;
constexpr std::size_t kExponentCount = 6;

struct GridShape {
    std::size_t weights = 0;    // leading log-weight dimensions
    std::size_t exponents = 0;  // following exponent dimensions
};

GridShape grid_shape(LawVariant variant) {
    switch (variant) {
        case LawVariant::final_law: return {4, 4};
        case LawVariant::wang: return {2, 3};
        case LawVariant::abnar: return {4, 4};
    }
    throw std::logic_error("unreachable variant");
}

// Uniform integer in [0, bound) by rejection, reproducible across platforms.
std::uint64_t bounded_rand(std::mt19937_64& rng, std::uint64_t bound) {
    const std::uint64_t max = std::numeric_limits<std::uint64_t>::max();
    const std::uint64_t limit = max - max % bound;
    std::uint64_t v = rng();
    while (v >= limit) v = rng();
    return v % bound;
}

struct RmseR2 {
    double rmse = 0.0;
    double r_squared = 0.0;
};

RmseR2 residual_summary(const std::vector<double>& observed,
                        const std::vector<double>& predicted) {
    const std::size_t n = observed.size();
    double mean = 0.0;
    for (double o : observed) mean += o;
    mean /= static_cast<double>(n);
    double ss_res = 0.0, ss_tot = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        ss_res += (predicted[i] - observed[i]) * (predicted[i] - observed[i]);
        ss_tot += (observed[i] - mean) * (observed[i] - mean);
    }
    RmseR2 out;
    out.rmse = std::sqrt(ss_res / static_cast<double>(n));
    out.r_squared = ss_tot > 0.0 ? 1.0 - ss_res / ss_tot
                                 : (ss_res == 0.0 ? 1.0 : 0.0);
    return out;
}

std::size_t count_distinct(const std::vector<RunRecord>& records,
                           double RunRecord::*field) {
    std::set<double> values;
    for (const RunRecord& rec : records) values.insert(rec.*field);
    return values.size();
}

void require_variation(const std::vector<RunRecord>& records,
                       double RunRecord::*field, const char* name) {
    if (count_distinct(records, field) < 2) {
        throw std::domain_error(std::string("fit needs at least 2 distinct values of ") +
                                name);
    }
}

}  // namespace

// ---------------------------------------------------------------------------
// Sweep grouping and r* extraction

void SweepGroup::validate() const {
    if (!(compute > 0.0)) throw std::invalid_argument("sweep group: C must be positive");
    if (!(sparsity >= 0.0) || sparsity >= 1.0) {
        throw std::invalid_argument("sweep group: S must lie in [0, 1)");
    }
    if (points.size() < 2) {
        throw std::invalid_argument("sweep group: need at least 2 ratio points");
    }
    double prev_r = 0.0;
    for (const auto& [r, loss] : points) {
        if (!(r > prev_r)) {
            throw std::invalid_argument(
                "sweep group: ratios must be positive, distinct, ascending");
        }
        if (!(loss > 0.0)) throw std::invalid_argument("sweep group: loss must be positive");
        prev_r = r;
    }
}

std::string selection_name(RStarSelection s) {
    return s == RStarSelection::argmin ? "argmin" : "suboptimal-monotonic";
}

RStarSelection selection_from_name(const std::string& name) {
    if (name == "argmin") return RStarSelection::argmin;
    if (name == "suboptimal-monotonic") return RStarSelection::suboptimal_monotonic;
    throw std::invalid_argument("unknown selection: " + name);
}

std::vector<SweepGroup> group_sweep_points(const std::vector<SweepPoint>& points) {
    std::map<std::pair<double, double>, std::vector<std::pair<double, double>>> buckets;
    for (const SweepPoint& p : points) {
        p.validate();
        buckets[{p.sparsity, p.compute}].emplace_back(p.ratio, p.loss);
    }
    std::vector<SweepGroup> groups;
    groups.reserve(buckets.size());
    for (auto& [key, pts] : buckets) {
        std::sort(pts.begin(), pts.end());
        SweepGroup g;
        g.sparsity = key.first;
        g.compute = key.second;
        g.points = std::move(pts);
        g.validate();  // catches duplicate ratios (non-ascending after sort)
        groups.push_back(std::move(g));
    }
    return groups;
}

std::vector<RStarObservation> extract_rstar(const std::vector<SweepGroup>& groups,
                                            double tolerance) {
    if (!(tolerance >= 0.0)) {
        throw std::invalid_argument("extract_rstar: tolerance must be nonnegative");
    }
    struct LevelState {
        double last_compute = 0.0;
        double last_r_star = 0.0;
        bool has_prev = false;
    };
    std::map<double, LevelState> levels;

    std::vector<RStarObservation> out;
    out.reserve(groups.size());
    for (const SweepGroup& g : groups) {
        g.validate();
        LevelState& state = levels[g.sparsity];
        if (state.has_prev && !(g.compute > state.last_compute)) {
            throw std::invalid_argument(
                "extract_rstar: groups must be in ascending compute order per sparsity");
        }

        // Sampled argmin; ascending scan with strict less keeps the smallest r
        // on exact loss ties.
        std::size_t best = 0;
        for (std::size_t i = 1; i < g.points.size(); ++i) {
            if (g.points[i].second < g.points[best].second) best = i;
        }
        const double min_loss = g.points[best].second;

        RStarObservation obs;
        obs.compute = g.compute;
        obs.sparsity = g.sparsity;
        obs.r_star = g.points[best].first;
        obs.loss_at_star = min_loss;
        obs.selection = RStarSelection::argmin;

        // Optimal ratios should not shrink as compute grows; treat a small
        // regression as sweep noise when a near-minimal candidate at or above
        // the previous selection exists.
        if (state.has_prev && obs.r_star < state.last_r_star) {
            for (const auto& [r, loss] : g.points) {
                if (r >= state.last_r_star && loss - min_loss < tolerance) {
                    obs.r_star = r;
                    obs.loss_at_star = loss;
                    obs.selection = RStarSelection::suboptimal_monotonic;
                    break;  // points ascend in r, so this is the smallest such r
                }
            }
        }

        state.last_compute = g.compute;
        state.last_r_star = obs.r_star;
        state.has_prev = true;
        out.push_back(obs);
    }
    return out;
}

std::string emit_rstar_csv(const std::vector<RStarObservation>& observations) {
    std::string out = "C,S,r_star,loss_at_star,selection\n";
    for (const RStarObservation& o : observations) {
        out += fmt_double(o.compute) + ',' + fmt_double(o.sparsity) + ',' +
               fmt_double(o.r_star) + ',' + fmt_double(o.loss_at_star) + ',' +
               selection_name(o.selection) + '\n';
    }
    return out;
}

std::vector<RStarObservation> parse_rstar_csv(const std::string& text) {
    std::vector<RStarObservation> out;
    for_each_csv_row(text, "C,S,r_star,loss_at_star,selection",
                     [&](const std::vector<std::string>& f, int line_no) {
        if (f.size() != 5) {
            throw std::runtime_error("line " + std::to_string(line_no) +
                                     ": expected 5 columns, got " +
                                     std::to_string(f.size()));
        }
        RStarObservation obs;
        obs.compute = parse_csv_number(f[0], line_no, "C");
        obs.sparsity = parse_csv_number(f[1], line_no, "S");
        obs.r_star = parse_csv_number(f[2], line_no, "r_star");
        obs.loss_at_star = parse_csv_number(f[3], line_no, "loss_at_star");
        try {
            obs.selection = selection_from_name(f[4]);
        } catch (const std::exception& e) {
            throw std::runtime_error("line " + std::to_string(line_no) + ": " + e.what());
        }
        out.push_back(obs);
    });
    return out;
}

// ---------------------------------------------------------------------------
// Power-law regression

std::vector<RatioLawRow> fit_ratio_laws(const std::vector<RStarObservation>& observations) {
    std::map<double, std::vector<std::pair<double, double>>> by_sparsity;
    for (const RStarObservation& obs : observations) {
        by_sparsity[obs.sparsity].emplace_back(obs.compute, obs.r_star);
    }
    std::vector<RatioLawRow> rows;
    rows.reserve(by_sparsity.size());
    for (const auto& [sparsity, points] : by_sparsity) {
        std::vector<double> xs, ys;
        xs.reserve(points.size());
        ys.reserve(points.size());
        for (const auto& [compute, r_star] : points) {
            xs.push_back(compute);
            ys.push_back(r_star);
        }
        const PowerLawFit fit = fit_power_law(xs, ys);
        rows.push_back({sparsity, fit.coefficient, fit.exponent, fit.r_squared});
    }
    return rows;
}

std::string emit_ratio_law_csv(const std::vector<RatioLawRow>& rows) {
    std::string out = "S,alpha_r,beta_r,r_squared\n";
    for (const RatioLawRow& row : rows) {
        out += fmt_double(row.sparsity) + ',' + fmt_double(row.alpha_r) + ',' +
               fmt_double(row.beta_r) + ',' + fmt_double(row.r_squared) + '\n';
    }
    return out;
}

std::vector<RatioLawRow> parse_ratio_law_csv(const std::string& text) {
    const std::string header = csv_header_line(text);
    const bool has_r2 = header == "S,alpha_r,beta_r,r_squared";
    const std::string expected = has_r2 ? header : "S,alpha_r,beta_r";
    std::vector<RatioLawRow> rows;
    for_each_csv_row(text, expected, [&](const std::vector<std::string>& f, int line_no) {
        const std::size_t want = has_r2 ? 4 : 3;
        if (f.size() != want) {
            throw std::runtime_error("line " + std::to_string(line_no) + ": expected " +
                                     std::to_string(want) + " columns, got " +
                                     std::to_string(f.size()));
        }
        RatioLawRow row;
        row.sparsity = parse_csv_number(f[0], line_no, "S");
        row.alpha_r = parse_csv_number(f[1], line_no, "alpha_r");
        row.beta_r = parse_csv_number(f[2], line_no, "beta_r");
        row.r_squared = has_r2 ? parse_csv_number(f[3], line_no, "r_squared") : 0.0;
        rows.push_back(row);
    });
    return rows;
}

PowerLawFit fit_power_law(std::span<const double> xs, std::span<const double> ys) {
    if (xs.size() != ys.size()) {
        throw std::invalid_argument("fit_power_law: size mismatch");
    }
    const std::size_t n = xs.size();
    if (n < 2) throw std::invalid_argument("fit_power_law: need at least 2 points");

    std::vector<double> lx(n), ly(n);
    for (std::size_t i = 0; i < n; ++i) {
        if (!(xs[i] > 0.0) || !(ys[i] > 0.0)) {
            throw std::domain_error("fit_power_law: values must be positive");
        }
        lx[i] = std::log(xs[i]);
        ly[i] = std::log(ys[i]);
    }
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        mx += lx[i];
        my += ly[i];
    }
    mx /= static_cast<double>(n);
    my /= static_cast<double>(n);

    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        sxx += (lx[i] - mx) * (lx[i] - mx);
        sxy += (lx[i] - mx) * (ly[i] - my);
    }
    if (!(sxx > 0.0)) {
        throw std::domain_error("fit_power_law: need at least 2 distinct x values");
    }

    PowerLawFit fit;
    fit.exponent = sxy / sxx;
    fit.coefficient = std::exp(my - fit.exponent * mx);

    double ss_res = 0.0, ss_tot = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double e = ly[i] - (my + fit.exponent * (lx[i] - mx));
        ss_res += e * e;
        ss_tot += (ly[i] - my) * (ly[i] - my);
    }
    fit.r_squared = ss_tot > 0.0 ? 1.0 - ss_res / ss_tot
                                 : (ss_res == 0.0 ? 1.0 : 0.0);
    return fit;
}

SparsityLawFit fit_sparsity_laws(
    const std::vector<std::pair<double, double>>& alpha_observations,
    const std::vector<std::pair<double, double>>& beta_observations) {
    auto fit_one = [](const std::vector<std::pair<double, double>>& obs) {
        std::vector<double> xs, ys;
        xs.reserve(obs.size());
        ys.reserve(obs.size());
        for (const auto& [sparsity, value] : obs) {
            if (!(sparsity >= 0.0) || sparsity >= 1.0) {
                throw std::domain_error("fit_sparsity_laws: S must lie in [0, 1)");
            }
            xs.push_back(1.0 - sparsity);
            ys.push_back(value);
        }
        return fit_power_law(xs, ys);
    };
    const PowerLawFit alpha_fit = fit_one(alpha_observations);
    const PowerLawFit beta_fit = fit_one(beta_observations);

    SparsityLawFit out;
    out.params.alpha_coef = alpha_fit.coefficient;
    out.params.alpha_exp = alpha_fit.exponent;
    out.params.beta_coef = beta_fit.coefficient;
    out.params.beta_exp = beta_fit.exponent;
    out.params.provenance = LawProvenance::user;
    out.params.validate();
    out.alpha_r_squared = alpha_fit.r_squared;
    out.beta_r_squared = beta_fit.r_squared;
    return out;
}

// ---------------------------------------------------------------------------
// Loss-law fitting

std::string variant_name(LawVariant v) {
    switch (v) {
        case LawVariant::final_law: return "final";
        case LawVariant::wang: return "wang";
        case LawVariant::abnar: return "abnar";
    }
    throw std::logic_error("unreachable variant");
}

LawVariant variant_from_name(const std::string& name) {
    if (name == "final") return LawVariant::final_law;
    if (name == "wang") return LawVariant::wang;
    if (name == "abnar") return LawVariant::abnar;
    throw std::invalid_argument("unknown law variant: " + name);
}

std::size_t FitProblem::dimension() const {
    const GridShape shape = grid_shape(variant);
    return shape.weights + shape.exponents + 1;  // + offset log
}

FitProblem prepare_fit_problem(const std::vector<RunRecord>& records,
                               const FitOptions& options) {
    for (const RunRecord& rec : records) rec.validate();
    switch (options.variant) {
        case LawVariant::final_law:
            if (records.size() < 10) {
                throw std::domain_error("fit needs at least 10 records");
            }
            require_variation(records, &RunRecord::total_params, "N");
            require_variation(records, &RunRecord::tokens, "D");
            require_variation(records, &RunRecord::sparsity, "S");
            require_variation(records, &RunRecord::ratio, "r");
            break;
        case LawVariant::wang:
            if (records.size() < 6) {
                throw std::domain_error("fit needs at least 6 records");
            }
            require_variation(records, &RunRecord::total_params, "N");
            require_variation(records, &RunRecord::tokens, "D");
            break;
        case LawVariant::abnar:
            if (records.size() < 9) {
                throw std::domain_error("fit needs at least 9 records");
            }
            require_variation(records, &RunRecord::total_params, "N");
            require_variation(records, &RunRecord::sparsity, "S");
            break;
    }
    if (!(options.huber_delta > 0.0)) {
        throw std::invalid_argument("huber delta must be positive");
    }
    if (!(options.wang_active_experts > 0.0)) {
        throw std::invalid_argument("activated expert count must be positive");
    }

    FitProblem p;
    p.variant = options.variant;
    p.huber_delta = options.huber_delta;
    const std::size_t n = records.size();
    p.log_params.reserve(n);
    p.log_tokens.reserve(n);
    p.log_active_frac.reserve(n);
    p.log_experts.reserve(n);
    p.efficiency.reserve(n);
    p.r_exponent.reserve(n);
    p.log_loss.reserve(n);
    for (const RunRecord& rec : records) {
        p.log_params.push_back(std::log(rec.total_params));
        p.log_tokens.push_back(std::log(rec.tokens));
        p.log_active_frac.push_back(std::log1p(-rec.sparsity));
        p.log_experts.push_back(
            std::log(options.wang_active_experts / (1.0 - rec.sparsity)));
        const double phi = rec.ratio / (rec.ratio + 1.0);
        p.efficiency.push_back(phi);
        p.r_exponent.push_back(options.r_term_mode == RTermMode::ratio ? rec.ratio : phi);
        p.log_loss.push_back(std::log(rec.loss));
    }
    return p;
}

double fit_objective(const FitProblem& problem, std::span<const double> theta,
                     std::span<double> grad) {
    const std::size_t n = problem.size();
    const std::size_t dim = problem.dimension();
    if (theta.size() != dim) {
        throw std::invalid_argument("fit_objective: parameter size mismatch");
    }
    const bool want_grad = !grad.empty();
    if (want_grad && grad.size() != dim) {
        throw std::invalid_argument("fit_objective: gradient size mismatch");
    }
    if (want_grad) std::fill(grad.begin(), grad.end(), 0.0);

    const double delta = problem.huber_delta;
    const double inv_n = 1.0 / static_cast<double>(n);
    double objective = 0.0;

    // Records accumulate serially in order so results are thread-count
    // independent; parallelism lives one level up, across starts.
    for (std::size_t i = 0; i < n; ++i) {
        const double ln_n = problem.log_params[i];
        const double ln_d = problem.log_tokens[i];
        const double ln_af = problem.log_active_frac[i];

        double pred = 0.0;
        double t1 = 0.0, t2 = 0.0, t3 = 0.0, t4 = 0.0, t5 = 0.0;
        switch (problem.variant) {
            case LawVariant::final_law:
                t1 = std::exp(theta[0] - theta[4] * ln_n);
                t2 = std::exp(theta[1] - theta[5] * ln_d);
                t3 = std::exp(theta[2] + problem.r_exponent[i] +
                              theta[7] * ln_af - theta[6] * ln_n);
                t4 = std::exp(theta[3]) * problem.efficiency[i];
                t5 = std::exp(theta[8]);
                break;
            case LawVariant::wang:
                t1 = std::exp(theta[0] - theta[2] * ln_n -
                              theta[4] * problem.log_experts[i]);
                t2 = std::exp(theta[1] - theta[3] * ln_d);
                t5 = std::exp(theta[5]);
                break;
            case LawVariant::abnar:
                t1 = std::exp(theta[0] - theta[4] * ln_n);
                t2 = std::exp(theta[1] - theta[5] * ln_n);
                t3 = std::exp(theta[2] - theta[6] * ln_af);
                t4 = std::exp(theta[3] - theta[7] * ln_af - theta[6] * ln_n);
                t5 = std::exp(theta[8]);
                break;
        }
        pred = t1 + t2 + t3 + t4 + t5;

        const double u = std::log(pred) - problem.log_loss[i];
        const double au = std::abs(u);
        double rho, drho;
        if (au <= delta) {
            rho = 0.5 * u * u;
            drho = u;
        } else {
            rho = delta * (au - 0.5 * delta);
            drho = u > 0.0 ? delta : -delta;
        }
        objective += rho * inv_n;
        if (!want_grad) continue;

        const double w = drho * inv_n / pred;
        switch (problem.variant) {
            case LawVariant::final_law:
                grad[0] += w * t1;
                grad[1] += w * t2;
                grad[2] += w * t3;
                grad[3] += w * t4;
                grad[4] += w * (-ln_n * t1);
                grad[5] += w * (-ln_d * t2);
                grad[6] += w * (-ln_n * t3);
                grad[7] += w * (ln_af * t3);
                grad[8] += w * t5;
                break;
            case LawVariant::wang:
                grad[0] += w * t1;
                grad[1] += w * t2;
                grad[2] += w * (-ln_n * t1);
                grad[3] += w * (-ln_d * t2);
                grad[4] += w * (-problem.log_experts[i] * t1);
                grad[5] += w * t5;
                break;
            case LawVariant::abnar:
                grad[0] += w * t1;
                grad[1] += w * t2;
                grad[2] += w * t3;
                grad[3] += w * t4;
                grad[4] += w * (-ln_n * t1);
                grad[5] += w * (-ln_n * t2);
                grad[6] += w * (-ln_af * t3 - ln_n * t4);
                grad[7] += w * (-ln_af * t4);
                grad[8] += w * t5;
                break;
        }
    }
    return objective;
}

std::size_t grid_start_count(LawVariant variant) {
    const GridShape shape = grid_shape(variant);
    std::size_t total = 1;
    for (std::size_t i = 0; i < shape.weights; ++i) total *= kWeightCount;
    for (std::size_t i = 0; i < shape.exponents; ++i) total *= kExponentCount;
    return total;
}

std::vector<double> grid_start(LawVariant variant, std::size_t index) {
    const GridShape shape = grid_shape(variant);
    if (index >= grid_start_count(variant)) {
        throw std::out_of_range("grid_start: index out of range");
    }
    std::vector<double> theta(shape.weights + shape.exponents + 1, 0.0);
    // Mixed-radix decode, last dimension least significant.
    std::size_t rem = index;
    for (std::size_t k = shape.exponents; k-- > 0;) {
        theta[shape.weights + k] = kExponentStarts[rem % kExponentCount];
        rem /= kExponentCount;
    }
    for (std::size_t k = shape.weights; k-- > 0;) {
        theta[k] = kWeightStarts[rem % kWeightCount];
        rem /= kWeightCount;
    }
    theta.back() = kOffsetLogStart;
    return theta;
}

std::vector<double> theta_lower_bounds(LawVariant variant) {
    const GridShape shape = grid_shape(variant);
    std::vector<double> lower(shape.weights + shape.exponents + 1, -kInf);
    for (std::size_t k = 0; k < shape.exponents; ++k) {
        lower[shape.weights + k] = 0.0;  // exponents projected nonnegative
    }
    return lower;
}

void theta_to_coefficients(LawVariant variant, RTermMode mode,
                           std::span<const double> theta, FitReport& report) {
    report.variant = variant;
    report.theta.assign(theta.begin(), theta.end());
    switch (variant) {
        case LawVariant::final_law: {
            LossLawCoefficients c;
            c.a = std::exp(theta[0]);
            c.b = std::exp(theta[1]);
            c.c = std::exp(theta[2]);
            c.d = std::exp(theta[3]);
            c.alpha = theta[4];
            c.beta = theta[5];
            c.lambda = theta[6];
            c.gamma = theta[7];
            c.tau = std::exp(theta[8]);
            c.r_term_mode = mode;
            report.coefficients = c;
            break;
        }
        case LawVariant::wang: {
            WangLawCoefficients c;
            c.a = std::exp(theta[0]);
            c.b = std::exp(theta[1]);
            c.alpha = theta[2];
            c.beta = theta[3];
            c.gamma = theta[4];
            c.tau = std::exp(theta[5]);
            report.wang_coefficients = c;
            break;
        }
        case LawVariant::abnar: {
            AbnarLawCoefficients c;
            c.a = std::exp(theta[0]);
            c.b = std::exp(theta[1]);
            c.c = std::exp(theta[2]);
            c.d = std::exp(theta[3]);
            c.alpha = theta[4];
            c.beta = theta[5];
            c.gamma = theta[6];
            c.delta = theta[7];
            c.tau = std::exp(theta[8]);
            report.abnar_coefficients = c;
            break;
        }
    }
}

double FitReport::predict(const RunRecord& rec) const {
    switch (variant) {
        case LawVariant::final_law: return predict_loss(coefficients, rec);
        case LawVariant::wang:
            return predict_loss_wang(wang_coefficients, rec, wang_active_experts);
        case LawVariant::abnar: return predict_loss_abnar(abnar_coefficients, rec);
    }
    throw std::logic_error("unreachable variant");
}

FitReport fit_loss_law(const std::vector<RunRecord>& records, const FitOptions& options) {
    // Split off held-out records before any validation of the fit set.
    std::vector<RunRecord> fit_records, holdout_records;
    if (options.holdout_sparsity >= 0.0) {
        for (const RunRecord& rec : records) {
            if (std::abs(rec.sparsity - options.holdout_sparsity) <= 1e-9) {
                holdout_records.push_back(rec);
            } else {
                fit_records.push_back(rec);
            }
        }
        if (holdout_records.empty()) {
            throw std::domain_error("holdout sparsity matches no records");
        }
    } else {
        fit_records = records;
    }

    const FitProblem problem = prepare_fit_problem(fit_records, options);
    const std::vector<double> lower = theta_lower_bounds(options.variant);

    // Start set: the full grid, or a seeded uniform subsample of it.
    const std::size_t total = grid_start_count(options.variant);
    std::vector<std::uint32_t> start_indices;
    if (options.full_grid || options.max_starts >= total) {
        start_indices.resize(total);
        for (std::size_t i = 0; i < total; ++i) {
            start_indices[i] = static_cast<std::uint32_t>(i);
        }
    } else {
        if (options.max_starts == 0) {
            throw std::invalid_argument("fit needs at least one start");
        }
        std::vector<std::uint32_t> pool(total);
        for (std::size_t i = 0; i < total; ++i) pool[i] = static_cast<std::uint32_t>(i);
        std::mt19937_64 rng(options.seed);
        for (std::size_t i = 0; i < options.max_starts; ++i) {
            const std::size_t j = i + bounded_rand(rng, total - i);
            std::swap(pool[i], pool[j]);
        }
        start_indices.assign(pool.begin(),
                             pool.begin() + static_cast<std::ptrdiff_t>(options.max_starts));
        std::sort(start_indices.begin(), start_indices.end());
    }
    const std::size_t n_starts = start_indices.size();

    ObjectiveFn objective = [&problem](std::span<const double> theta,
                                       std::span<double> grad) {
        return fit_objective(problem, theta, grad);
    };

    // Each start is independent; per-start slots keep the reduction exact and
    // order-free, so thread count cannot change the result.
    std::vector<double> objectives(n_starts, kInf);
    std::vector<char> converged(n_starts, 0);
    std::vector<std::vector<double>> solutions(n_starts);

    const auto run_start = [&](std::size_t s) {
        LbfgsResult res = minimize_lbfgs(objective, grid_start(options.variant,
                                                               start_indices[s]),
                                         lower);
        objectives[s] = res.objective;
        converged[s] = res.converged ? 1 : 0;
        solutions[s] = std::move(res.x);
    };

    if (options.use_parallel) {
#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic)
#endif
        for (std::int64_t s = 0; s < static_cast<std::int64_t>(n_starts); ++s) {
            run_start(static_cast<std::size_t>(s));
        }
    } else {
        for (std::size_t s = 0; s < n_starts; ++s) run_start(s);
    }

    // Best converged start; ties go to the lowest grid index (start_indices is
    // ascending, so the first strict improvement wins).
    std::size_t best = n_starts;
    std::size_t n_conv = 0;
    for (std::size_t s = 0; s < n_starts; ++s) {
        if (!converged[s]) continue;
        ++n_conv;
        if (best == n_starts || objectives[s] < objectives[best]) best = s;
    }
    if (best == n_starts) {
        throw std::runtime_error("loss-law fit: no start converged");
    }

    FitReport report;
    report.seed = options.seed;
    report.huber_delta = options.huber_delta;
    report.wang_active_experts = options.wang_active_experts;
    report.starts_attempted = n_starts;
    report.starts_converged = n_conv;
    report.best_start_index = start_indices[best];
    theta_to_coefficients(options.variant, options.r_term_mode, solutions[best], report);
    // Recomputed at the reported solution so the value is self-consistent.
    report.objective = fit_objective(problem, report.theta, {});

    std::vector<double> observed, predicted;
    observed.reserve(fit_records.size());
    predicted.reserve(fit_records.size());
    report.residuals.reserve(fit_records.size());
    for (const RunRecord& rec : fit_records) {
        const double pred = report.predict(rec);
        observed.push_back(rec.loss);
        predicted.push_back(pred);
        report.residuals.push_back(pred - rec.loss);
    }
    const RmseR2 fit_summary = residual_summary(observed, predicted);
    report.fit_rmse = fit_summary.rmse;
    report.fit_r_squared = fit_summary.r_squared;

    if (!holdout_records.empty()) {
        report.holdout_sparsity = options.holdout_sparsity;
        report.holdout_count = holdout_records.size();
        double ss = 0.0;
        for (const RunRecord& rec : holdout_records) {
            const double e = report.predict(rec) - rec.loss;
            ss += e * e;
        }
        report.holdout_rmse = std::sqrt(ss / static_cast<double>(holdout_records.size()));
    }
    return report;
}

// ---------------------------------------------------------------------------
// Reporting

nlohmann::ordered_json wang_law_to_json(const WangLawCoefficients& coef) {
    nlohmann::ordered_json j;
    j["variant"] = "wang";
    j["a"] = coef.a;
    j["b"] = coef.b;
    j["alpha"] = coef.alpha;
    j["beta"] = coef.beta;
    j["gamma"] = coef.gamma;
    j["tau"] = coef.tau;
    return j;
}

WangLawCoefficients wang_law_from_json(const nlohmann::json& j) {
    WangLawCoefficients coef;
    coef.a = j.at("a").get<double>();
    coef.b = j.at("b").get<double>();
    coef.alpha = j.at("alpha").get<double>();
    coef.beta = j.at("beta").get<double>();
    coef.gamma = j.at("gamma").get<double>();
    coef.tau = j.at("tau").get<double>();
    return coef;
}

nlohmann::ordered_json abnar_law_to_json(const AbnarLawCoefficients& coef) {
    nlohmann::ordered_json j;
    j["variant"] = "abnar";
    j["a"] = coef.a;
    j["b"] = coef.b;
    j["c"] = coef.c;
    j["d"] = coef.d;
    j["alpha"] = coef.alpha;
    j["beta"] = coef.beta;
    j["gamma"] = coef.gamma;
    j["delta"] = coef.delta;
    j["tau"] = coef.tau;
    return j;
}

AbnarLawCoefficients abnar_law_from_json(const nlohmann::json& j) {
    AbnarLawCoefficients coef;
    coef.a = j.at("a").get<double>();
    coef.b = j.at("b").get<double>();
    coef.c = j.at("c").get<double>();
    coef.d = j.at("d").get<double>();
    coef.alpha = j.at("alpha").get<double>();
    coef.beta = j.at("beta").get<double>();
    coef.gamma = j.at("gamma").get<double>();
    coef.delta = j.at("delta").get<double>();
    coef.tau = j.at("tau").get<double>();
    return coef;
}

nlohmann::ordered_json fit_report_to_json(const FitReport& report) {
    nlohmann::ordered_json j;
    j["schema_version"] = 1;
    j["variant"] = variant_name(report.variant);
    j["seed"] = report.seed;
    j["huber_delta"] = report.huber_delta;
    j["starts_attempted"] = report.starts_attempted;
    j["starts_converged"] = report.starts_converged;
    j["best_start_index"] = report.best_start_index;
    j["objective"] = report.objective;
    switch (report.variant) {
        case LawVariant::final_law:
            j["coefficients"] = loss_law_to_json(report.coefficients);
            break;
        case LawVariant::wang:
            j["coefficients"] = wang_law_to_json(report.wang_coefficients);
            break;
        case LawVariant::abnar:
            j["coefficients"] = abnar_law_to_json(report.abnar_coefficients);
            break;
    }
    j["fit_rmse"] = report.fit_rmse;
    j["fit_r_squared"] = report.fit_r_squared;
    j["residuals"] = report.residuals;
    if (report.holdout_sparsity >= 0.0) {
        nlohmann::ordered_json h;
        h["sparsity"] = report.holdout_sparsity;
        h["count"] = report.holdout_count;
        h["rmse"] = report.holdout_rmse;
        j["holdout"] = std::move(h);
    }
    return j;
}

namespace {

PredictionTable build_prediction_table(const std::vector<RunRecord>& records,
                                       const std::function<double(const RunRecord&)>& predict) {
    if (records.empty()) {
        throw std::invalid_argument("predict_vs_observed: no records");
    }
    PredictionTable table;
    std::vector<double> observed, predicted;
    observed.reserve(records.size());
    predicted.reserve(records.size());
    for (const RunRecord& rec : records) {
        rec.validate();
        PredictionRow row;
        row.observed = rec.loss;
        row.predicted = predict(rec);
        row.residual = row.predicted - row.observed;
        observed.push_back(row.observed);
        predicted.push_back(row.predicted);
        table.rows.push_back(row);
    }
    const RmseR2 summary = residual_summary(observed, predicted);
    table.rmse = summary.rmse;
    table.r_squared = summary.r_squared;
    return table;
}

}  // namespace

PredictionTable predict_vs_observed(const LossLawCoefficients& coef,
                                    const std::vector<RunRecord>& records) {
    coef.validate();
    return build_prediction_table(
        records, [&coef](const RunRecord& rec) { return predict_loss(coef, rec); });
}

PredictionTable predict_vs_observed(const FitReport& report,
                                    const std::vector<RunRecord>& records) {
    return build_prediction_table(
        records, [&report](const RunRecord& rec) { return report.predict(rec); });
}

std::string emit_prediction_csv(const PredictionTable& table) {
    std::string out = "observed,predicted,residual\n";
    for (const PredictionRow& row : table.rows) {
        out += fmt_double(row.observed) + ',' + fmt_double(row.predicted) + ',' +
               fmt_double(row.residual) + '\n';
    }
    out += "# rmse=" + fmt_double(table.rmse) +
           " r_squared=" + fmt_double(table.r_squared) + '\n';
    return out;
}

}  // namespace moescale
