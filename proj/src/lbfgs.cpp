// SPDX-License-Identifier: Apache-2.0
#include "moescale/lbfgs.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <stdexcept>

namespace moescale {

namespace {

double dot(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

void project(std::vector<double>& x, const std::vector<double>& lower) {
    for (std::size_t i = 0; i < x.size(); ++i) x[i] = std::max(x[i], lower[i]);
}

// Gradient with bound-blocked components removed: at an active lower bound
// only a negative component (pointing off the bound) counts.
double projected_grad_norm(const std::vector<double>& x, const std::vector<double>& g,
                           const std::vector<double>& lower) {
    double norm = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        double gi = g[i];
        if (x[i] <= lower[i] && gi > 0.0) gi = 0.0;
        norm = std::max(norm, std::abs(gi));
    }
    return norm;
}

struct Pair {
    std::vector<double> s;
    std::vector<double> y;
    double rho = 0.0;
};

}  // namespace

LbfgsResult minimize_lbfgs(const ObjectiveFn& f, std::vector<double> x0,
                           const std::vector<double>& lower,
                           const LbfgsOptions& opts) {
    const std::size_t n = x0.size();
    if (lower.size() != n) {
        throw std::invalid_argument("minimize_lbfgs: bound/parameter size mismatch");
    }
    project(x0, lower);

    LbfgsResult result;
    result.x = std::move(x0);
    std::vector<double> grad(n, 0.0);
    double fx = f(result.x, grad);
    if (!std::isfinite(fx)) {
        throw std::domain_error("minimize_lbfgs: objective not finite at start");
    }

    std::deque<Pair> history;
    std::vector<double> direction(n), trial(n), trial_grad(n);

    for (int iter = 0; iter < opts.max_iters; ++iter) {
        if (projected_grad_norm(result.x, grad, lower) < opts.grad_tol) {
            result.converged = true;
            break;
        }

        // Two-loop recursion for d = -H * grad.
        direction = grad;
        std::vector<double> alpha(history.size(), 0.0);
        for (std::size_t k = history.size(); k-- > 0;) {
            alpha[k] = history[k].rho * dot(history[k].s, direction);
            for (std::size_t i = 0; i < n; ++i) {
                direction[i] -= alpha[k] * history[k].y[i];
            }
        }
        if (!history.empty()) {
            const Pair& last = history.back();
            double scale = dot(last.s, last.y) / dot(last.y, last.y);
            for (double& d : direction) d *= scale;
        }
        for (std::size_t k = 0; k < history.size(); ++k) {
            double beta = history[k].rho * dot(history[k].y, direction);
            for (std::size_t i = 0; i < n; ++i) {
                direction[i] += (alpha[k] - beta) * history[k].s[i];
            }
        }
        for (double& d : direction) d = -d;

        // Freeze variables sitting on their bound with an inward gradient.
        for (std::size_t i = 0; i < n; ++i) {
            if (result.x[i] <= lower[i] && grad[i] > 0.0) direction[i] = 0.0;
        }
        double descent = dot(grad, direction);
        if (!(descent < 0.0)) {
            // Fall back to projected steepest descent.
            for (std::size_t i = 0; i < n; ++i) {
                direction[i] = (result.x[i] <= lower[i] && grad[i] > 0.0) ? 0.0 : -grad[i];
            }
            descent = dot(grad, direction);
            if (!(descent < 0.0)) {
                result.converged = true;  // no feasible descent direction
                break;
            }
        }

        // Backtracking Armijo search on the projected step.
        double step = 1.0;
        double f_trial = fx;
        bool accepted = false;
        for (int bt = 0; bt < opts.max_backtracks; ++bt) {
            for (std::size_t i = 0; i < n; ++i) {
                trial[i] = result.x[i] + step * direction[i];
            }
            project(trial, lower);
            double sufficient = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                sufficient += grad[i] * (trial[i] - result.x[i]);
            }
            f_trial = f(trial, trial_grad);
            if (std::isfinite(f_trial) && f_trial <= fx + opts.armijo_c1 * sufficient) {
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        result.iterations = iter + 1;
        if (!accepted) break;  // stall: return the best point found

        Pair pair;
        pair.s.resize(n);
        pair.y.resize(n);
        for (std::size_t i = 0; i < n; ++i) {
            pair.s[i] = trial[i] - result.x[i];
            pair.y[i] = trial_grad[i] - grad[i];
        }
        double sy = dot(pair.s, pair.y);
        double ss = std::sqrt(dot(pair.s, pair.s));
        double yy = std::sqrt(dot(pair.y, pair.y));
        // Skip pairs with negligible curvature; they destabilize the inverse
        // Hessian estimate.
        if (sy > 1e-10 * ss * yy) {
            pair.rho = 1.0 / sy;
            history.push_back(std::move(pair));
            if (static_cast<int>(history.size()) > opts.history) history.pop_front();
        }

        result.x = trial;
        grad = trial_grad;
        fx = f_trial;
    }

    result.objective = fx;
    return result;
}

}  // namespace moescale
