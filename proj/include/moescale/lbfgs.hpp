// SPDX-License-Identifier: Apache-2.0
// Limited-memory BFGS with simple lower-bound projection, used by the fitting
// pipeline. Deterministic: no randomness, fixed iteration order.
#pragma once

#include <functional>
#include <span>
#include <vector>

namespace moescale {

struct LbfgsOptions {
    int max_iters = 500;
    int history = 10;           // stored (s, y) pairs
    double grad_tol = 1e-8;     // projected-gradient infinity norm
    double armijo_c1 = 1e-4;
    int max_backtracks = 60;    // step halvings per line search
};

struct LbfgsResult {
    std::vector<double> x;
    double objective = 0.0;
    int iterations = 0;
    bool converged = false;     // projected gradient below tolerance
};

// Evaluates f(x) and writes df/dx into grad (same length as x).
using ObjectiveFn =
    std::function<double(std::span<const double>, std::span<double>)>;

// Minimize f subject to x[i] >= lower[i].  Use -infinity for free variables.
// Variables pinned at a bound with an inward-pointing gradient are frozen for
// the step; the line search projects trial points back onto the bounds.
LbfgsResult minimize_lbfgs(const ObjectiveFn& f, std::vector<double> x0,
                           const std::vector<double>& lower,
                           const LbfgsOptions& opts = {});

}  // namespace moescale
