// SPDX-License-Identifier: Apache-2.0
// Wall-clock comparison of the OpenMP paths against their serial reference
// implementations: the multi-start loss-law fit and the planner lattice scan.
// Both pairs must produce identical results; this binary reports the timings
// and verifies the agreement as it goes.
#include <chrono>
#include <cstdio>
#include <string>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "moescale/fit.hpp"
#include "moescale/law_store.hpp"
#include "moescale/planner.hpp"

using namespace moescale;

namespace {

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
        .count();
}

void print_row(const char* name, double serial_s, double parallel_s, bool agree) {
    std::printf("%-28s serial %8.3fs   parallel %8.3fs   speedup %5.2fx   %s\n",
                name, serial_s, parallel_s, serial_s / parallel_s,
                agree ? "results identical" : "RESULTS DIFFER");
}

}  // namespace

int main() {
#ifdef _OPENMP
    std::printf("OpenMP enabled, max threads: %d\n", omp_get_max_threads());
#else
    std::printf("OpenMP not available; both paths run serially\n");
#endif

    // Multi-start fit over a synthetic grid.
    SynthSpec spec;
    spec.total_params = {1e8, 3e8, 1e9, 3e9};
    spec.tokens = {2e9, 8e9, 3.2e10, 1.28e11};
    spec.sparsities = {0.8235, 0.9091, 0.9538, 0.9767};
    spec.ratios = {0.2, 0.5, 0.9, 1.5};
    spec.noise_sigma = 0.01;
    spec.seed = 17;
    const auto records = synth_records(default_loss_law(), spec);

    FitOptions options;
    options.max_starts = 128;
    options.seed = 5;

    options.use_parallel = false;
    auto t0 = std::chrono::steady_clock::now();
    const FitReport serial_fit = fit_loss_law(records, options);
    const double fit_serial_s = seconds_since(t0);

    options.use_parallel = true;
    t0 = std::chrono::steady_clock::now();
    const FitReport parallel_fit = fit_loss_law(records, options);
    const double fit_parallel_s = seconds_since(t0);

    const bool fit_agree =
        fit_report_to_json(serial_fit).dump() == fit_report_to_json(parallel_fit).dump();
    print_row("loss-law fit (128 starts)", fit_serial_s, fit_parallel_s, fit_agree);

    // Planner lattice scan.
    PlanRequest req;
    req.compute_budget = 1e21;
    req.tokens = 1.2e11;
    req.sparsity = 0.9091;
    req.n_layer = 16;
    req.n_head = 16;
    req.d_hidden_seed = 2048;
    req.granularity = 16;  // finer lattice -> more rows to scan
    const LawStore store = default_law_store();

    t0 = std::chrono::steady_clock::now();
    const PlanResult serial_plan = plan_serial(req, store);
    const double plan_serial_s = seconds_since(t0);

    t0 = std::chrono::steady_clock::now();
    const PlanResult parallel_plan = plan(req, store);
    const double plan_parallel_s = seconds_since(t0);

    const bool plan_agree = plan_result_to_json(serial_plan).dump() ==
                            plan_result_to_json(parallel_plan).dump();
    print_row("planner lattice scan", plan_serial_s, plan_parallel_s, plan_agree);

    return (fit_agree && plan_agree) ? 0 : 1;
}
