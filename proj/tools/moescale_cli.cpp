// SPDX-License-Identifier: Apache-2.0
// Command-line front end: FLOPs accounting, ratio recommendations, sweep
// extraction, law fitting, prediction, architecture planning, and synthetic
// data generation.  Data goes to stdout, diagnostics to stderr; exit codes are
// 0 (success), 1 (domain error), 2 (usage error).
#include <cstring>
#include <iostream>
#include <memory>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "moescale/alloc.hpp"
#include "moescale/fit.hpp"
#include "moescale/flops.hpp"
#include "moescale/law_store.hpp"
#include "moescale/model_config.hpp"
#include "moescale/planner.hpp"
#include "moescale/records.hpp"
#include "moescale/scaling.hpp"

namespace {

using namespace moescale;

// Data sink: stdout by default, atomic file write when a path is given.
void emit_output(const std::string& path, const std::string& content) {
    if (path.empty()) {
        std::cout << content;
        std::cout.flush();
        return;
    }
    write_file_atomic(path, content);
}

void report_error(bool json_errors, const std::string& kind, const std::string& message) {
    if (json_errors) {
        nlohmann::ordered_json j;
        j["error"]["kind"] = kind;
        j["error"]["message"] = message;
        std::cerr << j.dump() << '\n';
    } else {
        std::cerr << "error: " << message << '\n';
    }
}

// Shared flags for commands that read (and optionally update) the law store.
struct StoreArgs {
    std::string path;

    void attach(CLI::App* cmd) {
        cmd->add_option("--law-store", path,
                        "Coefficient store JSON (defaults to built-in laws)");
    }
    LawStore load(bool allow_missing) const {
        return load_law_store(path, allow_missing);
    }
};

// --- flops ------------------------------------------------------------------
struct FlopsArgs {
    std::string config_path;
    std::string format = "json";
    std::string output;
};

void run_flops(const FlopsArgs& args) {
    const ModelConfig cfg = load_config_file(args.config_path);
    const FlopsBreakdown b = total_flops(cfg);
    if (args.format == "csv") {
        emit_output(args.output, breakdown_to_csv(b));
    } else {
        emit_output(args.output, breakdown_to_json(b).dump(2) + "\n");
    }
}

// --- rstar ------------------------------------------------------------------
struct RstarArgs {
    double sparsity = -1.0;
    double compute = 0.0;
    double alpha_r = 0.0;
    double beta_r = 0.0;
    bool has_explicit = false;
    StoreArgs store;
};

void run_rstar(const RstarArgs& args) {
    AllocationLaw law;
    if (args.has_explicit) {
        law.alpha_r = args.alpha_r;
        law.beta_r = args.beta_r;
        law.provenance = LawProvenance::user;
        law.validate();
    } else {
        if (args.sparsity < 0.0) {
            throw std::domain_error("rstar needs --sparsity or an explicit law");
        }
        law = args.store.load(false).sparsity_law.at(args.sparsity);
    }
    std::cout << fmt_double(optimal_ratio(law, args.compute)) << '\n';
}

// --- sweep-extract ----------------------------------------------------------
struct SweepExtractArgs {
    std::string input;
    std::string output;
    double tolerance = 1e-3;
};

void run_sweep_extract(const SweepExtractArgs& args) {
    const std::vector<SweepPoint> points = parse_sweep_points(read_file(args.input));
    const std::vector<SweepGroup> groups = group_sweep_points(points);
    const std::vector<RStarObservation> obs = extract_rstar(groups, args.tolerance);
    emit_output(args.output, emit_rstar_csv(obs));
}

// --- fit-powerlaw -----------------------------------------------------------
struct FitPowerlawArgs {
    std::string input;
    std::string output;
    bool save = false;
    StoreArgs store;
};

void run_fit_powerlaw(const FitPowerlawArgs& args) {
    const std::vector<RStarObservation> obs = parse_rstar_csv(read_file(args.input));
    const std::vector<RatioLawRow> rows = fit_ratio_laws(obs);
    emit_output(args.output, emit_ratio_law_csv(rows));
    if (args.save) {
        if (args.store.path.empty()) {
            throw std::domain_error("--save needs --law-store");
        }
        if (rows.size() != 1) {
            throw std::domain_error(
                "--save stores a single allocation law; input has " +
                std::to_string(rows.size()) + " sparsity levels");
        }
        LawStore store = load_law_store(args.store.path, true);
        store.allocation_law.alpha_r = rows[0].alpha_r;
        store.allocation_law.beta_r = rows[0].beta_r;
        store.allocation_law.provenance = LawProvenance::user;
        store.allocation_law.validate();
        save_law_store(args.store.path, store);
        std::cerr << "allocation law saved to " << args.store.path << '\n';
    }
}

// --- fit-sparsity -----------------------------------------------------------
struct FitSparsityArgs {
    std::string input;
    std::string output;
    bool save = false;
    StoreArgs store;
};

void run_fit_sparsity(const FitSparsityArgs& args) {
    const std::vector<RatioLawRow> rows = parse_ratio_law_csv(read_file(args.input));
    std::vector<std::pair<double, double>> alpha_obs, beta_obs;
    alpha_obs.reserve(rows.size());
    beta_obs.reserve(rows.size());
    for (const RatioLawRow& row : rows) {
        alpha_obs.emplace_back(row.sparsity, row.alpha_r);
        beta_obs.emplace_back(row.sparsity, row.beta_r);
    }
    const SparsityLawFit fit = fit_sparsity_laws(alpha_obs, beta_obs);

    nlohmann::ordered_json j;
    j["alpha_coef"] = fit.params.alpha_coef;
    j["alpha_exp"] = fit.params.alpha_exp;
    j["beta_coef"] = fit.params.beta_coef;
    j["beta_exp"] = fit.params.beta_exp;
    j["provenance"] = provenance_name(fit.params.provenance);
    j["alpha_r_squared"] = fit.alpha_r_squared;
    j["beta_r_squared"] = fit.beta_r_squared;
    emit_output(args.output, j.dump(2) + "\n");

    if (args.save) {
        if (args.store.path.empty()) {
            throw std::domain_error("--save needs --law-store");
        }
        LawStore store = load_law_store(args.store.path, true);
        store.sparsity_law = fit.params;
        save_law_store(args.store.path, store);
        std::cerr << "sparsity laws saved to " << args.store.path << '\n';
    }
}

// --- fit-loss ----------------------------------------------------------------
struct FitLossArgs {
    std::string input;
    std::string output;
    FitOptions options;
    std::string variant = "final";
    std::string r_term_mode = "r";
    double holdout = -1.0;
    bool serial = false;
    bool save = false;
    StoreArgs store;
};

void run_fit_loss(const FitLossArgs& args) {
    const std::vector<RunRecord> records = parse_run_records(read_file(args.input));
    FitOptions options = args.options;
    options.variant = variant_from_name(args.variant);
    options.r_term_mode = r_term_mode_from_name(args.r_term_mode);
    options.holdout_sparsity = args.holdout;
    options.use_parallel = !args.serial;
    const FitReport report = fit_loss_law(records, options);
    emit_output(args.output, fit_report_to_json(report).dump(2) + "\n");
    if (args.save) {
        if (args.store.path.empty()) {
            throw std::domain_error("--save needs --law-store");
        }
        if (report.variant != LawVariant::final_law) {
            throw std::domain_error("--save stores only the five-term law");
        }
        LawStore store = load_law_store(args.store.path, true);
        store.loss_law = report.coefficients;
        store.loss_provenance = LawProvenance::user;
        save_law_store(args.store.path, store);
        std::cerr << "loss law saved to " << args.store.path << '\n';
    }
}

// --- predict -----------------------------------------------------------------
struct PredictArgs {
    std::string input;
    std::string output;
    std::string report_path;
    double wang_active_experts = 3.0;
    StoreArgs store;
};

void run_predict(const PredictArgs& args) {
    const std::vector<RunRecord> records = parse_run_records(read_file(args.input));
    PredictionTable table;
    if (!args.report_path.empty()) {
        // Accept a FitReport or a bare coefficients object of any variant.
        nlohmann::json j = nlohmann::json::parse(read_file(args.report_path));
        const nlohmann::json& coef = j.contains("coefficients") ? j.at("coefficients") : j;
        FitReport report;
        report.wang_active_experts = args.wang_active_experts;
        const std::string variant =
            coef.contains("variant") ? coef.at("variant").get<std::string>() : "final";
        report.variant = variant_from_name(variant);
        switch (report.variant) {
            case LawVariant::final_law:
                report.coefficients = loss_law_from_json(coef);
                break;
            case LawVariant::wang:
                report.wang_coefficients = wang_law_from_json(coef);
                break;
            case LawVariant::abnar:
                report.abnar_coefficients = abnar_law_from_json(coef);
                break;
        }
        table = predict_vs_observed(report, records);
    } else {
        table = predict_vs_observed(args.store.load(false).loss_law, records);
    }
    emit_output(args.output, emit_prediction_csv(table));
}

// --- plan ---------------------------------------------------------------------
struct PlanArgs {
    PlanRequest request;
    double alpha_r = 0.0;
    double beta_r = 0.0;
    bool has_explicit = false;
    std::string preset_label;
    std::string output;
    bool serial = false;
    StoreArgs store;
};

int run_plan(const PlanArgs& args) {
    PlanRequest req = args.request;
    if (!args.preset_label.empty()) {
        const SizePreset p = preset(args.preset_label);
        req.n_layer = p.n_layer;
        req.n_head = p.n_head;
    }
    if (args.has_explicit) {
        req.has_explicit_law = true;
        req.explicit_law.alpha_r = args.alpha_r;
        req.explicit_law.beta_r = args.beta_r;
        req.explicit_law.provenance = LawProvenance::user;
    }
    const LawStore store = args.store.load(false);
    const PlanResult result = args.serial ? plan_serial(req, store) : plan(req, store);
    emit_output(args.output, plan_result_to_json(result).dump(2) + "\n");
    if (!result.feasible) {
        std::cerr << "plan: no lattice point meets both tolerances; best candidate "
                     "reported with feasible=false\n";
        return 1;
    }
    return 0;
}

// --- synth --------------------------------------------------------------------
struct SynthArgs {
    SynthSpec spec;
    std::string output;
    StoreArgs store;
};

void run_synth(const SynthArgs& args) {
    const LawStore store = args.store.load(false);
    const std::vector<RunRecord> records = synth_records(store.loss_law, args.spec);
    emit_output(args.output, emit_run_records(records));
}

// --- preset -------------------------------------------------------------------
void run_preset(const std::string& label) {
    const SizePreset p = preset(label);
    nlohmann::ordered_json j;
    j["label"] = p.label;
    j["n_layer"] = p.n_layer;
    j["n_head"] = p.n_head;
    j["batch_size"] = p.batch_size;
    j["learning_rate"] = p.learning_rate;
    std::cout << j.dump(2) << '\n';
}

}  // namespace

int main(int argc, char** argv) {
    bool json_errors = false;
    for (int i = 1; i < argc; ++i) {
        if (std::strcmp(argv[i], "--json-errors") == 0) json_errors = true;
    }

    CLI::App app{"Compute-allocation toolkit for sparse mixture-of-experts "
                 "transformers"};
    app.require_subcommand(1);
    app.add_flag("--json-errors", json_errors,
                 "Emit errors as JSON on the error stream");

    int exit_code = 0;

    auto flops_args = std::make_shared<FlopsArgs>();
    CLI::App* flops_cmd =
        app.add_subcommand("flops", "Itemized FLOPs accounting for a model config");
    flops_cmd->add_option("--config", flops_args->config_path, "ModelConfig JSON file")
        ->required();
    flops_cmd->add_option("--format", flops_args->format, "Output format")
        ->check(CLI::IsMember({"json", "csv"}));
    flops_cmd->add_option("--output", flops_args->output, "Output file (default stdout)");
    flops_cmd->callback([flops_args]() { run_flops(*flops_args); });

    auto rstar_args = std::make_shared<RstarArgs>();
    CLI::App* rstar_cmd =
        app.add_subcommand("rstar", "Compute-optimal expert/attention FLOPs ratio");
    rstar_cmd->add_option("--sparsity", rstar_args->sparsity, "Sparsity level in [0, 1)");
    rstar_cmd->add_option("--compute", rstar_args->compute, "Total training FLOPs budget")
        ->required();
    CLI::Option* rstar_alpha =
        rstar_cmd->add_option("--alpha-r", rstar_args->alpha_r, "Explicit law multiplier");
    CLI::Option* rstar_beta =
        rstar_cmd->add_option("--beta-r", rstar_args->beta_r, "Explicit law exponent");
    rstar_alpha->needs(rstar_beta);
    rstar_beta->needs(rstar_alpha);
    rstar_args->store.attach(rstar_cmd);
    rstar_cmd->callback([rstar_args, rstar_alpha]() {
        rstar_args->has_explicit = rstar_alpha->count() > 0;
        run_rstar(*rstar_args);
    });

    auto sweep_args = std::make_shared<SweepExtractArgs>();
    CLI::App* sweep_cmd = app.add_subcommand(
        "sweep-extract", "Extract optimal ratios from loss sweeps (C,S,r,loss CSV)");
    sweep_cmd->add_option("--input", sweep_args->input, "Sweep CSV file")->required();
    sweep_cmd->add_option("--output", sweep_args->output, "Output file (default stdout)");
    sweep_cmd->add_option("--tolerance", sweep_args->tolerance,
                          "Loss tolerance for the monotonic selection rule");
    sweep_cmd->callback([sweep_args]() { run_sweep_extract(*sweep_args); });

    auto powerlaw_args = std::make_shared<FitPowerlawArgs>();
    CLI::App* powerlaw_cmd = app.add_subcommand(
        "fit-powerlaw", "Fit r* = alpha_r * C^beta_r per sparsity level");
    powerlaw_cmd->add_option("--input", powerlaw_args->input, "r* CSV from sweep-extract")
        ->required();
    powerlaw_cmd->add_option("--output", powerlaw_args->output,
                             "Output file (default stdout)");
    powerlaw_cmd->add_flag("--save", powerlaw_args->save,
                           "Store the fitted allocation law (single sparsity input)");
    powerlaw_args->store.attach(powerlaw_cmd);
    powerlaw_cmd->callback([powerlaw_args]() { run_fit_powerlaw(*powerlaw_args); });

    auto sparsity_args = std::make_shared<FitSparsityArgs>();
    CLI::App* sparsity_cmd = app.add_subcommand(
        "fit-sparsity", "Fit the sparsity coefficient laws from per-level ratio laws");
    sparsity_cmd->add_option("--input", sparsity_args->input,
                             "Ratio-law CSV from fit-powerlaw")
        ->required();
    sparsity_cmd->add_option("--output", sparsity_args->output,
                             "Output file (default stdout)");
    sparsity_cmd->add_flag("--save", sparsity_args->save, "Store the fitted laws");
    sparsity_args->store.attach(sparsity_cmd);
    sparsity_cmd->callback([sparsity_args]() { run_fit_sparsity(*sparsity_args); });

    auto fitloss_args = std::make_shared<FitLossArgs>();
    CLI::App* fitloss_cmd =
        app.add_subcommand("fit-loss", "Multi-start fit of the loss law to run records");
    fitloss_cmd->add_option("--input", fitloss_args->input, "RunRecord CSV file")
        ->required();
    fitloss_cmd->add_option("--output", fitloss_args->output, "Report file (default stdout)");
    fitloss_cmd->add_option("--variant", fitloss_args->variant, "Law variant")
        ->check(CLI::IsMember({"final", "wang", "abnar"}));
    fitloss_cmd->add_option("--starts", fitloss_args->options.max_starts,
                            "Start-point budget (subsampled from the grid)");
    fitloss_cmd->add_flag("--full-grid", fitloss_args->options.full_grid,
                          "Run every initialization grid point");
    fitloss_cmd->add_option("--seed", fitloss_args->options.seed,
                            "Seed for the start subsample");
    fitloss_cmd->add_option("--huber-delta", fitloss_args->options.huber_delta,
                            "Huber transition width in log-loss space");
    fitloss_cmd->add_option("--holdout-sparsity", fitloss_args->holdout,
                            "Exclude this sparsity level and score it separately");
    fitloss_cmd->add_option("--r-term-mode", fitloss_args->r_term_mode,
                            "Exponent form in the misallocation term")
        ->check(CLI::IsMember({"r", "r_over_1plus_r"}));
    fitloss_cmd->add_option("--active-experts", fitloss_args->options.wang_active_experts,
                            "Activated experts per token (wang variant)");
    fitloss_cmd->add_flag("--serial", fitloss_args->serial,
                          "Use the single-threaded reference path");
    fitloss_cmd->add_flag("--save", fitloss_args->save, "Store the fitted loss law");
    fitloss_args->store.attach(fitloss_cmd);
    fitloss_cmd->callback([fitloss_args]() { run_fit_loss(*fitloss_args); });

    auto predict_args = std::make_shared<PredictArgs>();
    CLI::App* predict_cmd = app.add_subcommand(
        "predict", "Predicted vs observed loss for run records");
    predict_cmd->add_option("--input", predict_args->input, "RunRecord CSV file")
        ->required();
    predict_cmd->add_option("--output", predict_args->output,
                            "Output file (default stdout)");
    predict_cmd->add_option("--report", predict_args->report_path,
                            "FitReport JSON (overrides the law store)");
    predict_cmd->add_option("--active-experts", predict_args->wang_active_experts,
                            "Activated experts per token (wang variant)");
    predict_args->store.attach(predict_cmd);
    predict_cmd->callback([predict_args]() { run_predict(*predict_args); });

    auto plan_args = std::make_shared<PlanArgs>();
    CLI::App* plan_cmd = app.add_subcommand(
        "plan", "Recommend r* and integer dimensions for a compute budget");
    plan_cmd->add_option("--budget", plan_args->request.compute_budget,
                         "Total training FLOPs")
        ->required();
    plan_cmd->add_option("--tokens", plan_args->request.tokens, "Training tokens")
        ->required();
    plan_cmd->add_option("--sparsity", plan_args->request.sparsity,
                         "Sparsity level in [0, 1)");
    plan_cmd->add_option("--experts", plan_args->request.total_experts,
                         "Total experts per layer (alternative to --sparsity)");
    plan_cmd->add_option("--top-k", plan_args->request.top_k, "Routed experts per token");
    plan_cmd->add_option("--shared-experts", plan_args->request.n_shared_experts,
                         "Always-active experts per token");
    plan_cmd->add_option("--layers", plan_args->request.n_layer, "Decoder layers");
    plan_cmd->add_option("--heads", plan_args->request.n_head, "Attention heads");
    plan_cmd->add_option("--preset", plan_args->preset_label,
                         "Size preset supplying layers and heads");
    plan_cmd->add_option("--ctx", plan_args->request.n_ctx, "Context length");
    plan_cmd->add_option("--vocab", plan_args->request.n_vocab, "Vocabulary size");
    plan_cmd->add_option("--d-hidden-seed", plan_args->request.d_hidden_seed,
                         "Center of the d_hidden search window")
        ->required();
    plan_cmd->add_option("--granularity", plan_args->request.granularity,
                         "Dimension lattice step");
    plan_cmd->add_option("--ratio-tol", plan_args->request.ratio_tolerance,
                         "Relative tolerance on the realized ratio");
    plan_cmd->add_option("--budget-tol", plan_args->request.budget_tolerance,
                         "Relative tolerance on per-token FLOPs");
    CLI::Option* plan_alpha =
        plan_cmd->add_option("--alpha-r", plan_args->alpha_r, "Explicit law multiplier");
    CLI::Option* plan_beta =
        plan_cmd->add_option("--beta-r", plan_args->beta_r, "Explicit law exponent");
    plan_alpha->needs(plan_beta);
    plan_beta->needs(plan_alpha);
    plan_cmd->add_flag("--gqa", plan_args->request.use_gqa, "Enable grouped-query attention");
    plan_cmd->add_option("--kv-ratio", plan_args->request.kv_head_ratio,
                         "Query heads per KV head (with --gqa)");
    plan_cmd->add_flag("--peft", plan_args->request.use_peft,
                       "Parameter-efficient training factor");
    plan_cmd->add_flag("--grad-checkpoint", plan_args->request.use_grad_checkpoint,
                       "Gradient checkpointing recompute");
    plan_cmd->add_flag("--serial", plan_args->serial,
                       "Use the single-threaded reference path");
    plan_cmd->add_option("--output", plan_args->output, "Output file (default stdout)");
    plan_args->store.attach(plan_cmd);
    plan_cmd->callback([plan_args, plan_alpha, &exit_code]() {
        plan_args->has_explicit = plan_alpha->count() > 0;
        exit_code = run_plan(*plan_args);
    });

    auto synth_args = std::make_shared<SynthArgs>();
    CLI::App* synth_cmd = app.add_subcommand(
        "synth", "Generate synthetic run records from the stored loss law");
    synth_cmd->add_option("--n", synth_args->spec.total_params, "Total parameter grid")
        ->required()
        ->delimiter(',');
    synth_cmd->add_option("--d", synth_args->spec.tokens, "Token grid")
        ->required()
        ->delimiter(',');
    synth_cmd->add_option("--s", synth_args->spec.sparsities, "Sparsity grid")
        ->required()
        ->delimiter(',');
    synth_cmd->add_option("--r", synth_args->spec.ratios, "FLOPs ratio grid")
        ->required()
        ->delimiter(',');
    synth_cmd->add_option("--sigma", synth_args->spec.noise_sigma,
                          "Log-space noise standard deviation");
    synth_cmd->add_option("--seed", synth_args->spec.seed, "Noise seed");
    synth_cmd->add_option("--output", synth_args->output, "Output file (default stdout)");
    synth_args->store.attach(synth_cmd);
    synth_cmd->callback([synth_args]() { run_synth(*synth_args); });

    auto preset_label = std::make_shared<std::string>();
    CLI::App* preset_cmd =
        app.add_subcommand("preset", "Shipped hyperparameters for a size label");
    preset_cmd->add_option("label", *preset_label, "Size label (e.g. 30M)")->required();
    preset_cmd->callback([preset_label]() { run_preset(*preset_label); });

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        report_error(json_errors, "usage", e.what());
        if (argc <= 1) std::cerr << '\n' << app.help();
        return 2;
    } catch (const std::exception& e) {
        report_error(json_errors, "domain", e.what());
        return 1;
    }
    return exit_code;
}
