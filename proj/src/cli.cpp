#include "cwripple/cli.hpp"

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "cwripple/circuit.hpp"
#include "cwripple/config.hpp"
#include "cwripple/dataset.hpp"
#include "cwripple/errors.hpp"
#include "cwripple/features.hpp"
#include "cwripple/forest.hpp"
#include "cwripple/hybrid.hpp"
#include "cwripple/theory.hpp"

namespace cwripple::cli {

namespace {

using nlohmann::json;
namespace fs = std::filesystem;

void write_text(const fs::path& path, const std::string& text) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open for writing: " + path.string());
    out << text;
    if (!out) throw IoError("failed writing: " + path.string());
}

std::string hex64(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

// --config wins over the environment variable; both are optional.
std::optional<std::string> find_config_path(const std::vector<std::string>& args) {
    for (std::size_t i = 0; i < args.size(); ++i) {
        if (args[i] == "--config" && i + 1 < args.size()) return args[i + 1];
        if (args[i].rfind("--config=", 0) == 0) return args[i].substr(9);
    }
    if (const char* env = std::getenv(config::kConfigEnvVar); env && *env) return std::string(env);
    return std::nullopt;
}

// ---------------------------------------------------------------------------
// Option groups
// ---------------------------------------------------------------------------

void add_grid_options(CLI::App& app, config::RunConfig& cfg) {
    app.add_option("--stages", cfg.grid.stages, "Stage counts N to sweep (comma separated)")
        ->delimiter(',')
        ->capture_default_str()
        ->group("Sweep grid");
    app.add_option("--vin-kv", cfg.grid.vin_kv, "Peak input voltages to sweep, kV")
        ->delimiter(',')
        ->capture_default_str()
        ->group("Sweep grid");
    app.add_option("--cap-uf", cfg.grid.cap_uf, "Stage capacitances to sweep, uF")
        ->delimiter(',')
        ->capture_default_str()
        ->group("Sweep grid");
    app.add_option("--freq-hz", cfg.grid.freq_hz, "Input frequencies to sweep, Hz")
        ->delimiter(',')
        ->capture_default_str()
        ->group("Sweep grid");
    app.add_option("--rload-mohm", cfg.grid.rload_mohm, "Load resistances to sweep, MOhm")
        ->delimiter(',')
        ->capture_default_str()
        ->group("Sweep grid");
}

void add_sim_options(CLI::App& app, config::RunConfig& cfg) {
    const char* g = "Solver";
    app.add_option("--steps-per-cycle", cfg.sim.steps_per_cycle, "Backward-Euler steps per source cycle (>= 256)")
        ->capture_default_str()
        ->group(g);
    app.add_option("--max-cycles", cfg.sim.max_cycles, "Cycle limit before giving up on steady state")
        ->capture_default_str()
        ->group(g);
    app.add_option("--settle-rel-tol", cfg.sim.settle_rel_tol,
                   "Steady state: relative change of the cycle-mean output below this")
        ->capture_default_str()
        ->group(g);
    app.add_option("--settle-consecutive", cfg.sim.settle_consecutive,
                   "Consecutive cycles that must meet --settle-rel-tol")
        ->capture_default_str()
        ->group(g);
    app.add_option("--max-diode-iters", cfg.sim.max_diode_iters, "Diode-state sweeps per time step")
        ->capture_default_str()
        ->group(g);
    app.add_option("--min-cycles", cfg.sim.min_cycles,
                   "Never declare steady state before max(this, 4 N) cycles")
        ->capture_default_str()
        ->group(g);
}

void add_component_options(CLI::App& app, config::RunConfig& cfg) {
    const char* g = "Components";
    app.add_option("--esr-ohm", cfg.components.esr, "Capacitor series resistance (ESR), Ohm")
        ->capture_default_str()
        ->group(g);
    app.add_option("--diode-vf-v", cfg.components.diode_vf, "Diode forward voltage, V")
        ->capture_default_str()
        ->group(g);
    app.add_option("--diode-ron-ohm", cfg.components.diode_ron, "Diode on resistance, Ohm")
        ->capture_default_str()
        ->group(g);
    app.add_option("--diode-goff-s", cfg.components.diode_goff, "Diode off conductance, S")
        ->capture_default_str()
        ->group(g);
}

void add_workers_option(CLI::App& app, config::RunConfig& cfg) {
    app.add_option("--workers", cfg.workers, "Worker threads (0 = available hardware parallelism)")
        ->capture_default_str();
}

void add_config_option(CLI::App& app, std::string& sink) {
    // Consumed before parsing; declared here so it shows in --help.
    app.add_option("--config", sink, "JSON run configuration; flags override its values. Defaults to $" +
                                   std::string(config::kConfigEnvVar) + " when set");
}

// ---------------------------------------------------------------------------
// Commands
// ---------------------------------------------------------------------------

struct SweepArgs {
    std::string out = "dataset.csv";
    std::string manifest;
    std::string waveform_dir;
};

int cmd_sweep(const config::RunConfig& cfg, const SweepArgs& args, std::ostream& out, std::ostream& err) {
    cfg.validate();
    dataset::SweepOptions options;
    options.workers = cfg.effective_workers();
    if (!args.waveform_dir.empty()) options.waveform_dir = args.waveform_dir;

    const auto t0 = std::chrono::steady_clock::now();
    const auto result = dataset::run_sweep(cfg.grid, cfg.sim, cfg.components, options);
    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    std::ostringstream csv;
    dataset::write_csv(result.records, csv);
    write_text(args.out, csv.str());

    json failed = json::array();
    for (const auto& e : result.errors) failed.push_back(e);
    json nonconverged = json::array();
    for (const auto& r : result.records) {
        if (!r.converged && !r.failed()) nonconverged.push_back(r.case_id);
    }
    json manifest;
    manifest["schema_version"] = dataset::kSchemaVersion;
    manifest["command"] = "sweep";
    manifest["config"] = json::parse(config::to_json(cfg));
    manifest["cases"] = result.records.size();
    manifest["failed_cases"] = failed;
    manifest["nonconverged_cases"] = nonconverged;
    manifest["dataset"] = args.out;
    manifest["dataset_fingerprint"] = hex64(dataset::fingerprint(result.records));
    manifest["workers"] = options.workers;
    manifest["timings"] = {{"wall_s", wall}};
    write_text(args.manifest.empty() ? args.out + ".manifest.json" : args.manifest, manifest.dump(2) + "\n");

    out << "wrote " << result.records.size() << " cases to " << args.out << " (" << nonconverged.size()
        << " not converged, " << result.errors.size() << " failed)\n";
    for (const auto& e : result.errors) err << "error: " << e << "\n";
    return result.errors.empty() ? kExitOk : kExitPartialSweep;
}

struct TrainArgs {
    std::string data = "dataset.csv";
    std::string model_out = "model.json";
    std::string report_out;
    std::string cv_out;
    std::string correlation_out;
    bool params_only = false;
};

std::string cv_csv(const forest::CvResult& cv) {
    std::ostringstream ss;
    ss << "n_trees,max_depth,min_samples_leaf,feature_fraction,mean_rmse_v";
    const std::size_t k = cv.table.empty() ? 0 : cv.table.front().fold_rmse.size();
    for (std::size_t f = 0; f < k; ++f) ss << ",fold" << f << "_rmse_v";
    ss << '\n';
    ss.precision(17);
    for (const auto& row : cv.table) {
        const auto& hp = row.hyperparams;
        ss << hp.n_trees << ',' << (hp.max_depth ? std::to_string(*hp.max_depth) : "none") << ','
           << hp.min_samples_leaf << ',' << hp.feature_fraction << ',' << row.mean_rmse;
        for (double v : row.fold_rmse) ss << ',' << v;
        ss << '\n';
    }
    return ss.str();
}

int cmd_train(const config::RunConfig& cfg, const TrainArgs& args, std::ostream& out) {
    cfg.validate();
    const auto records = dataset::read_csv(args.data);
    const auto mode = args.params_only ? dataset::FeatureMode::ParamsOnly
                                       : dataset::feature_mode_from_string(cfg.feature_mode);
    const auto usable = dataset::usable_records(records, cfg.include_nonconverged);
    if (usable.empty()) throw DomainError("train: dataset has no usable records");
    const auto schema = hybrid::schema_for_records(usable, mode);

    hybrid::PipelineOptions options;
    options.train_frac = cfg.train_frac;
    options.split_seed = cfg.split_seed;
    options.cv_seed = cfg.cv_seed;
    options.forest_seed = cfg.forest_seed;
    options.folds = cfg.folds;
    options.grid = cfg.forest_grid.expand(schema.width(), cfg.forest_seed);
    options.mode = mode;
    options.include_nonconverged = cfg.include_nonconverged;
    options.workers = cfg.effective_workers();

    const auto result = hybrid::train_pipeline(records, options);
    forest::save_model(result.model, args.model_out);

    const auto report = result.to_text();
    out << report;
    out << "model written to " << args.model_out << "\n";
    if (!args.report_out.empty()) write_text(args.report_out, report);
    if (!args.cv_out.empty()) write_text(args.cv_out, cv_csv(result.cv));
    if (!args.correlation_out.empty()) {
        write_text(args.correlation_out, hybrid::correlation_csv(dataset::build_feature_matrix(usable, schema)));
    }
    return kExitOk;
}

// Compares the model's feature layout with what the dataset produces.
std::optional<std::string> feature_mismatch(const forest::ForestModel& model,
                                            std::span<const dataset::CaseRecord> usable) {
    const auto mode = dataset::feature_mode_from_string(model.feature_mode);
    const auto expected = hybrid::schema_for_records(usable, mode).column_names();
    if (expected == model.feature_names) return std::nullopt;
    std::set<std::string> have(model.feature_names.begin(), model.feature_names.end());
    std::set<std::string> want(expected.begin(), expected.end());
    std::string msg = "model features do not match the dataset;";
    for (const auto& n : have) {
        if (!want.count(n)) msg += " model-only: " + n + ";";
    }
    for (const auto& n : want) {
        if (!have.count(n)) msg += " dataset-only: " + n + ";";
    }
    if (have == want) msg += " same names in a different order;";
    return msg;
}

struct EvaluateArgs {
    std::string model = "model.json";
    std::string data = "dataset.csv";
    std::string out_dir = "reports";
};

std::vector<double> theory_column(std::span<const dataset::CaseRecord> records) {
    std::vector<double> v;
    for (const auto& r : records) v.push_back(r.vpp_theory_v);
    return v;
}

int cmd_evaluate(const EvaluateArgs& args, std::ostream& out, std::ostream& err) {
    const auto model = forest::load_model(args.model);
    const auto records = dataset::read_csv(args.data);
    const bool include_nc = model.training ? model.training->include_nonconverged : false;
    const auto usable = dataset::usable_records(records, include_nc);
    if (usable.empty()) throw DomainError("evaluate: dataset has no usable records");
    if (auto mismatch = feature_mismatch(model, usable)) {
        err << "error: " << *mismatch << "\n";
        return kExitError;
    }

    const fs::path dir(args.out_dir);
    const auto theory = theory_column(usable);
    const auto corrected = hybrid::corrected_prediction(theory, hybrid::predict_residuals(model, usable));
    const auto full = hybrid::evaluate_regimes(usable, theory, corrected.values,
                                               "full dataset (training rows are in-sample)");
    write_text(dir / "regimes_full.csv", full.to_csv());
    write_text(dir / "regimes_full.txt", full.to_text());
    std::string text = full.to_text();

    if (model.training) {
        const auto& t = *model.training;
        const auto parts = dataset::split(usable, t.train_frac, t.split_seed);
        const auto& test = parts.second;
        const auto test_theory = theory_column(test);
        const auto test_corrected =
            hybrid::corrected_prediction(test_theory, hybrid::predict_residuals(model, test));
        const auto held_out =
            hybrid::evaluate_regimes(test, test_theory, test_corrected.values, "held-out test split");
        write_text(dir / "regimes_test.csv", held_out.to_csv());
        write_text(dir / "regimes_test.txt", held_out.to_text());
        text = held_out.to_text() + "\n" + text;
    }
    const auto freq = hybrid::residual_vs_frequency(records);
    write_text(dir / "residual_vs_frequency.csv", hybrid::to_csv(freq));
    out << text;
    if (!corrected.clamped_rows.empty()) {
        err << "warning: " << corrected.clamped_rows.size() << " corrected predictions clamped to 0 V\n";
    }
    out << "reports written to " << dir.string() << "\n";
    return kExitOk;
}

struct PredictArgs {
    std::string model = "model.json";
    std::string waveform;
    int stages = 0;
    double vin_kv = 0.0;
    double cap_uf = 0.0;
    double freq_hz = 0.0;
    double rload_mohm = 0.0;
};

json number_or_null(std::optional<double> v) { return v ? json(*v) : json(nullptr); }

int cmd_predict(const config::RunConfig& cfg, const PredictArgs& args, std::ostream& out, std::ostream& err) {
    const auto model = forest::load_model(args.model);
    const auto schema = dataset::FeatureSchema::from_column_names(model.feature_names);

    circuit::CaseParams params = cfg.components;
    params.n_stages = args.stages;
    params.vin_peak = args.vin_kv * 1e3;
    params.cap = args.cap_uf * 1e-6;
    params.freq = args.freq_hz;
    params.r_load = args.rload_mohm * 1e6;
    params.validate();

    std::optional<features::RippleFeatures> stats;
    if (!args.waveform.empty()) {
        stats = features::extract_features(circuit::read_waveform_csv(args.waveform).samples);
    } else if (schema.mode == dataset::FeatureMode::Full) {
        err << "error: this model was trained on waveform statistics (std, skewness, kurtosis, crest "
               "factor) that only exist after simulating the case. Pass --waveform with a steady-state "
               "cycle (e.g. from `sweep --dump-waveforms`) or use a model trained with --params-only.\n";
        return kExitError;
    }

    // Load current from the measured V_dc when a waveform is available,
    // otherwise from the ideal no-load output.
    const double v_dc = stats ? stats->v_dc : theory::ideal_output_voltage(params.n_stages, params.vin_peak);
    const double i_load = theory::load_current(v_dc, params.r_load);
    const double theory_vpp = theory::theoretical_ripple_pp(
        {params.n_stages, params.vin_peak, params.freq, params.cap, std::max(0.0, i_load)});

    dataset::FeatureInputs in;
    in.n_stages = params.n_stages;
    in.vin_peak_v = params.vin_peak;
    in.cap_f = params.cap;
    in.freq_hz = params.freq;
    in.rload_ohm = params.r_load;
    in.i_load_a = i_load;
    if (stats) {
        in.std_v = stats->std_dev;
        in.skewness = stats->skewness;
        in.kurtosis = stats->kurtosis;
        in.crest_factor = stats->crest_factor;
    }
    std::vector<double> row;
    schema.append_row(in, row);
    const double residual = model.predict_row(row);
    bool clamped = false;
    const double corrected = hybrid::corrected_prediction(theory_vpp, residual, &clamped);

    std::optional<double> rf_sim;
    if (stats) rf_sim = theory::ripple_factor(stats->v_rms, v_dc);
    json j;
    j["feature_mode"] = dataset::to_string(schema.mode);
    j["v_dc_v"] = v_dc;
    j["v_dc_source"] = stats ? "waveform" : "ideal";
    j["i_load_a"] = i_load;
    j["theory_vpp_v"] = theory_vpp;
    j["predicted_residual_v"] = residual;
    j["corrected_vpp_v"] = corrected;
    j["clamped"] = clamped;
    j["ripple_factor_theory"] = theory::ripple_factor(theory::sawtooth_rms_from_pp(theory_vpp), v_dc);
    j["ripple_factor_corrected"] = theory::ripple_factor(theory::sawtooth_rms_from_pp(corrected), v_dc);
    j["ripple_factor_sim"] = number_or_null(rf_sim);
    out << j.dump(2) << "\n";
    if (clamped) err << "warning: corrected ripple was negative and has been clamped to 0 V\n";
    return kExitOk;
}

struct ExportArgs {
    std::string data = "dataset.csv";
    std::string model;
    std::string out_dir = "plots";
};

int cmd_export_plots(const ExportArgs& args, std::ostream& out, std::ostream& err) {
    const auto records = dataset::read_csv(args.data);
    const fs::path dir(args.out_dir);
    write_text(dir / "residual_vs_frequency.csv", hybrid::to_csv(hybrid::residual_vs_frequency(records)));
    out << "wrote " << (dir / "residual_vs_frequency.csv").string() << "\n";
    if (args.model.empty()) return kExitOk;

    const auto model = forest::load_model(args.model);
    const bool include_nc = model.training ? model.training->include_nonconverged : false;
    const auto usable = dataset::usable_records(records, include_nc);
    if (auto mismatch = feature_mismatch(model, usable)) {
        err << "error: " << *mismatch << "\n";
        return kExitError;
    }
    std::set<int> test_ids;
    if (model.training) {
        for (const auto& r : dataset::split(usable, model.training->train_frac, model.training->split_seed).second) {
            test_ids.insert(r.case_id);
        }
    }
    const auto predicted = hybrid::predict_residuals(model, usable);
    std::ostringstream ss;
    ss.precision(17);
    ss << "case_id,split,residual_sim_v,residual_pred_v\n";
    for (std::size_t i = 0; i < usable.size(); ++i) {
        const char* part = !model.training ? "unknown" : (test_ids.count(usable[i].case_id) ? "test" : "train");
        ss << usable[i].case_id << ',' << part << ',' << usable[i].residual_v << ',' << predicted[i] << '\n';
    }
    write_text(dir / "predicted_vs_simulated_residual.csv", ss.str());
    out << "wrote " << (dir / "predicted_vs_simulated_residual.csv").string() << "\n";
    return kExitOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    config::RunConfig cfg;
    try {
        if (auto path = find_config_path(args)) cfg = config::load_config(*path);
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kExitError;
    }

    CLI::App app{"cwripple: Cockcroft-Walton ripple simulation and residual-corrected estimation"};
    app.name("cwripple");
    app.require_subcommand(1);
    std::string config_path;
    app.set_help_all_flag("--help-all", "Show help for every subcommand");

    auto* sweep = app.add_subcommand("sweep", "Simulate every grid case and write the dataset CSV");
    SweepArgs sweep_args;
    add_config_option(*sweep, config_path);
    add_grid_options(*sweep, cfg);
    add_sim_options(*sweep, cfg);
    add_component_options(*sweep, cfg);
    add_workers_option(*sweep, cfg);
    sweep->add_option("--out", sweep_args.out, "Dataset CSV to write")->capture_default_str();
    sweep->add_option("--manifest", sweep_args.manifest, "Run manifest JSON (default: <out>.manifest.json)");
    sweep->add_option("--dump-waveforms", sweep_args.waveform_dir,
                      "Directory for per-case steady-state waveforms (t_s,v_out_v CSV)");

    auto* train = app.add_subcommand("train", "Fit the residual random forest with grid-search CV");
    TrainArgs train_args;
    std::vector<std::string> depth_text;
    std::vector<std::string> grid_ff_text = cfg.forest_grid.feature_fraction;
    add_config_option(*train, config_path);
    add_workers_option(*train, cfg);
    train->add_option("--data", train_args.data, "Dataset CSV")->capture_default_str();
    train->add_option("--model-out", train_args.model_out, "Model JSON to write")->capture_default_str();
    train->add_option("--report-out", train_args.report_out, "Also write the training report here");
    train->add_option("--cv-out", train_args.cv_out, "Write the cross-validation table (CSV)");
    train->add_option("--correlation-out", train_args.correlation_out,
                      "Write the feature correlation matrix (CSV, report only)");
    train->add_option("--train-frac", cfg.train_frac, "Training fraction of the stratified split")
        ->capture_default_str();
    train->add_option("--folds", cfg.folds, "Cross-validation folds")->capture_default_str();
    train->add_option("--split-seed", cfg.split_seed, "Seed of the train/test split")->capture_default_str();
    train->add_option("--cv-seed", cfg.cv_seed, "Seed of the fold assignment")->capture_default_str();
    train->add_option("--forest-seed", cfg.forest_seed, "Master seed of the forest")->capture_default_str();
    train->add_flag("--params-only", train_args.params_only,
                    "Use circuit parameters only (no waveform statistics) as features");
    train->add_flag("--include-nonconverged", cfg.include_nonconverged,
                    "Train on cases that did not reach steady state");
    train->add_option("--grid-trees", cfg.forest_grid.n_trees, "Candidate tree counts")
        ->delimiter(',')
        ->capture_default_str()
        ->group("Search grid");
    train->add_option("--grid-depth", depth_text, "Candidate max depths ('none' = unlimited) [none,8,16]")
        ->delimiter(',')
        ->group("Search grid");
    train->add_option("--grid-leaf", cfg.forest_grid.min_samples_leaf, "Candidate min_samples_leaf values")
        ->delimiter(',')
        ->capture_default_str()
        ->group("Search grid");
    train->add_option("--grid-ff", grid_ff_text,
                      "Candidate feature fractions: numbers in (0,1], '1/3' or 'sqrt' (sqrt(F)/F)")
        ->delimiter(',')
        ->capture_default_str()
        ->group("Search grid");

    auto* evaluate = app.add_subcommand("evaluate", "Regime-wise theory vs corrected error reports");
    EvaluateArgs eval_args;
    add_config_option(*evaluate, config_path);
    evaluate->add_option("--model", eval_args.model, "Model JSON")->capture_default_str();
    evaluate->add_option("--data", eval_args.data, "Dataset CSV")->capture_default_str();
    evaluate->add_option("--out-dir", eval_args.out_dir, "Directory for report files")->capture_default_str();

    auto* predict = app.add_subcommand("predict", "Corrected ripple for one design point (JSON on stdout)");
    PredictArgs predict_args;
    add_config_option(*predict, config_path);
    add_component_options(*predict, cfg);
    predict->add_option("--model", predict_args.model, "Model JSON")->capture_default_str();
    predict->add_option("--stages", predict_args.stages, "Number of stages N")->required();
    predict->add_option("--vin-kv", predict_args.vin_kv, "Peak input voltage, kV")->required();
    predict->add_option("--cap-uf", predict_args.cap_uf, "Stage capacitance, uF")->required();
    predict->add_option("--freq-hz", predict_args.freq_hz, "Input frequency, Hz")->required();
    predict->add_option("--rload-mohm", predict_args.rload_mohm, "Load resistance, MOhm")->required();
    predict->add_option("--waveform", predict_args.waveform,
                        "Steady-state output cycle (t_s,v_out_v CSV); required for full-feature models");

    auto* plots = app.add_subcommand("export-plots", "CSV tables for residual plots");
    ExportArgs export_args;
    add_config_option(*plots, config_path);
    plots->add_option("--data", export_args.data, "Dataset CSV")->capture_default_str();
    plots->add_option("--model", export_args.model, "Model JSON (adds predicted vs simulated residuals)");
    plots->add_option("--out-dir", export_args.out_dir, "Output directory")->capture_default_str();

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kExitOk : kExitError;
    }

    try {
        if (!depth_text.empty()) {
            cfg.forest_grid.max_depth.clear();
            for (const auto& d : depth_text) {
                if (d == "none" || d == "inf") {
                    cfg.forest_grid.max_depth.emplace_back(std::nullopt);
                } else {
                    cfg.forest_grid.max_depth.emplace_back(static_cast<std::size_t>(std::stoul(d)));
                }
            }
        }
        cfg.forest_grid.feature_fraction = grid_ff_text;

        if (sweep->parsed()) return cmd_sweep(cfg, sweep_args, out, err);
        if (train->parsed()) return cmd_train(cfg, train_args, out);
        if (evaluate->parsed()) return cmd_evaluate(eval_args, out, err);
        if (predict->parsed()) return cmd_predict(cfg, predict_args, out, err);
        if (plots->parsed()) return cmd_export_plots(export_args, out, err);
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kExitError;
    }
    return kExitError;
}

}  // namespace cwripple::cli
