#include "cwripple/hybrid.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <map>
#include <set>
#include <sstream>

#include "cwripple/errors.hpp"

namespace cwripple::hybrid {

namespace {

std::string fmt(const char* format, double x) {
    char buf[64];
    std::snprintf(buf, sizeof buf, format, x);
    return buf;
}

std::string g17(double x) { return fmt("%.17g", x); }

const std::array<RegimeSpec, 4> kRegimes{{
    {"high_stage", "N >= 6", &is_high_stage},
    {"low_frequency", "f <= 100 Hz", &is_low_frequency},
    {"heavy_load", "R <= 12 MOhm", &is_heavy_load},
    {"critical", "N >= 6, f <= 100 Hz, R <= 12 MOhm", &is_critical},
}};

}  // namespace

bool is_high_stage(const dataset::CaseRecord& r) { return r.n_stages >= 6; }
bool is_low_frequency(const dataset::CaseRecord& r) { return r.freq_hz <= 100.0; }
bool is_heavy_load(const dataset::CaseRecord& r) { return r.rload_ohm <= 12e6; }
bool is_critical(const dataset::CaseRecord& r) {
    return is_high_stage(r) && is_low_frequency(r) && is_heavy_load(r);
}

std::span<const RegimeSpec> canonical_regimes() { return kRegimes; }

MetricSet metrics(std::span<const double> predictions, std::span<const double> targets) {
    if (predictions.size() != targets.size()) throw DomainError("metrics: length mismatch");
    if (targets.empty()) throw DomainError("metrics: empty input");
    const auto n = static_cast<double>(targets.size());
    double sse = 0.0;
    double sae = 0.0;
    double se = 0.0;
    double mean_t = 0.0;
    for (std::size_t i = 0; i < targets.size(); ++i) {
        const double e = predictions[i] - targets[i];
        sse += e * e;
        sae += std::abs(e);
        se += e;
        mean_t += targets[i];
    }
    mean_t /= n;
    double sst = 0.0;
    for (double t : targets) sst += (t - mean_t) * (t - mean_t);
    if (!(sst > 0.0)) throw DegenerateInputError("metrics: targets have zero variance, R^2 undefined");

    MetricSet m;
    m.rmse = std::sqrt(sse / n);
    m.mae = sae / n;
    m.bias = se / n;
    m.r2 = 1.0 - sse / sst;
    m.n_cases = targets.size();
    return m;
}

std::vector<double> residual_targets(std::span<const dataset::CaseRecord> records) {
    std::vector<double> out;
    out.reserve(records.size());
    for (const auto& r : records) {
        if (!std::isfinite(r.vpp_sim_v) || !std::isfinite(r.vpp_theory_v)) {
            throw NonFiniteError("residual_targets: case " + std::to_string(r.case_id) +
                                 " has non-finite V_pp");
        }
        out.push_back(r.vpp_sim_v - r.vpp_theory_v);
    }
    return out;
}

double corrected_prediction(double theory_vpp, double predicted_residual, bool* clamped) {
    const double v = theory_vpp + predicted_residual;
    const bool negative = v < 0.0;
    if (clamped) *clamped = negative;
    return negative ? 0.0 : v;
}

Corrected corrected_prediction(std::span<const double> theory_vpp,
                               std::span<const double> predicted_residual) {
    if (theory_vpp.size() != predicted_residual.size()) {
        throw DomainError("corrected_prediction: length mismatch");
    }
    Corrected out;
    out.values.reserve(theory_vpp.size());
    for (std::size_t i = 0; i < theory_vpp.size(); ++i) {
        bool clamped = false;
        out.values.push_back(corrected_prediction(theory_vpp[i], predicted_residual[i], &clamped));
        if (clamped) out.clamped_rows.push_back(i);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Regime reports
// ---------------------------------------------------------------------------

const RegimeRow& RegimeReport::row(const std::string& name) const {
    for (const auto& r : rows) {
        if (r.name == name) return r;
    }
    throw DomainError("RegimeReport: no row named " + name);
}

RegimeReport evaluate_regimes(std::span<const dataset::CaseRecord> records,
                              std::span<const double> theory_preds,
                              std::span<const double> corrected_preds, std::string label,
                              bool skip_small) {
    if (records.size() != theory_preds.size() || records.size() != corrected_preds.size()) {
        throw DomainError("evaluate_regimes: records and predictions are not aligned");
    }
    RegimeReport report;
    report.label = std::move(label);

    auto add_row = [&](const std::string& name, auto&& contains) {
        std::vector<double> th;
        std::vector<double> co;
        std::vector<double> target;
        for (std::size_t i = 0; i < records.size(); ++i) {
            if (!contains(records[i])) continue;
            th.push_back(theory_preds[i]);
            co.push_back(corrected_preds[i]);
            target.push_back(records[i].vpp_sim_v);
        }
        const bool constant =
            !target.empty() && std::all_of(target.begin(), target.end(), [&](double v) { return v == target[0]; });
        if (target.size() < 2 || constant) {
            if (skip_small) return;
            throw DomainError("evaluate_regimes: regime '" + name + "' has fewer than 2 cases");
        }
        RegimeRow row;
        row.name = name;
        row.theory = metrics(th, target);
        row.corrected = metrics(co, target);
        row.rmse_reduction_pct = row.theory.rmse > 0.0
                                     ? 100.0 * (1.0 - row.corrected.rmse / row.theory.rmse)
                                     : 0.0;
        report.rows.push_back(std::move(row));
    };

    add_row("global", [](const dataset::CaseRecord&) { return true; });
    for (const auto& spec : canonical_regimes()) add_row(spec.name, spec.contains);
    return report;
}

std::string RegimeReport::to_text() const {
    std::ostringstream ss;
    ss << label << "\n";
    char line[256];
    std::snprintf(line, sizeof line, "%-14s %6s %11s %11s %11s %11s %11s %11s %8s %8s %8s\n", "regime",
                  "cases", "rmse_theory", "rmse_corr", "mae_theory", "mae_corr", "bias_theory",
                  "bias_corr", "r2_theo", "r2_corr", "rmse_red%");
    ss << line;
    for (const auto& r : rows) {
        std::snprintf(line, sizeof line,
                      "%-14s %6zu %11.2f %11.2f %11.2f %11.2f %11.2f %11.2f %8.4f %8.4f %8.1f\n",
                      r.name.c_str(), r.theory.n_cases, r.theory.rmse, r.corrected.rmse, r.theory.mae,
                      r.corrected.mae, r.theory.bias, r.corrected.bias, r.theory.r2, r.corrected.r2,
                      r.rmse_reduction_pct);
        ss << line;
    }
    return ss.str();
}

std::string RegimeReport::to_csv() const {
    std::ostringstream ss;
    ss << "regime,n_cases,rmse_theory_v,rmse_corrected_v,mae_theory_v,mae_corrected_v,"
          "bias_theory_v,bias_corrected_v,r2_theory,r2_corrected,rmse_reduction_pct\n";
    for (const auto& r : rows) {
        ss << r.name << ',' << r.theory.n_cases << ',' << g17(r.theory.rmse) << ','
           << g17(r.corrected.rmse) << ',' << g17(r.theory.mae) << ',' << g17(r.corrected.mae) << ','
           << g17(r.theory.bias) << ',' << g17(r.corrected.bias) << ',' << g17(r.theory.r2) << ','
           << g17(r.corrected.r2) << ',' << g17(r.rmse_reduction_pct) << '\n';
    }
    return ss.str();
}

std::vector<FrequencyRow> residual_vs_frequency(std::span<const dataset::CaseRecord> records) {
    std::map<double, FrequencyRow> groups;
    for (const auto& r : records) {
        if (!std::isfinite(r.residual_v)) continue;
        auto& g = groups[r.freq_hz];
        g.freq_hz = r.freq_hz;
        g.mean_abs_residual_v += std::abs(r.residual_v);
        g.max_abs_residual_v = std::max(g.max_abs_residual_v, std::abs(r.residual_v));
        ++g.n_cases;
    }
    std::vector<FrequencyRow> rows;
    for (auto& [f, g] : groups) {
        g.mean_abs_residual_v /= static_cast<double>(g.n_cases);
        rows.push_back(g);
    }
    return rows;
}

std::string to_csv(std::span<const FrequencyRow> rows) {
    std::ostringstream ss;
    ss << "freq_hz,mean_abs_residual_v,max_abs_residual_v,n_cases\n";
    for (const auto& r : rows) {
        ss << g17(r.freq_hz) << ',' << g17(r.mean_abs_residual_v) << ',' << g17(r.max_abs_residual_v)
           << ',' << r.n_cases << '\n';
    }
    return ss.str();
}

// ---------------------------------------------------------------------------
// Models and the training pipeline
// ---------------------------------------------------------------------------

dataset::FeatureSchema schema_for_records(std::span<const dataset::CaseRecord> records,
                                          dataset::FeatureMode mode) {
    std::set<int> stages;
    std::set<double> vins;
    for (const auto& r : records) {
        stages.insert(r.n_stages);
        vins.insert(r.vin_peak_v);
    }
    dataset::FeatureSchema s;
    s.mode = mode;
    s.stage_levels.assign(stages.begin(), stages.end());
    s.vin_levels_v.assign(vins.begin(), vins.end());
    return s;
}

forest::ForestModel constant_model(std::vector<std::string> feature_names, double value,
                                   dataset::FeatureMode mode) {
    forest::ForestModel m;
    m.hyperparams.n_trees = 1;
    m.hyperparams.bootstrap = false;
    m.importances.assign(feature_names.size(), 0.0);
    m.feature_names = std::move(feature_names);
    m.feature_mode = dataset::to_string(mode);
    forest::Tree t;
    forest::TreeNode leaf;
    leaf.value = value;
    t.nodes.push_back(leaf);
    m.trees.push_back(std::move(t));
    return m;
}

std::vector<double> predict_residuals(const forest::ForestModel& model,
                                      std::span<const dataset::CaseRecord> records) {
    const auto schema = dataset::FeatureSchema::from_column_names(model.feature_names);
    const auto matrix = dataset::build_feature_matrix(records, schema);
    return forest::predict(model, matrix);
}

namespace {

std::string hex64(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

std::vector<double> column(std::span<const dataset::CaseRecord> records, double dataset::CaseRecord::*field) {
    std::vector<double> out;
    out.reserve(records.size());
    for (const auto& r : records) out.push_back(r.*field);
    return out;
}

}  // namespace

PipelineResult train_pipeline(std::span<const dataset::CaseRecord> records, const PipelineOptions& options) {
    const auto usable = dataset::usable_records(records, options.include_nonconverged);
    if (usable.size() < 50) {
        throw DomainError("train_pipeline: need at least 50 usable records, got " +
                          std::to_string(usable.size()));
    }
    const auto schema = schema_for_records(usable, options.mode);

    PipelineResult result;
    std::tie(result.train, result.test) = dataset::split(usable, options.train_frac, options.split_seed);
    const auto train_x = dataset::build_feature_matrix(result.train, schema);
    const auto test_x = dataset::build_feature_matrix(result.test, schema);

    auto grid = options.grid;
    if (grid.empty()) grid = forest::default_search_grid(train_x.cols(), options.forest_seed);
    result.cv = forest::grid_search_cv(train_x, train_x.targets, grid, options.folds, options.cv_seed,
                                       options.workers);
    result.model = forest::fit(train_x, train_x.targets, result.cv.best, options.workers);
    result.model.feature_mode = dataset::to_string(options.mode);
    result.model.dataset_fingerprint = hex64(dataset::fingerprint(usable));
    result.model.training = forest::TrainingInfo{options.split_seed, options.train_frac, options.cv_seed,
                                                 options.folds, options.include_nonconverged};

    const auto test_theory = column(result.test, &dataset::CaseRecord::vpp_theory_v);
    const auto test_corrected = corrected_prediction(test_theory, forest::predict(result.model, test_x));
    result.clamped_test_rows = test_corrected.clamped_rows;
    result.test_report = evaluate_regimes(result.test, test_theory, test_corrected.values,
                                          "held-out test split");

    const auto all_theory = column(usable, &dataset::CaseRecord::vpp_theory_v);
    const auto all_corrected =
        corrected_prediction(all_theory, predict_residuals(result.model, usable));
    result.full_report = evaluate_regimes(usable, all_theory, all_corrected.values,
                                          "full dataset (training rows are in-sample)");
    return result;
}

std::string PipelineResult::to_text() const {
    std::ostringstream ss;
    ss << "train rows: " << train.size() << "  test rows: " << test.size() << "\n\n";
    ss << "cross-validation (mean RMSE over folds, V)\n";
    for (const auto& row : cv.table) {
        ss << "  " << row.hyperparams.label() << "  " << fmt("%.4f", row.mean_rmse) << "\n";
    }
    ss << "chosen: " << cv.best.label() << "\n\n";
    ss << test_report.to_text() << "\n" << full_report.to_text() << "\n";
    ss << "feature importances\n";
    for (const auto& [name, score] : ranked_importances(model)) {
        ss << "  " << name << "  " << fmt("%.6f", score) << "\n";
    }
    if (!clamped_test_rows.empty()) {
        ss << "warning: " << clamped_test_rows.size() << " corrected test predictions clamped to 0 V\n";
    }
    return ss.str();
}

std::vector<std::vector<double>> correlation_matrix(const dataset::FeatureMatrix& matrix) {
    const std::size_t c = matrix.cols();
    const auto n = static_cast<double>(matrix.rows);
    std::vector<double> mean(c, 0.0);
    std::vector<double> sd(c, 0.0);
    for (std::size_t r = 0; r < matrix.rows; ++r)
        for (std::size_t j = 0; j < c; ++j) mean[j] += matrix.at(r, j);
    for (auto& m : mean) m /= n;
    for (std::size_t r = 0; r < matrix.rows; ++r)
        for (std::size_t j = 0; j < c; ++j) sd[j] += (matrix.at(r, j) - mean[j]) * (matrix.at(r, j) - mean[j]);
    for (auto& s : sd) s = std::sqrt(s);

    std::vector<std::vector<double>> corr(c, std::vector<double>(c, 0.0));
    for (std::size_t a = 0; a < c; ++a) {
        for (std::size_t b = a; b < c; ++b) {
            double s = 0.0;
            for (std::size_t r = 0; r < matrix.rows; ++r) {
                s += (matrix.at(r, a) - mean[a]) * (matrix.at(r, b) - mean[b]);
            }
            const double denom = sd[a] * sd[b];
            const double v = denom > 0.0 ? s / denom : 0.0;
            corr[a][b] = corr[b][a] = v;
        }
    }
    return corr;
}

std::string correlation_csv(const dataset::FeatureMatrix& matrix) {
    const auto corr = correlation_matrix(matrix);
    std::ostringstream ss;
    ss << "feature";
    for (const auto& name : matrix.columns) ss << ',' << name;
    ss << '\n';
    for (std::size_t a = 0; a < corr.size(); ++a) {
        ss << matrix.columns[a];
        for (double v : corr[a]) ss << ',' << fmt("%.6f", v);
        ss << '\n';
    }
    return ss.str();
}

std::vector<std::pair<std::string, double>> ranked_importances(const forest::ForestModel& model) {
    std::vector<std::pair<std::string, double>> out;
    for (std::size_t i = 0; i < model.feature_names.size(); ++i) {
        out.emplace_back(model.feature_names[i], model.importances.at(i));
    }
    std::stable_sort(out.begin(), out.end(),
                     [](const auto& a, const auto& b) { return a.second > b.second; });
    return out;
}

}  // namespace cwripple::hybrid
