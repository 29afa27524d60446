#pragma once

// Residual learning on top of the classical ripple formula:
//
//   residual      = V_pp(sim) - V_pp(theory)
//   corrected     = V_pp(theory) + predicted residual   (clamped at 0)
//
// plus error metrics and regime-wise reporting.

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "cwripple/dataset.hpp"
#include "cwripple/forest.hpp"

namespace cwripple::hybrid {

struct RegimeSpec {
    std::string name;
    std::string description;
    bool (*contains)(const dataset::CaseRecord&);
};

bool is_high_stage(const dataset::CaseRecord& r);     // N >= 6
bool is_low_frequency(const dataset::CaseRecord& r);  // f <= 100 Hz
bool is_heavy_load(const dataset::CaseRecord& r);     // R <= 12 MOhm
bool is_critical(const dataset::CaseRecord& r);       // all three

/// high_stage, low_frequency, heavy_load, critical, in that order.
std::span<const RegimeSpec> canonical_regimes();

/// Bias is mean(prediction - target): negative means underestimation.
struct MetricSet {
    double rmse = 0.0;
    double mae = 0.0;
    double bias = 0.0;
    double r2 = 0.0;
    std::size_t n_cases = 0;
};

/// Throws DomainError on empty or mismatched input and DegenerateInputError
/// when the targets have zero variance (R^2 undefined).
MetricSet metrics(std::span<const double> predictions, std::span<const double> targets);

/// Simulated minus theory V_pp per record; NonFiniteError names the case.
std::vector<double> residual_targets(std::span<const dataset::CaseRecord> records);

struct Corrected {
    std::vector<double> values;
    std::vector<std::size_t> clamped_rows;  // rows where theory + residual < 0
};

double corrected_prediction(double theory_vpp, double predicted_residual, bool* clamped = nullptr);
Corrected corrected_prediction(std::span<const double> theory_vpp,
                               std::span<const double> predicted_residual);

struct RegimeRow {
    std::string name;
    MetricSet theory;
    MetricSet corrected;
    double rmse_reduction_pct = 0.0;  // 100 (1 - rmse_corrected / rmse_theory)
};

struct RegimeReport {
    std::string label;
    std::vector<RegimeRow> rows;  // "global" first, then the regimes

    const RegimeRow& row(const std::string& name) const;
    std::string to_text() const;
    std::string to_csv() const;
};

/// Targets are the records' vpp_sim_v. With skip_small, regimes holding
/// fewer than 2 cases (or constant targets) are left out instead of raising.
RegimeReport evaluate_regimes(std::span<const dataset::CaseRecord> records,
                              std::span<const double> theory_preds,
                              std::span<const double> corrected_preds, std::string label,
                              bool skip_small = true);

struct FrequencyRow {
    double freq_hz = 0.0;
    double mean_abs_residual_v = 0.0;
    double max_abs_residual_v = 0.0;
    std::size_t n_cases = 0;
};

/// Per-frequency |residual| statistics over rows with a finite residual.
std::vector<FrequencyRow> residual_vs_frequency(std::span<const dataset::CaseRecord> records);
std::string to_csv(std::span<const FrequencyRow> rows);

/// One-hot levels taken from the records themselves.
dataset::FeatureSchema schema_for_records(std::span<const dataset::CaseRecord> records,
                                          dataset::FeatureMode mode);

/// Model whose every prediction is `value` (a single-leaf tree).
forest::ForestModel constant_model(std::vector<std::string> feature_names, double value,
                                   dataset::FeatureMode mode = dataset::FeatureMode::Full);

/// Predicted residuals for records, using the layout stored in the model.
std::vector<double> predict_residuals(const forest::ForestModel& model,
                                      std::span<const dataset::CaseRecord> records);

struct PipelineOptions {
    double train_frac = 0.8;
    std::uint64_t split_seed = 7;
    std::uint64_t cv_seed = 11;
    std::uint64_t forest_seed = forest::kDefaultSeed;
    std::size_t folds = 5;
    std::vector<forest::ForestHyperparams> grid;  // empty: default_search_grid
    dataset::FeatureMode mode = dataset::FeatureMode::Full;
    bool include_nonconverged = false;
    unsigned workers = 1;
};

struct PipelineResult {
    forest::ForestModel model;
    forest::CvResult cv;
    std::vector<dataset::CaseRecord> train;
    std::vector<dataset::CaseRecord> test;
    RegimeReport test_report;  // held-out rows only
    RegimeReport full_report;  // every usable row; train rows are in-sample
    std::vector<std::size_t> clamped_test_rows;

    std::string to_text() const;
};

/// Split, grid-search CV on the training part, refit, evaluate.
/// Needs at least 50 usable records.
PipelineResult train_pipeline(std::span<const dataset::CaseRecord> records,
                              const PipelineOptions& options);

/// Pearson correlation between feature columns (report only).
std::vector<std::vector<double>> correlation_matrix(const dataset::FeatureMatrix& matrix);
std::string correlation_csv(const dataset::FeatureMatrix& matrix);

/// Feature importances sorted descending, as (name, score).
std::vector<std::pair<std::string, double>> ranked_importances(const forest::ForestModel& model);

}  // namespace cwripple::hybrid
