#pragma once

// Parametric sweep, dataset records, ML feature matrices, stratified splits
// and the dataset CSV format.
//
// Dataset CSV layout (schema version 1):
//
//   # cwripple-dataset schema_version=1 ...      <- one comment line
//   case_id,n_stages,vin_peak_v,cap_f,freq_hz,rload_ohm,vdc_v,vpp_sim_v,
//   vrms_sim_v,std_v,skewness,kurtosis,crest_factor,i_load_a,vpp_theory_v,
//   ripple_factor_theory,ripple_factor_sim,residual_v,converged
//
// Reading is keyed by header name, so column order may vary. Doubles are
// written with 17 significant digits and round-trip exactly. The 17 feature
// columns are a reconstruction: circuit parameters (5), simulated metrics
// (3), waveform statistics (4), and theory/derived references (5).

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "cwripple/circuit.hpp"
#include "cwripple/features.hpp"

namespace cwripple::dataset {

inline constexpr int kSchemaVersion = 1;

struct SweepGrid {
    std::vector<int> stages{2, 4, 6, 8};
    std::vector<double> vin_kv{5.0, 15.0, 25.0};
    std::vector<double> cap_uf{1.0, 5.0, 10.0};
    std::vector<double> freq_hz{50.0, 100.0, 500.0};
    std::vector<double> rload_mohm{6.0, 12.0, 60.0};

    /// Every list nonempty, strictly increasing and positive.
    void validate() const;
    std::size_t size() const noexcept;
};

struct Case {
    int case_id = 0;
    circuit::CaseParams params;
};

/// Cartesian product with stages outermost, then vin, cap, freq, rload.
/// Component parameters (ESR, diode model) are copied from `base`.
std::vector<Case> enumerate_cases(const SweepGrid& grid, const circuit::CaseParams& base = {});

struct CaseRecord {
    int case_id = 0;
    int n_stages = 0;
    double vin_peak_v = 0.0;
    double cap_f = 0.0;
    double freq_hz = 0.0;
    double rload_ohm = 0.0;
    double vdc_v = 0.0;
    double vpp_sim_v = 0.0;
    double vrms_sim_v = 0.0;
    double std_v = 0.0;
    double skewness = 0.0;
    double kurtosis = 0.0;
    double crest_factor = 0.0;
    double i_load_a = 0.0;
    double vpp_theory_v = 0.0;
    double ripple_factor_theory = 0.0;
    double ripple_factor_sim = 0.0;
    double residual_v = 0.0;
    bool converged = false;

    /// True when the simulation produced no usable waveform (NaN metrics).
    bool failed() const noexcept;
};

/// Joins circuit parameters, waveform statistics and theory references.
/// I_L comes from the simulated V_dc; the theory ripple factor converts the
/// theory peak-to-peak value to RMS assuming a sawtooth.
CaseRecord make_record(int case_id, const circuit::CaseParams& params,
                       const circuit::CycleWaveform& waveform);

/// Record for a case whose simulation threw: parameters set, every simulated
/// and derived quantity NaN, converged = false.
CaseRecord failed_record(int case_id, const circuit::CaseParams& params);

struct SweepOptions {
    unsigned workers = 1;
    /// When set, each case's final cycle is written to
    /// `<dir>/case_<id>.csv` in the waveform CSV format.
    std::optional<std::string> waveform_dir;
};

struct SweepResult {
    std::vector<CaseRecord> records;  // ordered by case_id
    std::vector<std::string> errors;  // one entry per failed case
};

SweepResult run_sweep(const SweepGrid& grid, const circuit::SimConfig& config,
                      const circuit::CaseParams& base, const SweepOptions& options);

// ---------------------------------------------------------------------------
// Feature matrix
// ---------------------------------------------------------------------------

enum class FeatureMode {
    /// Circuit parameters plus waveform statistics; prediction needs a
    /// simulated (or measured) waveform.
    Full,
    /// Circuit parameters only. I_L is approximated from the ideal output,
    /// 2 N V_in / R_load.
    ParamsOnly,
};

std::string to_string(FeatureMode mode);
FeatureMode feature_mode_from_string(const std::string& name);

/// Everything needed to compute one feature row.
struct FeatureInputs {
    int case_id = -1;
    int n_stages = 0;
    double vin_peak_v = 0.0;
    double cap_f = 0.0;
    double freq_hz = 0.0;
    double rload_ohm = 0.0;
    double i_load_a = 0.0;  // ignored in ParamsOnly mode
    double std_v = 0.0;
    double skewness = 0.0;
    double kurtosis = 0.0;
    double crest_factor = 0.0;
};

FeatureInputs inputs_from_record(const CaseRecord& record);

/// Column layout of a feature matrix: raw numerics, waveform statistics (Full
/// mode only), physics-informed n2_over_fc and il_over_fc, then one-hot
/// stage_<N> and vin_<kV>k columns.
struct FeatureSchema {
    FeatureMode mode = FeatureMode::Full;
    std::vector<int> stage_levels{2, 4, 6, 8};
    std::vector<double> vin_levels_v{5000.0, 15000.0, 25000.0};

    static FeatureSchema for_grid(const SweepGrid& grid, FeatureMode mode);
    /// Inverse of column_names(); throws SchemaError on an unknown layout.
    static FeatureSchema from_column_names(std::span<const std::string> names);

    std::vector<std::string> column_names() const;
    std::size_t width() const;

    /// Appends one row; throws DomainError when n_stages or vin is not a
    /// one-hot level, NonFiniteError on a non-finite value.
    void append_row(const FeatureInputs& in, std::vector<double>& out) const;
};

struct FeatureMatrix {
    std::vector<std::string> columns;
    std::size_t rows = 0;
    std::vector<double> values;   // row-major rows x columns.size()
    std::vector<double> targets;  // residual_v per row
    std::vector<int> case_ids;

    std::size_t cols() const noexcept { return columns.size(); }
    std::span<const double> row(std::size_t r) const {
        return {values.data() + r * cols(), cols()};
    }
    double at(std::size_t r, std::size_t c) const { return values[r * cols() + c]; }
};

FeatureMatrix build_feature_matrix(std::span<const CaseRecord> records, const FeatureSchema& schema);

/// Default one-hot levels (the default grid) in Full mode.
FeatureMatrix build_feature_matrix(std::span<const CaseRecord> records);

// ---------------------------------------------------------------------------
// Splits and persistence
// ---------------------------------------------------------------------------

/// Stratified by n_stages: within each stratum (ordered by case_id) a seeded
/// shuffle, then the first floor(train_frac * size) rows go to training,
/// clamped so both sides get at least one row.
std::pair<std::vector<CaseRecord>, std::vector<CaseRecord>> split(
    std::span<const CaseRecord> records, double train_frac, std::uint64_t seed);

/// Drops failed rows and, unless include_nonconverged, non-converged rows.
std::vector<CaseRecord> usable_records(std::span<const CaseRecord> records,
                                       bool include_nonconverged = false);

const std::vector<std::string>& csv_columns();

void write_csv(std::span<const CaseRecord> records, std::ostream& out);
void write_csv(std::span<const CaseRecord> records, const std::string& path);
std::vector<CaseRecord> read_csv(std::istream& in);
std::vector<CaseRecord> read_csv(const std::string& path);

/// 64-bit FNV-1a over the serialized CSV of the records.
std::uint64_t fingerprint(std::span<const CaseRecord> records);

}  // namespace cwripple::dataset
