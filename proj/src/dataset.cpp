#include "cwripple/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <set>
#include <sstream>

#include "cwripple/errors.hpp"
#include "cwripple/parallel.hpp"
#include "cwripple/rng.hpp"
#include "cwripple/theory.hpp"

namespace cwripple::dataset {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

template <typename T>
void check_axis(const std::vector<T>& values, const char* name) {
    if (values.empty()) throw DomainError(std::string("SweepGrid: ") + name + " is empty");
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (!(values[i] > 0)) throw DomainError(std::string("SweepGrid: ") + name + " must be positive");
        if (i > 0 && !(values[i] > values[i - 1])) {
            throw DomainError(std::string("SweepGrid: ") + name + " must be strictly increasing");
        }
    }
}

std::string format_double(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

std::string vin_column(double vin_v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "vin_%gk", vin_v / 1000.0);
    return buf;
}

}  // namespace

void SweepGrid::validate() const {
    check_axis(stages, "stages");
    check_axis(vin_kv, "vin_kv");
    check_axis(cap_uf, "cap_uf");
    check_axis(freq_hz, "freq_hz");
    check_axis(rload_mohm, "rload_mohm");
}

std::size_t SweepGrid::size() const noexcept {
    return stages.size() * vin_kv.size() * cap_uf.size() * freq_hz.size() * rload_mohm.size();
}

std::vector<Case> enumerate_cases(const SweepGrid& grid, const circuit::CaseParams& base) {
    grid.validate();
    std::vector<Case> cases;
    cases.reserve(grid.size());
    int id = 0;
    for (int n : grid.stages)
        for (double vin : grid.vin_kv)
            for (double cap : grid.cap_uf)
                for (double f : grid.freq_hz)
                    for (double r : grid.rload_mohm) {
                        circuit::CaseParams p = base;
                        p.n_stages = n;
                        p.vin_peak = vin * 1e3;
                        p.cap = cap * 1e-6;
                        p.freq = f;
                        p.r_load = r * 1e6;
                        p.validate();
                        cases.push_back({id++, p});
                    }
    return cases;
}

bool CaseRecord::failed() const noexcept {
    return !std::isfinite(vpp_sim_v) || !std::isfinite(vdc_v) || !std::isfinite(residual_v);
}

CaseRecord make_record(int case_id, const circuit::CaseParams& params,
                       const circuit::CycleWaveform& waveform) {
    const auto stats = features::extract_features(waveform.samples);
    CaseRecord r;
    r.case_id = case_id;
    r.n_stages = params.n_stages;
    r.vin_peak_v = params.vin_peak;
    r.cap_f = params.cap;
    r.freq_hz = params.freq;
    r.rload_ohm = params.r_load;
    r.vdc_v = stats.v_dc;
    r.vpp_sim_v = stats.v_pp;
    r.vrms_sim_v = stats.v_rms;
    r.std_v = stats.std_dev;
    r.skewness = stats.skewness;
    r.kurtosis = stats.kurtosis;
    r.crest_factor = stats.crest_factor;
    r.i_load_a = theory::load_current(r.vdc_v, r.rload_ohm);
    r.vpp_theory_v = theory::theoretical_ripple_pp(
        {params.n_stages, params.vin_peak, params.freq, params.cap, std::max(r.i_load_a, 0.0)});
    r.ripple_factor_theory =
        theory::ripple_factor(theory::sawtooth_rms_from_pp(r.vpp_theory_v), r.vdc_v);
    r.ripple_factor_sim = r.vrms_sim_v / r.vdc_v;
    r.residual_v = r.vpp_sim_v - r.vpp_theory_v;
    r.converged = waveform.converged;
    return r;
}

CaseRecord failed_record(int case_id, const circuit::CaseParams& params) {
    CaseRecord r;
    r.case_id = case_id;
    r.n_stages = params.n_stages;
    r.vin_peak_v = params.vin_peak;
    r.cap_f = params.cap;
    r.freq_hz = params.freq;
    r.rload_ohm = params.r_load;
    r.vdc_v = r.vpp_sim_v = r.vrms_sim_v = r.std_v = kNaN;
    r.skewness = r.kurtosis = r.crest_factor = kNaN;
    r.i_load_a = r.vpp_theory_v = r.ripple_factor_theory = r.ripple_factor_sim = kNaN;
    r.residual_v = kNaN;
    r.converged = false;
    return r;
}

SweepResult run_sweep(const SweepGrid& grid, const circuit::SimConfig& config,
                      const circuit::CaseParams& base, const SweepOptions& options) {
    config.validate();
    const auto cases = enumerate_cases(grid, base);
    if (options.waveform_dir) std::filesystem::create_directories(*options.waveform_dir);

    std::vector<CaseRecord> records(cases.size());
    std::vector<std::string> errors(cases.size());
    parallel_for(cases.size(), options.workers, [&](std::size_t i) {
        const auto& c = cases[i];
        try {
            const auto wf = circuit::simulate(c.params, config);
            records[i] = make_record(c.case_id, c.params, wf);
            if (options.waveform_dir) {
                const auto path = std::filesystem::path(*options.waveform_dir) /
                                  ("case_" + std::to_string(c.case_id) + ".csv");
                circuit::write_waveform_csv(wf, path.string());
            }
        } catch (const std::exception& e) {
            records[i] = failed_record(c.case_id, c.params);
            errors[i] = "case " + std::to_string(c.case_id) + ": " + e.what();
        }
    });

    SweepResult result;
    result.records = std::move(records);
    for (auto& e : errors) {
        if (!e.empty()) result.errors.push_back(std::move(e));
    }
    return result;
}

// ---------------------------------------------------------------------------
// Feature matrix
// ---------------------------------------------------------------------------

std::string to_string(FeatureMode mode) {
    return mode == FeatureMode::Full ? "full" : "params-only";
}

FeatureMode feature_mode_from_string(const std::string& name) {
    if (name == "full") return FeatureMode::Full;
    if (name == "params-only") return FeatureMode::ParamsOnly;
    throw SchemaError("unknown feature mode '" + name + "' (expected full or params-only)");
}

FeatureInputs inputs_from_record(const CaseRecord& r) {
    return {r.case_id, r.n_stages,  r.vin_peak_v, r.cap_f,    r.freq_hz,     r.rload_ohm,
            r.i_load_a, r.std_v,    r.skewness,   r.kurtosis, r.crest_factor};
}

FeatureSchema FeatureSchema::for_grid(const SweepGrid& grid, FeatureMode mode) {
    grid.validate();
    FeatureSchema s;
    s.mode = mode;
    s.stage_levels = grid.stages;
    s.vin_levels_v.clear();
    for (double kv : grid.vin_kv) s.vin_levels_v.push_back(kv * 1e3);
    return s;
}

std::vector<std::string> FeatureSchema::column_names() const {
    std::vector<std::string> names{"cap_f", "freq_hz", "rload_ohm"};
    if (mode == FeatureMode::Full) {
        names.insert(names.end(), {"std_v", "skewness", "kurtosis", "crest_factor"});
    }
    names.insert(names.end(), {"n2_over_fc", "il_over_fc"});
    for (int n : stage_levels) names.push_back("stage_" + std::to_string(n));
    for (double v : vin_levels_v) names.push_back(vin_column(v));
    return names;
}

std::size_t FeatureSchema::width() const {
    return (mode == FeatureMode::Full ? 9U : 5U) + stage_levels.size() + vin_levels_v.size();
}

FeatureSchema FeatureSchema::from_column_names(std::span<const std::string> names) {
    FeatureSchema s;
    s.stage_levels.clear();
    s.vin_levels_v.clear();
    const bool full = std::find(names.begin(), names.end(), "std_v") != names.end();
    s.mode = full ? FeatureMode::Full : FeatureMode::ParamsOnly;
    for (const auto& name : names) {
        if (name.rfind("stage_", 0) == 0) {
            s.stage_levels.push_back(std::stoi(name.substr(6)));
        } else if (name.rfind("vin_", 0) == 0 && name.size() > 5 && name.back() == 'k') {
            s.vin_levels_v.push_back(std::stod(name.substr(4, name.size() - 5)) * 1e3);
        }
    }
    const auto rebuilt = s.column_names();
    if (!std::equal(rebuilt.begin(), rebuilt.end(), names.begin(), names.end())) {
        std::string got;
        for (const auto& n : names) got += (got.empty() ? "" : ",") + n;
        throw SchemaError("unrecognized feature column layout: " + got);
    }
    return s;
}

void FeatureSchema::append_row(const FeatureInputs& in, std::vector<double>& out) const {
    const std::string where = "case " + std::to_string(in.case_id) + ": ";
    const auto stage_it = std::find(stage_levels.begin(), stage_levels.end(), in.n_stages);
    if (stage_it == stage_levels.end()) {
        throw DomainError(where + "n_stages " + std::to_string(in.n_stages) + " is not a one-hot level");
    }
    const auto vin_it = std::find_if(vin_levels_v.begin(), vin_levels_v.end(), [&](double v) {
        return std::abs(v - in.vin_peak_v) <= 1e-9 * v;
    });
    if (vin_it == vin_levels_v.end()) {
        throw DomainError(where + "vin_peak_v " + format_double(in.vin_peak_v) + " is not a one-hot level");
    }
    if (!(in.cap_f > 0.0 && in.freq_hz > 0.0 && in.rload_ohm > 0.0)) {
        throw DomainError(where + "cap, freq and rload must be positive");
    }

    const double fc = in.freq_hz * in.cap_f;
    const double n = in.n_stages;
    const double i_load = mode == FeatureMode::Full
                              ? in.i_load_a
                              : 2.0 * n * in.vin_peak_v / in.rload_ohm;
    const std::size_t start = out.size();
    out.insert(out.end(), {in.cap_f, in.freq_hz, in.rload_ohm});
    if (mode == FeatureMode::Full) {
        out.insert(out.end(), {in.std_v, in.skewness, in.kurtosis, in.crest_factor});
    }
    out.insert(out.end(), {n * n / fc, i_load / fc});
    for (int level : stage_levels) out.push_back(level == in.n_stages ? 1.0 : 0.0);
    for (auto it = vin_levels_v.begin(); it != vin_levels_v.end(); ++it) {
        out.push_back(it == vin_it ? 1.0 : 0.0);
    }
    const auto names = column_names();
    for (std::size_t c = start; c < out.size(); ++c) {
        if (!std::isfinite(out[c])) {
            out.resize(start);
            throw NonFiniteError(where + "non-finite feature '" + names[c - start] + "'");
        }
    }
}

FeatureMatrix build_feature_matrix(std::span<const CaseRecord> records, const FeatureSchema& schema) {
    if (records.empty()) throw DomainError("build_feature_matrix: no records");
    FeatureMatrix m;
    m.columns = schema.column_names();
    m.rows = records.size();
    m.values.reserve(m.rows * m.columns.size());
    for (const auto& r : records) {
        schema.append_row(inputs_from_record(r), m.values);
        if (!std::isfinite(r.residual_v)) {
            throw NonFiniteError("case " + std::to_string(r.case_id) + ": non-finite residual_v");
        }
        m.targets.push_back(r.residual_v);
        m.case_ids.push_back(r.case_id);
    }
    return m;
}

FeatureMatrix build_feature_matrix(std::span<const CaseRecord> records) {
    return build_feature_matrix(records, FeatureSchema{});
}

// ---------------------------------------------------------------------------
// Split
// ---------------------------------------------------------------------------

std::pair<std::vector<CaseRecord>, std::vector<CaseRecord>> split(
    std::span<const CaseRecord> records, double train_frac, std::uint64_t seed) {
    if (!(train_frac > 0.0 && train_frac < 1.0)) {
        throw DomainError("split: train_frac must be in (0, 1)");
    }
    std::map<int, std::vector<CaseRecord>> strata;
    for (const auto& r : records) strata[r.n_stages].push_back(r);

    Rng rng(seed);
    std::pair<std::vector<CaseRecord>, std::vector<CaseRecord>> out;
    for (auto& [stage, group] : strata) {
        if (group.size() < 2) {
            throw DomainError("split: stratum n_stages=" + std::to_string(stage) +
                              " has fewer than 2 records");
        }
        std::sort(group.begin(), group.end(),
                  [](const CaseRecord& a, const CaseRecord& b) { return a.case_id < b.case_id; });
        rng.shuffle(std::span<CaseRecord>(group));
        auto n_train = static_cast<std::size_t>(std::floor(train_frac * static_cast<double>(group.size())));
        n_train = std::clamp<std::size_t>(n_train, 1, group.size() - 1);
        out.first.insert(out.first.end(), group.begin(), group.begin() + static_cast<std::ptrdiff_t>(n_train));
        out.second.insert(out.second.end(), group.begin() + static_cast<std::ptrdiff_t>(n_train), group.end());
    }
    return out;
}

std::vector<CaseRecord> usable_records(std::span<const CaseRecord> records, bool include_nonconverged) {
    std::vector<CaseRecord> out;
    for (const auto& r : records) {
        if (r.failed()) continue;
        if (!r.converged && !include_nonconverged) continue;
        out.push_back(r);
    }
    return out;
}

// ---------------------------------------------------------------------------
// CSV
// ---------------------------------------------------------------------------

namespace {

struct Column {
    const char* name;
    double CaseRecord::*field;
};

// Double-valued columns in file order, excluding case_id, n_stages, converged.
constexpr Column kDoubleColumns[] = {
    {"vin_peak_v", &CaseRecord::vin_peak_v},
    {"cap_f", &CaseRecord::cap_f},
    {"freq_hz", &CaseRecord::freq_hz},
    {"rload_ohm", &CaseRecord::rload_ohm},
    {"vdc_v", &CaseRecord::vdc_v},
    {"vpp_sim_v", &CaseRecord::vpp_sim_v},
    {"vrms_sim_v", &CaseRecord::vrms_sim_v},
    {"std_v", &CaseRecord::std_v},
    {"skewness", &CaseRecord::skewness},
    {"kurtosis", &CaseRecord::kurtosis},
    {"crest_factor", &CaseRecord::crest_factor},
    {"i_load_a", &CaseRecord::i_load_a},
    {"vpp_theory_v", &CaseRecord::vpp_theory_v},
    {"ripple_factor_theory", &CaseRecord::ripple_factor_theory},
    {"ripple_factor_sim", &CaseRecord::ripple_factor_sim},
    {"residual_v", &CaseRecord::residual_v},
};

const std::string kCommentLine =
    "# cwripple-dataset schema_version=1 moments=population kurtosis=pearson "
    "crest_factor=ac_component ripple_factor_theory=sawtooth_rms(vpp_theory)/vdc "
    "i_load=vdc/rload";

std::vector<std::string> split_fields(const std::string& line) {
    std::vector<std::string> fields;
    std::string field;
    std::istringstream ss(line);
    while (std::getline(ss, field, ',')) fields.push_back(field);
    if (!line.empty() && line.back() == ',') fields.emplace_back();
    return fields;
}

double parse_double(const std::string& text, const std::string& column, std::size_t row) {
    char* end = nullptr;
    const double v = std::strtod(text.c_str(), &end);
    if (text.empty() || *end != '\0') {
        throw SchemaError("dataset CSV row " + std::to_string(row) + ": bad number '" + text +
                          "' in column " + column);
    }
    return v;
}

int parse_int(const std::string& text, const std::string& column, std::size_t row) {
    const double v = parse_double(text, column, row);
    if (v != std::floor(v)) {
        throw SchemaError("dataset CSV row " + std::to_string(row) + ": column " + column +
                          " must be an integer");
    }
    return static_cast<int>(v);
}

}  // namespace

const std::vector<std::string>& csv_columns() {
    static const std::vector<std::string> columns = [] {
        std::vector<std::string> c{"case_id", "n_stages"};
        for (const auto& col : kDoubleColumns) c.emplace_back(col.name);
        c.emplace_back("converged");
        return c;
    }();
    return columns;
}

void write_csv(std::span<const CaseRecord> records, std::ostream& out) {
    out << kCommentLine << '\n';
    const auto& cols = csv_columns();
    for (std::size_t i = 0; i < cols.size(); ++i) out << (i ? "," : "") << cols[i];
    out << '\n';
    for (const auto& r : records) {
        out << r.case_id << ',' << r.n_stages;
        for (const auto& col : kDoubleColumns) out << ',' << format_double(r.*col.field);
        out << ',' << (r.converged ? 1 : 0) << '\n';
    }
}

void write_csv(std::span<const CaseRecord> records, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open dataset file for writing: " + path);
    write_csv(records, out);
    if (!out) throw IoError("failed writing dataset file: " + path);
}

std::vector<CaseRecord> read_csv(std::istream& in) {
    std::string line;
    std::vector<std::string> header;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line[0] == '#') continue;
        header = split_fields(line);
        break;
    }
    if (header.empty()) throw SchemaError("dataset CSV: missing header row");

    const auto& expected = csv_columns();
    std::map<std::string, std::size_t> index;
    std::vector<std::string> unexpected;
    for (std::size_t i = 0; i < header.size(); ++i) {
        if (std::find(expected.begin(), expected.end(), header[i]) == expected.end() ||
            index.count(header[i])) {
            unexpected.push_back(header[i]);
        } else {
            index[header[i]] = i;
        }
    }
    std::vector<std::string> missing;
    for (const auto& name : expected) {
        if (!index.count(name)) missing.push_back(name);
    }
    if (!missing.empty() || !unexpected.empty()) {
        std::string msg = "dataset CSV schema mismatch;";
        if (!missing.empty()) {
            msg += " missing:";
            for (const auto& m : missing) msg += " " + m;
            msg += ";";
        }
        if (!unexpected.empty()) {
            msg += " unexpected:";
            for (const auto& u : unexpected) msg += " " + u;
            msg += ";";
        }
        throw SchemaError(msg);
    }

    std::vector<CaseRecord> records;
    std::size_t row = 0;
    while (std::getline(in, line)) {
        ++row;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line[0] == '#') continue;
        const auto fields = split_fields(line);
        if (fields.size() != header.size()) {
            throw SchemaError("dataset CSV row " + std::to_string(row) + ": expected " +
                              std::to_string(header.size()) + " fields, got " +
                              std::to_string(fields.size()));
        }
        CaseRecord r;
        r.case_id = parse_int(fields[index.at("case_id")], "case_id", row);
        r.n_stages = parse_int(fields[index.at("n_stages")], "n_stages", row);
        for (const auto& col : kDoubleColumns) {
            r.*col.field = parse_double(fields[index.at(col.name)], col.name, row);
        }
        const auto& conv = fields[index.at("converged")];
        if (conv == "1" || conv == "true") {
            r.converged = true;
        } else if (conv == "0" || conv == "false") {
            r.converged = false;
        } else {
            throw SchemaError("dataset CSV row " + std::to_string(row) + ": bad converged flag '" + conv + "'");
        }
        records.push_back(r);
    }
    return records;
}

std::vector<CaseRecord> read_csv(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open dataset file: " + path);
    return read_csv(in);
}

std::uint64_t fingerprint(std::span<const CaseRecord> records) {
    std::ostringstream ss;
    write_csv(records, ss);
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : ss.str()) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

}  // namespace cwripple::dataset
